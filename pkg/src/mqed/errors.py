"""Exception hierarchy.

Validation problems derive from :class:`ConfigError`; everything raised
during a numerical run derives from :class:`NumericalError`. The CLI maps the
two families onto exit codes 2 and 3.
"""


class MQEDError(Exception):
    pass


class ConfigError(MQEDError):
    pass


class NumericalError(MQEDError):
    pass


class Violation:
    """One failed invariant, located by a dotted field path."""

    def __init__(self, code, path, message):
        self.code = code
        self.path = path
        self.message = message

    def __repr__(self):
        return f"Violation({self.code!r}, {self.path!r}, {self.message!r})"

    def __str__(self):
        return f"{self.path}: {self.code}: {self.message}"


class ValidationError(ConfigError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))

    @property
    def codes(self):
        return [v.code for v in self.violations]


class NonPositiveFrequency(ConfigError):
    pass


class CoincidentPointsFullTensor(MQEDError):
    pass


class QuadratureNotConverged(NumericalError):
    def __init__(self, message, error=None, tolerance=None):
        super().__init__(message)
        self.error = error
        self.tolerance = tolerance


class GridDoesNotEncloseResonance(NumericalError):
    pass


class TailNotConverged(NumericalError):
    pass


class ImagAxisUnavailable(NumericalError):
    pass


class SpectralGridTooCoarse(NumericalError):
    pass


class NoDecayDetected(NumericalError):
    pass


class StepRejected(NumericalError):
    pass


class NotConverging(NumericalError):
    pass


class NonPSDSpectralMatrix(NumericalError):
    pass


class RecurrenceHorizonExceeded(NumericalError):
    pass


class UnrecognizedHeader(MQEDError):
    pass
