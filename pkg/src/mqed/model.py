"""Physical data model and configuration validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from .errors import NonPositiveFrequency, ValidationError, Violation

METHODS = ("fqd", "maqd", "oracle")


def _vec3(v):
    a = np.asarray(v)
    if a.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {a.shape}")
    return tuple(float(x) for x in a.real) if not np.iscomplexobj(a) else tuple(a.tolist())


@dataclass(frozen=True)
class Emitter:
    """Two-level emitter: position (nm), transition energy (eV), dipole (Debye)."""

    position: Tuple[float, float, float]
    omega: float
    dipole: Tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3(self.position))
        object.__setattr__(self, "dipole", _vec3(self.dipole))

    @property
    def r(self):
        return np.array(self.position, dtype=float)

    @property
    def mu(self):
        return np.array(self.dipole, dtype=float)


@dataclass(frozen=True)
class Vacuum:
    kind = "vacuum"


@dataclass(frozen=True)
class DrudeHalfSpace:
    """Drude metal filling z < 0; vacuum above.

    ``eps(w) = 1 - omega_p**2 / (w**2 + i*gamma*w)``.
    """

    omega_p: float = 5.0
    gamma: float = 0.1
    kind = "drude"

    @classmethod
    def from_reading(cls, reading="spp"):
        # "5/(w^2 + 0.1 i w)": either omega_p = 5 eV (SPP at 3.54 eV) or omega_p^2 = 5
        if reading == "spp":
            return cls(5.0, 0.1)
        if reading == "literal":
            return cls(math.sqrt(5.0), 0.1)
        raise ValueError(f"unknown Drude reading {reading!r}")

    @property
    def spp_frequency(self):
        """Quasi-static surface-plasmon energy, where Re eps = -1 for gamma -> 0."""
        return self.omega_p / math.sqrt(2.0)

    def permittivity(self, omega):
        return drude_permittivity(self, omega)


@dataclass(frozen=True)
class LorentzianBath:
    """Model reservoir shared by every emitter, with no free-space field.

    ``J_ab(w) = g_a g_b (width/pi) / ((w - omega_c)**2 + width**2)`` on
    ``[omega_lo, omega_hi]`` and zero outside, where ``g_a = coupling * |mu_a|``
    (``coupling`` in eV per Debye). Used to cross-check the solvers.
    """

    omega_c: float
    width: float
    coupling: float
    omega_lo: float
    omega_hi: float
    kind = "lorentzian"

    def density(self, omega, ga=1.0, gb=1.0):
        w = np.asarray(omega, dtype=float)
        lor = self.width / np.pi / ((w - self.omega_c) ** 2 + self.width**2)
        inside = (w >= self.omega_lo) & (w <= self.omega_hi)
        return np.where(inside, ga * gb * lor, 0.0)

    def g(self, emitter):
        return self.coupling * float(np.linalg.norm(emitter.dipole))


Environment = Vacuum | DrudeHalfSpace | LorentzianBath


def drude_permittivity(env, omega, *, allow_complex=False):
    """Drude permittivity at (possibly complex) energy ``omega``.

    Real arguments must be positive; pass ``allow_complex=True`` for the
    imaginary-axis and negative-frequency evaluations used internally.
    """
    w = np.asarray(omega)
    if not allow_complex:
        if np.iscomplexobj(w) or np.any(w <= 0):
            raise NonPositiveFrequency(f"drude_permittivity needs omega > 0, got {omega!r}")
    return 1.0 - env.omega_p**2 / (w * w + 1j * env.gamma * w)


@dataclass(frozen=True)
class Tolerances:
    quad: float = 1e-8
    memory: float = 1e-6
    tabulation: float = 1e-4
    step: float = 1e-3


@dataclass(frozen=True)
class SystemConfig:
    emitters: Tuple[Emitter, ...]
    environment: Environment = field(default_factory=Vacuum)
    initial: Optional[Tuple[complex, ...]] = None
    method: str = "fqd"
    rwa: bool = False
    t_max: float = 100.0
    dt: float = 0.1
    omega_min: float = 0.0
    omega_max: Optional[float] = None
    n_omega: Optional[int] = None
    tau_max: Optional[float] = None
    tolerances: Tolerances = field(default_factory=Tolerances)
    n_pseudomodes: int = 400

    def __post_init__(self):
        object.__setattr__(self, "emitters", tuple(self.emitters))
        if self.initial is None:
            init = tuple(1.0 + 0j if i == 0 else 0j for i in range(len(self.emitters)))
        else:
            init = tuple(complex(c) for c in self.initial)
        object.__setattr__(self, "initial", init)

    @property
    def n(self):
        return len(self.emitters)

    @property
    def omega_cutoff(self):
        """Upper end of real-axis frequency integrals."""
        if self.omega_max is not None:
            return self.omega_max
        return default_cutoff(self.emitters, self.environment)

    @property
    def memory_time(self):
        if self.tau_max is not None:
            return self.tau_max
        env = self.environment
        if isinstance(env, DrudeHalfSpace):
            # SPP pole sits gamma/2 below the real axis: exp(-15) left at 30/gamma
            return min(self.t_max, 30.0 / env.gamma)
        if isinstance(env, LorentzianBath):
            return min(self.t_max, 20.0 / env.width)
        return self.t_max

    @property
    def frequency_points(self):
        """Uniform base-grid size; by default just fine enough that dw * tau_max <= pi."""
        if self.n_omega is not None:
            return self.n_omega
        lo = self.frequency_floor
        span = self.omega_cutoff - lo
        return max(257, int(math.ceil(span * self.memory_time / math.pi)) + 1)

    @property
    def frequency_floor(self):
        if isinstance(self.environment, LorentzianBath):
            return max(self.omega_min, self.environment.omega_lo)
        return self.omega_min

    def with_(self, **changes):
        return replace(self, **changes)


def default_cutoff(emitters, env):
    if isinstance(env, LorentzianBath):
        return env.omega_hi
    wmax = max(e.omega for e in emitters)
    if isinstance(env, DrudeHalfSpace):
        return max(10.0 * wmax, 5.0 * env.omega_p)
    return 10.0 * wmax


def _violations(config):
    out = []
    if len(config.emitters) == 0:
        out.append(Violation("NoEmitters", "emitters", "at least one emitter is required"))
    half_space = isinstance(config.environment, DrudeHalfSpace)
    for i, e in enumerate(config.emitters):
        p = f"emitters[{i}]"
        if not (e.omega > 0 and math.isfinite(e.omega)):
            out.append(Violation("NonPositiveFrequency", p + ".omega", f"omega must be > 0, got {e.omega}"))
        if any(isinstance(x, complex) for x in e.dipole):
            out.append(Violation("ComplexDipole", p + ".dipole", "dipoles must be real vectors"))
        elif float(np.linalg.norm(e.dipole)) <= 0:
            out.append(Violation("ZeroDipole", p + ".dipole", "|dipole| must be > 0"))
        if any(isinstance(x, complex) for x in e.position):
            out.append(Violation("ComplexPosition", p + ".position", "positions must be real"))
        elif half_space and e.position[2] <= 0:
            out.append(Violation("EmitterBelowInterface", p + ".position",
                                 f"z must be > 0 above the half-space, got {e.position[2]}"))
    for i in range(len(config.emitters)):
        for j in range(i + 1, len(config.emitters)):
            if config.emitters[i].position == config.emitters[j].position:
                out.append(Violation("CoincidentEmitters", f"emitters[{j}].position",
                                     f"coincides with emitters[{i}]"))
    env = config.environment
    if half_space and not (env.omega_p > 0 and env.gamma > 0):
        out.append(Violation("NonPassiveMedium", "environment",
                             "Drude medium needs omega_p > 0 and gamma > 0"))
    if isinstance(env, LorentzianBath) and not (
            env.width > 0 and env.coupling >= 0 and 0 <= env.omega_lo < env.omega_hi):
        out.append(Violation("InvalidBath", "environment",
                             "Lorentzian bath needs width > 0, coupling >= 0 and 0 <= omega_lo < omega_hi"))
    if len(config.initial) != len(config.emitters):
        out.append(Violation("InitialStateLength", "initial",
                             f"{len(config.initial)} amplitudes for {len(config.emitters)} emitters"))
    else:
        norm = sum(abs(c) ** 2 for c in config.initial)
        if abs(norm - 1.0) > 1e-10:
            out.append(Violation("NonNormalizedInitialState", "initial",
                                 f"sum |C|^2 = {norm:.12g}, expected 1"))
    if config.method not in METHODS:
        out.append(Violation("UnknownMethod", "method", f"{config.method!r} not in {METHODS}"))
    if not config.dt > 0:
        out.append(Violation("NonPositiveStep", "dt", f"dt must be > 0, got {config.dt}"))
    if not config.t_max > 0:
        out.append(Violation("NonPositiveStep", "t_max", f"t_max must be > 0, got {config.t_max}"))
    if config.omega_min < 0:
        out.append(Violation("EmptyFrequencyGrid", "omega_min", "omega_min must be >= 0"))
    if config.n_omega is not None and config.n_omega < 2:
        out.append(Violation("EmptyFrequencyGrid", "n_omega", "need at least 2 frequency points"))
    if config.omega_max is not None and config.omega_max <= config.omega_min:
        out.append(Violation("EmptyFrequencyGrid", "omega_max", "omega_max must exceed omega_min"))
    if config.tau_max is not None and config.tau_max <= 0:
        out.append(Violation("NonPositiveStep", "tau_max", "tau_max must be > 0"))
    if config.n_pseudomodes < 2:
        out.append(Violation("TooFewPseudomodes", "n_pseudomodes", "need at least 2 modes"))
    return out


def validate_config(config: SystemConfig) -> SystemConfig:
    """Return ``config`` unchanged if every invariant holds.

    Raises :class:`ValidationError` listing all violations otherwise.
    """
    problems = _violations(config)
    if problems:
        raise ValidationError(problems)
    return config
