"""Unit conventions.

Everything internal uses hbar = 1 with energies in eV, lengths in nm and
times in hbar/eV (about 0.658 fs). Transition dipoles are given in Debye and
only ever enter through the Coulomb prefactor ``DEBYE2_EV_NM3``.
"""

from scipy import constants as _c

HBAR_EV_S = _c.hbar / _c.e
"""hbar in eV*s; one internal time unit in seconds."""

HBARC_EV_NM = _c.hbar * _c.c / _c.e * 1e9
"""hbar*c in eV*nm (CODATA 2018, 197.3269804...), kept at full precision so
that rates built from it agree with SI evaluations to rounding."""

DEBYE_C_M = 1e-21 / _c.c
"""One Debye in C*m."""

DEBYE2_EV_NM3 = DEBYE_C_M**2 / (4 * _c.pi * _c.epsilon_0) / _c.e * 1e27
"""D^2 / (4 pi eps0) in eV*nm^3. Multiplying |mu|^2/R^3 (Debye, nm) by this
gives a Coulomb dipole-dipole energy in eV."""

DEBYE_E_NM = DEBYE_C_M / _c.e * 1e9
"""One Debye in units of e*nm."""


def time_to_seconds(t):
    return t * HBAR_EV_S


def seconds_to_time(s):
    return s / HBAR_EV_S


def time_to_fs(t):
    return t * HBAR_EV_S * 1e15


def fs_to_time(fs):
    return fs * 1e-15 / HBAR_EV_S


def rate_to_per_second(rate):
    """Convert an internal rate (eV, since hbar = 1) to 1/s."""
    return rate / HBAR_EV_S


def debye_to_enm(mu):
    return mu * DEBYE_E_NM


def enm_to_debye(mu):
    return mu / DEBYE_E_NM


def energy_to_wavenumber(omega):
    """Vacuum wavenumber k0 = omega / (hbar c) in 1/nm."""
    return omega / HBARC_EV_NM
