"""Markov-regime quantities: decay rates, energy shifts and dipole couplings.

All energies in eV; rates are returned as hbar*Gamma in eV (divide by
``units.HBAR_EV_S`` for 1/s). Dipoles are in Debye, distances in nm.

The free-space Lamb shift is dropped everywhere, so energy shifts here are
scattering contributions only.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import GridDoesNotEncloseResonance, ImagAxisUnavailable, TailNotConverged
from .greens import (free_space_gf, scattering_gf, spectral_density_value,
                     wavenumber)
from .model import DrudeHalfSpace, Emitter, LorentzianBath, Vacuum, default_cutoff
from .quadrature import gauss_kronrod
from .special import auxiliary_integrals
from .units import DEBYE2_EV_NM3, HBARC_EV_NM

_OUTER_TOL = 1e-9
_INNER_TOL = 1e-11


def _separation(ea: Emitter, eb: Emitter):
    d = ea.r - eb.r
    R = float(np.linalg.norm(d))
    if R == 0:
        raise ValueError("emitters coincide")
    return R, d / R


def free_space_decay_rate(emitter: Emitter):
    """|mu|^2 omega^3 / (3 pi hbar eps0 c^3), as hbar*Gamma in eV."""
    k = wavenumber(emitter.omega)
    return 4.0 / 3.0 * DEBYE2_EV_NM3 * float(emitter.mu @ emitter.mu) * k**3


def decay_rate(emitter: Emitter, env, *, tol=_INNER_TOL):
    """Gamma = 2 pi J_aa(omega_a) with the full (free + scattering) Green's tensor."""
    return 2 * np.pi * spectral_density_value(emitter, emitter, emitter.omega, env, "total", tol=tol)


def _cutoff(emitters, env, omega_max):
    return omega_max if omega_max is not None else default_cutoff(emitters, env)


def _sc_density(ea, eb, env):
    def f(ws):
        return np.array([spectral_density_value(ea, eb, w, env, "scattering", tol=_INNER_TOL)
                         for w in ws])
    return f


def _tail(j, omega_max, omega0, sign, env=None):
    """Power-law tail of int_Omega^inf J/(w + sign*omega0) dw and its own size as error."""
    if isinstance(env, LorentzianBath) and omega_max >= env.omega_hi:
        return 0.0, 0.0
    j1 = float(j(np.array([omega_max]))[0])
    j2 = float(j(np.array([omega_max / 2]))[0])
    if j1 == 0.0:
        return 0.0, 0.0
    if j2 == 0.0 or abs(j1) >= abs(j2) or np.sign(j1) != np.sign(j2):
        raise TailNotConverged(
            f"spectral density not decaying at the cutoff (J({omega_max / 2:.3g})={j2:.3g}, "
            f"J({omega_max:.3g})={j1:.3g}); raise omega_max")
    p = math.log(abs(j2) / abs(j1)) / math.log(2.0)
    # int_W^inf J(W) (W/w)^p / w dw, denominator shift is O(omega0/W)
    tail = j1 / p * (1.0 + sign * (-omega0) / omega_max * p / (p + 1))
    return tail, abs(tail)


def _breaks(env, *points):
    out = [p for p in points if p is not None]
    if isinstance(env, DrudeHalfSpace):
        out.append(env.spp_frequency)
    if isinstance(env, LorentzianBath):
        out += [env.omega_lo, env.omega_c - 3 * env.width, env.omega_c, env.omega_c + 3 * env.width]
    return out


def energy_shift_scattering(emitter: Emitter, env, state="excited", *, method="imag_axis",
                            omega_max=None, tol=_OUTER_TOL, return_error=False):
    """Casimir-Polder-type shift of the excited or ground state (eV).

    Excited: ``-P int J^Sc(w) / (w - w_a) dw``; ground: ``-int J^Sc(w) / (w + w_a) dw``.

    ``method="real_axis"`` does exactly that, with pole subtraction and a
    power-law tail past ``omega_max``. Off-resonant reflected fields make
    J^Sc oscillate rather than decay at high frequency, so the default
    ``"imag_axis"`` closes the contour instead::

        excited = -(w_a^2/eps0 c^2) mu.Re G_Sc(r, r, w_a).mu + I_Sc(w_a)
        ground  = -I_Sc(w_a)

    with ``I_Sc`` the single-emitter scattering integral on the imaginary axis.
    """
    if state not in ("excited", "ground"):
        raise ValueError(f"state must be 'excited' or 'ground', got {state!r}")
    if isinstance(env, Vacuum):
        return (0.0, 0.0) if return_error else 0.0
    w0 = emitter.omega
    if isinstance(env, LorentzianBath):
        method = "real_axis"
    if method == "imag_axis":
        isc = _I_imag_axis(emitter, emitter, w0, env, ("scattering",), tol)
        if state == "ground":
            res = -isc
        else:
            g = scattering_gf(emitter.r, emitter.r, w0, env, tol=_INNER_TOL).value.real
            res = -4 * np.pi * DEBYE2_EV_NM3 * wavenumber(w0) ** 2 * float(emitter.mu @ g @ emitter.mu) + isc
        return (res, abs(res) * tol) if return_error else res
    if method != "real_axis":
        raise ValueError(f"unknown method {method!r}")
    W = _cutoff([emitter], env, omega_max)
    j = _sc_density(emitter, emitter, env)
    if state == "ground":
        val, err = gauss_kronrod(lambda w: j(w) / (w + w0), 0.0, W, epsrel=tol,
                                 breakpoints=_breaks(env, w0))
        tail, terr = _tail(j, W, w0, +1, env)
        res = -(float(val[0]) + tail)
        return (res, err + terr) if return_error else res
    if not 0 < w0 < W:
        raise GridDoesNotEncloseResonance(f"resonance {w0} eV outside (0, {W}) eV")
    val, err = pv_integral(j, w0, 0.0, W, tol=tol, breakpoints=_breaks(env))
    tail, terr = _tail(j, W, w0, -1, env)
    res = -(val + tail)
    return (res, err + terr) if return_error else res


def pv_integral(f, omega0, lo, hi, *, tol=1e-9, breakpoints=()):
    """Principal value of ``int_lo^hi f(w)/(w - omega0) dw`` by pole subtraction.

    The subtracted integrand ``(f(w) - f(w0))/(w - w0)`` is smooth; where a
    node lands on the pole it is replaced by a central-difference derivative.
    """
    f0 = float(f(np.array([omega0]))[0])
    h = 1e-5 * max(abs(omega0), 1.0)

    def g(w):
        w = np.asarray(w, dtype=float)
        out = np.empty_like(w)
        near = np.abs(w - omega0) < 1e-12 * max(abs(omega0), 1.0)
        far = ~near
        out[far] = (f(w[far]) - f0) / (w[far] - omega0)
        if near.any():
            d = (f(np.array([omega0 + h]))[0] - f(np.array([omega0 - h]))[0]) / (2 * h)
            out[near] = d
        return out

    if lo > 0:
        log_term = math.log(abs((hi - omega0) / (lo - omega0)))
    else:
        log_term = math.log(abs((hi - omega0) / omega0))
    # the pole term sets the scale; a symmetric density can make the PV vanish exactly
    floor = tol * abs(f0) * (1.0 + abs(log_term))
    val, err = gauss_kronrod(g, lo, hi, epsrel=tol, epsabs=floor, breakpoints=[omega0, *breakpoints])
    return float(val[0]) + f0 * log_term, err


def v_rddi(ea: Emitter, eb: Emitter, env, *, tol=_INNER_TOL):
    """-(w_b^2/eps0 c^2) mu_a . G(r_a, r_b, w_b) . mu_b (complex eV)."""
    R, _ = _separation(ea, eb)
    w = eb.omega
    if isinstance(env, LorentzianBath):
        return _model_rddi(ea, eb, env)
    g = free_space_gf(ea.r, eb.r, w).value
    if not isinstance(env, Vacuum):
        g = g + scattering_gf(ea.r, eb.r, w, env, tol=tol).value
    return complex(-4 * np.pi * DEBYE2_EV_NM3 * wavenumber(w) ** 2 * (ea.mu @ g @ eb.mu))


def _model_rddi(ea, eb, env):
    """Resonant coupling through a model bath from its spectral density alone.

    Kramers-Kronig on the response function gives
    ``-P int J/(w - w_b) - i pi J(w_b) - int J/(w + w_b)``.
    """
    wb = eb.omega
    j = _sc_density(ea, eb, env)
    pv, _ = pv_integral(j, wb, env.omega_lo, env.omega_hi, breakpoints=_breaks(env)) \
        if env.omega_lo < wb < env.omega_hi else (_plain(j, wb, env, -1), 0.0)
    return complex(-pv - integral_I(ea, eb, wb, env, "real_axis"),
                   -np.pi * float(j(np.array([wb]))[0]))


def _plain(j, w0, env, sign):
    val, _ = gauss_kronrod(lambda w: j(w) / (w + sign * w0), env.omega_lo, env.omega_hi,
                           epsrel=_OUTER_TOL, breakpoints=_breaks(env))
    return float(val[0])


def short_distance_ddi(ea: Emitter, eb: Emitter):
    """Non-retarded Coulomb dipole-dipole energy (eV)."""
    R, n = _separation(ea, eb)
    return DEBYE2_EV_NM3 * float(ea.mu @ eb.mu - 3 * (ea.mu @ n) * (eb.mu @ n)) / R**3


def free_space_I0(ea: Emitter, eb: Emitter, omega_prime):
    """Closed form of the free-space off-resonant integral for a pair (eV)."""
    R, n = _separation(ea, eb)
    xp = omega_prime * R / HBARC_EV_NM
    i1, i2, i3 = auxiliary_integrals(xp)
    a = float(ea.mu @ eb.mu - (ea.mu @ n) * (eb.mu @ n))
    b = float(ea.mu @ eb.mu - 3 * (ea.mu @ n) * (eb.mu @ n))
    return -DEBYE2_EV_NM3 * xp / (np.pi * R**3) * (a * i1 + b * (i2 + i3))


def _free_I_real_axis(ea, eb, omega_prime, tol):
    """Real-axis free-space integral with the growing oscillatory parts Abel-summed.

    With x = w R / c and x' = w' R / c the integrand is
    ``(C / pi R^3) f(x) / (x + x')`` where
    ``f = A x^2 sin x - B (sin x - x cos x)``, A = mu.(I-nn).mu, B = mu.mu - 3 (mu.n)^2.
    Abel limits: int sin = 1, int cos = 0, int x sin = 0, int x cos = -1.
    """
    from scipy.integrate import IntegrationWarning, quad

    R, n = _separation(ea, eb)
    xp = omega_prime * R / HBARC_EV_NM
    a = float(ea.mu @ eb.mu - (ea.mu @ n) * (eb.mu @ n))
    b = float(ea.mu @ eb.mu - 3 * (ea.mu @ n) * (eb.mu @ n))
    with warnings.catch_warnings():
        # QAWF flags "bad behaviour" in late cycles where the terms are already below epsabs
        warnings.simplefilter("ignore", IntegrationWarning)
        s, _ = quad(lambda x: 1.0 / (x + xp), 0, np.inf, weight="sin", wvar=1.0, epsabs=1e-14, epsrel=tol)
        c, _ = quad(lambda x: 1.0 / (x + xp), 0, np.inf, weight="cos", wvar=1.0, epsabs=1e-14, epsrel=tol)
    # x^2 sin x/(x+x') = (x - x') sin x + x'^2 sin x/(x+x')
    ia = -xp + xp**2 * s
    # x cos x/(x+x') = cos x - x' cos x/(x+x')
    ib = s + xp * c
    return DEBYE2_EV_NM3 / (np.pi * R**3) * (a * ia - b * ib)


def _sc_I_real_axis(ea, eb, omega_prime, env, omega_max, tol):
    W = _cutoff([ea, eb], env, omega_max)
    j = _sc_density(ea, eb, env)
    val, err = gauss_kronrod(lambda w: j(w) / (w + omega_prime), 0.0, W, epsrel=tol,
                             epsabs=1e-13, breakpoints=_breaks(env, ea.omega, eb.omega))
    tail, terr = _tail(j, W, omega_prime, +1, env)
    return float(val[0]) + tail


def _I_imag_axis(ea, eb, omega_prime, env, parts, tol):
    if not isinstance(env, (Vacuum, DrudeHalfSpace)):
        raise ImagAxisUnavailable(f"no imaginary-axis Green's function for {env!r}")
    same = ea is eb or np.array_equal(ea.r, eb.r)
    lengths = []
    if "free" in parts and not same:
        lengths.append(_separation(ea, eb)[0])
    if "scattering" in parts and not isinstance(env, Vacuum):
        lengths.append(ea.r[2] + eb.r[2])
    if not lengths:
        return 0.0
    kappa_max = 60.0 * HBARC_EV_NM / min(lengths)

    def integrand(kappas):
        out = np.empty(len(kappas))
        for i, kap in enumerate(kappas):
            g = np.zeros((3, 3))
            if "free" in parts and not same:
                g = g + free_space_gf(ea.r, eb.r, 1j * kap).value.real
            if "scattering" in parts and not isinstance(env, Vacuum):
                g = g + scattering_gf(ea.r, eb.r, 1j * kap, env, tol=_INNER_TOL).value.real
            q = kap / HBARC_EV_NM
            out[i] = q * q * omega_prime * (ea.mu @ g @ eb.mu) / (kap * kap + omega_prime**2)
        return out

    val, err = gauss_kronrod(integrand, 0.0, kappa_max, epsrel=tol, epsabs=1e-300,
                             breakpoints=[omega_prime, 0.05 * kappa_max])
    return -4.0 * DEBYE2_EV_NM3 * float(val[0])


def integral_I(ea: Emitter, eb: Emitter, omega_prime, env, method="imag_axis", *,
               parts=("free", "scattering"), omega_max=None, tol=_OUTER_TOL):
    """``int_0^inf dw (w^2/pi eps0 c^2) mu_a.Im G(r_a,r_b,w).mu_b / (w + w')`` in eV.

    ``method`` is ``"real_axis"`` or ``"imag_axis"``. For a single emitter
    (``ea`` at the same position as ``eb``) only the scattering part exists.
    """
    if not omega_prime > 0:
        raise ValueError("omega_prime must be > 0")
    same = np.array_equal(ea.r, eb.r)
    if method == "imag_axis":
        try:
            return _I_imag_axis(ea, eb, omega_prime, env, parts, tol)
        except ImagAxisUnavailable:
            method = "real_axis"
    if method != "real_axis":
        raise ValueError(f"unknown method {method!r}")
    total = 0.0
    if isinstance(env, LorentzianBath):
        return _plain(_sc_density(ea, eb, env), omega_prime, env, +1)
    if "free" in parts and not same:
        total += _free_I_real_axis(ea, eb, omega_prime, tol)
    if "scattering" in parts and not isinstance(env, Vacuum):
        total += _sc_I_real_axis(ea, eb, omega_prime, env, omega_max, tol)
    return total


def v_qc(ea: Emitter, eb: Emitter, env, *, method="imag_axis", **kw):
    return integral_I(ea, eb, eb.omega, env, method, **kw)


def v_orc(ea: Emitter, eb: Emitter, env, *, method="imag_axis", **kw):
    if ea.omega == eb.omega:
        return 0.0
    return integral_I(ea, eb, eb.omega, env, method, **kw) - integral_I(ea, eb, ea.omega, env, method, **kw)


@dataclass
class PairCoupling:
    a: int
    b: int
    v_rddi: complex
    v_orc: float
    v_qc: float

    @property
    def v_ddi(self):
        return self.v_rddi + self.v_orc

    @property
    def v_ddi_rwa(self):
        return self.v_rddi + self.v_qc


@dataclass
class WeakCouplingReport:
    gamma: list
    shift_excited: list
    shift_ground: list
    pairs: dict = field(default_factory=dict)

    def coupling(self, a, b, rwa=False):
        p = self.pairs[(a, b)]
        return p.v_ddi_rwa if rwa else p.v_ddi


def weak_coupling_report(emitters, env, *, method="imag_axis", omega_max=None, free_only=False):
    """Assemble every Markov coefficient for a set of emitters.

    ``free_only`` restricts the pair couplings to the free-space Green's
    function and the rates to Gamma0 (the Markovian part of the full
    dynamics).
    """
    emitters = list(emitters)
    if free_only and isinstance(env, LorentzianBath):
        n = len(emitters)
        zero = {(a, b): PairCoupling(a, b, 0j, 0.0, 0.0) for a in range(n) for b in range(n) if a != b}
        return WeakCouplingReport([0.0] * n, [0.0] * n, [0.0] * n, zero)
    envx = Vacuum() if free_only else env
    gam = [free_space_decay_rate(e) if free_only else decay_rate(e, env) for e in emitters]
    de = [0.0 if free_only else energy_shift_scattering(e, env, "excited", method=method, omega_max=omega_max)
          for e in emitters]
    dg = [0.0 if free_only else energy_shift_scattering(e, env, "ground", method=method, omega_max=omega_max)
          for e in emitters]
    pairs = {}
    for a, ea in enumerate(emitters):
        for b, eb in enumerate(emitters):
            if a == b:
                continue
            if (b, a) in pairs and ea.omega == eb.omega:
                q = pairs[(b, a)]
                # reciprocity: mu_a.G(ra,rb).mu_b = mu_b.G(rb,ra).mu_a at equal frequency
                pairs[(a, b)] = PairCoupling(a, b, q.v_rddi, q.v_orc, q.v_qc)
                continue
            kw = dict(method=method, omega_max=omega_max)
            qc = v_qc(ea, eb, envx, **kw)
            orc = 0.0 if ea.omega == eb.omega else qc - integral_I(ea, eb, ea.omega, envx, **kw)
            pairs[(a, b)] = PairCoupling(a, b, v_rddi(ea, eb, envx), orc, qc)
    return WeakCouplingReport(gam, de, dg, pairs)
