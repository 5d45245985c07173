"""Dyadic Green's functions and coupling spectral densities.

Green's tensors are in 1/nm and solve
``[k0^2 eps - curl curl] G = -I delta``. The reflected part above a planar
interface is a Sommerfeld integral over the in-plane wavenumber, split into
a propagating piece (``k_rho = k0 sin t``) and an evanescent piece
(``k_rho = k0 cosh u``) so that the 1/k_z branch point never appears as a
singular integrand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import CoincidentPointsFullTensor
from .model import DrudeHalfSpace, Emitter, LorentzianBath, Vacuum
from .quadrature import gauss_kronrod
from .units import DEBYE2_EV_NM3, HBARC_EV_NM

PARTS = ("free", "scattering", "total")


@dataclass(frozen=True)
class GreensTensor:
    value: np.ndarray
    part: str = "total"
    error: float = 0.0

    def __add__(self, other):
        return GreensTensor(self.value + other.value, "total", self.error + other.error)

    @property
    def T(self):
        return GreensTensor(self.value.T, self.part, self.error)

    def contract(self, mu1, mu2):
        return np.asarray(mu1) @ self.value @ np.asarray(mu2)


def wavenumber(omega):
    return omega / HBARC_EV_NM


# -- free space --------------------------------------------------------------

def free_space_gf(r1, r2, omega, *, imag_only=False):
    """Free-space dyadic Green's function G0(r1, r2, omega).

    ``omega`` may be complex (e.g. ``1j*kappa`` on the imaginary axis). At
    coincident points only the imaginary part is finite; request it with
    ``imag_only=True``.
    """
    d = np.asarray(r1, dtype=float) - np.asarray(r2, dtype=float)
    R = float(np.linalg.norm(d))
    k0 = wavenumber(omega)
    if R == 0.0:
        if not imag_only:
            raise CoincidentPointsFullTensor("full G0 diverges at r1 == r2; use imag_only=True")
        return GreensTensor(np.eye(3) * (np.real(k0) / (6 * np.pi)), "free")
    n = d / R
    nn = np.outer(n, n)
    x = k0 * R
    g = np.exp(1j * x) / (4 * np.pi * R) * (
        (np.eye(3) - nn) + (3 * nn - np.eye(3)) * (1.0 / x**2 - 1j / x))
    if imag_only:
        g = g.imag
    return GreensTensor(np.asarray(g), "free")


# -- planar interface --------------------------------------------------------

def _kz(arg):
    kz = np.sqrt(arg + 0j)
    return np.where(kz.imag < 0, -kz, kz)


def fresnel_coefficients(k_rho, omega, env, *, kz1=None):
    """TM and TE reflection coefficients ``(r_p, r_s)`` seen from vacuum.

    Vectorized over ``k_rho``. ``omega`` may be complex for the internal
    imaginary-axis evaluation; ``kz1`` lets the caller fix the vacuum branch.
    """
    k_rho = np.asarray(k_rho)
    if isinstance(env, Vacuum):
        z = np.zeros(np.shape(k_rho), dtype=complex)
        return z, z.copy()
    # eps - 1 directly; forming it from eps loses digits when |omega| >> omega_p
    dm = -env.omega_p**2 / (omega * omega + 1j * env.gamma * omega)
    eps = 1.0 + dm
    k0sq = wavenumber(omega) ** 2
    if kz1 is None:
        kz1 = _kz(k0sq - k_rho**2)
    kz2 = _kz(kz1 * kz1 + dm * k0sq)
    # numerators rationalized so both stay accurate when eps -> 1
    rp = dm * ((eps + 1.0) * kz1 * kz1 - k0sq) / (eps * kz1 + kz2) ** 2
    rs = -dm * k0sq / (kz1 + kz2) ** 2
    return rp, rs


def _path_pieces(omega, Z):
    """Integration pieces ``(lo, hi, map)``; ``map(u) -> (k_rho, kz1, w)`` with
    ``w = dk_rho / (kz1 du)``."""
    k0 = wavenumber(omega)
    kappa_max = 40.0 / Z
    if np.iscomplexobj(omega) and np.real(omega) == 0:
        q0 = float(np.imag(k0))
        umax = math.asinh(max(kappa_max, 4 * q0) / q0)

        def evan(u):
            return q0 * np.sinh(u), 1j * q0 * np.cosh(u), np.full(u.shape, -1j)

        return [(0.0, umax, evan)]
    k0 = float(np.real(k0))
    s = 1.0 if k0 > 0 else -1.0
    a = abs(k0)

    def prop(t):
        return a * np.sin(t), s * a * np.cos(t), np.full(t.shape, s + 0j)

    def evan(u):
        return a * np.cosh(u), 1j * a * np.sinh(u), np.full(u.shape, -1j)

    kmax = math.sqrt(kappa_max**2 + a * a) + 4 * a
    return [(0.0, math.pi / 2, prop), (0.0, math.acosh(kmax / a), evan)]


def _reflected_components(omega, env, Z, rho, tol):
    """The six Sommerfeld integrals that make up G_Sc (see module docstring)."""
    k0sq = wavenumber(omega) ** 2
    total = np.zeros(6, dtype=complex)
    err = 0.0
    for lo, hi, path in _path_pieces(omega, Z):
        def f(u, path=path):
            kr, kz1, w = path(u)
            rp, rs = fresnel_coefficients(kr, omega, env, kz1=kz1)
            e = np.exp(1j * kz1 * Z)
            x = kr * rho
            j0 = special.j0(x)
            j1 = special.j1(x)
            j2 = special.jv(2, x)
            ratio = kz1**2 / k0sq
            base = w * kr * e
            return np.stack([
                base * rs * j0,
                base * rs * j2,
                base * rp * ratio * j0,
                base * rp * ratio * j2,
                w * kz1 * kr**2 * rp * j1 * e / k0sq,
                base * kr**2 * rp * j0 / k0sq,
            ], axis=1)

        val, e = gauss_kronrod(f, lo, hi, epsrel=tol, epsabs=1e-300, initial_panels=8)
        total += val
        err += e
    return total, err


def half_space_scattering_gf(r1, r2, omega, env, *, tol=1e-8):
    """Reflected (scattering) Green's tensor above a planar half-space.

    Both points must lie above the interface (z > 0). ``omega`` may be a
    real energy of either sign or purely imaginary.
    """
    if isinstance(env, Vacuum):
        return GreensTensor(np.zeros((3, 3), dtype=complex), "scattering")
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    if r1[2] <= 0 or r2[2] <= 0:
        raise ValueError("half-space Green's function needs z > 0 for both points")
    dx, dy = r1[0] - r2[0], r1[1] - r2[1]
    rho = math.hypot(dx, dy)
    phi = math.atan2(dy, dx) if rho > 0 else 0.0
    Z = r1[2] + r2[2]
    (s0, s2, p0, p2, xz, zz), err = _reflected_components(omega, env, Z, rho, tol)
    c, s = math.cos(phi), math.sin(phi)
    c2, s2_ = math.cos(2 * phi), math.sin(2 * phi)
    pre = 1j / (8 * np.pi)
    g = np.empty((3, 3), dtype=complex)
    g[0, 0] = pre * (s0 + s2 * c2 - p0 + p2 * c2)
    g[1, 1] = pre * (s0 - s2 * c2 - p0 - p2 * c2)
    g[0, 1] = g[1, 0] = pre * (s2 + p2) * s2_
    g[0, 2] = xz * c / (4 * np.pi)
    g[2, 0] = -g[0, 2]
    g[1, 2] = xz * s / (4 * np.pi)
    g[2, 1] = -g[1, 2]
    g[2, 2] = 1j / (4 * np.pi) * zz
    scale = abs(pre) * err
    return GreensTensor(g, "scattering", float(scale))


def scattering_gf(r1, r2, omega, env, *, tol=1e-8):
    if isinstance(env, Vacuum):
        return GreensTensor(np.zeros((3, 3), dtype=complex), "scattering")
    if isinstance(env, DrudeHalfSpace):
        return half_space_scattering_gf(r1, r2, omega, env, tol=tol)
    raise TypeError(f"unsupported environment {env!r}")


def greens_tensor(r1, r2, omega, env, part="total", *, tol=1e-8):
    """Free, scattering or total G; the free part is undefined at r1 == r2."""
    if part == "free":
        return free_space_gf(r1, r2, omega)
    if part == "scattering":
        return scattering_gf(r1, r2, omega, env, tol=tol)
    return free_space_gf(r1, r2, omega) + scattering_gf(r1, r2, omega, env, tol=tol)


# -- spectral densities ------------------------------------------------------

def im_greens_contracted(e1: Emitter, e2: Emitter, omega, env, part="total", *, tol=1e-8):
    """``mu1 . Im G(r1, r2, omega) . mu2`` (1/nm, dipoles in Debye)."""
    val = 0.0
    if part in ("free", "total"):
        g0 = free_space_gf(e1.r, e2.r, omega, imag_only=True).value
        val += e1.mu @ np.real(g0) @ e2.mu
    if part in ("scattering", "total") and not isinstance(env, Vacuum):
        gs = scattering_gf(e1.r, e2.r, omega, env, tol=tol).value
        val += e1.mu @ gs.imag @ e2.mu
    return val


def coupling_prefactor(omega):
    """``omega^2/(pi eps0 c^2)`` in internal units: maps mu.ImG.mu (D^2/nm) to eV."""
    return 4.0 * DEBYE2_EV_NM3 * wavenumber(omega) ** 2


def spectral_density_value(e1, e2, omega, env, part="total", *, tol=1e-8):
    if isinstance(env, LorentzianBath):
        # a model bath has no free-space part; it is all "scattering"
        if part == "free":
            return 0.0
        return float(env.density(omega, env.g(e1), env.g(e2)))
    return coupling_prefactor(omega) * im_greens_contracted(e1, e2, omega, env, part, tol=tol)


@dataclass(frozen=True)
class SpectralDensity:
    """J_ab(omega) tabulated on a (possibly non-uniform) grid, in eV."""

    pair: tuple
    omega: np.ndarray
    values: np.ndarray
    part: str = "scattering"

    def __call__(self, w):
        return np.interp(w, self.omega, self.values.real, left=0.0, right=0.0)

    @property
    def zeroth_moment(self):
        return float(np.trapezoid(self.values.real, self.omega))


def spectral_density(pair, grid, env, part="scattering", *, tol=1e-4, quad_tol=1e-8,
                     refine=True, max_points=4000, indices=(0, 1)):
    """Tabulate J over ``grid`` with adaptive refinement.

    Intervals where linear interpolation misses the midpoint value by more
    than ``tol * max|J|`` are bisected (this is what resolves the surface
    plasmon peak). ``pair`` is a tuple of two emitters.
    """
    e1, e2 = pair
    grid = np.asarray(grid, dtype=float)

    def evaluate(ws):
        out = np.empty(len(ws))
        for i, w in enumerate(ws):
            out[i] = 0.0 if w <= 0 else spectral_density_value(e1, e2, w, env, part, tol=quad_tol)
        return out

    if part == "scattering" and isinstance(env, Vacuum):
        return SpectralDensity(tuple(indices), grid.copy(), np.zeros(len(grid)), part)

    w, j = refine_grid(evaluate, grid, tol=tol, max_points=max_points if refine else len(grid))
    return SpectralDensity(tuple(indices), w, j, part)


def refine_grid(f, grid, *, tol=1e-4, max_points=4000):
    """Bisect intervals of ``grid`` until linear interpolation of ``f`` is good to ``tol * max|f|``.

    Only intervals created in the previous round are re-examined.
    """
    w = np.asarray(grid, dtype=float).copy()
    j = np.asarray(f(w), dtype=float)
    active = np.ones(len(w) - 1, dtype=bool)
    while active.any() and len(w) < max_points:
        idx = np.nonzero(active)[0]
        mids = 0.5 * (w[idx] + w[idx + 1])
        jm = np.asarray(f(mids), dtype=float)
        scale = max(np.max(np.abs(j)), np.max(np.abs(jm)), 1e-300)
        bad = np.abs(jm - 0.5 * (j[idx] + j[idx + 1])) > tol * scale
        if not bad.any():
            break
        new_w, new_j = mids[bad], jm[bad]
        w_all = np.concatenate([w, new_w])
        j_all = np.concatenate([j, new_j])
        fresh = np.concatenate([np.zeros(len(w), bool), np.ones(len(new_w), bool)])
        order = np.argsort(w_all, kind="stable")
        w, j, fresh = w_all[order], j_all[order], fresh[order]
        # an interval is active if either end is new
        active = fresh[:-1] | fresh[1:]
    return w, j


def spectral_matrix(emitters, grid, env, part="scattering", **kw):
    """All J_ab on a common grid: returns ``(omega, J)`` with ``J`` of shape (n_w, N, N).

    The grid is refined on the diagonal entries first, then every pair is
    evaluated on the union grid.
    """
    n = len(emitters)
    w = np.asarray(grid, dtype=float)
    for a in range(n):
        w = np.union1d(w, spectral_density((emitters[a], emitters[a]), w, env, part,
                                           indices=(a, a), **kw).omega)
    kw_noref = dict(kw)
    kw_noref["refine"] = False
    out = np.zeros((len(w), n, n))
    for a in range(n):
        for b in range(a, n):
            sd = spectral_density((emitters[a], emitters[b]), w, env, part,
                                  indices=(a, b), **kw_noref)
            out[:, a, b] = sd.values
            out[:, b, a] = sd.values
    return w, out
