"""Memory kernels for the Volterra solver.

Each memory term has the form ``int_0^t K(t - t') y(t') dt'`` with

    K(tau) = int dw J(w) exp(-i (w - w_ref) tau)

where ``w_ref = w_a`` for co-rotating and ``-w_b`` for counter-rotating
terms, and ``y`` carries any residual phase ``exp(-i (w_b - w_a) t')``.
Besides K itself we tabulate product-integration weights: with ``y``
interpolated linearly between time steps the t'-integral is done exactly,
so the step only has to resolve ``y``, not the kernel oscillation.

All frequency integrals use Filon quadrature on the tabulated (piecewise
linear) J, which is exact against the oscillating exponential.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import NoDecayDetected, SpectralGridTooCoarse
from .greens import refine_grid, spectral_matrix
from .model import LorentzianBath, SystemConfig, Vacuum

CO = "co-rotating"
COUNTER = "counter-rotating"
_TAPER = 0.2


def _g(a, ea=None):
    """``(1 - i a - exp(-i a)) / a**2``, i.e. ``int_0^1 (1 - x) exp(-i a x) dx``.

    ``ea`` may pass a precomputed ``exp(-i a)``.
    """
    a = np.asarray(a, dtype=float)
    if ea is None:
        ea = np.exp(-1j * a)
    small = np.abs(a) < 1e-3
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (1.0 - 1j * a - ea) / (a * a)
    if small.any():
        x = a[small]
        out[small] = 0.5 - 1j * x / 6 - x**2 / 24 + 1j * x**3 / 120 + x**4 / 720
    return out


def filon_transform(omega, f, taus, w_ref=0.0, *, chunk=128):
    """``int f(w) exp(-i (w - w_ref) tau) dw`` for each tau, f linear between nodes.

    ``f`` may be complex and may have extra trailing axes (shape ``(n_w, ...)``).
    """
    omega = np.asarray(omega, dtype=float)
    f = np.asarray(f)
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    trail = f.shape[1:]
    f2 = f.reshape(len(omega), -1).astype(complex)
    nu = omega[:-1] - w_ref
    d = np.diff(omega)
    out = np.empty((len(taus), f2.shape[1]), dtype=complex)
    for s in range(0, len(taus), chunk):
        tau = taus[s:s + chunk, None]
        a = d[None, :] * tau
        ea = np.exp(-1j * a)
        g = _g(a, ea)
        phase = np.exp(-1j * nu[None, :] * tau) * d[None, :]
        # int_0^1 x exp(-i a x) dx = exp(-i a) g(-a), and g(-a) = conj(g(a)) for real a
        out[s:s + chunk] = (phase * g) @ f2[:-1] + (phase * ea * g.conj()) @ f2[1:]
    return out.reshape((len(taus),) + trail)


def taper(omega, lo, hi, fraction=_TAPER):
    """Raised-cosine roll-off over the top ``fraction`` of ``[lo, hi]``.

    J^Sc does not vanish at a finite cutoff; a hard edge would leave a 1/tau
    tail in every kernel.
    """
    omega = np.asarray(omega, dtype=float)
    start = hi - fraction * (hi - lo)
    x = np.clip((omega - start) / (hi - start), 0.0, 1.0)
    return 0.5 * (1.0 + np.cos(np.pi * x))


@dataclass(frozen=True)
class SpectralTable:
    """J_ab(w) for all emitter pairs on one shared grid (eV)."""

    omega: np.ndarray
    J: np.ndarray

    @property
    def n(self):
        return self.J.shape[1]

    def zeroth_moment(self):
        return np.trapezoid(self.J, self.omega, axis=0)


def tabulate_spectra(config: SystemConfig, *, tapered=True, part="scattering"):
    """Scattering spectral matrix on the configured grid, adaptively refined.

    Vacuum gives an all-zero table on the base grid.
    """
    env = config.environment
    lo, hi = config.frequency_floor, config.omega_cutoff
    em = config.emitters
    if isinstance(env, Vacuum) and part == "scattering":
        return SpectralTable(np.array([lo, hi]), np.zeros((2, len(em), len(em))))
    grid = np.linspace(lo, hi, config.frequency_points)
    check_grid(grid, config.memory_time)
    if isinstance(env, LorentzianBath):
        g = np.array([env.g(e) for e in em])
        w, shape = refine_grid(lambda x: env.density(x), grid, tol=config.tolerances.tabulation,
                               max_points=200000)
        J = shape[:, None, None] * np.outer(g, g)[None]
        return SpectralTable(w, J)
    w, J = spectral_matrix(em, grid, env, part, tol=config.tolerances.tabulation,
                           quad_tol=min(config.tolerances.quad, 1e-8), max_points=200000)
    if tapered:
        J = J * taper(w, lo, hi)[:, None, None]
    return SpectralTable(w, J)


def check_grid(grid, tau_max):
    d = float(np.max(np.diff(grid)))
    if d * tau_max > math.pi * (1 + 1e-12):
        raise SpectralGridTooCoarse(
            f"frequency spacing {d:.4g} eV cannot resolve exp(-i w tau) up to tau_max = {tau_max:.4g}; "
            f"need spacing <= {math.pi / tau_max:.4g} eV (raise n_omega)")


@dataclass(frozen=True)
class KernelTable:
    """Sampled kernel K(m dt), m = 0..M, plus its product-integration weights.

    ``weights[m]`` (m >= 1) multiplies y(t_n - m dt); ``weights[0]`` multiplies
    the newest sample; ``endpoint[n]`` multiplies y(0) at step n.
    ``phase`` is the frequency of the residual factor exp(-i phase t') that
    the solver applies to the source amplitude.
    """

    pair: tuple
    kind: str
    dt: float
    values: np.ndarray
    weights: np.ndarray
    endpoint: np.ndarray
    w_ref: float
    phase: float

    @property
    def tau(self):
        return self.dt * np.arange(len(self.values))

    @property
    def tau_max(self):
        return self.dt * (len(self.values) - 1)


def kernel_table(omega, J, dt, n_tau, w_ref, *, pair=(0, 0), kind=CO, phase=0.0):
    """Build one KernelTable from a tabulated density ``J(omega)``."""
    return _kernel_batch(omega, np.asarray(J, dtype=float)[:, None], dt, n_tau, w_ref,
                         [(pair, kind, phase)])[0]


def _kernel_batch(omega, Js, dt, n_tau, w_ref, labels):
    """Several kernels sharing one reference frequency, in one Filon pass."""
    omega = np.asarray(omega, dtype=float)
    taus = dt * np.arange(n_tau + 1)
    a = (omega - w_ref) * dt
    sinc2 = np.sinc(a / (2 * np.pi)) ** 2
    gm = _g(-a)
    k = Js.shape[1]
    f = np.concatenate([Js, Js * (dt * sinc2)[:, None], Js * (dt * gm)[:, None]], axis=1)
    tr = filon_transform(omega, f, taus, w_ref)
    w0 = filon_transform(omega, Js * (dt * _g(a))[:, None], [0.0], w_ref)[0]
    out = []
    for i, (pair, kind, phase) in enumerate(labels):
        weights = tr[:, k + i].copy()
        weights[0] = w0[i]
        out.append(KernelTable(tuple(pair), kind, dt, tr[:, i], weights, tr[:, 2 * k + i], w_ref, phase))
    return out


def build_kernels(config: SystemConfig, spectra: SpectralTable | None = None):
    """Every kernel the FQD equations need, keyed by ``(kind, a, b)``.

    Co-rotating ``(a, b)`` uses J_ab with reference w_a. Counter-rotating
    ``(a, b)`` with a != b uses J_ba with reference -w_b (energy transfer);
    ``(a, a)`` collects the self terms sum_{b != a} J_bb with reference -w_b,
    one table per b stored under ``(COUNTER, a, a, b)``.
    """
    if spectra is None:
        spectra = tabulate_spectra(config)
    if not np.any(spectra.J):
        return {}
    check_grid(spectra.omega, config.memory_time)
    n = config.n
    dt = config.dt
    n_tau = int(math.ceil(config.memory_time / dt))
    w = spectra.omega
    em = config.emitters
    jobs = []
    for a in range(n):
        for b in range(n):
            jobs.append(((CO, a, b), spectra.J[:, a, b], em[a].omega,
                         em[b].omega - em[a].omega if a != b else 0.0))
            if config.rwa or a == b:
                continue
            jobs.append(((COUNTER, a, b), spectra.J[:, b, a], -em[b].omega, em[b].omega - em[a].omega))
            jobs.append(((COUNTER, a, a, b), spectra.J[:, b, b], -em[b].omega, 0.0))

    groups = {}
    for key, j, ref, ph in jobs:
        groups.setdefault(ref, []).append((key, j, ph))

    def run(item):
        ref, members = item
        Js = np.stack([m[1] for m in members], axis=1)
        labels = [(m[0][1:3], m[0][0], m[2]) for m in members]
        return [(m[0], t) for m, t in zip(members, _kernel_batch(w, Js, dt, n_tau, ref, labels))]

    with ThreadPoolExecutor(max_workers=min(8, len(groups))) as pool:
        return dict(kv for part in pool.map(run, groups.items()) for kv in part)


def kernel_memory_bound(table: KernelTable, tol=1e-6, *, horizon=None):
    """Smallest tau with ``int_tau^tau_max |K| < tol * int_0^tau_max |K|``.

    If the kernel has not decayed by tau_max, that is an error unless the
    whole run fits inside tau_max (``horizon`` <= tau_max), in which case no
    truncation happens and tau_max is returned.
    """
    mag = np.abs(np.asarray(table.values))
    total = np.trapezoid(mag, dx=table.dt)
    if total == 0.0:
        return 0.0
    # tail[m] = int_{m dt}^{tau_max} |K|
    seg = 0.5 * (mag[1:] + mag[:-1]) * table.dt
    tail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    ok = np.nonzero(tail < tol * total)[0]
    m = int(ok[0])
    if m >= len(mag) - 1 and tail[-2] >= tol * total:
        if horizon is not None and horizon <= table.tau_max + 1e-12:
            return table.tau_max
        raise NoDecayDetected(
            f"kernel {table.kind} {table.pair} still at {tail[-2] / total:.2e} of its weight "
            f"at tau_max = {table.tau_max:.4g}; raise tau_max or check the frequency grid")
    return m * table.dt


def write_kernel_csv(table: KernelTable, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau", "Re_K", "Im_K"])
        for t, k in zip(table.tau, table.values):
            w.writerow([f"{t:.17g}", f"{k.real:.17g}", f"{k.imag:.17g}"])


def lorentzian_kernel(tau, g2, width, omega_c, omega_ref):
    """Infinite-band transform of ``(g2/pi) width / ((w - omega_c)^2 + width^2)``."""
    tau = np.asarray(tau, dtype=float)
    return g2 * np.exp(-width * tau) * np.exp(-1j * (omega_c - omega_ref) * tau)

