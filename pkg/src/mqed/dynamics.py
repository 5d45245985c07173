"""Amplitude propagation: full (FQD) and Markov-approximated (MAQD) dynamics.

Amplitudes ``C_a(t)`` are interaction-picture coefficients of the singly
excited states, as in the equations of motion; populations are ``|C_a|^2``.
Time is in hbar/eV (see :mod:`mqed.units`).
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from . import kernels as kern
from .errors import NotConverging, StepRejected
from .model import LorentzianBath, SystemConfig, validate_config
from .weak import WeakCouplingReport, free_space_decay_rate, free_space_I0, v_rddi, weak_coupling_report

log = logging.getLogger(__name__)


@dataclass
class Trajectory:
    t: np.ndarray
    C: np.ndarray
    method: str
    rwa: bool
    meta: dict = field(default_factory=dict)

    @property
    def populations(self):
        return np.abs(self.C) ** 2

    @property
    def total(self):
        return self.populations.sum(axis=1)

    def header(self):
        n = self.C.shape[1]
        cols = ["t"]
        for i in range(n):
            cols += [f"Re_C_{i}", f"Im_C_{i}"]
        cols += [f"P_{i}" for i in range(n)]
        return cols + ["P_total"]

    def rows(self):
        p = self.populations
        tot = self.total
        for k, t in enumerate(self.t):
            row = [t]
            for c in self.C[k]:
                row += [c.real, c.imag]
            yield row + list(p[k]) + [tot[k]]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.header())
            for row in self.rows():
                w.writerow([f"{x:.17g}" for x in row])


def time_grid(config):
    n = int(round(config.t_max / config.dt))
    return config.dt * np.arange(n + 1)


# -- Markov pieces -----------------------------------------------------------

def free_space_markov(config: SystemConfig):
    """Local terms of the FQD equations: ``H_aa = -i Gamma0/2``, ``H_ab = V0``.

    ``V0`` is V0_DDI without the RWA (V0_ORC added) or V0_QC-corrected with it.
    A model bath has no free-space field, so everything is zero there.
    """
    n = config.n
    H = np.zeros((n, n), dtype=complex)
    if isinstance(config.environment, LorentzianBath):
        return H
    from .model import Vacuum
    em = config.emitters
    for a in range(n):
        H[a, a] = -0.5j * free_space_decay_rate(em[a])
        for b in range(n):
            if a == b:
                continue
            v = v_rddi(em[a], em[b], Vacuum())
            qc = free_space_I0(em[a], em[b], em[b].omega)
            if config.rwa:
                v += qc
            elif em[a].omega != em[b].omega:
                v += qc - free_space_I0(em[a], em[b], em[a].omega)
            H[a, b] = v
    return H


def maqd_matrix(config: SystemConfig, report: WeakCouplingReport):
    n = config.n
    H = np.zeros((n, n), dtype=complex)
    for a in range(n):
        shift = report.shift_excited[a]
        if not config.rwa:
            shift += sum(report.shift_ground[b] for b in range(n) if b != a)
        H[a, a] = shift - 0.5j * report.gamma[a]
        for b in range(n):
            if a != b:
                H[a, b] = report.coupling(a, b, rwa=config.rwa)
    return H


# -- MAQD --------------------------------------------------------------------

def propagate_markov(H, omegas, c0, times):
    """Exact solution of ``dC_a/dt = -i sum_b H_ab exp(-i (w_b - w_a) t) C_b``.

    In the frame ``D_a = exp(-i (w_a - wbar) t) C_a`` the generator is the
    constant matrix ``diag(w - wbar) + H``.
    """
    omegas = np.asarray(omegas, dtype=float)
    shift = omegas - omegas.mean()
    A = np.diag(shift).astype(complex) + H
    times = np.asarray(times, dtype=float)
    out = np.empty((len(times), len(c0)), dtype=complex)
    c0 = np.asarray(c0, dtype=complex)
    for k, t in enumerate(times):
        d = expm(-1j * A * t) @ c0
        out[k] = np.exp(1j * shift * t) * d
    return out


def solve_maqd(config: SystemConfig, report: WeakCouplingReport | None = None):
    validate_config(config)
    if report is None:
        report = weak_coupling_report(config.emitters, config.environment,
                                      omega_max=config.omega_max)
    H = maqd_matrix(config, report)
    t = time_grid(config)
    C = propagate_markov(H, [e.omega for e in config.emitters], config.initial, t)
    return Trajectory(t, C, "maqd", config.rwa, {"H": H})


def analytic_pair_populations(gamma, V, times):
    """Closed-form MAQD populations of an identical pair started on the donor."""
    t = np.asarray(times, dtype=float)
    if np.any(t < 0):
        raise ValueError("times must be >= 0")
    decay = np.exp(-gamma * t)
    sh = np.sinh(np.imag(V) * t) ** 2
    pd = decay * (sh + np.cos(np.real(V) * t) ** 2)
    pa = decay * (sh + np.sin(np.real(V) * t) ** 2)
    ptot = decay * np.cosh(2 * np.imag(V) * t)
    return pd, pa, ptot


def oscillation_frequency(t, signal):
    """Angular frequency of the dominant oscillation from sign changes of ``signal``.

    Crossings are located by linear interpolation; consecutive crossings are
    half a period apart. Returns nan with fewer than two crossings.
    """
    t = np.asarray(t, dtype=float)
    d = np.asarray(signal, dtype=float)
    idx = np.nonzero(np.sign(d[1:]) * np.sign(d[:-1]) < 0)[0]
    if len(idx) < 2:
        return float("nan")
    tz = t[idx] - d[idx] * (t[idx + 1] - t[idx]) / (d[idx + 1] - d[idx])
    return math.pi * (len(tz) - 1) / (tz[-1] - tz[0])


# -- FQD ---------------------------------------------------------------------

@dataclass
class _History:
    """Kernel weights assembled per (a, b), phase-shifted for the solver sum."""

    w: np.ndarray      # (L+1, N, N): weights at lag m, times exp(i Omega_ab m dt)
    end: np.ndarray    # (L+1, N, N): endpoint weights for y(0) at step n <= L
    omega_ab: np.ndarray


def assemble_history(tables, config: SystemConfig, n_keep):
    n = config.n
    dt = config.dt
    om = np.array([e.omega for e in config.emitters])
    omega_ab = om[None, :] - om[:, None]
    w = np.zeros((n_keep + 1, n, n), dtype=complex)
    end = np.zeros((n_keep + 1, n, n), dtype=complex)
    for key, tab in tables.items():
        a, b = key[1], key[2]
        w[:, a, b] += tab.weights[:n_keep + 1]
        end[:, a, b] += tab.endpoint[:n_keep + 1]
    lag = dt * np.arange(n_keep + 1)
    w *= np.exp(1j * omega_ab[None] * lag[:, None, None])
    return _History(w, end, omega_ab)


def memory_cutoff(tables, config: SystemConfig):
    """History length (in steps) after truncating every kernel at its memory bound."""
    n_tau = max((len(t.values) - 1 for t in tables.values()), default=0)
    if not tables:
        return 0
    bound = 0.0
    for tab in tables.values():
        bound = max(bound, kern.kernel_memory_bound(tab, config.tolerances.memory, horizon=config.t_max))
    return min(n_tau, int(math.ceil(bound / config.dt - 1e-9)))


def propagate_fqd(H, hist: _History | None, c0, dt, n_steps, *, step_tol=1e-3):
    """Trapezoidal product-integration for the Volterra equation.

    ``dC/dt = -i P(t) C - mem(t)``, ``P_ab(t) = H_ab exp(-i Omega_ab t)``.
    Each step solves the implicit trapezoid exactly (it is linear) and compares
    with an explicit Adams-Bashforth-2 predictor for error control.
    """
    n = len(c0)
    C = np.zeros((n_steps + 1, n), dtype=complex)
    C[0] = c0
    if hist is None:
        omega_ab = np.zeros((n, n))
        L = 0
    else:
        omega_ab = hist.omega_ab
        L = hist.w.shape[0] - 1
    eye = np.eye(n)

    def P(t):
        return H * np.exp(-1j * omega_ab * t)

    F_prev = -1j * P(0.0) @ C[0]
    F_prev2 = None
    worst = 0.0
    for k in range(1, n_steps + 1):
        t = k * dt
        ph = np.exp(-1j * omega_ab * t)
        past = np.zeros(n, dtype=complex)
        A = 1j * P(t)
        if hist is not None:
            m = min(k - 1, L)
            if m > 0:
                # lags 1..m pair with C[k-1], ..., C[k-m]
                past = np.einsum("mab,mb->ab", hist.w[1:m + 1], C[k - 1:k - m - 1:-1])
                past = (ph * past).sum(axis=1)
            if k <= L:
                past = past + hist.end[k] @ C[0]
            A = A + ph * hist.w[0]
        rhs = C[k - 1] + 0.5 * dt * (F_prev - past)
        ck = np.linalg.solve(eye + 0.5 * dt * A, rhs)
        if not np.all(np.isfinite(ck)):
            raise StepRejected(f"non-finite amplitude at t = {t:.6g}; reduce dt")
        pred = C[k - 1] + dt * (F_prev if F_prev2 is None else 1.5 * F_prev - 0.5 * F_prev2)
        err = float(np.max(np.abs(ck - pred)))
        worst = max(worst, err)
        if err > step_tol:
            raise StepRejected(f"predictor-corrector mismatch {err:.3g} > {step_tol:g} at t = {t:.6g}; "
                               "reduce dt")
        C[k] = ck
        F_prev2 = F_prev
        F_prev = -A @ ck - past
    return C, worst


def solve_fqd(config: SystemConfig, *, spectra=None, tables=None, markov=None):
    """Full non-Markovian dynamics (with or without the RWA per ``config.rwa``)."""
    validate_config(config)
    if tables is None:
        tables = kern.build_kernels(config, spectra)
    H = free_space_markov(config) if markov is None else np.asarray(markov, dtype=complex)
    n_steps = int(round(config.t_max / config.dt))
    L = memory_cutoff(tables, config)
    hist = assemble_history(tables, config, L) if tables else None
    log.info("FQD: %d steps, memory %d steps, %d kernels", n_steps, L, len(tables))
    C, worst = propagate_fqd(H, hist, config.initial, config.dt, n_steps,
                             step_tol=config.tolerances.step)
    t = config.dt * np.arange(n_steps + 1)
    return Trajectory(t, C, "fqd", config.rwa, {"memory_steps": L, "max_step_error": worst})


def solve(config: SystemConfig):
    """Dispatch on ``config.method``."""
    if config.method == "fqd":
        return solve_fqd(config)
    if config.method == "maqd":
        return solve_maqd(config)
    from .oracle import build_pseudomodes_for, solve_oracle
    return solve_oracle(build_pseudomodes_for(config), config)


# -- convergence -------------------------------------------------------------

@dataclass
class ConvergenceReport:
    factors: list
    deviations: list
    trajectories: list = field(repr=False, default_factory=list)


def convergence_sweep(config: SystemConfig, factors=(1, 2, 4), *, spectra_for=None, noise=1e-12):
    """Refine dt and the frequency grid together by each factor; compare successive runs.

    ``spectra_for(cfg)`` may supply the spectral table for a refined config.
    Raises :class:`NotConverging` if the deviations do not shrink.
    """
    base_points = config.frequency_points
    runs = []
    for f in factors:
        cfg = config.with_(dt=config.dt / f, n_omega=(base_points - 1) * f + 1)
        sp = spectra_for(cfg) if spectra_for else None
        runs.append(solve_fqd(cfg, spectra=sp))
    devs = []
    for prev, cur, f0, f1 in zip(runs, runs[1:], factors, factors[1:]):
        # compare on the coarser grid: every (f1/f0)-th sample of the finer run
        stride = int(round(f1 / f0))
        a = prev.populations
        b = cur.populations[::stride][: len(a)]
        devs.append(float(np.max(np.abs(a - b))))
    for d0, d1 in zip(devs, devs[1:]):
        if d1 >= d0 and d0 > noise:
            raise NotConverging(f"deviations {devs} do not decrease over factors {list(factors)}")
    return ConvergenceReport(list(factors), devs, runs)
