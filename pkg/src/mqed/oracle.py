"""Brute-force check: discretize the field continuum into pseudomodes and solve
the truncated Schrodinger equation directly.

Basis: ``|E_a, 0>`` (energy w_a), ``|G, 1_k>`` (w_k) and, without the RWA,
``|E_ab, 1_k>`` (w_a + w_b + w_k). Mode k couples to emitter a with a real
amplitude ``kappa[a, k]`` such that ``sum_k kappa[a,k] kappa[b,k] / dw``
reproduces J_ab at the mode frequency. Every channel carries the same
amplitude for the co- and counter-rotating couplings, as for real dipoles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Trajectory, time_grid
from .errors import NonPSDSpectralMatrix, RecurrenceHorizonExceeded
from .greens import spectral_density_value
from .model import LorentzianBath, SystemConfig, validate_config


@dataclass
class PseudomodeModel:
    omega: np.ndarray      # (K,) channel frequencies
    kappa: np.ndarray      # (N, K) couplings (eV)
    dw: float
    n_freq: int
    meta: dict = field(default_factory=dict)

    @property
    def n_channels(self):
        return self.kappa.shape[1]

    def dimension(self, rwa):
        n = self.kappa.shape[0]
        k = self.n_channels
        return n + k + (0 if rwa else k * n * (n - 1) // 2)


def build_pseudomodes(J, lo, hi, M, *, psd_tol=1e-10):
    """Factor ``J(w_j) dw`` on M uniform midpoints of ``[lo, hi]``.

    ``J`` maps a frequency to an (N, N) symmetric matrix. Zero eigenvalues
    are dropped; negative ones beyond ``psd_tol`` (relative) raise
    :class:`NonPSDSpectralMatrix`.
    """
    if M < 2:
        raise ValueError("need at least 2 pseudomodes")
    dw = (hi - lo) / M
    freqs = lo + dw * (np.arange(M) + 0.5)
    mats = [np.atleast_2d(np.asarray(J(w), dtype=float)) for w in freqs]
    scale = max(float(np.max(np.abs(m))) for m in mats) or 1.0
    omega, cols = [], []
    worst = 0.0
    for w, m in zip(freqs, mats):
        m = 0.5 * (m + m.T)
        lam, vec = np.linalg.eigh(m)
        if lam[0] < -psd_tol * scale:
            raise NonPSDSpectralMatrix(
                f"J({w:.6g} eV) has eigenvalue {lam[0]:.3g} (scale {scale:.3g}); the spectral "
                "matrix of a passive medium must be positive semidefinite")
        keep = lam > psd_tol * scale
        k = vec[:, keep] * np.sqrt(lam[keep] * dw)
        worst = max(worst, float(np.max(np.abs(k @ k.T / dw - m), initial=0.0)) if keep.any() else
                    float(np.max(np.abs(m))))
        for col in k.T:
            omega.append(w)
            cols.append(col)
    n = mats[0].shape[0]
    kappa = np.array(cols).T if cols else np.zeros((n, 0))
    return PseudomodeModel(np.array(omega), kappa, dw, M,
                           {"reconstruction_error": worst / scale})


def _density_for(config: SystemConfig):
    env = config.environment
    em = config.emitters
    n = config.n
    if isinstance(env, LorentzianBath):
        g = np.array([env.g(e) for e in em])
        return (lambda w: float(env.density(w)) * np.outer(g, g)), env.omega_lo, env.omega_hi

    def J(w):
        out = np.zeros((n, n))
        for a in range(n):
            for b in range(a, n):
                out[a, b] = out[b, a] = spectral_density_value(em[a], em[b], w, env, "total")
        return out

    return J, config.omega_min, config.omega_cutoff


def build_pseudomodes_for(config: SystemConfig):
    J, lo, hi = _density_for(config)
    return build_pseudomodes(J, lo, hi, config.n_pseudomodes)


def hamiltonian(model: PseudomodeModel, omegas, rwa):
    """Real symmetric Hamiltonian in the truncated basis (Schrodinger picture)."""
    n = len(omegas)
    K = model.n_channels
    pairs = [] if rwa else [(a, b) for a in range(n) for b in range(a + 1, n)]
    D = n + K + K * len(pairs)
    H = np.zeros((D, D))
    H[np.arange(n), np.arange(n)] = omegas
    ks = n + np.arange(K)
    H[ks, ks] = model.omega
    for a in range(n):
        H[a, ks] = H[ks, a] = model.kappa[a]
    for p, (a, b) in enumerate(pairs):
        rows = n + K * (1 + p) + np.arange(K)
        H[rows, rows] = omegas[a] + omegas[b] + model.omega
        # |E_b> -> |E_ab, k> through emitter a, and |E_a> -> |E_ab, k> through b
        H[rows, b] = H[b, rows] = model.kappa[a]
        H[rows, a] = H[a, rows] = model.kappa[b]
    return H


def solve_oracle(model: PseudomodeModel, config: SystemConfig):
    """Exact propagation in the pseudomode basis.

    Uses the eigendecomposition of the (real symmetric) Hamiltonian, so the
    state norm is conserved to rounding.
    """
    validate_config(config)
    horizon = 2 * math.pi / model.dw
    if config.t_max > horizon:
        raise RecurrenceHorizonExceeded(
            f"t_max = {config.t_max:.4g} exceeds the pseudomode recurrence time "
            f"2 pi / dw = {horizon:.4g}; use more modes or a narrower band")
    om = np.array([e.omega for e in config.emitters])
    n = len(om)
    H = hamiltonian(model, om, config.rwa)
    E, V = np.linalg.eigh(H)
    psi0 = np.zeros(H.shape[0], dtype=complex)
    psi0[:n] = config.initial
    c = V.T @ psi0
    t = time_grid(config)
    C = np.empty((len(t), n), dtype=complex)
    Vn = V[:n]
    for k, tk in enumerate(t):
        C[k] = np.exp(1j * om * tk) * (Vn @ (np.exp(-1j * E * tk) * c))
    # norm tripwire and counter-rotating occupation at a few sample times
    K = model.n_channels
    norm_err = 0.0
    cr_pop = 0.0
    for tk in np.linspace(0, t[-1], 17):
        psi = V @ (np.exp(-1j * E * tk) * c)
        p = np.abs(psi) ** 2
        norm_err = max(norm_err, abs(p.sum() - 1.0))
        cr_pop = max(cr_pop, float(p[n + K:].sum()))
    meta = {"dimension": H.shape[0], "norm_error": norm_err, "counter_rotating_population": cr_pop,
            "modes": model.n_freq, "channels": K}
    return Trajectory(t, C, "oracle", config.rwa, meta)
