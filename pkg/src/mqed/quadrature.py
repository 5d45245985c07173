"""Globally adaptive Gauss-Kronrod (7/15) quadrature for vector-valued integrands.

The integrand is called with a 1-D array of abscissae and must return an
array of shape ``(len(x), m)`` (or ``(len(x),)``). All panels that need
splitting in a round are evaluated in one call, which keeps the Python
overhead flat when the integrand is numpy-vectorized.
"""

import numpy as np

from .errors import QuadratureNotConverged

_EPS = np.finfo(float).eps

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
for i, w in zip((1, 3, 5), _WG[:3]):
    GAUSS[i] = w
    GAUSS[14 - i] = w
GAUSS[7] = _WG[3]


def _panel_rules(f, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = (mid[:, None] + half[:, None] * NODES[None, :]).ravel()
    y = np.asarray(f(x))
    if y.ndim == 1:
        y = y[:, None]
    y = y.reshape(len(a), 15, -1)
    k = np.einsum("j,pjm->pm", KRONROD, y) * half[:, None]
    g = np.einsum("j,pjm->pm", GAUSS, y) * half[:, None]
    err = np.max(np.abs(k - g), axis=1)
    # panels whose error is at the roundoff level of |f| cannot be improved
    floor = 50 * _EPS * np.max(np.einsum("j,pjm->pm", KRONROD, np.abs(y)) * np.abs(half)[:, None], axis=1)
    return k, err, err <= floor


def gauss_kronrod(f, a, b, *, epsabs=0.0, epsrel=1e-8, breakpoints=(), initial_panels=4,
                  max_panels=4000, raise_on_failure=True):
    """Integrate ``f`` over ``[a, b]``.

    Returns ``(value, error_estimate)``; ``value`` has shape ``(m,)``.
    """
    edges = np.unique(np.concatenate([[a, b], [p for p in breakpoints if a < p < b]]))
    pieces = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        pieces.append(np.linspace(lo, hi, initial_panels + 1))
    lo = np.concatenate([p[:-1] for p in pieces])
    hi = np.concatenate([p[1:] for p in pieces])
    vals, errs, flat = _panel_rules(f, lo, hi)
    span = b - a
    while True:
        total = vals.sum(axis=0)
        err = errs.sum()
        tol = max(epsabs, epsrel * np.max(np.abs(total)))
        if err <= tol:
            return total, err
        width = hi - lo
        bad = (errs > tol * width / span) & ~flat
        if not bad.any():
            bad = (errs >= np.max(errs[~flat])) & ~flat if (~flat).any() else bad
        if not bad.any():
            return total, err
        if len(lo) + bad.sum() > max_panels:
            if raise_on_failure:
                raise QuadratureNotConverged(
                    f"adaptive quadrature stopped at {len(lo)} panels: error {err:.3g} > tolerance {tol:.3g}",
                    error=err, tolerance=tol)
            return total, err
        mid = 0.5 * (lo[bad] + hi[bad])
        new_lo = np.concatenate([lo[bad], mid])
        new_hi = np.concatenate([mid, hi[bad]])
        nv, ne, nf = _panel_rules(f, new_lo, new_hi)
        keep = ~bad
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        vals = np.concatenate([vals[keep], nv])
        errs = np.concatenate([errs[keep], ne])
        flat = np.concatenate([flat[keep], nf])


def gauss_legendre_panels(f, edges, order=16):
    """Fixed-order Gauss-Legendre on the given panel edges; vectorized ``f``."""
    x0, w0 = np.polynomial.legendre.leggauss(order)
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    x = (0.5 * (hi + lo))[:, None] + half[:, None] * x0[None, :]
    w = half[:, None] * w0[None, :]
    y = np.asarray(f(x.ravel())).reshape(x.shape)
    return np.sum(w * y)
