"""Trigonometric integrals and the auxiliary integrals built from them.

Conventions follow Gradshteyn & Ryzhik::

    ci(x) = -int_x^inf cos(t)/t dt
    si(x) = -int_x^inf sin(t)/t dt = Si(x) - pi/2

Power series for x < 2, and a Lentz continued fraction for E1(ix) above,
both good to a few ulp in double precision.
"""

import math

import numpy as np

EULER_GAMMA = 0.57721566490153286061
_EPS = 1e-16
_SERIES_SWITCH = 2.0


def _series(x):
    # Ci(x) = gamma + ln x + sum (-1)^k x^2k / (2k (2k)!)
    # Si(x) = sum (-1)^k x^(2k+1) / ((2k+1) (2k+1)!)
    x2 = x * x
    term_c = 1.0
    term_s = x
    sum_c = 0.0
    sum_s = x
    k = 1
    while True:
        term_c *= -x2 / ((2 * k - 1) * (2 * k))
        term_s *= -x2 / ((2 * k) * (2 * k + 1))
        dc = term_c / (2 * k)
        ds = term_s / (2 * k + 1)
        sum_c += dc
        sum_s += ds
        if abs(dc) < _EPS * max(abs(sum_c), 1e-300) and abs(ds) < _EPS * abs(sum_s):
            break
        k += 1
        if k > 200:
            break
    return EULER_GAMMA + math.log(x) + sum_c, sum_s - math.pi / 2


def _continued_fraction(x):
    # E1(ix) = -ci(x) - i si(x); modified Lentz on the standard CF.
    b = complex(1.0, x)
    c = 1.0 / 1e-300
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta.real - 1.0) + abs(delta.imag) < _EPS:
            break
    h *= complex(math.cos(x), -math.sin(x))
    return -h.real, h.imag


def cisi_scalar(x):
    """Return ``(ci(x), si(x))`` for x > 0."""
    x = float(x)
    if not x > 0:
        raise ValueError(f"ci/si need x > 0, got {x}")
    if x < _SERIES_SWITCH:
        return _series(x)
    return _continued_fraction(x)


def cisi(x):
    """Vectorized ``(ci, si)``."""
    x = np.asarray(x, dtype=float)
    ci = np.empty_like(x)
    si = np.empty_like(x)
    for idx, v in np.ndenumerate(x):
        ci[idx], si[idx] = cisi_scalar(v)
    if ci.ndim == 0:
        return float(ci), float(si)
    return ci, si


def auxiliary_integrals(xp):
    """Closed forms of

    I1 = int_0^inf x^2 e^-x / (x^2 + x'^2) dx
    I2 = int_0^inf x   e^-x / (x^2 + x'^2) dx
    I3 = int_0^inf     e^-x / (x^2 + x'^2) dx

    evaluated at x' = ``xp`` > 0. Below x' = 1e-6 a small-argument expansion
    is used.
    """
    xp = float(xp)
    if not xp > 0:
        raise ValueError(f"auxiliary integrals need x' > 0, got {xp}")
    if xp < 1e-6:
        lg = EULER_GAMMA + math.log(xp)
        i3 = math.pi / (2 * xp) + lg - 1.0
        i1 = 1.0 - math.pi / 2 * xp - xp * xp * (lg - 1.0)
        i2 = -lg + math.pi / 2 * xp
        return i1, i2, i3
    ci, si = cisi_scalar(xp)
    s, c = math.sin(xp), math.cos(xp)
    a = ci * s - si * c
    i1 = -xp * a + 1.0
    i2 = -ci * c - si * s
    i3 = a / xp
    return i1, i2, i3
