import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import sici

import oracles
from mqed.special import auxiliary_integrals, cisi, cisi_scalar


@given(st.floats(1e-8, 1e4))
def test_cisi_against_scipy(x):
    Si, Ci = sici(x)
    ci, si = cisi_scalar(x)
    assert ci == pytest.approx(Ci, rel=1e-12, abs=1e-14)
    assert si == pytest.approx(Si - math.pi / 2, rel=1e-12, abs=1e-14)


def test_cisi_vectorized_matches_scalar():
    x = np.array([0.1, 1.9, 2.1, 40.0])
    ci, si = cisi(x)
    for i, v in enumerate(x):
        assert (ci[i], si[i]) == cisi_scalar(v)


def test_cisi_rejects_nonpositive():
    with pytest.raises(ValueError):
        cisi_scalar(0.0)


def test_i2_at_one_against_quadrature():
    assert auxiliary_integrals(1.0)[1] == pytest.approx(oracles.auxiliary_quad(1.0)[1], rel=1e-10)


def test_i3_large_argument():
    xp = 1e3
    assert auxiliary_integrals(xp)[2] * xp * xp == pytest.approx(1.0, rel=1e-5)


@given(st.floats(1e-9, 1e5))
def test_identity(xp):
    i1, _, i3 = auxiliary_integrals(xp)
    assert i1 + xp * xp * i3 == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("xp", [1e-7, 5e-7, 2e-6])
def test_small_argument_branch_continuous(xp):
    closed = auxiliary_integrals(xp)
    ref = oracles.auxiliary_quad(xp)
    for c, r in zip(closed, ref):
        assert c == pytest.approx(r, rel=1e-8)
