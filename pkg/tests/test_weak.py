import math

import numpy as np
import pytest
from scipy.integrate import quad

import oracles
from mqed.errors import TailNotConverged
from mqed.greens import wavenumber
from mqed.model import DrudeHalfSpace, Emitter, LorentzianBath, Vacuum
from mqed.units import DEBYE2_EV_NM3, HBAR_EV_S
from mqed.weak import (decay_rate, energy_shift_scattering, free_space_decay_rate, free_space_I0, integral_I,
                       pv_integral, short_distance_ddi, v_orc, v_qc, v_rddi, weak_coupling_report)

ENV = DrudeHalfSpace(5.0, 0.1)
Z = (0.0, 0.0, 10.0)


def pair(R, w=2.0, mu_a=Z, mu_b=Z, wb=None, h=0.0):
    return Emitter((0, 0, h), w, mu_a), Emitter((R, 0, h), w if wb is None else wb, mu_b)


def test_gamma0_in_inverse_seconds():
    e = Emitter((0, 0, 0), 3.525, Z)
    rate = free_space_decay_rate(e) / HBAR_EV_S
    ref = oracles.gamma0_si(3.525, 10.0) / (oracles.sc.hbar / oracles.sc.e)
    assert rate == pytest.approx(ref, rel=1e-12)
    assert decay_rate(e, Vacuum()) == pytest.approx(free_space_decay_rate(e), rel=1e-14)


def test_purcell_factor_tends_to_one_far_away():
    far = Emitter((0, 0, 5000.0), 3.525, Z)
    near = Emitter((0, 0, 10.0), 3.525, Z)
    assert decay_rate(far, ENV) / free_space_decay_rate(far) == pytest.approx(1.0, abs=1e-3)
    assert decay_rate(near, ENV) / free_space_decay_rate(near) > 100


def test_decay_rate_positive_over_random_geometries():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        e = Emitter((0, 0, rng.uniform(0.3, 30)), rng.uniform(0.5, 8), tuple(rng.normal(size=3)))
        assert decay_rate(e, ENV) >= 0


def test_shifts_vanish_in_vacuum():
    e = Emitter((0, 0, 1), 2.0, Z)
    assert energy_shift_scattering(e, Vacuum(), "excited") == 0
    assert energy_shift_scattering(e, Vacuum(), "ground") == 0


def quasi_static_density(h, mu2):
    """z-dipole J^Sc from the image dipole with the Drude response (no retardation)."""
    def J(w):
        ratio = -ENV.omega_p**2 / (2 * w * w + 2j * ENV.gamma * w - ENV.omega_p**2)
        return 4 * DEBYE2_EV_NM3 * mu2 * ratio.imag / (16 * math.pi * h**3)
    return J


def test_shifts_at_one_nanometre_match_image_dipole_limit():
    w0, h = 3.0, 1.0
    e = Emitter((0, 0, h), w0, Z)
    J = quasi_static_density(h, 100.0)
    ground = -quad(lambda w: J(w) / (w + w0), 0, np.inf, limit=500, epsrel=1e-12)[0]
    excited = -(quad(J, 0, 200, weight="cauchy", wvar=w0, limit=500, epsrel=1e-12)[0]
                + quad(lambda w: J(w) / (w - w0), 200, np.inf)[0])
    assert energy_shift_scattering(e, ENV, "ground") == pytest.approx(ground, rel=0.01)
    assert energy_shift_scattering(e, ENV, "excited") == pytest.approx(excited, rel=0.01)


def test_real_axis_shift_refuses_non_decaying_density():
    e = Emitter((0, 0, 1.0), 3.0, Z)
    with pytest.raises(TailNotConverged):
        energy_shift_scattering(e, ENV, "ground", method="real_axis")


def test_pv_constant_density_is_log_term():
    w0 = 2.0
    val, _ = pv_integral(lambda w: np.full(np.shape(w), 3.0), w0, 0.5, 6.0)
    assert val == pytest.approx(3.0 * math.log(4.0 / 1.5), rel=1e-12)
    sym, _ = pv_integral(lambda w: np.full(np.shape(w), 3.0), w0, 1.0, 3.0)
    assert abs(sym) < 1e-13


def test_pv_against_cauchy_weight():
    f = lambda w: np.exp(-w) * np.sin(3 * w) + 1
    val, _ = pv_integral(f, 1.3, 0.2, 4.0, tol=1e-12)
    ref = quad(f, 0.2, 4.0, weight="cauchy", wvar=1.3, epsabs=0, epsrel=1e-12, limit=400)[0]
    assert val == pytest.approx(ref, rel=1e-10)


def test_rddi_near_field_perpendicular_and_collinear():
    w = 2.0
    R = 1e-3 / wavenumber(w)
    a, b = pair(R, w)
    assert v_rddi(a, b, Vacuum()).real == pytest.approx(DEBYE2_EV_NM3 * 100 / R**3, rel=1e-5)
    x = (10.0, 0, 0)
    a, b = pair(R, w, x, x)
    assert v_rddi(a, b, Vacuum()).real == pytest.approx(-2 * DEBYE2_EV_NM3 * 100 / R**3, rel=1e-5)


def test_rddi_reciprocity_over_surface():
    a = Emitter((0, 0, 3.0), 3.4, (1.0, 2.0, 5.0))
    b = Emitter((2.0, -1.0, 4.0), 3.4, (0.0, 3.0, 1.0))
    assert v_rddi(a, b, ENV) == pytest.approx(v_rddi(b, a, ENV), rel=1e-10)


def test_orc_vanishes_on_resonance_and_is_small_off_resonance():
    a, b = pair(5.0)
    assert v_orc(a, b, Vacuum()) == 0.0
    a, b = pair(5.0, 2.0, wb=2.01)
    assert abs(v_orc(a, b, Vacuum())) < 0.01 * abs(v_qc(a, b, Vacuum()))


def test_qc_is_minus_half_coulomb_in_near_field():
    w = 2.0
    a, b = pair(1e-3 / wavenumber(w), w)
    assert v_qc(a, b, Vacuum()) == pytest.approx(-0.5 * short_distance_ddi(a, b), rel=1e-3)


def test_orc_and_qc_real_and_imaginary_parts_shared():
    a = Emitter((0, 0, 3.0), 3.4, Z)
    b = Emitter((2.0, 0, 3.0), 3.6, Z)
    rep = weak_coupling_report([a, b], ENV)
    for p in rep.pairs.values():
        assert isinstance(p.v_orc, float) and isinstance(p.v_qc, float)
        assert p.v_ddi.imag == p.v_ddi_rwa.imag == p.v_rddi.imag


@pytest.mark.parametrize("xp", np.logspace(-3, 1, 9))
def test_closed_form_matches_imaginary_axis(xp):
    w = 2.0
    R = xp / wavenumber(w)
    a, b = pair(R, w, Z, (3.0, 0.0, 4.0))
    closed = free_space_I0(a, b, w)
    assert integral_I(a, b, w, Vacuum(), "imag_axis") == pytest.approx(closed, rel=1e-8)


def test_integral_vanishes_for_large_omega_prime():
    a, b = pair(3.0)
    vals = [abs(integral_I(a, b, wp, Vacuum())) for wp in (1.0, 1e3, 1e6)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-3 * vals[0]


def test_short_distance_cases():
    a, b = pair(2.0)
    assert short_distance_ddi(a, b) == pytest.approx(DEBYE2_EV_NM3 * 100 / 8, rel=1e-14)
    magic = (10 * math.cos(math.acos(1 / math.sqrt(3))), 0, 10 * math.sin(math.acos(1 / math.sqrt(3))))
    a, b = pair(2.0, mu_a=magic, mu_b=magic)
    assert abs(short_distance_ddi(a, b)) < 1e-15
    w = 2.0
    a, b = pair(1e-3 / wavenumber(w), w)
    p = weak_coupling_report([a, b], Vacuum()).pairs[(0, 1)]
    assert p.v_ddi.real == pytest.approx(short_distance_ddi(a, b), rel=0.005)
    assert short_distance_ddi(a, b) == pytest.approx(oracles.coulomb_ddi(Z, Z, a.position, b.position), rel=1e-12)


def test_model_bath_couplings_against_quadpack():
    env = LorentzianBath(3.525, 0.05, 0.005, 1.0, 7.0)
    a = Emitter((0, 0, 1.0), 3.5, Z)
    b = Emitter((1, 0, 1.0), 3.5, Z)
    g2 = (0.005 * 10) ** 2
    J = lambda w: g2 * 0.05 / math.pi / ((w - 3.525) ** 2 + 0.05**2)
    pv = quad(J, 1.0, 7.0, weight="cauchy", wvar=3.5, epsabs=0, epsrel=1e-12, limit=400)[0]
    I = quad(lambda w: J(w) / (w + 3.5), 1.0, 7.0, epsrel=1e-12, points=[3.525])[0]
    v = v_rddi(a, b, env)
    assert v.real == pytest.approx(-pv - I, rel=1e-7)
    assert v.imag == pytest.approx(-math.pi * J(3.5), rel=1e-12)
    assert v_qc(a, b, env) == pytest.approx(I, rel=1e-7)
    rep = weak_coupling_report([a, b], env)
    assert rep.gamma[0] == pytest.approx(2 * math.pi * J(3.5), rel=1e-12)
    assert rep.shift_excited[0] == pytest.approx(-pv, rel=1e-7)
    assert rep.shift_ground[0] == pytest.approx(-I, rel=1e-7)
