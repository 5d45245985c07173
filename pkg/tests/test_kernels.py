import math

import numpy as np
import pytest
from scipy.integrate import quad

import oracles
from mqed import kernels
from mqed.errors import NoDecayDetected, SpectralGridTooCoarse
from mqed.kernels import (CO, COUNTER, KernelTable, build_kernels, filon_transform, kernel_memory_bound,
                          kernel_table, lorentzian_kernel, tabulate_spectra, taper)
from mqed.model import DrudeHalfSpace, Emitter, LorentzianBath, SystemConfig, Tolerances, Vacuum

BATH = LorentzianBath(3.525, 0.05, 0.005, 1.0, 7.0)
Z = (0.0, 0.0, 10.0)


def bath_config(rwa=False, tab=1e-8, wb=3.525, **kw):
    a = Emitter((0, 0, 1.0), 3.525, Z)
    b = Emitter((1, 0, 1.0), wb, Z)
    return SystemConfig((a, b), BATH, rwa=rwa, t_max=60.0, dt=0.05, tolerances=Tolerances(tabulation=tab), **kw)


@pytest.fixture(scope="module")
def bath_tables():
    cfg = bath_config()
    return cfg, build_kernels(cfg)


def test_filon_exact_for_linear_density():
    w = np.array([0.0, 0.4, 1.0])
    f = 2.0 + 3.0 * w
    for tau in (0.0, 0.7, 25.0):
        ref = complex(*(quad(lambda x, p=p: (2 + 3 * x) * p(x * tau), 0, 1, epsabs=1e-14)[0]
                        for p in (math.cos, lambda y: -math.sin(y))))
        assert filon_transform(w, f, [tau])[0] == pytest.approx(ref, abs=1e-13)


def test_lorentzian_kernel_against_quadpack(bath_tables):
    cfg, tabs = bath_tables
    tab = tabs[(CO, 0, 0)]
    g2 = (0.005 * 10) ** 2
    idx = [0, 1, 10, 100, 400, 1000]
    ref = np.array([oracles.lorentzian_kernel_quad(tab.tau[i], g2, 0.05, 3.525, 1.0, 7.0, 3.525) for i in idx])
    assert np.max(np.abs(tab.values[idx] - ref)) < 1e-6 * abs(ref[0])


def test_lorentzian_kernel_close_to_infinite_band_form(bath_tables):
    cfg, tabs = bath_tables
    tab = tabs[(CO, 0, 0)]
    g2 = (0.005 * 10) ** 2
    ref = lorentzian_kernel(tab.tau, g2, 0.05, 3.525, 3.525)
    # the band [1, 7] eV leaves out a fraction of about 2 width/(pi * 2.5 eV) of the weight
    assert np.max(np.abs(tab.values - ref)) < 0.02 * g2


def test_zeroth_moment():
    # the interpolation tolerance is relative to the peak; 1e-10 puts the integral well inside 1e-8
    cfg = bath_config(tab=1e-10).with_(emitters=(Emitter((0, 0, 1.0), 3.525, Z),), t_max=1.0)
    g2 = (0.005 * 10) ** 2
    exact = quad(lambda w: g2 * 0.05 / math.pi / ((w - 3.525) ** 2 + 0.05**2), 1.0, 7.0,
                 points=[3.525], epsabs=0, epsrel=1e-13)[0]
    sp = tabulate_spectra(cfg)
    assert sp.zeroth_moment()[0, 0] == pytest.approx(exact, rel=1e-8)
    K = kernel_table(sp.omega, sp.J[:, 0, 0], cfg.dt, 2, 3.525)
    assert K.values[0].real == pytest.approx(exact, rel=1e-8)


def test_product_weights_integrate_constant(bath_tables):
    cfg, tabs = bath_tables
    tab = tabs[(CO, 0, 1)]
    g2 = (0.005 * 10) ** 2
    J = lambda w: g2 * 0.05 / math.pi / ((w - 3.525) ** 2 + 0.05**2)
    for n in (1, 7, 200):
        T = n * tab.dt
        nu = lambda w: w - tab.w_ref
        # int_0^T K = int J (1 - exp(-i nu T)) / (i nu) dw
        re = quad(lambda w: J(w) * math.sin(nu(w) * T) / nu(w), 1.0, 7.0, points=[3.525], limit=400)[0]
        im = quad(lambda w: J(w) * (math.cos(nu(w) * T) - 1) / nu(w), 1.0, 7.0, points=[3.525], limit=400)[0]
        got = tab.weights[0] + tab.weights[1:n].sum() + tab.endpoint[n]
        # tabulation at 1e-8 of the peak leaves ~1e-7 relative in integrals
        assert got == pytest.approx(complex(re, im), rel=1e-6)


def test_phase_reference_swap():
    cfg = bath_config(wb=3.6, tab=1e-5)
    tabs = build_kernels(cfg)
    k01, k10 = tabs[(CO, 0, 1)], tabs[(CO, 1, 0)]
    tau = k01.tau
    assert np.allclose(k01.values, k10.values * np.exp(1j * (3.525 - 3.6) * tau), atol=1e-14)


def test_rwa_drops_counter_rotating(bath_tables):
    _, tabs = bath_tables
    assert any(k[0] == COUNTER for k in tabs)
    rwa = build_kernels(bath_config(rwa=True))
    assert rwa and all(k[0] == CO for k in rwa)
    assert set(tabs) >= {(COUNTER, 0, 1), (COUNTER, 0, 0, 1), (COUNTER, 1, 1, 0)}


def test_vacuum_has_no_kernels():
    cfg = SystemConfig((Emitter((0, 0, 0), 2.0, Z), Emitter((3, 0, 0), 2.0, Z)), Vacuum())
    sp = tabulate_spectra(cfg)
    assert not np.any(sp.J)
    assert build_kernels(cfg) == {}


def test_doubling_grid_density():
    tol = 1e-6
    cfg = bath_config(tab=tol)
    sp = tabulate_spectra(cfg)
    a = build_kernels(cfg, sp)[(CO, 0, 0)]
    b = build_kernels(cfg.with_(n_omega=2 * cfg.frequency_points - 1))[(CO, 0, 0)]
    # |dK| <= int |dJ| <= tol * max|J| * span
    bound = tol * np.max(sp.J[:, 0, 0]) * (sp.omega[-1] - sp.omega[0])
    assert np.max(np.abs(a.values - b.values)) < bound


def test_memory_bound_exponential():
    lam, dt = 0.5, 0.001
    tau = dt * np.arange(int(40 / lam / dt) + 1)
    t = KernelTable((0, 0), CO, dt, np.exp(-lam * tau), None, None, 0.0, 0.0)
    assert kernel_memory_bound(t, 1e-6) == pytest.approx(math.log(1e6) / lam, rel=1e-3)


def test_memory_bound_zero_and_undecayed():
    z = KernelTable((0, 0), CO, 0.1, np.zeros(50), None, None, 0.0, 0.0)
    assert kernel_memory_bound(z) == 0.0
    flat = KernelTable((0, 0), CO, 0.1, np.ones(50), None, None, 0.0, 0.0)
    with pytest.raises(NoDecayDetected):
        kernel_memory_bound(flat)
    assert kernel_memory_bound(flat, horizon=4.9) == pytest.approx(4.9)


def test_memory_bound_white_band():
    # flat J with tapered edges: the memory scales with the inverse bandwidth
    def bound(width):
        w = np.linspace(0, width, 4001)
        J = 0.01 * taper(w, 0, width, 0.5) * taper(width - w, 0, width, 0.5)
        return kernel_memory_bound(kernel_table(w, J, 0.05, 4000, width / 2), 1e-3)

    b2, b4 = bound(2.0), bound(4.0)
    assert b2 == pytest.approx(2 * b4, rel=0.05)
    # a few tens of inverse bandwidths, far inside the table
    assert b4 < 20 * 2 * math.pi / 4.0


def test_coarse_grid_rejected():
    cfg = bath_config(n_omega=50)
    with pytest.raises(SpectralGridTooCoarse):
        tabulate_spectra(cfg)


def test_drude_kernel_memory_within_default():
    a = Emitter((0, 0, 1.0), 3.525, Z)
    cfg = SystemConfig((a,), DrudeHalfSpace(5.0, 0.1), t_max=500.0, dt=0.05, omega_max=12.0,
                       tolerances=Tolerances(tabulation=1e-3))
    tab = build_kernels(cfg)[(CO, 0, 0)]
    assert kernel_memory_bound(tab, 1e-6) < cfg.memory_time
