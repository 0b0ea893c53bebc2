import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.polynomial import hermite as nph
from scipy import integrate

from fisherlab import analytic as an
from fisherlab.checks import momentum_fisher_quadrature
from fisherlab.grid import make_grid, sample, to_momentum, to_position


def test_c_of_t():
    assert an.c_of_t(1.0, 0.0).c_squared == 0.5
    assert an.c_of_t(1.0, 1.0).c_squared == pytest.approx((1 - 1j) / 4, abs=1e-16)
    assert abs(an.c_of_t(2.0, 1e12).c_squared) < 1e-11
    for t in (-3.0, 0.0, 2.0, 1e6):
        assert an.c_of_t(1.5, t).c_squared.real > 0
    with pytest.raises(ValueError):
        an.c_of_t(0.0, 1.0)


def test_c_branch_continuous_in_t():
    ts = np.linspace(0, 50, 5001)
    cs = np.array([an.c_of_t(1.0, t).c for t in ts])
    assert np.max(np.abs(np.diff(cs))) < 1e-2
    assert np.all(cs.real > 0)


def test_hermite_examples():
    assert an.hermite(0, 3.7) == 1
    assert an.hermite(2, 1.0) == 2
    assert an.hermite(3, 0.5) == pytest.approx(-5.0, abs=1e-15)
    with pytest.raises(ValueError):
        an.hermite(65, 0.0)
    with pytest.raises(ValueError):
        an.hermite(-1, 0.0)


@given(st.integers(0, 20), st.floats(-3, 3), st.floats(-3, 3))
def test_hermite_matches_explicit_coefficients(k, re, im):
    y = complex(re, im)
    ref = nph.hermval(y, [0] * k + [1])
    assert abs(an.hermite(k, y) - ref) <= 1e-10 * max(1.0, abs(ref))


def test_norm_constants():
    assert an.norm_const_sq(0, 3.3) == pytest.approx(1.0, rel=1e-15)
    assert an.norm_const_sq(1, 1.0) == pytest.approx(2.0, rel=1e-15)
    assert an.norm_const_sq(2, 1.0) == pytest.approx(4 / 3, rel=1e-15)
    for k in range(10):
        assert an.gamma_half(k) == pytest.approx(math.gamma(k + 0.5), rel=1e-14)
    with pytest.raises(ValueError):
        an.norm_const_sq(1, -1.0)


def test_state_validation():
    with pytest.raises(ValueError):
        an.AnalyticState(-1, 1.0)
    with pytest.raises(ValueError):
        an.AnalyticState(1, 0.0)
    with pytest.raises(ValueError):
        an.AnalyticState(1.5, 1.0)


def test_psi_examples():
    assert an.psi_k(an.AnalyticState(0, 1.0), 0.0) == pytest.approx(math.pi ** -0.25, rel=1e-15)
    assert an.psi_k(an.AnalyticState(1, 1.7, 3.0), 0.0) == 0
    rho = abs(an.psi_k(an.AnalyticState(0, 1.0, 1.0), 0.0)) ** 2
    assert rho == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-14)


def gaussian_density(delta, t, x):
    s = delta ** 4 + t * t
    return delta / np.sqrt(math.pi * s) * np.exp(-delta ** 2 * x ** 2 / s)


def first_derivative_density(delta, t, x):
    s = delta ** 4 + t * t
    return 2 * delta ** 3 / np.sqrt(math.pi * s ** 3) * x ** 2 * np.exp(-delta ** 2 * x ** 2 / s)


@pytest.mark.parametrize("delta,t", [(1.0, 0.0), (1.0, 1.0), (0.6, 2.5), (2.0, -1.0)])
def test_densities_match_printed_forms(delta, t):
    sig = math.sqrt((delta ** 4 + t * t) / (2 * delta ** 2))
    x = np.linspace(-8 * sig, 8 * sig, 1001)
    for k, ref in ((0, gaussian_density), (1, first_derivative_density)):
        got = an.density_x(an.AnalyticState(k, delta, t), x)
        want = ref(delta, t, x)
        mask = want > 0
        assert np.max(np.abs(got[mask] / want[mask] - 1)) < 1e-12


def test_density_examples():
    assert an.density_x(an.AnalyticState(0, 1.0), 1.0) == pytest.approx(math.exp(-1) / math.sqrt(math.pi), rel=1e-14)
    assert an.density_x(an.AnalyticState(1, 1.0), 1.0) == pytest.approx(2 * math.exp(-1) / math.sqrt(math.pi), rel=1e-14)
    assert an.density_x(an.AnalyticState(1, 2.0, 4.0), 0.0) == 0
    assert an.density_p(an.AnalyticState(0, 1.0), 0.0) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-14)
    assert an.density_p(an.AnalyticState(3, 1.0), 0.0) == 0
    assert an.density_p(an.AnalyticState(1, 1.0), 1.0) == pytest.approx(2 * math.exp(-1) / math.sqrt(math.pi), rel=1e-14)


@pytest.mark.parametrize("k", range(6))
@pytest.mark.parametrize("delta", [0.5, 1.0, 2.0])
def test_normalization_over_time(k, delta):
    for t in (0.0, delta ** 2, 10 * delta ** 2):
        st0 = an.AnalyticState(k, delta, t)
        val, _ = integrate.quad(lambda x: an.density_x(st0, x), -np.inf, np.inf,
                                epsabs=1e-13, epsrel=1e-12, limit=200)
        assert val == pytest.approx(1.0, abs=1e-8)
        val_p, _ = integrate.quad(lambda p: an.density_p(st0, p), -np.inf, np.inf,
                                  epsabs=1e-13, epsrel=1e-12, limit=200)
        assert val_p == pytest.approx(1.0, abs=1e-8)


def test_product_closed():
    assert an.product_closed(an.AnalyticState(0, 1.0)) == 4
    assert an.product_closed(an.AnalyticState(1, 1.0)) == 36
    assert an.product_closed(an.AnalyticState(1, 1.0, 2 * math.sqrt(2))) == pytest.approx(4.0, rel=1e-15)
    assert an.product_closed(an.AnalyticState(2, 1.0)) is None


@pytest.mark.parametrize("k", range(6))
@pytest.mark.parametrize("delta", [0.5, 1.0, 2.0])
def test_fisher_p_exact_against_brute_force(k, delta):
    assert an.fisher_p_exact(k, delta) == pytest.approx(momentum_fisher_quadrature(k, delta), rel=1e-9)


def test_fisher_p_examples():
    assert an.fisher_p_exact(0, 1.0) == 2
    assert an.fisher_p_exact(1, 1.0) == pytest.approx(6.0, rel=1e-15)
    assert an.fisher_p_exact(2, 1.0) == pytest.approx(14 / 3, rel=1e-15)


@pytest.mark.parametrize("k", range(6))
def test_fisher_x_quadrature_at_zero(k):
    # real psi: I_x = 4 <p**2> = (4k + 2) / delta**2
    assert an.fisher_x_quadrature(an.AnalyticState(k, 1.5)) == pytest.approx((4 * k + 2) / 2.25, rel=1e-9)


def test_fisher_x_quadrature_against_finite_difference_score():
    st0 = an.AnalyticState(2, 1.0, 0.7)
    h = 1e-5

    def integrand(x):
        r = an.density_x(st0, x)
        if r <= 0:
            return 0.0
        d = (an.density_x(st0, x + h) - an.density_x(st0, x - h)) / (2 * h)
        return d * d / r

    val, _ = integrate.quad(integrand, -30, 30, points=[0.0], limit=400)
    assert an.fisher_x_quadrature(st0) == pytest.approx(val, rel=1e-6)


@pytest.mark.parametrize("k", range(6))
def test_schrodinger_residual(k):
    g = make_grid(-25, 25, 1024)
    st0 = an.AnalyticState(k, 1.0, 1.5)
    h = 1e-3
    f = [an.psi_k(st0.at(st0.t + j * h), g.x) for j in (-2, -1, 1, 2)]
    dt = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)
    wp = to_momentum(sample(lambda x: an.psi_k(st0, x), g))
    d2x = to_position(wp.replace(-wp.coords ** 2 * wp.amplitudes)).amplitudes
    psi = an.psi_k(st0, g.x)
    assert np.max(np.abs(1j * dt + 0.5 * d2x)) < 1e-6 * np.max(np.abs(psi))


@pytest.mark.parametrize("k", range(6))
def test_momentum_density_is_time_independent(k):
    g = make_grid(-60, 60, 4096)
    for t in (0.0, 1.0, 5.0):
        wp = to_momentum(sample(lambda x: an.psi_k(an.AnalyticState(k, 1.0, t), x), g))
        assert np.max(np.abs(wp.density - an.density_p(an.AnalyticState(k, 1.0), g.p))) < 1e-8


def test_momentum_amplitude_matches_transform():
    g = make_grid(-60, 60, 4096)
    st0 = an.AnalyticState(3, 1.2, 2.0)
    wp = to_momentum(sample(lambda x: an.psi_k(st0, x), g))
    assert np.max(np.abs(wp.amplitudes - an.psi_k_momentum(st0, g.p))) < 1e-10


@pytest.mark.parametrize("k", range(4))
def test_peak_decay_bounded(k):
    delta = 1.0
    vals = []
    for t in np.geomspace(0.1, 1e4, 30):
        sig = math.sqrt((delta ** 4 + t * t) / (2 * delta ** 2))
        x = np.linspace(-8 * sig, 8 * sig, 4001)
        peak = np.max(an.density_x(an.AnalyticState(k, delta, t), x))
        vals.append(peak * (delta ** 4 + t * t) ** 0.5)
    assert max(vals) < 10 * min(vals)


def test_variances():
    for k in range(6):
        st0 = an.AnalyticState(k, 1.3, 2.0)
        val, _ = integrate.quad(lambda x: x * x * an.density_x(st0, x), -np.inf, np.inf,
                                epsabs=1e-12, epsrel=1e-11, limit=200)
        assert an.position_variance(st0) == pytest.approx(val, rel=1e-8)
