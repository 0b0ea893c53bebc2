import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from fisherlab import analytic as an
from fisherlab.fisher import (Estimator, density_diagnostics, fisher_amplitude,
                              fisher_density, fisher_product)
from fisherlab.grid import make_grid, moment, normalize, sample, to_momentum
from fisherlab.propagator import ProductEvaluator
from fisherlab.states import Hermite

from conftest import hermite_wave


def first_derivative_fisher_oracle():
    # score of x**2 exp(-x**2) is 2/x - 2x
    rho = lambda x: 2 / math.sqrt(math.pi) * x * x * math.exp(-x * x)
    val, _ = integrate.quad(lambda x: (2 / x - 2 * x) ** 2 * rho(x), 0, np.inf,
                            epsabs=1e-14, epsrel=1e-13)
    return 2 * val


def test_oracle_values():
    assert first_derivative_fisher_oracle() == pytest.approx(6.0, rel=1e-12)


def test_gaussian_density_and_shift():
    g = make_grid(-15, 15, 2048)
    rho = np.exp(-g.x ** 2) / math.sqrt(math.pi)
    assert fisher_density(rho, g.dx) == pytest.approx(2.0, abs=1e-8)
    shifted = np.exp(-(g.x - 3) ** 2) / math.sqrt(math.pi)
    assert fisher_density(shifted, g.dx) == pytest.approx(2.0, abs=1e-8)
    assert fisher_density(rho, g.dx, method="fd4") == pytest.approx(2.0, abs=1e-6)


def test_first_derivative_density():
    g = make_grid(-12, 12, 2048)
    rho = an.density_x(an.AnalyticState(1, 1.0), g.x)
    assert fisher_density(rho, g.dx) == pytest.approx(first_derivative_fisher_oracle(), abs=1e-6)
    assert density_diagnostics(rho, g.dx).regularized_mass < 1e-8


def test_node_diagnostics():
    g = make_grid(-12, 12, 2048)  # x = 0 is a sample, so the node is masked
    diag = density_diagnostics(an.density_x(an.AnalyticState(3, 1.0), g.x), g.dx)
    assert diag.node_count >= 1
    assert diag.regularized_mass < 1e-8


def test_density_errors():
    g = make_grid(-10, 10, 256)
    rho = np.exp(-g.x ** 2) / math.sqrt(math.pi)
    with pytest.raises(ValueError):
        fisher_density(2 * rho, g.dx)
    bad = rho.copy()
    bad[10] = -1e-10
    with pytest.raises(ValueError):
        fisher_density(bad, g.dx)
    with pytest.raises(ValueError):
        fisher_density(rho, g.dx, method="euler")


def test_amplitude_form():
    g = make_grid(-12, 12, 8192)
    gauss = hermite_wave(0, 1.0, g)
    assert fisher_amplitude(gauss) == pytest.approx(2.0, abs=1e-8)
    first = hermite_wave(1, 1.0, g)
    assert fisher_amplitude(first) == pytest.approx(6.0, abs=1e-4)
    phased = gauss.replace(gauss.amplitudes * np.exp(0.7j))
    assert fisher_amplitude(phased) == pytest.approx(fisher_amplitude(gauss), rel=1e-14)
    with pytest.raises(ValueError):
        fisher_amplitude(gauss.replace(2 * gauss.amplitudes))


@pytest.mark.parametrize("offset", [0.0, 0.25, 0.5, 0.731])
def test_amplitude_form_node_between_samples(offset):
    # node positions relative to the lattice must not matter
    g = make_grid(-12 + offset * 0.01, 12 + offset * 0.01, 2400)
    wf = hermite_wave(1, 1.0, g)
    assert fisher_amplitude(wf) == pytest.approx(6.0, rel=1e-4)


def test_estimator_agreement_nodeless():
    g = make_grid(-25, 25, 8192)
    for t in (0.0, 0.5, 3.0):
        wf = hermite_wave(0, 1.3, g, t)
        d = fisher_density(wf.density, g.dx)
        assert abs(fisher_amplitude(wf) - d) / d < 1e-6


def test_fisher_product_examples():
    g = make_grid(-15, 15, 4096)
    r = fisher_product(hermite_wave(0, 1.0, g))
    assert r.product == pytest.approx(4.0, abs=1e-6)
    assert r.estimator is Estimator.DENSITY
    assert r.product == r.i_x * r.i_p
    r1 = fisher_product(hermite_wave(1, 1.0, g))
    assert r1.product == pytest.approx(36.0, abs=1e-4)
    ra = fisher_product(hermite_wave(1, 1.0, make_grid(-40, 40, 32768)), "amplitude")
    assert ra.estimator is Estimator.AMPLITUDE
    assert ra.product == pytest.approx(36.0, rel=1e-4)
    evolved = hermite_wave(0, 1.0, make_grid(-30, 30, 4096), t=1.0)
    assert fisher_product(evolved).product == pytest.approx(2.0, abs=1e-4)


def test_fisher_product_wants_position_space():
    wf = hermite_wave(0, 1.0, make_grid(-10, 10, 256))
    with pytest.raises(ValueError):
        fisher_product(to_momentum(wf))


@pytest.mark.parametrize("lam", [0.5, 2.0, 3.0])
def test_scaling_law(lam):
    g = make_grid(-40, 40, 8192)
    st0 = an.AnalyticState(2, 1.0, 0.5)
    base = fisher_density(an.density_x(st0, g.x), g.dx)
    scaled = an.density_x(st0, g.x / lam) / lam
    assert fisher_density(scaled, g.dx) == pytest.approx(base / lam ** 2, rel=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.floats(-4.0, 4.0))
def test_translation_invariance(a):
    g = make_grid(-30, 30, 4096)
    st0 = an.AnalyticState(1, 1.0, 0.8)
    base = fisher_density(an.density_x(st0, g.x), g.dx)
    moved = fisher_density(an.density_x(st0, g.x - a), g.dx, refine=True)
    assert moved == pytest.approx(base, abs=1e-9)


def test_refinement_resolves_near_zeros():
    # complex zeros close to the real axis make the coarse lattice sum inaccurate
    st0 = an.AnalyticState(2, 2.0, 0.5)
    g = make_grid(-52, 52, 576)
    rho = an.density_x(st0, g.x)
    rho = rho / (rho.sum() * g.dx)
    exact = an.fisher_x_quadrature(st0)
    assert abs(fisher_density(rho, g.dx) / exact - 1) > 1e-3
    assert fisher_density(rho, g.dx, refine=True) == pytest.approx(exact, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=7, max_size=7).filter(
    lambda c: sum(v * v for v in c) > 1e-3))
def test_real_state_bound_and_identity(coef):
    g = make_grid(-24, 24, 2048)
    amp = sum(c * an.psi_k(an.AnalyticState(k, 1.0), g.x).real for k, c in enumerate(coef))
    wf = normalize(sample(lambda x: amp, g))
    r = fisher_product(wf)
    assert r.i_x >= 0 and r.i_p >= 0
    assert r.product >= 4 * (1 - 1e-6)
    assert r.i_x == pytest.approx(4 * moment(to_momentum(wf), 2), rel=1e-6)


@pytest.mark.parametrize("k", [0, 1, 2, 3, 4, 5])
def test_estimators_agree_on_evolved_family(k):
    spec = Hermite(k, 1.0)
    wf0 = spec.build(spec.provisional_grid())
    dens = ProductEvaluator(wf0, source=spec.build)
    amp = ProductEvaluator(wf0, source=spec.build, estimator="amplitude")
    for t in (0.0, 1.0, 5.0):
        a, b = dens(t), amp(t)
        assert a.i_x == pytest.approx(b.i_x, rel=1e-4)
        assert a.i_p == pytest.approx(b.i_p, rel=1e-4)
