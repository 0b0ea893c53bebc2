"""Invariant suite run by ``fisherlab check``.

Each check returns ``(passed, detail)``.  The suite is self-contained and
sized to finish well under a minute on one core.
"""
from __future__ import annotations

import math
import time
from typing import Callable

import numpy as np
from scipy import integrate

from . import analytic as an
from .fisher import fisher_amplitude, fisher_density, fisher_product
from .grid import make_grid, moment, normalize, sample, to_momentum, to_position
from .propagator import ProductEvaluator, auto_grid, evolve_free, run_series
from .series import series_to_csv
from .states import Hermite


def _hermite_wave(k, delta, grid, t=0.0):
    st = an.AnalyticState(k, delta, t)
    return normalize(sample(lambda x: an.psi_k(st, x), grid))


def _evaluator(k, delta, estimator="density"):
    spec = Hermite(k, delta)
    wf0 = spec.build(spec.provisional_grid())
    return ProductEvaluator(wf0, estimator=estimator, source=spec.build)


def check_lattice_duality():
    worst = 0.0
    for n in (8, 100, 2048, 3 * 5 * 7 * 11):
        g = make_grid(-7.3, 11.1, n)
        worst = max(worst, abs(g.dx * g.dp * g.n - 2 * math.pi))
    return worst < 1e-12, f"max |dx dp n - 2pi| = {worst:.2e}"


def check_parseval():
    rng = np.random.default_rng(11)
    g = make_grid(-20, 20, 1024)
    worst = 0.0
    for _ in range(5):
        env = np.exp(-(g.x / rng.uniform(1, 3)) ** 2)
        wf = normalize(sample(lambda x: env * (rng.normal(size=x.size) + 1j * rng.normal(size=x.size)), g))
        worst = max(worst, abs(to_momentum(wf).norm_sq() - 1.0))
    return worst < 1e-12, f"max Parseval defect {worst:.2e}"


def check_round_trip():
    g = make_grid(-15, 12, 999)
    wf = _hermite_wave(3, 1.3, g)
    back = to_position(to_momentum(wf))
    err = float(np.max(np.abs(back.amplitudes - wf.amplitudes)))
    return err < 1e-12, f"max round-trip error {err:.2e}"


def check_translation_covariance():
    g = make_grid(-16, 16, 512)
    st = an.AnalyticState(2, 1.0, 0.7)
    a = 3.25
    base = to_momentum(normalize(sample(lambda x: an.psi_k(st, x), g))).density
    moved = to_momentum(normalize(sample(lambda x: an.psi_k(st, x - a), g.shifted(a)))).density
    err = float(np.max(np.abs(base - moved)))
    return err < 1e-10, f"max momentum-density change {err:.2e}"


def check_unitarity():
    ev = _evaluator(2, 1.0)
    worst = 0.0
    for t in (0.5, 3.0, 10.0):
        worst = max(worst, abs(ev.state_at(t).norm_sq() - 1.0))
    return worst < 1e-12, f"max norm defect {worst:.2e}"


def check_group_law():
    wf0 = _hermite_wave(1, 1.0, make_grid(-10, 10, 64))
    g = auto_grid(wf0, 6.0)
    wf = _hermite_wave(1, 1.0, g)
    two = evolve_free(evolve_free(wf, 2.5), 3.5)
    one = evolve_free(wf, 6.0)
    back = evolve_free(one, -6.0)
    e1 = float(np.max(np.abs(two.amplitudes - one.amplitudes)))
    e2 = float(np.max(np.abs(back.amplitudes - wf.amplitudes)))
    return e1 < 1e-11 and e2 < 1e-12, f"group law {e1:.2e}, time reversal {e2:.2e}"


def check_momentum_invariance():
    wf0 = _hermite_wave(2, 0.8, make_grid(-10, 10, 64))
    g = auto_grid(wf0, 5.0)
    wf = _hermite_wave(2, 0.8, g)
    rho0 = to_momentum(wf).density
    worst = max(float(np.max(np.abs(to_momentum(evolve_free(wf, t)).density - rho0)))
                for t in (1.0, 5.0))
    return worst < 1e-12, f"max |rho~(p,t) - rho~(p,0)| = {worst:.2e}"


def check_oracle_match():
    worst = 0.0
    for k in range(4):
        for delta in (0.7, 1.0):
            ev = _evaluator(k, delta)
            for t in (delta ** 2, 5 * delta ** 2):
                wf = ev.state_at(t)
                exact = an.psi_k(an.AnalyticState(k, delta, t), wf.grid.x)
                worst = max(worst, float(np.max(np.abs(wf.amplitudes - exact))))
    return worst < 1e-8, f"max |psi_num - psi_exact| = {worst:.2e}"


def check_normalization_constants():
    worst = 0.0
    for k in range(6):
        for delta in (0.5, 1.0, 2.0):
            st0 = an.AnalyticState(0, delta, 0.0)
            g = make_grid(-40 * delta, 40 * delta, 4096)
            psi0 = sample(lambda x: an.psi_k(st0, x), g)
            wp = to_momentum(psi0)
            dk = to_position(wp.replace(wp.amplitudes * (1j * wp.coords) ** k))
            worst = max(worst, abs(1.0 / dk.norm_sq() / an.norm_const_sq(k, delta) - 1.0))
    return worst < 1e-8, f"max relative |N_k|^2 defect {worst:.2e}"


def check_schrodinger_residual():
    worst = 0.0
    g = make_grid(-25, 25, 1024)
    h = 1e-3
    for k in range(6):
        st = an.AnalyticState(k, 1.0, 1.5)
        psi = an.psi_k(st, g.x)
        # 4th-order central difference in t, spectral second derivative in x
        f = [an.psi_k(st.at(st.t + j * h), g.x) for j in (-2, -1, 1, 2)]
        dt = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)
        wp = to_momentum(sample(lambda x: psi, g))
        d2x = to_position(wp.replace(-wp.coords ** 2 * wp.amplitudes)).amplitudes
        resid = np.max(np.abs(1j * dt + 0.5 * d2x)) / np.max(np.abs(psi))
        worst = max(worst, float(resid))
    return worst < 1e-6, f"max relative residual {worst:.2e}"


def check_density_oracles():
    g = make_grid(-10, 10, 2048)
    gauss = np.exp(-g.x ** 2) / math.sqrt(math.pi)
    rho1 = an.density_x(an.AnalyticState(1, 1.0), g.x)
    e0 = abs(fisher_density(gauss, g.dx) - 2.0)
    e1 = abs(fisher_density(rho1, g.dx) - 6.0)
    return e0 < 1e-8 and e1 < 1e-6, f"gaussian {e0:.2e}, first derivative {e1:.2e}"


def check_fisher_p_oracle():
    worst = 0.0
    for k in range(6):
        for delta in (0.5, 1.0, 2.0):
            worst = max(worst, abs(momentum_fisher_quadrature(k, delta) / an.fisher_p_exact(k, delta) - 1))
    return worst < 1e-9, f"closed form vs quadrature {worst:.2e}"


def momentum_fisher_quadrature(k: int, delta: float) -> float:
    """Brute-force ``integral rho~'**2 / rho~`` with a complex-step derivative."""
    h = 1e-30
    scale = delta ** (2 * k + 1) / an.gamma_half(k)

    def rho(p):
        return scale * p ** (2 * k) * np.exp(-(delta * p) ** 2)

    def integrand(p):
        r = rho(p)
        if r <= 0:
            return 0.0
        drho = rho(complex(p, h)).imag / h
        return drho * drho / r

    val, _ = integrate.quad(integrand, 0.0, np.inf, limit=400, epsabs=1e-14, epsrel=1e-12)
    return 2.0 * val


def check_estimators():
    g = make_grid(-12, 12, 8192)
    worst_smooth = 0.0
    for delta in (0.7, 1.0, 1.6):
        wf = _hermite_wave(0, delta, g)
        d = fisher_density(wf.density, g.dx)
        worst_smooth = max(worst_smooth, abs(fisher_amplitude(wf) - d) / d)
    worst_node = 0.0
    for k in (1, 3):
        wf = _hermite_wave(k, 1.0, g)
        d = fisher_density(wf.density, g.dx)
        worst_node = max(worst_node, abs(fisher_amplitude(wf) - d) / d)
    ok = worst_smooth < 1e-6 and worst_node < 1e-4
    return ok, f"nodeless {worst_smooth:.2e}, noded {worst_node:.2e}"


def check_fisher_symmetries():
    g = make_grid(-30, 30, 4096)
    rho = an.density_x(an.AnalyticState(2, 1.0, 0.5), g.x)
    base = fisher_density(rho, g.dx)
    shifted = fisher_density(an.density_x(an.AnalyticState(2, 1.0, 0.5), g.x - 2.5), g.dx)
    worst_scale = 0.0
    for lam in (0.5, 2.0, 3.0):
        scaled = an.density_x(an.AnalyticState(2, 1.0, 0.5), g.x / lam) / lam
        worst_scale = max(worst_scale, abs(fisher_density(scaled, g.dx) * lam ** 2 / base - 1))
    e_shift = abs(shifted - base)
    return e_shift < 1e-9 and worst_scale < 1e-6, f"shift {e_shift:.2e}, scaling {worst_scale:.2e}"


def random_real_superposition(rng, grid, delta=1.0, kmax=6):
    coef = rng.normal(size=kmax + 1)
    amp = sum(c * an.psi_k(an.AnalyticState(k, delta), grid.x) for k, c in enumerate(coef))
    return normalize(sample(lambda x: amp.real, grid))


def check_real_state_bound():
    rng = np.random.default_rng(2024)
    g = make_grid(-24, 24, 2048)
    lowest = np.inf
    worst_identity = 0.0
    for _ in range(20):
        wf = random_real_superposition(rng, g)
        r = fisher_product(wf)
        lowest = min(lowest, r.product)
        ident = 4 * moment(to_momentum(wf), 2)
        worst_identity = max(worst_identity, abs(r.i_x - ident) / ident)
    gauss = fisher_product(_hermite_wave(0, 1.0, g)).product
    ok = lowest >= 4 * (1 - 1e-6) and abs(gauss - 4) < 4e-6 and worst_identity < 1e-6
    return ok, (f"min product {lowest:.6f}, gaussian {gauss:.10f}, "
                f"I_x = 4<p^2> defect {worst_identity:.2e}")


def check_product_formulas():
    worst = 0.0
    for k in (0, 1):
        ev = _evaluator(k, 1.0)
        for t in (0.0, 1.0, 2 * math.sqrt(2), 5.0):
            exact = an.product_closed(an.AnalyticState(k, 1.0, t))
            worst = max(worst, abs(ev.product(t) / exact - 1))
    return worst < 1e-6, f"max relative error {worst:.2e}"


def check_determinism():
    ev = _evaluator(1, 1.0)
    ts = np.linspace(0, 4, 9)
    a = series_to_csv(run_series(ev, ts, workers=1))
    b = series_to_csv(run_series(_evaluator(1, 1.0), ts, workers=3))
    return a == b, "identical CSV text" if a == b else "CSV output differs between runs"


CHECKS: list[tuple[str, Callable]] = [
    ("lattice duality", check_lattice_duality),
    ("parseval", check_parseval),
    ("round trip", check_round_trip),
    ("translation covariance", check_translation_covariance),
    ("unitarity", check_unitarity),
    ("group law / time reversal", check_group_law),
    ("momentum density invariance", check_momentum_invariance),
    ("propagator vs analytic family", check_oracle_match),
    ("normalization constants", check_normalization_constants),
    ("schrodinger residual", check_schrodinger_residual),
    ("density-form oracles", check_density_oracles),
    ("momentum fisher closed form", check_fisher_p_oracle),
    ("estimator agreement", check_estimators),
    ("fisher shift/scale laws", check_fisher_symmetries),
    ("real-state bound", check_real_state_bound),
    ("closed-form products", check_product_formulas),
    ("determinism", check_determinism),
]


def run_checks(out=print) -> bool:
    all_ok = True
    for name, fn in CHECKS:
        start = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed check, not an abort
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= ok
        out(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail} ({time.perf_counter() - start:.2f}s)")
    return all_ok
