"""Exact free-particle evolution on FFT grids, with spreading-aware gridding.

Free evolution is a pure phase in momentum space,
``psi~(p, t) = exp(-i p**2 t / 2) psi~(p, 0)``, so every time point is
computed from the initial state in one step.
"""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft
from scipy.signal import czt

from .errors import GridResourceError, GridTooSmallError, InvariantError
from .fisher import Estimator, FisherResult, fisher_product
from .grid import (BOUNDARY_TOL, Grid, Space, WaveFunction, normalize,
                   spectral_derivative, to_momentum, to_position)
from .series import CurveSeries, SeriesEntry

DEFAULT_MAX_N = 2 ** 22
COVERAGE = 12.0
SAFETY = 1.5
MASS_TOL = 1e-12
MIN_AUTO_N = 64
IP_RTOL = 1e-8

# dx refinement per estimator; rho'**2/rho is wider-band than rho near complex zeros
DENSITY_OVERSAMPLE = 2
AMPLITUDE_OVERSAMPLE = 8
# amplitude form: minimum extent as a multiple of the t = 0 box (momentum-side resolution)
AMPLITUDE_ZERO_PAD = 16

Builder = Callable[[Grid], WaveFunction]


def default_max_n() -> int:
    env = os.environ.get("FISHERLAB_MAX_N")
    return int(env) if env else DEFAULT_MAX_N


class RegridPolicy(str, enum.Enum):
    FIXED = "fixed"
    AUTO_EXPAND = "auto_expand"


@dataclass(frozen=True)
class EvolutionPlan:
    base_grid: Grid
    t_values: tuple[float, ...]
    regrid_policy: RegridPolicy = RegridPolicy.AUTO_EXPAND

    def __post_init__(self):
        ts = tuple(float(t) for t in self.t_values)
        if not ts:
            raise ValueError("plan needs at least one time")
        if any(not math.isfinite(t) or t < 0 for t in ts):
            raise ValueError("plan times must be finite and non-negative")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("plan times must be strictly ascending")
        object.__setattr__(self, "t_values", ts)
        object.__setattr__(self, "regrid_policy", RegridPolicy(self.regrid_policy))


@dataclass(frozen=True)
class Spread:
    """First and second moments of a state, enough to predict free spreading."""

    mean_x: float
    var_x: float
    cov_xp: float
    mean_p: float
    var_p: float
    p_cut: float

    def mean_at(self, t: float) -> float:
        return self.mean_x + self.mean_p * t

    def var_at(self, t: float) -> float:
        # exact for free motion: x(t) = x + p t
        return max(self.var_x + 2.0 * self.cov_xp * t + self.var_p * t * t, 0.0)


def momentum_cutoff(wf_p: WaveFunction, mass_tol: float = MASS_TOL) -> float:
    """Smallest ``P`` with all but ``mass_tol`` of ``|psi~|**2`` inside ``|p| <= P``."""
    absp = np.abs(wf_p.coords)
    order = np.argsort(absp, kind="stable")
    rho = wf_p.density[order] * wf_p.spacing
    tail = np.cumsum(rho[::-1])[::-1]  # tail[i] = mass at |p| >= absp[order[i]]
    total = tail[0]
    outside = np.append(tail[1:], 0.0)
    ok = np.flatnonzero(outside <= mass_tol * total)
    return max(float(absp[order][ok[0]]), wf_p.grid.dp)


def measure_spread(wf0: WaveFunction, mass_tol: float = MASS_TOL) -> Spread:
    if wf0.space is not Space.POSITION:
        raise ValueError("expected a position-space state")
    nrm2 = wf0.norm_sq()
    x = wf0.coords
    rho = wf0.density / nrm2
    dx = wf0.spacing
    mx = float(np.sum(x * rho) * dx)
    vx = float(np.sum((x - mx) ** 2 * rho) * dx)
    wp = to_momentum(wf0)
    p = wp.coords
    rp = wp.density / nrm2
    mp = float(np.sum(p * rp) * wp.spacing)
    vp = float(np.sum((p - mp) ** 2 * rp) * wp.spacing)
    # symmetrised <x p> = integral x Im(psi* psi') dx
    dpsi = spectral_derivative(wf0.amplitudes, dx)
    xp = float(np.sum(x * np.imag(np.conj(wf0.amplitudes) * dpsi)) * dx / nrm2)
    return Spread(mx, vx, xp - mx * mp, mp, vp, momentum_cutoff(wp, mass_tol))


def grid_for_spread(spread: Spread, t_max: float, *, coverage: float = COVERAGE,
                    safety: float = SAFETY, oversample: int = 1, zero_pad: float = 1.0,
                    max_n: int | None = None) -> Grid:
    max_n = default_max_n() if max_n is None else max_n
    # the density has twice the bandwidth of the amplitude
    dx = math.pi / (2.0 * safety * spread.p_cut) / oversample
    s0 = math.sqrt(spread.var_x)
    st = math.sqrt(spread.var_at(t_max))
    lo = min(spread.mean_at(0.0) - coverage * s0, spread.mean_at(t_max) - coverage * st)
    hi = max(spread.mean_at(0.0) + coverage * s0, spread.mean_at(t_max) + coverage * st)
    # the momentum density's Fourier dual is the autocorrelation of psi,
    # twice as wide as psi itself
    extent = max(hi - lo, 4.0 * coverage * s0 * zero_pad)
    need = math.ceil(extent / dx)
    if need > max_n:
        raise GridResourceError(f"grid needs {need} samples, cap is {max_n}")
    n = max(sfft.next_fast_len(need), MIN_AUTO_N)
    if n > max_n:
        n = need
    centre = 0.5 * (lo + hi)
    return Grid(centre - 0.5 * n * dx, dx, n)


def auto_grid(wf0: WaveFunction, t_max: float, *, coverage: float = COVERAGE,
              safety: float = SAFETY, oversample: int = 1, zero_pad: float = 1.0,
              max_n: int | None = None) -> Grid:
    """Grid that holds ``wf0`` from ``t = 0`` to ``t_max`` under free motion.

    The box spans ``coverage`` standard deviations about the mean position at
    both ends of the interval (spreading is convex in t, so this bounds the
    whole interval).  ``dx`` resolves the momentum cutoff holding all but
    1e-12 of the mass, with a ``safety`` margin and a further factor two for
    the density's doubled bandwidth.

    Raises
    ------
    GridResourceError
        If more than ``max_n`` samples would be needed.
    """
    if t_max < 0:
        raise ValueError("t_max must be non-negative")
    return grid_for_spread(measure_spread(wf0), t_max, coverage=coverage, safety=safety,
                           oversample=oversample, zero_pad=zero_pad, max_n=max_n)


def evolve_free(wf0: WaveFunction, t: float, *, boundary_tol: float = BOUNDARY_TOL,
                workers: int | None = None) -> WaveFunction:
    """Evolve a position-space state by time ``t`` (negative allowed).

    Raises
    ------
    GridTooSmallError
        If the evolved state carries more than ``boundary_tol`` of its mass
        in the outer 5% of the grid.
    """
    if wf0.space is not Space.POSITION:
        raise ValueError("evolve_free expects a position-space state")
    if t == 0:
        out = wf0
    else:
        wp = to_momentum(wf0, workers=workers)
        phase = np.exp(-0.5j * t * wp.coords ** 2)
        out = to_position(wp.replace(wp.amplitudes * phase), workers=workers)
    mass = out.boundary_mass() / max(out.norm_sq(), np.finfo(float).tiny)
    if mass > boundary_tol:
        raise GridTooSmallError(f"evolved state leaks to the boundary (mass {mass:.3e})")
    return out


def resample(wf: WaveFunction, grid: Grid) -> WaveFunction:
    """Band-limited (zero-padded Fourier) interpolation onto another grid.

    The spectrum on the target lattice is the discrete-time Fourier
    transform of the source samples, evaluated by a chirp-z transform and
    set to zero beyond the source Nyquist momentum.
    """
    if wf.space is not Space.POSITION:
        raise ValueError("resample expects a position-space state")
    src = wf.grid
    if grid == src:
        return wf
    p = grid.p
    band = np.flatnonzero(np.abs(p) < src.p_max * (1 - 1e-12))
    spec = np.zeros(grid.n, dtype=np.complex128)
    if band.size:
        p0 = p[band[0]]
        a = np.exp(1j * src.dx * p0)
        w = np.exp(-1j * src.dx * grid.dp)
        vals = czt(wf.amplitudes, band.size, w, a)
        pb = p[band]
        spec[band] = vals * (src.dx / math.sqrt(2 * math.pi)) * np.exp(-1j * src.x_min * pb)
    return to_position(WaveFunction(grid, spec, Space.MOMENTUM))


class ProductEvaluator:
    """Evaluate the Fisher product of an evolving state at arbitrary times.

    Each call works from the initial state alone, so calls are independent
    and can run concurrently.
    """

    def __init__(self, wf0: WaveFunction, *, policy=RegridPolicy.AUTO_EXPAND,
                 base_grid: Grid | None = None, estimator=Estimator.DENSITY,
                 source: Builder | None = None, coverage: float = COVERAGE,
                 max_n: int | None = None, t_max: float | None = None,
                 fft_workers: int | None = None, boundary_tol: float = BOUNDARY_TOL):
        self.boundary_tol = boundary_tol
        self.estimator = Estimator.parse(estimator)
        self.policy = RegridPolicy(policy)
        self.coverage = coverage
        self.max_n = default_max_n() if max_n is None else max_n
        self.fft_workers = fft_workers
        self._wf0 = wf0
        self._source = source
        self._spread = measure_spread(wf0)
        amp = self.estimator is Estimator.AMPLITUDE
        self._grid_kw = dict(coverage=coverage, max_n=self.max_n,
                             oversample=AMPLITUDE_OVERSAMPLE if amp else DENSITY_OVERSAMPLE,
                             zero_pad=AMPLITUDE_ZERO_PAD if amp else 1.0)
        self._fixed = None
        if self.policy is RegridPolicy.FIXED:
            if base_grid is None:
                base_grid = grid_for_spread(self._spread, t_max or 0.0, **self._grid_kw)
            self._fixed = self._initial_on(base_grid)

    def _initial_on(self, grid: Grid) -> WaveFunction:
        if grid == self._wf0.grid:
            return normalize(self._wf0)
        if self._source is not None:
            return self._source(grid)
        return normalize(resample(self._wf0, grid))

    def grid_at(self, t: float) -> Grid:
        if self._fixed is not None:
            return self._fixed.grid
        return grid_for_spread(self._spread, t, **self._grid_kw)

    def state_at(self, t: float) -> WaveFunction:
        start = self._fixed if self._fixed is not None else self._initial_on(self.grid_at(t))
        return evolve_free(start, t, boundary_tol=self.boundary_tol, workers=self.fft_workers)

    def __call__(self, t: float) -> FisherResult:
        return fisher_product(self.state_at(t), self.estimator, workers=self.fft_workers)

    def product(self, t: float) -> float:
        return self(t).product


def evolve_series(wf0: WaveFunction, plan: EvolutionPlan, estimator=Estimator.DENSITY, *,
                  source: Builder | None = None, coverage: float = COVERAGE,
                  max_n: int | None = None, workers: int | None = None,
                  ip_rtol: float = IP_RTOL, meta: dict | None = None) -> CurveSeries:
    """Fisher products of ``wf0`` evolved to every time in ``plan``.

    Parameters
    ----------
    source : callable, optional
        Builds the initial state on a new grid (analytic re-evaluation).
        Without it, regridding uses :func:`resample`.
    workers : int, optional
        Thread count for independent time points; defaults to the CPU count.

    Raises
    ------
    InvariantError
        If the momentum Fisher information drifts by more than ``ip_rtol``
        (it must not change under free evolution).
    GridResourceError
        If a working grid would exceed ``max_n`` samples.
    """
    evaluator = ProductEvaluator(
        wf0, policy=plan.regrid_policy, base_grid=plan.base_grid, estimator=estimator,
        source=source, coverage=coverage, max_n=max_n, t_max=plan.t_values[-1])
    return run_series(evaluator, plan.t_values, workers=workers, ip_rtol=ip_rtol, meta=meta)


def run_series(evaluator: ProductEvaluator, t_values: Sequence[float], *,
               workers: int | None = None, ip_rtol: float = IP_RTOL,
               meta: dict | None = None) -> CurveSeries:
    t_values = [float(t) for t in t_values]
    results = _map_ordered(evaluator, t_values, workers)
    ip = np.array([r.i_p for r in results])
    drift = float(np.max(np.abs(ip - ip[0])) / ip[0]) if ip[0] > 0 else 0.0
    if drift > ip_rtol:
        raise InvariantError(f"momentum Fisher information drifted by {drift:.3e}")
    info = {"estimator": evaluator.estimator.value, "regrid_policy": evaluator.policy.value,
            "ip_drift": drift, "grid_final": evaluator.grid_at(t_values[-1]).summary()}
    info.update(meta or {})
    entries = tuple(SeriesEntry(t, r.i_x, r.i_p, r.product) for t, r in zip(t_values, results))
    return CurveSeries(entries, info)


def _map_ordered(fn, items: Sequence, workers: int | None):
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
