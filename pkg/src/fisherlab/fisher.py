"""Translational Fisher information of gridded densities and wave functions.

Two estimators are provided and are kept deliberately independent:

* density form, ``sum (rho')**2 / rho * dx`` with ``rho'`` spectral (or
  4th-order finite differences on request);
* amplitude form, ``4 * sum (d|psi|)**2 * dx`` with 4th-order finite
  differences on ``|psi|``.  Stencils never straddle a node of ``|psi|``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Space, WaveFunction, spectral_derivative, to_momentum

DENSITY_FLOOR = 1e-12
REFINE_TOL = 1e-10
REFINE_MAX_LEVELS = 6
REFINE_MAX_POINTS = 2 ** 23
REFINE_NEGATIVE_TOL = 1e-9
DENSITY_NORM_TOL = 1e-6
AMPLITUDE_NORM_TOL = 1e-9
NEGATIVE_TOL = 1e-14


class Estimator(str, enum.Enum):
    DENSITY = "density_form"
    AMPLITUDE = "amplitude_form"

    @classmethod
    def parse(cls, value) -> "Estimator":
        if isinstance(value, cls):
            return value
        aliases = {"density": cls.DENSITY, "amplitude": cls.AMPLITUDE}
        try:
            return aliases.get(value) or cls(value)
        except ValueError:
            raise ValueError(f"unknown estimator {value!r}") from None


@dataclass(frozen=True)
class Diagnostics:
    node_count: int = 0
    regularized_mass: float = 0.0

    def __add__(self, other: "Diagnostics") -> "Diagnostics":
        return Diagnostics(self.node_count + other.node_count,
                           self.regularized_mass + other.regularized_mass)


@dataclass(frozen=True)
class FisherResult:
    i_x: float
    i_p: float
    estimator: Estimator
    diagnostics: Diagnostics = field(default_factory=Diagnostics)

    @property
    def product(self) -> float:
        return self.i_x * self.i_p


def _fd4(values: np.ndarray, h: float) -> np.ndarray:
    """4th-order central difference with zero padding beyond the ends."""
    v = np.pad(values, 2)
    return (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * h)


def _interior_runs(keep: np.ndarray) -> list[np.ndarray]:
    """Masked index runs bracketed on both sides by kept samples."""
    idx = np.flatnonzero(keep)
    if idx.size < 2:
        return []
    gaps = np.flatnonzero(np.diff(idx) > 1)
    return [np.arange(idx[g] + 1, idx[g + 1]) for g in gaps]


def _density_form(density, spacing: float, method: str, floor: float):
    rho = np.asarray(density, dtype=float)
    if rho.ndim != 1:
        raise ValueError("density must be one-dimensional")
    if np.any(rho < -NEGATIVE_TOL):
        raise ValueError(f"density has negative values (min {rho.min():.3e})")
    rho = np.clip(rho, 0.0, None)
    total = rho.sum() * spacing
    if abs(total - 1.0) > DENSITY_NORM_TOL:
        raise ValueError(f"density integrates to {total:.9g}, expected 1")

    if method == "spectral":
        drho = spectral_derivative(rho, spacing)
    elif method == "fd4":
        drho = _fd4(rho, spacing)
    else:
        raise ValueError(f"unknown derivative method {method!r}")

    keep = rho >= floor * rho.max()
    integrand = np.zeros_like(rho)
    integrand[keep] = drho[keep] ** 2 / rho[keep]
    runs = _interior_runs(keep)
    if runs:
        # at a double zero rho ~ a u**2 the integrand tends to 4a = 2 rho''
        if method == "spectral":
            d2rho = spectral_derivative(rho, spacing, order=2)
        else:
            d2rho = _fd4(_fd4(rho, spacing), spacing)
        inner = np.concatenate(runs)
        integrand[inner] = 2.0 * np.clip(d2rho[inner], 0.0, None)
    value = float(integrand.sum() * spacing)
    dropped = float(rho[~keep].sum() * spacing)
    return value, Diagnostics(len(runs), dropped)


def _upsample(values: np.ndarray, factor: int) -> np.ndarray:
    """Band-limited interpolation of a real periodic sequence by ``factor``."""
    n = values.size
    spec = np.fft.rfft(values)
    if n % 2 == 0:
        spec[-1] *= 0.5  # split the Nyquist bin between +/- frequencies
    out = np.zeros(n * factor // 2 + 1, dtype=complex)
    out[:spec.size] = spec
    return np.fft.irfft(out, n * factor) * factor


def _density_refined(density, spacing, floor, tol=REFINE_TOL,
                     max_levels=REFINE_MAX_LEVELS):
    """Spectral density form, refined until successive halvings of dx agree.

    Complex zeros of psi close to the real axis make ``rho'**2 / rho`` dip
    over a width set by their distance to the axis, and the lattice sum
    converges like ``exp(-2 pi distance / dx)``.  ``rho`` itself is
    band-limited, so interpolating it spectrally is exact.
    """
    rho = np.clip(np.asarray(density, dtype=float), 0.0, None)
    value, diag = _density_form(rho, spacing, "spectral", floor)
    for level in range(1, max_levels + 1):
        factor = 2 ** level
        if rho.size * factor > REFINE_MAX_POINTS:
            break
        fine = _upsample(rho, factor)
        if -fine.min() > REFINE_NEGATIVE_TOL * fine.max():
            break  # rho is not band-limited on its lattice; interpolation is not exact
        fine = np.clip(fine, 0.0, None)
        fine_value, fine_diag = _density_form(fine, spacing / factor, "spectral", floor)
        done = abs(fine_value - value) <= tol * abs(fine_value)
        value, diag = fine_value, fine_diag
        if done:
            break
    return value, diag


def fisher_density(density, spacing: float, *, method: str = "spectral",
                   floor: float = DENSITY_FLOOR, refine: bool = False) -> float:
    """Fisher information ``integral rho'**2 / rho`` of a sampled density.

    Parameters
    ----------
    density : array_like
        Non-negative samples on a uniform lattice, integrating to one.
    spacing : float
        Lattice spacing (``dx`` or ``dp``).
    method : {"spectral", "fd4"}
        How ``rho'`` is computed.
    floor : float
        Samples below ``floor * max(rho)`` are excluded from the ratio.
        Excluded runs strictly inside the support (isolated zeros) take the
        limiting value ``2 rho''``; tail runs contribute zero.
    refine : bool
        Spectral method only: re-evaluate on successively halved spacings
        (exact band-limited interpolation of ``rho``) until two estimates
        agree to 1e-10.
    """
    if refine and method == "spectral":
        return _density_refined(density, spacing, floor)[0]
    return _density_form(density, spacing, method, floor)[0]


def density_diagnostics(density, spacing: float, *, method: str = "spectral",
                        floor: float = DENSITY_FLOOR) -> Diagnostics:
    return _density_form(density, spacing, method, floor)[1]


def _kink_centres(amp: np.ndarray) -> np.ndarray:
    """Indices of local minima of ``|psi|`` that look like nodes (kinks).

    Near a node ``|psi| ~ b |x - x0|``, so the minimum sample is at most half
    the mean of its neighbours; a smooth minimum sits close to that mean.
    """
    a = amp
    mid = a[1:-1]
    nb = 0.5 * (a[:-2] + a[2:])
    is_min = (mid <= a[:-2]) & (mid <= a[2:])
    deep = mid <= 0.75 * nb
    significant = nb > 1e-8 * a.max()
    return np.flatnonzero(is_min & deep & significant) + 1


def _nearest_blocked(blocked: np.ndarray):
    n = blocked.size
    pos = np.arange(n)
    marks = np.where(blocked, pos, -10**9)
    left_incl = np.maximum.accumulate(marks)
    left = np.concatenate([[-10**9], left_incl[:-1]])
    marks = np.where(blocked, pos, 10**9)
    right_incl = np.minimum.accumulate(marks[::-1])[::-1]
    right = np.concatenate([right_incl[1:], [10**9]])
    return left, right


def _node_aware_derivative(amp: np.ndarray, h: float, blocked: np.ndarray) -> np.ndarray:
    """4th-order derivative whose stencil never reaches a blocked sample."""
    n = amp.size
    v = np.pad(amp, 4)
    j = np.arange(n) + 4

    def at(off):
        return v[j + off]

    central = (at(-2) - 8 * at(-1) + 8 * at(1) - at(2)) / (12 * h)
    if not blocked.any():
        return central
    forward = (-25 * at(0) + 48 * at(1) - 36 * at(2) + 16 * at(3) - 3 * at(4)) / (12 * h)
    backward = (25 * at(0) - 48 * at(-1) + 36 * at(-2) - 16 * at(-3) + 3 * at(-4)) / (12 * h)
    pos = np.arange(n)
    left, right = _nearest_blocked(blocked)
    use_c = (pos - 2 > left) & (pos + 2 < right)
    use_f = ~use_c & (pos + 4 < right)
    use_b = ~use_c & ~use_f & (pos - 4 > left)
    return np.where(use_c, central, np.where(use_f, forward, np.where(use_b, backward, central)))


def _fill_blocked(values: np.ndarray, blocked: np.ndarray) -> None:
    """Cubic fill of blocked runs from two clean samples on each side."""
    idx = np.flatnonzero(blocked)
    runs = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
    n = values.size
    for run in runs:
        lo, hi = run[0] - 1, run[-1] + 1
        support = [i for i in (lo - 1, lo, hi, hi + 1) if 0 <= i < n and not blocked[i]]
        if len(support) == 4:
            coef = np.polyfit(np.array(support) - lo, values[support], 3)
            values[run] = np.polyval(coef, run - lo)
        elif support:
            values[run] = values[support].mean()
    np.clip(values, 0.0, None, out=values)


def fisher_amplitude(wf: WaveFunction) -> float:
    """Fisher information ``4 integral (d|psi|)**2`` by finite differences."""
    return _amplitude_form(wf)[0]


def _amplitude_form(wf: WaveFunction):
    nrm2 = wf.norm_sq()
    if abs(nrm2 - 1.0) > AMPLITUDE_NORM_TOL:
        raise ValueError(f"fisher_amplitude needs a normalized state (norm^2 = {nrm2:.12g})")
    amp = np.abs(wf.amplitudes)
    h = wf.spacing
    kinks = _kink_centres(amp)
    blocked = np.zeros(amp.size, dtype=bool)
    blocked[kinks] = True
    d2 = _node_aware_derivative(amp, h, blocked) ** 2
    if kinks.size:
        # |psi|' flips sign across a node but its square is smooth
        _fill_blocked(d2, blocked)
    nodes = int(np.count_nonzero(np.diff(np.concatenate([[0], kinks])) != 1)) if kinks.size else 0
    return float(4.0 * d2.sum() * h), Diagnostics(nodes, 0.0)


def fisher_of(wf: WaveFunction, estimator=Estimator.DENSITY, *,
              method: str = "spectral", floor: float = DENSITY_FLOOR,
              refine: bool = True):
    """Fisher information of ``|wf|**2`` in the wave function's own space."""
    estimator = Estimator.parse(estimator)
    if estimator is Estimator.DENSITY:
        if refine and method == "spectral":
            return _density_refined(wf.density, wf.spacing, floor)
        return _density_form(wf.density, wf.spacing, method, floor)
    return _amplitude_form(wf)


def fisher_product(wf: WaveFunction, estimator=Estimator.DENSITY, *,
                   method: str = "spectral", floor: float = DENSITY_FLOOR,
                   refine: bool = True, workers: int | None = None) -> FisherResult:
    """Position and momentum Fisher information of one normalized state.

    The momentum density always comes from :func:`to_momentum` of ``wf``.
    ``refine`` applies to the spectral density form (see
    :func:`fisher_density`).
    """
    if wf.space is not Space.POSITION:
        raise ValueError("fisher_product expects a position-space wave function")
    estimator = Estimator.parse(estimator)
    i_x, dx_diag = fisher_of(wf, estimator, method=method, floor=floor, refine=refine)
    i_p, dp_diag = fisher_of(to_momentum(wf, workers=workers), estimator,
                             method=method, floor=floor, refine=refine)
    if not (math.isfinite(i_x) and math.isfinite(i_p)):
        raise ValueError("non-finite Fisher information")
    return FisherResult(i_x, i_p, estimator, dx_diag + dp_diag)
