"""Uniform 1-D grids, sampled wave functions and the unitary Fourier pair.

Conventions (hbar = m = 1)::

    psi~(p) = (2 pi)^(-1/2) * integral exp(-i x p) psi(x) dx

On a grid with ``x_m = x_min + m dx`` the integral becomes a Riemann sum,
evaluated with one FFT plus a phase for ``x_min != 0``.  The momentum
lattice is centred on zero, ``p_j = 2 pi j / (n dx)`` with ``j`` running
from ``-(n // 2)`` upwards, stored in ascending order.  With this pairing
``dx * dp * n == 2 pi`` and the discrete transform is exactly unitary.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.fft as sfft

from .errors import GridTooSmallError

NORM_TOL = 1e-12
BOUNDARY_TOL = 1e-10
MOMENT_NORM_TOL = 1e-9
MIN_POINTS = 8

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class Space(str, enum.Enum):
    POSITION = "position"
    MOMENTUM = "momentum"


@dataclass(frozen=True)
class Grid:
    """Uniform position lattice and its induced momentum lattice.

    Attributes
    ----------
    x_min : float
        First sample position.
    dx : float
        Sample spacing, strictly positive.
    n : int
        Number of samples, at least 8.  Any composite size is accepted.
    """

    x_min: float
    dx: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.x_min) and math.isfinite(self.dx)):
            raise ValueError("grid parameters must be finite")
        if self.dx <= 0:
            raise ValueError(f"grid spacing must be positive, got {self.dx}")
        if int(self.n) != self.n or self.n < MIN_POINTS:
            raise ValueError(f"grid needs at least {MIN_POINTS} points, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def extent(self) -> float:
        return self.n * self.dx

    @property
    def x_max(self) -> float:
        """Right end of the periodic box (not itself a sample)."""
        return self.x_min + self.extent

    @property
    def dp(self) -> float:
        return 2.0 * math.pi / (self.n * self.dx)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @property
    def p(self) -> np.ndarray:
        return self.dp * (np.arange(self.n) - self.n // 2)

    @property
    def p_max(self) -> float:
        """Nyquist momentum ``pi / dx``."""
        return math.pi / self.dx

    def shifted(self, a: float) -> "Grid":
        return Grid(self.x_min + a, self.dx, self.n)

    def summary(self) -> dict:
        return {"x_min": self.x_min, "dx": self.dx, "n": self.n}


def make_grid(x_min: float, x_max: float, n: int) -> Grid:
    """Grid of ``n`` samples on the half-open box ``[x_min, x_max)``."""
    if not x_max > x_min:
        raise ValueError(f"empty extent: x_max={x_max} <= x_min={x_min}")
    return Grid(float(x_min), (x_max - x_min) / n, n)


@dataclass(frozen=True, eq=False)
class WaveFunction:
    """Complex amplitudes on a grid, in position or momentum space.

    The amplitude array is made read-only on construction; every operation
    returns a new instance.
    """

    grid: Grid
    amplitudes: np.ndarray
    space: Space = Space.POSITION

    def __post_init__(self):
        amp = np.array(self.amplitudes, dtype=np.complex128)
        if amp.shape != (self.grid.n,):
            raise ValueError(
                f"expected {self.grid.n} amplitudes, got shape {amp.shape}")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "space", Space(self.space))

    @property
    def coords(self) -> np.ndarray:
        return self.grid.x if self.space is Space.POSITION else self.grid.p

    @property
    def spacing(self) -> float:
        return self.grid.dx if self.space is Space.POSITION else self.grid.dp

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm_sq(self) -> float:
        return float(np.sum(self.density) * self.spacing)

    def boundary_mass(self) -> float:
        """Probability mass in the outer 5% of samples (2.5% per side)."""
        edge = max(1, math.ceil(0.025 * self.grid.n))
        rho = self.density
        return float((rho[:edge].sum() + rho[-edge:].sum()) * self.spacing)

    def replace(self, amplitudes, space=None) -> "WaveFunction":
        return WaveFunction(self.grid, amplitudes, self.space if space is None else space)


def sample(f: Callable[[np.ndarray], np.ndarray], grid: Grid) -> WaveFunction:
    """Evaluate ``f`` on the grid positions.  The result is not normalized."""
    values = np.asarray(f(grid.x), dtype=np.complex128)
    if values.shape == ():
        values = np.full(grid.n, values)
    if not np.all(np.isfinite(values)):
        bad = grid.x[~np.isfinite(values)][0]
        raise ValueError(f"non-finite sample at x={bad}")
    return WaveFunction(grid, values, Space.POSITION)


def normalize(wf: WaveFunction, *, boundary_tol: float = BOUNDARY_TOL) -> WaveFunction:
    """Scale ``wf`` to unit discrete norm.

    Raises
    ------
    ValueError
        If the norm is zero.
    GridTooSmallError
        If more than ``boundary_tol`` of the normalized mass sits in the
        outer 5% of the samples.
    """
    nrm2 = wf.norm_sq()
    if not nrm2 > 0 or not math.isfinite(nrm2):
        raise ValueError("cannot normalize a zero (or non-finite) wave function")
    out = wf.replace(wf.amplitudes / math.sqrt(nrm2))
    mass = out.boundary_mass()
    if mass > boundary_tol:
        raise GridTooSmallError(
            f"boundary mass {mass:.3e} exceeds {boundary_tol:.1e}; enlarge the grid")
    return out


def to_momentum(wf: WaveFunction, *, workers: int | None = None) -> WaveFunction:
    """Unitary transform to the momentum lattice of ``wf.grid``."""
    if wf.space is not Space.POSITION:
        raise ValueError("to_momentum expects a position-space wave function")
    g = wf.grid
    p = g.p
    spec = sfft.fftshift(sfft.fft(wf.amplitudes, workers=workers))
    spec *= (g.dx / _SQRT_2PI) * np.exp(-1j * g.x_min * p)
    return WaveFunction(g, spec, Space.MOMENTUM)


def to_position(wf: WaveFunction, *, workers: int | None = None) -> WaveFunction:
    """Inverse of :func:`to_momentum`."""
    if wf.space is not Space.MOMENTUM:
        raise ValueError("to_position expects a momentum-space wave function")
    g = wf.grid
    shifted = wf.amplitudes * np.exp(1j * g.x_min * g.p)
    vals = sfft.ifft(sfft.ifftshift(shifted), workers=workers)
    vals *= g.n * g.dp / _SQRT_2PI
    return WaveFunction(g, vals, Space.POSITION)


def moment(wf: WaveFunction, order: int) -> float:
    """``sum coord**order * |amp|**2 * spacing`` in the wave function's own space."""
    if order not in (0, 1, 2, 3, 4):
        raise ValueError(f"moment order must be in 0..4, got {order}")
    nrm2 = wf.norm_sq()
    if abs(nrm2 - 1.0) > MOMENT_NORM_TOL:
        raise ValueError(f"moment needs a normalized state (norm^2 = {nrm2:.12g})")
    return float(np.sum(wf.coords ** order * wf.density) * wf.spacing)


def spectral_derivative(values: np.ndarray, dx: float, order: int = 1) -> np.ndarray:
    """Derivative of periodic samples by multiplication with ``(i k)**order``.

    The Nyquist bin of an even-length array is zeroed for odd orders.
    """
    values = np.asarray(values)
    n = values.size
    k = 2.0 * np.pi * sfft.fftfreq(n, d=dx)
    factor = (1j * k) ** order
    if n % 2 == 0 and order % 2 == 1:
        factor[n // 2] = 0.0
    if np.isrealobj(values):
        kr = 2.0 * np.pi * sfft.rfftfreq(n, d=dx)
        fr = (1j * kr) ** order
        if n % 2 == 0 and order % 2 == 1:
            fr[-1] = 0.0
        return sfft.irfft(sfft.rfft(values) * fr, n=n)
    return sfft.ifft(sfft.fft(values) * factor)
