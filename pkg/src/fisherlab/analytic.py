"""Closed forms for the spreading Hermite-Gaussian free-particle family.

``psi_k(x, t) = N_k d^k/dx^k psi_0(x, t)`` where ``psi_0`` is the free
Gaussian packet of initial width ``delta``.  With the complex width
``c(t)**2 = 1 / (2 (delta**2 + i t))``::

    psi_0(x, t) = pi**(-1/4) sqrt(2 delta) c(t) exp(-c(t)**2 x**2)
    psi_k(x, t) = N_k (-1)**k c(t)**k H_k(c(t) x) psi_0(x, t)

``N_k`` is taken real and positive.  These functions are the exactness
oracle for the numerical pipeline.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

MAX_K = 64
_PI_QUARTER = math.pi ** -0.25


@dataclass(frozen=True)
class AnalyticState:
    """Member ``k`` of the family, initial width ``delta``, at time ``t``."""

    k: int
    delta: float
    t: float = 0.0

    def __post_init__(self):
        if int(self.k) != self.k or not 0 <= self.k <= MAX_K:
            raise ValueError(f"k must be an integer in [0, {MAX_K}], got {self.k}")
        if not self.delta > 0 or not math.isfinite(self.delta):
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not math.isfinite(self.t):
            raise ValueError("t must be finite")
        object.__setattr__(self, "k", int(self.k))

    def at(self, t: float) -> "AnalyticState":
        return AnalyticState(self.k, self.delta, t)


@dataclass(frozen=True)
class ComplexWidth:
    c_squared: complex

    @property
    def c(self) -> complex:
        """Principal square root of ``c_squared``."""
        return complex(np.sqrt(self.c_squared))


def c_of_t(delta: float, t: float) -> ComplexWidth:
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    return ComplexWidth(1.0 / (2.0 * complex(delta * delta, t)))


def hermite(k: int, y):
    """Physicists' Hermite polynomial ``H_k(y)`` by three-term recurrence."""
    if int(k) != k or not 0 <= k <= MAX_K:
        raise ValueError(f"Hermite degree must be in [0, {MAX_K}], got {k}")
    y = np.asarray(y)
    h_prev = np.ones_like(y)
    if k == 0:
        return h_prev if h_prev.ndim else h_prev[()]
    h = 2 * y
    for j in range(1, k):
        h_prev, h = h, 2 * y * h - 2 * j * h_prev
    return h if h.ndim else h[()]


def gamma_half(k: int) -> float:
    """``Gamma(k + 1/2) = sqrt(pi) (2k - 1)!! / 2**k`` for integer ``k >= 0``."""
    if int(k) != k or k < 0:
        raise ValueError(f"k must be a non-negative integer, got {k}")
    out = math.sqrt(math.pi)
    for j in range(1, int(k) + 1):
        out *= (2 * j - 1) / 2
    return out


def norm_const_sq(k: int, delta: float) -> float:
    """``|N_k|**2 = sqrt(pi) delta**(2k) / Gamma(k + 1/2)``; independent of t."""
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if int(k) != k or not 0 <= k <= MAX_K:
        raise ValueError(f"k must be in [0, {MAX_K}], got {k}")
    return math.sqrt(math.pi) * delta ** (2 * k) / gamma_half(k)


def psi_k(state: AnalyticState, x):
    """Complex amplitude of the family member at positions ``x``."""
    k, delta = state.k, state.delta
    width = c_of_t(delta, state.t)
    c2, c = width.c_squared, width.c
    x = np.asarray(x, dtype=float)
    psi0 = _PI_QUARTER * math.sqrt(2.0 * delta) * c * np.exp(-c2 * x * x)
    if k == 0:
        return psi0
    nk = math.sqrt(norm_const_sq(k, delta))
    return nk * (-c) ** k * hermite(k, c * x) * psi0


def density_x(state: AnalyticState, x):
    return np.abs(psi_k(state, x)) ** 2


def density_p(state: AnalyticState, p):
    """Momentum density ``delta**(2k+1) / Gamma(k+1/2) p**(2k) exp(-delta**2 p**2)``."""
    k, delta = state.k, state.delta
    p = np.asarray(p, dtype=float)
    return delta ** (2 * k + 1) / gamma_half(k) * p ** (2 * k) * np.exp(-(delta * p) ** 2)


def psi_k_momentum(state: AnalyticState, p):
    """Momentum amplitude ``N_k (i p)**k psi~_0(p, t)`` with free phase."""
    k, delta, t = state.k, state.delta, state.t
    p = np.asarray(p, dtype=float)
    base = math.sqrt(delta) * _PI_QUARTER * np.exp(-0.5 * (delta * p) ** 2 - 0.5j * p * p * t)
    return math.sqrt(norm_const_sq(k, delta)) * (1j * p) ** k * base


def product_closed(state: AnalyticState) -> float | None:
    """Closed-form Fisher product for ``k`` in {0, 1}; ``None`` otherwise."""
    d4 = state.delta ** 4
    if state.k == 0:
        return 4.0 * d4 / (d4 + state.t ** 2)
    if state.k == 1:
        return 36.0 * d4 / (d4 + state.t ** 2)
    return None


def fisher_p_exact(k: int, delta: float) -> float:
    """Momentum Fisher information of the family (time independent)."""
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if int(k) != k or k < 0:
        raise ValueError(f"k must be a non-negative integer, got {k}")
    if k == 0:
        return 2.0 * delta ** 2
    return 4.0 * delta ** 2 * (k - 0.25) / (k - 0.5)


def momentum_variance(k: int, delta: float) -> float:
    """``<p**2> = (k + 1/2) / delta**2``."""
    return (k + 0.5) / delta ** 2


def position_variance(state: AnalyticState) -> float:
    """``<x**2>`` at time t; ``<x>`` and the x-p covariance vanish at t = 0."""
    k, delta = state.k, state.delta
    x2_0 = 0.5 * delta ** 2 if k == 0 else delta ** 2 * (k - 0.25) / (k - 0.5)
    return x2_0 + momentum_variance(k, delta) * state.t ** 2


def fisher_x_quadrature(state: AnalyticState, *, epsabs: float = 1e-13,
                        epsrel: float = 1e-11) -> float:
    """Position Fisher information by adaptive quadrature of the closed form.

    Uses ``d psi_k / dx = (N_k / N_{k+1}) psi_{k+1}`` so that the score needs
    no numerical differentiation.
    """
    k, delta = state.k, state.delta
    ratio = math.sqrt(norm_const_sq(k, delta) / norm_const_sq(k + 1, delta))
    nxt = AnalyticState(k + 1, delta, state.t)

    def integrand(x):
        a = psi_k(state, x)
        rho = abs(a) ** 2
        if rho == 0.0:
            return 0.0
        drho = 2.0 * ratio * (np.conj(a) * psi_k(nxt, x)).real
        return drho * drho / rho

    half = 16.0 * math.sqrt(position_variance(state))
    # split at the origin (node for odd k) and at a few widths for adaptivity
    sigma_t = math.sqrt(delta ** 4 + state.t ** 2) / delta
    cuts = sorted({0.0, *[s * sigma_t for s in (0.5, 1.0, 2.0, 4.0)]} | {half})
    cuts = [c for c in cuts if c <= half]
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        val, _ = integrate.quad(integrand, a, b, limit=400, epsabs=epsabs, epsrel=epsrel)
        total += val
    return 2.0 * total  # |psi_k|**2 is even in x
