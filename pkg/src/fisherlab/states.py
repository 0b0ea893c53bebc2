"""Initial-state descriptors for conjecture runs, and the state-file loader.

A state is written as a short expression::

    gaussian(1.0)
    hermite(3, 1.0)
    file(path/to/state.txt)
    0.6*gaussian(1) + (0.8j)*hermite(2, 1)

Superposition coefficients may be any Python numeric literal; complex ones
must be parenthesised.  Every descriptor builds a normalized position-space
wave function on a requested grid.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analytic import AnalyticState, position_variance, psi_k
from .errors import StateError
from .grid import Grid, WaveFunction, make_grid, normalize, to_momentum

SPACING_JITTER = 1e-9
SMOOTHNESS_TOL = 1e-6
# fraction of the file's Nyquist band treated as "above the cutoff"
SMOOTH_BAND = 2.0 / 3.0


@dataclass(frozen=True)
class Hermite:
    k: int
    delta: float

    def __post_init__(self):
        AnalyticState(self.k, self.delta)  # validates

    def describe(self) -> str:
        if self.k == 0:
            return f"gaussian({self.delta:g})"
        return f"hermite({self.k}, {self.delta:g})"

    def amplitudes(self, grid: Grid) -> np.ndarray:
        return psi_k(AnalyticState(self.k, self.delta), grid.x)

    def build(self, grid: Grid) -> WaveFunction:
        return normalize(WaveFunction(grid, self.amplitudes(grid)))

    def provisional_grid(self) -> Grid:
        st = AnalyticState(self.k, self.delta)
        half = 16.0 * math.sqrt(position_variance(st)) + 4.0 * self.delta
        p_hi = (math.sqrt(2 * self.k + 1) + 8.0) / self.delta
        dx = math.pi / (2.0 * p_hi)
        return make_grid(-half, half, max(64, math.ceil(2 * half / dx)))


def Gaussian(delta: float) -> Hermite:
    return Hermite(0, delta)


@dataclass(frozen=True)
class FileState:
    path: str

    def describe(self) -> str:
        return f"file({self.path})"

    def wave(self) -> WaveFunction:
        return load_state(self.path)

    def amplitudes(self, grid: Grid) -> np.ndarray:
        from .propagator import resample
        return resample(self.wave(), grid).amplitudes

    def build(self, grid: Grid) -> WaveFunction:
        return load_state(self.path, grid)

    def provisional_grid(self) -> Grid:
        return self.wave().grid


@dataclass(frozen=True)
class Superposition:
    terms: tuple[tuple[complex, object], ...]

    def __post_init__(self):
        if not self.terms:
            raise StateError("empty superposition")

    def describe(self) -> str:
        return " + ".join(f"({c:g})*{s.describe()}" for c, s in self.terms)

    def amplitudes(self, grid: Grid) -> np.ndarray:
        return sum(c * s.amplitudes(grid) for c, s in self.terms)

    def build(self, grid: Grid) -> WaveFunction:
        try:
            return normalize(WaveFunction(grid, self.amplitudes(grid)))
        except ValueError as exc:
            raise StateError(f"superposition is not normalizable: {exc}") from exc

    def provisional_grid(self) -> Grid:
        grids = [s.provisional_grid() for _, s in self.terms]
        lo = min(g.x_min for g in grids)
        hi = max(g.x_max for g in grids)
        dx = min(g.dx for g in grids)
        return make_grid(lo, hi, max(64, math.ceil((hi - lo) / dx)))


_ATOM = re.compile(r"^\s*(gaussian|hermite|file)\s*\((.*)\)\s*$", re.IGNORECASE)


def _split_top(text: str, sep: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def _parse_atom(text: str):
    m = _ATOM.match(text)
    if not m:
        raise StateError(f"cannot parse state {text.strip()!r}")
    kind, args = m.group(1).lower(), m.group(2).strip()
    try:
        if kind == "gaussian":
            return Gaussian(float(args))
        if kind == "hermite":
            k, delta = (a.strip() for a in args.split(","))
            return Hermite(int(k), float(delta))
    except ValueError as exc:
        raise StateError(f"bad arguments in {text.strip()!r}: {exc}") from exc
    return FileState(args)


def _parse_coefficient(text: str) -> complex:
    text = text.strip()
    if text.startswith("(") and text.endswith(")"):
        text = text[1:-1]
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise StateError(f"bad coefficient {text!r}") from None


def parse_state(text: str):
    """Parse a state expression into a descriptor."""
    terms = _split_top(text, "+")
    if len(terms) == 1 and len(_split_top(terms[0], "*")) == 1:
        return _parse_atom(terms[0])
    parsed = []
    for term in terms:
        pieces = _split_top(term, "*")
        if len(pieces) == 1:
            parsed.append((1.0 + 0j, _parse_atom(pieces[0])))
        elif len(pieces) == 2:
            parsed.append((_parse_coefficient(pieces[0]), _parse_atom(pieces[1])))
        else:
            raise StateError(f"cannot parse term {term.strip()!r}")
    return Superposition(tuple(parsed))


def read_state_file(path) -> WaveFunction:
    """Read a three-column ``x  Re(psi)  Im(psi)`` text file (not normalized)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise StateError(f"cannot read state file {path}: {exc}") from exc
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.replace(",", " ").split()
        if len(fields) != 3:
            raise StateError(f"{path}:{lineno}: expected 3 columns, got {len(fields)}")
        try:
            rows.append([float(f) for f in fields])
        except ValueError:
            raise StateError(f"{path}:{lineno}: non-numeric value") from None
    if not rows:
        raise StateError(f"state file {path} is empty")
    data = np.array(rows)
    x = data[:, 0]
    if x.size < 8:
        raise StateError(f"state file {path} has fewer than 8 samples")
    steps = np.diff(x)
    dx = (x[-1] - x[0]) / (x.size - 1)
    if dx <= 0 or np.max(np.abs(steps - dx)) > SPACING_JITTER * abs(dx):
        raise StateError(f"state file {path}: x column is not uniformly spaced")
    amp = data[:, 1] + 1j * data[:, 2]
    if not np.all(np.isfinite(amp)):
        raise StateError(f"state file {path}: non-finite amplitude")
    return WaveFunction(Grid(float(x[0]), float(dx), x.size), amp)


def check_smooth(wf: WaveFunction, tol: float = SMOOTHNESS_TOL) -> float:
    """Momentum mass in the top third of the sampling band; raise if above ``tol``."""
    wp = to_momentum(wf)
    rho = wp.density * wp.spacing
    high = rho[np.abs(wp.coords) > SMOOTH_BAND * wf.grid.p_max].sum() / rho.sum()
    if high > tol:
        raise StateError(f"state is not smooth: {high:.2e} of momentum mass near Nyquist")
    return float(high)


def load_state(path, grid: Grid | None = None) -> WaveFunction:
    """Load, validate and normalize a sampled state, optionally resampled onto ``grid``.

    Raises
    ------
    StateError
        Malformed rows, non-uniform x, zero norm, or content near the
        Nyquist momentum of the file's own sampling.
    """
    from .propagator import resample

    wf = read_state_file(path)
    if not wf.norm_sq() > 0:
        raise StateError(f"state file {path} has zero norm")
    check_smooth(wf)
    try:
        wf = normalize(wf)
        if grid is not None:
            wf = normalize(resample(wf, grid))
    except ValueError as exc:
        raise StateError(str(exc)) from exc
    return wf


def write_state_file(wf: WaveFunction, path) -> None:
    lines = [f"{x:.17g} {a.real:.17g} {a.imag:.17g}" for x, a in zip(wf.grid.x, wf.amplitudes)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
