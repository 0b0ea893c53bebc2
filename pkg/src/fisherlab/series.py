"""Fisher-product time series: containers, crossing search, decay fits, I/O."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

CSV_HEADER = ("t", "ix", "ip", "product", "analytic_product", "rel_err")


def fmt(value: float | None) -> str:
    """17 significant digits, or empty for a missing value."""
    return "" if value is None else format(value, ".17g")


@dataclass(frozen=True)
class SeriesEntry:
    t: float
    i_x: float
    i_p: float
    product: float
    analytic_product: float | None = None

    @property
    def rel_err(self) -> float | None:
        if self.analytic_product is None:
            return None
        return abs(self.product - self.analytic_product) / self.analytic_product


@dataclass(frozen=True)
class CurveSeries:
    entries: tuple[SeriesEntry, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        ts = [e.t for e in entries]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("series times must be strictly ascending")
        if any(e.product < 0 for e in entries):
            raise ValueError("Fisher products must be non-negative")

    def __len__(self):
        return len(self.entries)

    @property
    def t(self) -> np.ndarray:
        return np.array([e.t for e in self.entries])

    @property
    def product(self) -> np.ndarray:
        return np.array([e.product for e in self.entries])

    @property
    def i_x(self) -> np.ndarray:
        return np.array([e.i_x for e in self.entries])

    @property
    def i_p(self) -> np.ndarray:
        return np.array([e.i_p for e in self.entries])

    def max_rel_err(self) -> float | None:
        errs = [e.rel_err for e in self.entries if e.rel_err is not None]
        return max(errs) if errs else None

    def with_analytic(self, fn: Callable[[float], float | None]) -> "CurveSeries":
        return CurveSeries(tuple(replace(e, analytic_product=fn(e.t)) for e in self.entries),
                           self.meta)


@dataclass(frozen=True)
class DecayFit:
    """``product ~ amplitude * t**exponent`` over ``window``."""

    amplitude: float
    exponent: float
    window: tuple[float, float]
    residual: float
    samples: int = 0

    def as_dict(self) -> dict:
        return {"amplitude": self.amplitude, "exponent": self.exponent,
                "window": list(self.window), "residual": self.residual,
                "samples": self.samples}


def fit_decay(series: CurveSeries, window: tuple[float, float]) -> DecayFit:
    """Least-squares line through ``(log t, log product)`` inside ``window``."""
    t_lo, t_hi = window
    t, prod = series.t, series.product
    sel = (t >= t_lo) & (t <= t_hi)
    if sel.sum() < 5:
        raise ValueError(f"need at least 5 samples in window, found {int(sel.sum())}")
    if np.any(t[sel] <= 0) or np.any(prod[sel] <= 0):
        raise ValueError("decay fit needs positive times and products in the window")
    lx, ly = np.log(t[sel]), np.log(prod[sel])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return DecayFit(float(math.exp(intercept)), float(slope),
                    (float(t[sel][0]), float(t[sel][-1])),
                    float(np.sqrt(np.mean(resid ** 2))), int(sel.sum()))


def crossing_time(series: CurveSeries, threshold: float = 4.0, *,
                  evaluate: Callable[[float], float] | None = None,
                  rtol: float = 1e-6) -> float | None:
    """First time the product drops below ``threshold``.

    The sample bracket ``[t_(i-1), t_i]`` around the first sub-threshold
    sample is refined by bisection on ``evaluate(t)`` (the product at an
    arbitrary time) down to ``rtol * t_max``; without an evaluator the
    bracket is interpolated linearly.  A series that starts below the
    threshold returns its first time; one that never crosses returns None.
    """
    if len(series) == 0:
        raise ValueError("empty series")
    t, prod = series.t, series.product
    below = np.flatnonzero(prod < threshold)
    if below.size == 0:
        return None
    i = int(below[0])
    if i == 0:
        return float(t[0])
    lo, hi = float(t[i - 1]), float(t[i])
    if evaluate is None:
        p_lo, p_hi = prod[i - 1], prod[i]
        return lo + (hi - lo) * (p_lo - threshold) / (p_lo - p_hi)
    tol = rtol * float(t[-1])
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if evaluate(mid) < threshold:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def series_to_csv(series: CurveSeries) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for e in series.entries:
        writer.writerow([fmt(e.t), fmt(e.i_x), fmt(e.i_p), fmt(e.product),
                         fmt(e.analytic_product), fmt(e.rel_err)])
    return buf.getvalue()


def write_csv(series: CurveSeries, path) -> None:
    Path(path).write_text(series_to_csv(series), encoding="utf-8", newline="")


def read_csv(path) -> CurveSeries:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        entries = []
        for row in reader:
            t, ix, ip, prod, ap, _ = row
            entries.append(SeriesEntry(float(t), float(ix), float(ip), float(prod),
                                       float(ap) if ap else None))
    return CurveSeries(tuple(entries))


def series_to_json(series: CurveSeries, fit: DecayFit | None = None) -> str:
    doc = {
        "meta": series.meta,
        "entries": [
            {"t": e.t, "ix": e.i_x, "ip": e.i_p, "product": e.product,
             "analytic_product": e.analytic_product, "rel_err": e.rel_err}
            for e in series.entries
        ],
    }
    if fit is not None:
        doc["fit"] = fit.as_dict()
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_json(series: CurveSeries, path, fit: DecayFit | None = None) -> None:
    Path(path).write_text(series_to_json(series, fit), encoding="utf-8", newline="")


def read_json(path) -> tuple[CurveSeries, DecayFit | None]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    entries = tuple(SeriesEntry(e["t"], e["ix"], e["ip"], e["product"], e["analytic_product"])
                    for e in doc["entries"])
    fit = None
    if "fit" in doc:
        f = doc["fit"]
        fit = DecayFit(f["amplitude"], f["exponent"], tuple(f["window"]), f["residual"],
                       f.get("samples", 0))
    return CurveSeries(entries, doc.get("meta", {})), fit


def linear_times(t_max: float, steps: int) -> np.ndarray:
    return np.linspace(0.0, t_max, steps)


def log_times(t_min: float, t_max: float, steps: int) -> np.ndarray:
    """``t = 0`` followed by ``steps`` log-spaced samples ending at ``t_max``."""
    if not 0 < t_min < t_max:
        raise ValueError("need 0 < t_min < t_max for log spacing")
    return np.concatenate([[0.0], np.geomspace(t_min, t_max, steps)])


def tail_window(times: Sequence[float], fraction: float) -> tuple[float, float]:
    """Window covering the last ``fraction`` of the positive sample times."""
    if not 0 < fraction <= 0.9:
        raise ValueError("fit tail fraction must lie in (0, 0.9]")
    pos = [t for t in times if t > 0]
    count = max(1, int(round(fraction * len(pos))))
    tail = pos[-count:]
    return tail[0], tail[-1]
