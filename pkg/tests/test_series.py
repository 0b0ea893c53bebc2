import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fisherlab.series import (CSV_HEADER, CurveSeries, DecayFit, SeriesEntry, crossing_time,
                              fit_decay, linear_times, log_times, read_csv, read_json,
                              series_to_csv, series_to_json, tail_window, write_csv, write_json)


def series_from(fn, ts, analytic=None):
    return CurveSeries(tuple(SeriesEntry(float(t), fn(t), 1.0, fn(t),
                                         None if analytic is None else analytic(t))
                             for t in ts))


def gaussian_product(t):
    return 4.0 / (1.0 + t * t)


def first_product(t):
    return 36.0 / (1.0 + t * t)


def test_invariants():
    with pytest.raises(ValueError):
        CurveSeries((SeriesEntry(1, 1, 1, 1), SeriesEntry(1, 1, 1, 1)))
    with pytest.raises(ValueError):
        CurveSeries((SeriesEntry(0, 1, 1, -1),))
    s = series_from(gaussian_product, [0, 1], analytic=lambda t: 4.0 / (1 + t * t) * 1.001)
    assert s.max_rel_err() == pytest.approx(0.001 / 1.001, rel=1e-12)
    assert series_from(gaussian_product, [0, 1]).max_rel_err() is None


def test_fit_decay_on_exact_tail():
    fit = fit_decay(series_from(gaussian_product, np.geomspace(10, 100, 30)), (10, 100))
    assert fit.exponent == pytest.approx(-2.0, abs=5e-3)
    assert fit.amplitude == pytest.approx(4.0, rel=0.02)
    assert fit.residual >= 0 and fit.samples == 30
    assert 10 <= fit.window[0] < fit.window[1] <= 100


def test_fit_decay_constant_and_errors():
    const = series_from(lambda t: 3.0, np.linspace(1, 5, 9))
    assert fit_decay(const, (1, 5)).exponent == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        fit_decay(const, (1, 2))  # 3 samples
    zero = series_from(lambda t: 0.0, np.linspace(1, 5, 9))
    with pytest.raises(ValueError):
        fit_decay(zero, (1, 5))


@given(st.floats(0.1, 10), st.floats(-4, 1))
def test_fit_recovers_power_law(c, alpha):
    s = series_from(lambda t: c * t ** alpha, np.geomspace(1, 50, 12))
    fit = fit_decay(s, (1, 50))
    assert fit.exponent == pytest.approx(alpha, abs=1e-9)
    assert fit.amplitude == pytest.approx(c, rel=1e-8)


def test_crossing_time_first_derivative():
    s = series_from(first_product, np.linspace(0, 10, 41))
    t = crossing_time(s, 4.0, evaluate=first_product)
    assert t == pytest.approx(2 * math.sqrt(2), rel=1e-5)
    # interpolation fallback is coarser but still brackets correctly
    assert 2.5 <= crossing_time(s, 4.0) <= 3.0


def test_crossing_time_gaussian_and_absent():
    s = series_from(gaussian_product, np.linspace(0, 10, 41))
    t = crossing_time(s, 4.0, evaluate=gaussian_product)
    assert 0 <= t < 1e-4
    assert crossing_time(series_from(lambda t: 5.0, [0, 1, 2]), 4.0) is None
    with pytest.raises(ValueError):
        crossing_time(CurveSeries(()), 4.0)


def test_crossing_starts_below():
    s = series_from(lambda t: 1.0, [0.5, 1.0])
    assert crossing_time(s, 4.0) == 0.5


@settings(max_examples=50)
@given(st.lists(st.floats(0, 1e6, allow_subnormal=False), min_size=1, max_size=20, unique=True),
       st.floats(0, 1e3), st.booleans())
def test_csv_round_trip(ts, scale, with_ref):
    ts = sorted(ts)
    entries = tuple(SeriesEntry(t, scale / (1 + t), math.pi * scale, scale / (1 + t) * math.pi * scale,
                                (1 + t) ** -0.5 if with_ref else None) for t in ts)
    s = CurveSeries(entries)
    text = series_to_csv(s)
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    assert "\r" not in text
    rows = [r.split(",") for r in text.splitlines()[1:]]
    assert all((r[4] == "") == (not with_ref) for r in rows)
    for e, r in zip(entries, rows):
        assert (float(r[0]), float(r[1]), float(r[2]), float(r[3])) == (e.t, e.i_x, e.i_p, e.product)
        if with_ref:
            assert float(r[4]) == e.analytic_product and float(r[5]) == e.rel_err


def test_csv_and_json_files(tmp_path):
    s = CurveSeries(tuple(SeriesEntry(t, 1 / (1 + t), 2.0, 2 / (1 + t), 2 / (1 + t) * (1 + 1e-9))
                          for t in (0.0, 0.1, 1 / 3, 7.0)), {"k": 1, "delta": 1.0})
    write_csv(s, tmp_path / "s.csv")
    back = read_csv(tmp_path / "s.csv")
    assert back.entries == s.entries
    fit = DecayFit(4.0, -2.0, (1.0, 7.0), 0.01, 5)
    write_json(s, tmp_path / "s.json", fit)
    doc = json.loads((tmp_path / "s.json").read_text())
    assert set(doc) == {"meta", "entries", "fit"}
    assert set(doc["entries"][0]) == {"t", "ix", "ip", "product", "analytic_product", "rel_err"}
    s2, fit2 = read_json(tmp_path / "s.json")
    assert s2 == s and fit2 == fit
    assert series_to_json(s) == series_to_json(s2)


def test_read_csv_bad_header(tmp_path):
    (tmp_path / "x.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_csv(tmp_path / "x.csv")


def test_time_helpers():
    assert np.allclose(linear_times(3, 4), [0, 1, 2, 3])
    ts = log_times(1, 100, 5)
    assert ts[0] == 0 and ts[-1] == pytest.approx(100) and np.allclose(np.diff(np.log(ts[1:])), math.log(10) / 2)
    with pytest.raises(ValueError):
        log_times(0, 1, 5)
    lo, hi = tail_window(ts, 0.4)
    assert (lo, hi) == (ts[-2], ts[-1])
    for bad in (0, 0.95):
        with pytest.raises(ValueError):
            tail_window(ts, bad)
