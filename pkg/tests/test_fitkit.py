from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qprimes import stats
from qprimes.fitkit import DecimationRule, decimate, linear_fit


def test_power_law_recovered():
    pts = [(x, 3.0 * x**2) for x in range(1, 11)]
    fit = linear_fit(pts, "loglog")
    assert fit.alpha == pytest.approx(3.0, rel=1e-12)
    assert fit.beta == pytest.approx(2.0, rel=1e-12)
    assert fit.n_points == 10 and fit.residual_rms < 1e-12


def test_constant_data_has_zero_exponent():
    fit = linear_fit([(x, 5.0) for x in (1, 2, 4, 8)], "loglog")
    assert abs(fit.beta) < 1e-14


@given(
    st.floats(0.1, 100), st.floats(-3, 3), st.sampled_from(["loglog", "semilog_y", "linear"])
)
@settings(max_examples=60, deadline=None)
def test_exact_models_recovered(alpha, beta, transform):
    xs = np.linspace(1.0, 5.0, 12)
    if transform == "loglog":
        ys = alpha * xs**beta
    elif transform == "semilog_y":
        ys = alpha * np.exp(beta * xs)
    else:
        ys = alpha + beta * xs
    fit = linear_fit(list(zip(xs, ys)), transform)
    assert fit.alpha == pytest.approx(alpha, rel=1e-10, abs=1e-10)
    assert fit.beta == pytest.approx(beta, rel=1e-10, abs=1e-10)


def test_fit_errors_and_window():
    with pytest.raises(ValueError):
        linear_fit([(1, 1), (2, 2)], "loglog")
    with pytest.raises(ValueError):
        linear_fit([(1, 1), (2, -2), (3, 3)], "loglog")
    with pytest.raises(ValueError):
        linear_fit([(1, 1), (2, 2), (3, 3)], "cubic")
    pts = [(x, 2.0 * x) for x in range(1, 20)] + [(100, 1.0)]
    fit = linear_fit(pts, "loglog", window=(1, 19))
    assert fit.beta == pytest.approx(1.0, rel=1e-12) and fit.window == (1, 19)


def test_decimation_identity_below_dense_limit():
    series = [(float(i), math.sin(i)) for i in range(1, 50)]
    out = decimate(series, DecimationRule(dense_limit=1e3))
    assert out.indices == list(range(len(series)))


def test_decimation_monotone_series_geometric_only():
    series = [(float(x), float(x)) for x in range(100, 10000)]
    out = decimate(series, DecimationRule(dense_limit=100, geometric_ratio=1.5, record_extrema=False))
    xs = [p[0] for p in out.points]
    assert all(b >= 1.5 * a - 1 for a, b in zip(xs, xs[1:]))
    assert len(xs) < 15


def test_decimation_clamps_small_values():
    series = [(1.0, 1e-6), (2.0, -1e-7), (3.0, 0.5)]
    out = decimate(series, DecimationRule(dense_limit=10))
    assert out.points[0][1] == 1e-3 and out.points[1][1] == -1e-3
    assert out.clamped == [True, True, False]
    with pytest.raises(ValueError):
        DecimationRule(geometric_ratio=1.0)


def test_decimation_keeps_sign_changes(stream_1e12):
    ev = stats.event_deltas(stream_1e12)
    series = list(zip(ev.q.astype(float).tolist(), ev.after.tolist()))
    out = decimate(series, DecimationRule(dense_limit=1e4, geometric_ratio=1.001))
    kept = {series[i][0] for i in out.indices}
    changes = stats.sign_changes(stream_1e12, 10**12)
    assert {float(x) for x in changes.xs} <= kept
