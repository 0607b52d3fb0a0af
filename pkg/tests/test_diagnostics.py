import numpy as np
import pytest

from manifold_mc.diagnostics import (
    autocorrelation,
    integrated_autocorr_time,
    summarize,
    summarize_series,
)


def ar1(phi, n, seed):
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = e[0] / np.sqrt(1 - phi**2)
    for t in range(1, n):
        x[t] = phi * x[t - 1] + e[t]
    return x


def test_white_noise_ess():
    x = np.random.default_rng(0).standard_normal(20_000)
    s = summarize_series(x)
    assert s.ess == pytest.approx(len(x), rel=0.1)
    assert not s.low_confidence


def test_ar1_tau():
    # tau = (1 + phi) / (1 - phi) = 19
    x = ar1(0.9, 200_000, 1)
    assert integrated_autocorr_time(x) == pytest.approx(19.0, rel=0.25)


def test_ar1_stderr_covers_truth():
    hits = 0
    for seed in range(20):
        s = summarize_series(ar1(0.8, 5000, seed))
        hits += abs(s.mean) < 2 * s.stderr
    assert hits >= 16


def test_constant_trace_degenerate():
    s = summarize_series(np.full(100, 2.5))
    assert s.degenerate and s.variance == 0 and s.stderr == 0
    assert s.mean == 2.5


def test_short_trace_low_confidence():
    s = summarize_series(ar1(0.99, 200, 3))
    assert s.low_confidence


def test_autocorrelation_lag0():
    rho = autocorrelation(np.random.default_rng(2).standard_normal(500))
    assert rho[0] == pytest.approx(1.0)
    assert abs(rho[1:20]).max() < 0.2


def test_empty_trace_rejected():
    with pytest.raises(ValueError):
        summarize_series([])


def test_summarize_dict():
    cols = {"sweep": list(range(100)), "energy": np.random.default_rng(0).normal(size=100),
            "radius": np.full(100, 1.0), "accept_site": [0.3] * 100, "accept_global": [1.0] * 100}
    out = summarize(cols, {"site": 0.3, "global": 1.0})
    assert set(out) == {"energy", "radius", "acceptance", "low_confidence"}
    assert out["radius"]["degenerate"]
    assert out["acceptance"]["site"] == 0.3
