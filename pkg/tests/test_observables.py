import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from manifold_mc.observables import (
    effective_radius,
    fit_scaling_exponent,
    theoretical_exponents,
    write_fit_report,
)


def brute_diameter(pts):
    return max((np.linalg.norm(a - b) for a, b in itertools.combinations(pts, 2)), default=0.0)


def test_radius_examples():
    assert effective_radius(np.array([-1.0, 0.0, 2.0])).effective_radius == 3.0
    assert effective_radius(np.full(10, 3.3)).effective_radius == 0.0
    pts = np.array([[0.0, 0.0], [3.0, 4.0], [1.0, 1.0]])
    assert brute_diameter(pts) == 5.0
    assert effective_radius(pts).effective_radius == pytest.approx(5.0)


@pytest.mark.parametrize("D", [2, 3])
def test_radius_matches_brute_force(D):
    rng = np.random.default_rng(D)
    for _ in range(20):
        pts = rng.normal(size=(int(rng.integers(2, 60)), D)) * rng.uniform(0.1, 10, size=D)
        assert effective_radius(pts).effective_radius == pytest.approx(brute_diameter(pts), rel=1e-12)


def test_radius_degenerate_collinear_points():
    t = np.linspace(0, 1, 12)
    pts = np.stack([t, 2 * t], axis=1)
    assert effective_radius(pts).effective_radius == pytest.approx(math.sqrt(5))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**32 - 1), st.floats(-5, 5), st.floats(-20, 20))
def test_radius_invariances(D, seed, scale, shift):
    pts = np.random.default_rng(seed).normal(size=(25, D))
    base = effective_radius(pts)
    assert effective_radius(pts + shift).effective_radius == pytest.approx(base.effective_radius,
                                                                          rel=1e-9, abs=1e-9)
    assert effective_radius(scale * pts).effective_radius == pytest.approx(
        abs(scale) * base.effective_radius, rel=1e-9, abs=1e-9)
    assert base.bbox_radius <= base.effective_radius + 1e-12
    assert base.effective_radius <= math.sqrt(D) * base.bbox_radius + 1e-12
    assert base.gyration_radius <= base.effective_radius + 1e-12


def test_fit_exact_power_laws():
    Ns = [4, 6, 8, 12, 16]
    fit = fit_scaling_exponent([(n, n ** (4 / 3), 0.0) for n in Ns])
    assert fit.exponent == pytest.approx(4 / 3, abs=1e-10)
    fit = fit_scaling_exponent([(n, 7 * n ** (5 / 3), 0.01) for n in Ns])
    assert fit.exponent == pytest.approx(5 / 3, abs=1e-10)
    assert fit.intercept == pytest.approx(math.log(7), abs=1e-10)
    assert fit.r_squared == pytest.approx(1.0)


def test_fit_with_log_correction():
    Ns = [2, 4, 8, 16, 32]
    pts = [(n, n ** (4 / 3) * math.log(n) ** (-2 / 3), 0.0) for n in Ns]
    assert fit_scaling_exponent(pts, log_correction=-2 / 3).exponent == pytest.approx(4 / 3, abs=1e-10)
    assert fit_scaling_exponent(pts).exponent != pytest.approx(4 / 3, abs=1e-3)


def test_fit_weighting_and_stderr():
    rng = np.random.default_rng(0)
    Ns = np.array([4, 6, 8, 12, 16, 24])
    R = 2 * Ns**1.2 * np.exp(rng.normal(scale=0.02, size=len(Ns)))
    fit = fit_scaling_exponent(list(zip(Ns, R, 0.02 * R)))
    assert abs(fit.exponent - 1.2) < 4 * fit.stderr
    assert 0 < fit.stderr < 0.1
    # down-weighting an outlier pulls the fit back
    R2 = R.copy()
    R2[-1] *= 1.5
    loose = fit_scaling_exponent(list(zip(Ns, R2, np.r_[0.02 * R2[:-1], 10 * R2[-1]])))
    tight = fit_scaling_exponent(list(zip(Ns, R2, 0.02 * R2)))
    assert abs(loose.exponent - 1.2) < abs(tight.exponent - 1.2)


def test_fit_predict_reproduces_inputs():
    fit = fit_scaling_exponent([(n, 3 * n**1.5, 0.0) for n in (3, 5, 9)])
    np.testing.assert_allclose(fit.predict([3, 5, 9]), [3 * n**1.5 for n in (3, 5, 9)], rtol=1e-10)


def test_fit_usage_errors():
    with pytest.raises(ValueError):
        fit_scaling_exponent([(4, 1, 0), (8, 2, 0)])
    with pytest.raises(ValueError):
        fit_scaling_exponent([(4, 1, 0), (8, 2, 0), (8, 3, 0)])
    with pytest.raises(ValueError):
        fit_scaling_exponent([(4, 1, 0), (8, 0, 0), (16, 3, 0)])


def test_theoretical_exponents_table():
    assert theoretical_exponents(2, 1) == (4 / 3, 4 / 3)
    assert theoretical_exponents(3, 1, exact=True) == (Fraction(5, 3), Fraction(13, 6))
    assert theoretical_exponents(3, 2, exact=True) == (Fraction(5, 4), Fraction(7, 4))
    # arithmetic of the closed forms
    assert Fraction(3) - Fraction(4, 3) == Fraction(5, 3)
    assert Fraction(3, 2) + Fraction(2, 3) == Fraction(13, 6)


@pytest.mark.parametrize("d", [3, 4, 5, 6])
def test_theoretical_exponents_d_equals_D(d):
    assert theoretical_exponents(d, d, exact=True) == (Fraction(1), Fraction(d, 2))


@pytest.mark.parametrize("d,D", [(1, 1), (2, 2), (3, 4), (3, 0)])
def test_theoretical_exponents_out_of_range(d, D):
    with pytest.raises(ValueError):
        theoretical_exponents(d, D)


def test_fit_report_json(tmp_path):
    fit = fit_scaling_exponent([(n, n**1.3, 0.1) for n in (4, 8, 16)])
    write_fit_report(tmp_path / "fit.json", fit, 2, 1)
    data = json.loads((tmp_path / "fit.json").read_text())
    assert data["target_exponents"] == {"lower": 4 / 3, "upper": 4 / 3}
    assert [p["N"] for p in data["points"]] == [4, 8, 16]
    assert data["exponent"] == pytest.approx(1.3)
