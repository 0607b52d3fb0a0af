import math
import warnings

import numpy as np
import pytest

from manifold_mc.gff import (
    ModelParams,
    apply_drift,
    axis_mode_indices,
    drift_coefficients,
    log_rn_derivative,
    pair_difference_variance,
    pair_difference_variances,
    read_field_csv,
    sample_prior,
    sample_prior_batch,
    write_field_csv,
)
from manifold_mc.lattice import FieldConfiguration, LatticeShape, build_spectrum_1d, dense_laplacian
from manifold_mc.observables import effective_radius


def pinv_variance(shape, beta, z, w):
    """(2 beta)^{-1} (e_z - e_w)^T L^+ (e_z - e_w) from the dense Laplacian."""
    Lp = np.linalg.pinv(dense_laplacian(shape))
    e = np.zeros(shape.total_sites)
    e[shape.site_index(z)] += 1
    e[shape.site_index(w)] -= 1
    return e @ Lp @ e / (2 * beta)


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams.create(2, 2, D=3)
    with pytest.raises(ValueError):
        ModelParams.create(2, 2, beta=0)
    with pytest.raises(ValueError):
        ModelParams.create(2, 2, gamma=-1)


def test_sample_prior_deterministic_and_ignores_gamma():
    p0 = ModelParams.create(3, 2, 2, beta=1.5, gamma=0.0)
    p1 = ModelParams.create(3, 2, 2, beta=1.5, gamma=9.0)
    c0, u0 = sample_prior(p0, 11)
    c1, u1 = sample_prior(p1, 11)
    np.testing.assert_array_equal(c0.values, c1.values)
    np.testing.assert_array_equal(u0.values, u1.values)


def test_sample_prior_requires_seed():
    with pytest.raises(ValueError):
        sample_prior(ModelParams.create(2, 2), None)


def test_variance_scales_inverse_beta():
    n = 10_000
    X2, _ = sample_prior_batch(ModelParams.create(2, 2, beta=2.0), n, 5)
    X4, _ = sample_prior_batch(ModelParams.create(2, 2, beta=4.0), n, 6)
    ratio = X4.var(axis=0) / X2.var(axis=0)
    assert abs(ratio.mean() - 0.5) < 0.05
    assert np.all(np.abs(ratio - 0.5) < 0.1)


def test_single_and_batch_sampler_agree_in_law():
    p = ModelParams.create(2, 2)
    X, _ = sample_prior_batch(p, 20_000, 1)
    np.testing.assert_allclose(X.var(axis=0)[0] / p.prior_std**2, 1.0, atol=0.06)


def test_drift_reconstruction_d1_n1():
    spec = build_spectrum_1d(1)
    alpha = drift_coefficients(spec, 1).alpha
    assert alpha[0] == 0
    recon = alpha @ spec.phi
    assert np.abs(recon - np.array([-1.0, 0.0, 1.0])).max() < 1e-12


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("N", [1, 2, 3, 8, 17, 32])
def test_weighted_parseval(N, d):
    spec = build_spectrum_1d(N)
    alpha = drift_coefficients(spec, d).alpha
    phi0 = (2 * N + 1) ** -0.5
    lhs = np.sum(alpha**2) * phi0 ** (2 * (d - 1))
    rhs = sum(n * n for n in range(-N, N + 1))
    assert abs(lhs - rhs) < 1e-10 * rhs


@pytest.mark.parametrize("N", [1, 2, 5, 12])
def test_even_modes_have_zero_drift(N):
    alpha = drift_coefficients(build_spectrum_1d(N), 2).alpha
    assert np.all(np.abs(alpha[0::2]) < 1e-10)


def test_drift_matches_full_basis_coefficients():
    # the d-dimensional coefficient of x -> x_i on mode j e_i must equal alpha_j
    p = ModelParams.create(2, 3, 2)
    coords = p.shape.site_coordinates()
    from manifold_mc.lattice import analyze

    for i in range(2):
        f = FieldConfiguration(p.shape, coords[:, i].astype(float))
        coef = analyze(f, p.spectrum).values[0]
        expect = np.zeros_like(coef)
        expect[axis_mode_indices(p.shape, i)] = drift_coefficients(p.spectrum, 3).alpha[1:]
        assert np.abs(coef - expect).max() < 1e-12


def test_apply_drift_examples():
    shape = LatticeShape(3, 2)
    zero = FieldConfiguration(shape, np.zeros((1, shape.total_sites)))
    assert np.array_equal(apply_drift(zero, 0.0).values, zero.values)
    u = apply_drift(zero, 1.0)
    np.testing.assert_array_equal(u.values[0], shape.site_coordinates()[:, 0])
    assert effective_radius(apply_drift(zero, 0.7)).effective_radius == pytest.approx(0.7 * 6)
    with pytest.raises(ValueError):
        apply_drift(zero, -1.0)


def test_log_rn_zero_drift():
    p = ModelParams.create(2, 2)
    c, _ = sample_prior(p, 0)
    assert log_rn_derivative(c, drift_coefficients(p.spectrum, 2), p, a=0.0) == 0.0


def test_log_rn_closed_form_single_sample():
    p = ModelParams.create(2, 2, 2, beta=1.7, drift_a=0.4)
    c, _ = sample_prior(p, 4)
    alpha = drift_coefficients(p.spectrum, 2).alpha
    lam = p.spectrum.eigenvalues
    expected = 0.0
    for i in range(2):
        for j in range(1, 5):
            k = [0, 0]
            k[i] = j
            m = np.ravel_multi_index(tuple(k), p.shape.grid_shape) - 1
            expected -= (2 * 0.4 * alpha[j] * c.values[i, m] + (0.4 * alpha[j]) ** 2) * 1.7 * lam[j]
    got = log_rn_derivative(c, drift_coefficients(p.spectrum, 2), p)
    assert got == pytest.approx(expected, rel=1e-12)


def test_rn_normalization_mc():
    p = ModelParams.create(2, 2, 1, beta=1.0, drift_a=0.3)
    X, _ = sample_prior_batch(p, 100_000, 123)
    w = np.exp(log_rn_derivative(X, drift_coefficients(p.spectrum, 2), p))
    se = w.std(ddof=1) / math.sqrt(len(w))
    assert abs(w.mean() - 1.0) < 3 * se


def test_rn_reweighting_reproduces_shift():
    p = ModelParams.create(2, 2, 1, beta=1.0, drift_a=0.3)
    drift = drift_coefficients(p.spectrum, 2)
    X, _ = sample_prior_batch(p, 100_000, 77)
    w = np.exp(log_rn_derivative(X, drift, p))
    idx = axis_mode_indices(p.shape, 0)
    for j in (1, 3):
        x = X[:, 0, idx[j - 1]]
        est = np.mean(w * x)
        se = np.std(w * x, ddof=1) / math.sqrt(len(x))
        assert abs(est - (-0.3 * drift.alpha[j])) < 3 * se


def test_pair_variance_degenerate_and_symmetric():
    p = ModelParams.create(3, 2, 2)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        assert pair_difference_variance((1, 1), (1, 1), p) == 0.0
    assert rec
    a = pair_difference_variance((-3, 2), (1, 0), p)
    b = pair_difference_variance((1, 0), (-3, 2), p)
    assert a == pytest.approx(b, rel=1e-14)
    assert pair_difference_variance((-3, 2), (1, 0), p, component=1) == pytest.approx(a, rel=1e-14)


def test_pair_variance_n1_d1_matches_pseudoinverse():
    shape = LatticeShape(1, 1)
    p = ModelParams(shape, 1, beta=0.7)
    exact = pinv_variance(shape, 0.7, (-1,), (1,))
    assert pair_difference_variance((-1,), (1,), p) == pytest.approx(exact, rel=1e-12)


@pytest.mark.parametrize("N,d", [(2, 2), (3, 2), (2, 3)])
def test_pair_variance_matches_pseudoinverse(N, d):
    p = ModelParams.create(N, d, beta=1.3)
    rng = np.random.default_rng(N * 10 + d)
    coords = p.shape.site_coordinates()
    for _ in range(10):
        i, j = rng.choice(p.shape.total_sites, 2, replace=False)
        exact = pinv_variance(p.shape, 1.3, coords[i], coords[j])
        assert pair_difference_variance(coords[i], coords[j], p) == pytest.approx(exact, rel=1e-10)


@pytest.mark.parametrize("N,d", [(2, 2), (3, 2), (2, 3), (3, 3)])
def test_empirical_pair_variance(N, d):
    p = ModelParams.create(N, d, beta=1.0)
    n = 10_000
    _, u = sample_prior_batch(p, n, 1000 + N + d)
    rng = np.random.default_rng(N + 31 * d)
    coords = p.shape.site_coordinates()
    for _ in range(20):
        i, j = rng.choice(p.shape.total_sites, 2, replace=False)
        exact = pair_difference_variances(coords[i], coords[j], p)[0]
        se = exact * math.sqrt(2.0 / (n - 1))
        assert abs((u[:, 0, i] - u[:, 0, j]).var(ddof=1) - exact) < 3 * se


def test_field_csv_round_trip(tmp_path):
    p = ModelParams.create(2, 2, 2, beta=1.1)
    _, u = sample_prior(p, 3)
    path = tmp_path / "field.csv"
    write_field_csv(path, u, p, 3)
    back, meta = read_field_csv(path)
    np.testing.assert_array_equal(back.values, u.values)
    assert meta["seed"] == "3" and meta["D"] == "2"
    header = path.read_text().splitlines()[1]
    assert header == "site_index,x_1,x_2,u_1,u_2"
