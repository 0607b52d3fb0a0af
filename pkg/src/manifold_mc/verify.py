"""Self-check suite: exact identities and oracle comparisons, reported as JSON-ready dicts.

``quick`` runs deterministic checks only (a few seconds).  ``full`` adds the
Monte Carlo checks at reduced sample sizes.
"""
from __future__ import annotations

import math

import numpy as np

from .bounds import (
    coefficient_sum,
    direct_log_z,
    expected_y_exact,
    i1_monte_carlo,
    i2_exact,
    jensen_lower_bound,
)
from .gff import (
    ModelParams,
    drift_coefficients,
    log_rn_derivative,
    pair_difference_variances,
    sample_prior_batch,
)
from .lattice import (
    LatticeShape,
    SpectralCoefficients,
    analyze,
    build_spectrum_1d,
    dense_laplacian,
    mode_eigenvalues,
    synthesize,
)
from .localtime import CellList, brute_force_energy, energy_by_quadrature, self_intersection_energy
from .observables import theoretical_exponents

__all__ = ["run_checks", "CHECKS"]


def _check(name, value, threshold, passed, **extra):
    return {"name": name, "value": value, "threshold": threshold, "passed": bool(passed), **extra}


def check_spectrum():
    worst_eig = worst_gram = 0.0
    for d in (1, 2):
        for N in range(1, 9):
            shape = LatticeShape(N, d)
            spec = build_spectrum_1d(N)
            ours = np.sort(np.concatenate([[0.0], mode_eigenvalues(shape, spec)]))
            dense = np.linalg.eigvalsh(dense_laplacian(shape))
            worst_eig = max(worst_eig, float(np.abs(ours - dense).max()))
    for N in range(1, 17):
        phi = build_spectrum_1d(N).phi
        worst_gram = max(worst_gram, float(np.abs(phi @ phi.T - np.eye(2 * N + 1)).max()))
    return [_check("spectrum_vs_dense", worst_eig, 1e-9, worst_eig < 1e-9),
            _check("orthonormality_1d", worst_gram, 1e-10, worst_gram < 1e-10)]


def check_round_trip(seed):
    rng = np.random.default_rng(seed)
    shape = LatticeShape(3, 2)
    spec = build_spectrum_1d(3)
    worst = 0.0
    for _ in range(100):
        c = SpectralCoefficients(shape, rng.standard_normal((2, shape.basis_size)))
        worst = max(worst, float(np.abs(analyze(synthesize(c, spec), spec).values - c.values).max()))
    return [_check("analyze_synthesize_round_trip", worst, 1e-10, worst < 1e-10)]


def check_energy(seed):
    rng = np.random.default_rng(seed)
    worst_bf = 0.0
    for _ in range(20):
        M = int(rng.integers(2, 200))
        D = int(rng.integers(1, 4))
        pts = rng.normal(scale=rng.uniform(0.5, 5.0), size=(M, D))
        worst_bf = max(worst_bf, abs(self_intersection_energy(pts).total - brute_force_energy(pts)))
    q = energy_by_quadrature(np.array([0.0, 0.5]))
    worst_delta = 0.0
    for _ in range(50):
        M = int(rng.integers(2, 50))
        D = int(rng.integers(1, 3))
        pts = rng.normal(scale=1.5, size=(M, D))
        cells = CellList(pts)
        i = int(rng.integers(M))
        new = pts[i] + rng.normal(scale=0.7, size=D)
        before = brute_force_energy(pts)
        moved = pts.copy()
        moved[i] = new
        worst_delta = max(worst_delta, abs(cells.delta(i, new) - (brute_force_energy(moved) - before)))
    return [_check("cell_list_vs_bruteforce", worst_bf, 1e-9, worst_bf < 1e-9),
            _check("two_site_quadrature", q, {"target": 3.0, "atol": 5e-3}, abs(q - 3.0) < 5e-3),
            _check("incremental_delta", worst_delta, 1e-9, worst_delta < 1e-9)]


def check_drift_identities():
    out = []
    worst = 0.0
    for d in (1, 2, 3):
        for N in (1, 2, 5, 16, 32):
            spec = build_spectrum_1d(N)
            alpha = drift_coefficients(spec, d).alpha
            lhs = float(np.sum(alpha**2) * (2 * N + 1) ** (1 - d))
            rhs = float(np.sum(np.arange(-N, N + 1) ** 2))
            worst = max(worst, abs(lhs - rhs) / rhs)
    out.append(_check("drift_parseval", worst, 1e-10, worst < 1e-10))
    ratios = {}
    ok = True
    for d, Ns in ((2, (2, 4, 8, 16, 32, 64)), (3, (2, 4, 8, 16))):
        r = [coefficient_sum(build_spectrum_1d(N), d).ratio for N in Ns]
        ratios[d] = r
        ok &= max(r) / min(r) < 2.0
    out.append(_check("coefficient_sum_ratio", ratios, {"max_over_min": 2.0}, ok))
    gap = 0.0
    for d, D in ((2, 1), (3, 2), (3, 3)):
        p = ModelParams.create(3, d, D, beta=1.3, gamma=0.7)
        a = 0.9
        chain = -sum(expected_y_exact(j, p, a) for j in range(1, 7)) * D
        gap = max(gap, abs(chain - i2_exact(p, a)) / i2_exact(p, a))
    out.append(_check("expected_y_chaining", gap, 1e-12, gap < 1e-12))
    return out


def check_exponents():
    ok = (theoretical_exponents(2, 1) == (4 / 3, 4 / 3)
          and np.allclose(theoretical_exponents(3, 1), (5 / 3, 13 / 6))
          and np.allclose(theoretical_exponents(3, 2), (5 / 4, 7 / 4)))
    return [_check("theoretical_exponents", [theoretical_exponents(2, 1), theoretical_exponents(3, 1),
                                             theoretical_exponents(3, 2)], "table", ok)]


def check_variance_mc(seed):
    p = ModelParams.create(2, 2, 1, beta=1.0)
    rng = np.random.default_rng(seed)
    n = 10_000
    _, u = sample_prior_batch(p, n, rng)
    coords = p.shape.site_coordinates()
    M = p.shape.total_sites
    worst = 0.0
    for _ in range(10):
        i, j = rng.choice(M, 2, replace=False)
        diff = u[:, 0, i] - u[:, 0, j]
        exact = pair_difference_variances(coords[i][None], coords[j][None], p)[0]
        se = exact * math.sqrt(2.0 / (n - 1))
        worst = max(worst, abs(diff.var(ddof=1) - exact) / se)
    return [_check("pair_variance_mc", worst, {"sigmas": 3.5}, worst < 3.5)]


def check_rn_normalization(seed):
    p = ModelParams.create(2, 2, 1, beta=1.0, drift_a=0.3)
    X, _ = sample_prior_batch(p, 100_000, seed)
    w = np.exp(log_rn_derivative(X, drift_coefficients(p.spectrum, 2), p))
    z = abs(w.mean() - 1.0) / (w.std(ddof=1) / math.sqrt(len(w)))
    return [_check("rn_normalization", float(z), {"sigmas": 3.0}, z < 3.0)]


def check_jensen_toy(seed):
    p = ModelParams.create(1, 2, 1, beta=1.0, gamma=1.0)
    rep = jensen_lower_bound(p, strategy=0.5, n_samples=2000, seed=seed)
    logz, se = direct_log_z(p, 200_000, seed + 1)
    margin = 3 * math.hypot(se, rep.logZ_lower_stderr)
    return [_check("jensen_validity_toy", {"logZ": logz, "logZ_lower": rep.logZ_lower},
                   {"sigmas": 3.0}, logz >= rep.logZ_lower - margin)]


def check_i1_floor(seed):
    p = ModelParams.create(2, 2, 1, beta=1.0, gamma=1.0)
    est, se = i1_monte_carlo(p, 10.0, 400, seed)
    floor = p.gamma * p.shape.total_sites
    return [_check("i1_diagonal_floor", est, floor, est >= floor - 3 * se)]


QUICK = (check_spectrum, check_round_trip, check_energy, check_drift_identities, check_exponents)
FULL = QUICK + (check_variance_mc, check_rn_normalization, check_jensen_toy, check_i1_floor)
CHECKS = {"quick": QUICK, "full": FULL}


def run_checks(level: str = "quick", seed: int = 0) -> dict:
    if level not in CHECKS:
        raise ValueError(f"unknown verification level {level!r}")
    results = []
    for fn in CHECKS[level]:
        args = (seed,) if fn.__code__.co_argcount else ()
        try:
            results.extend(fn(*args))
        except Exception as exc:  # report, don't crash the whole suite
            results.append(_check(fn.__name__, None, None, False, error=f"{type(exc).__name__}: {exc}"))
    return {"level": level, "seed": seed, "passed": all(r["passed"] for r in results),
            "checks": results}
