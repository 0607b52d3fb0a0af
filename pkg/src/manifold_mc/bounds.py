"""Jensen lower bound on log Z under the linear-drift change of measure.

Shifting the axis coordinates X_{j e_i} by -a alpha_j turns the prior into the
tilted law P^(a) under which a field looks like u + a x_i (up to reflection,
which leaves the energy unchanged).  Jensen's inequality then gives

    log Z >= -(I1 + I2),   I1 = gamma E^(a)[Phi],   I2 = D beta a^2 sum_j alpha_j^2 lambda_j.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .gff import (
    ModelParams,
    axis_mode_indices,
    drift_coefficients,
    make_rng,
    sample_prior_batch,
)
from .lattice import Spectrum1D
from .localtime import CellList, batch_energy_bruteforce

__all__ = [
    "JensenReport",
    "CoefficientSum",
    "i2_exact",
    "expected_y_exact",
    "sample_y",
    "coefficient_sum",
    "i1_monte_carlo",
    "optimal_drift",
    "predicted_rate",
    "jensen_lower_bound",
    "direct_log_z",
]

_BRUTE_FORCE_SITES = 32


def i2_exact(params: ModelParams, a: float | None = None) -> float:
    a = params.drift_a if a is None else a
    spec = params.spectrum
    alpha = drift_coefficients(spec, params.d).alpha
    return float(params.D * params.beta * a * a * np.sum(alpha**2 * spec.eigenvalues))


def expected_y_exact(j: int, params: ModelParams, a: float | None = None) -> float:
    """Closed-form E^(a)[Y_j] = -beta (a alpha_j)^2 lambda_j for 1D mode number j != 0."""
    a = params.drift_a if a is None else a
    n = params.shape.sites_per_axis
    if j == 0:
        raise ValueError("mode 0 is the constant mode (alpha_0 = 0); E[Y_0] is degenerate")
    if not 0 < j < n:
        raise ValueError(f"mode number must lie in 1..{n - 1}, got {j}")
    alpha = drift_coefficients(params.spectrum, params.d).alpha[j]
    return float(-params.beta * (a * alpha) ** 2 * params.spectrum.eigenvalues[j])


def sample_y(j: int, params: ModelParams, a: float, n_samples: int, seed,
             component: int = 0) -> np.ndarray:
    """Draws of Y_j = beta lambda_j (2 a alpha_j X + (a alpha_j)^2) with X_{j e_i} from P^(a)."""
    rng = make_rng(seed)
    lam = params.spectrum.eigenvalues[j]
    alpha = drift_coefficients(params.spectrum, params.d).alpha[j]
    X = rng.standard_normal(n_samples) / math.sqrt(2.0 * params.beta * lam) - a * alpha
    return params.beta * lam * (2.0 * a * alpha * X + (a * alpha) ** 2)


class CoefficientSum(NamedTuple):
    total: float
    ratio: float  # total / N^d


def coefficient_sum(spec: Spectrum1D, d: int) -> CoefficientSum:
    """sum_{j != 0} alpha_j^2 lambda_j and its ratio to N^d."""
    alpha = drift_coefficients(spec, d).alpha
    total = float(np.sum(alpha**2 * spec.eigenvalues))
    return CoefficientSum(total, total / spec.N**d)


def drifted_energies(params: ModelParams, a: float, n_samples: int, seed) -> np.ndarray:
    """Energies Phi(u + a x) for exact prior draws u."""
    rng = make_rng(seed)
    shape = params.shape
    drift = a * shape.site_coordinates()[:, : params.D].T
    out = np.empty(n_samples)
    batch = max(1, min(n_samples, int(2e6 // (shape.total_sites * params.D))))
    done = 0
    while done < n_samples:
        m = min(batch, n_samples - done)
        _, u = sample_prior_batch(params, m, rng)
        u += drift
        pts = np.ascontiguousarray(np.swapaxes(u, 1, 2))
        if shape.total_sites <= _BRUTE_FORCE_SITES:
            out[done:done + m] = batch_energy_bruteforce(pts)
        else:
            for s in range(m):
                p = np.ascontiguousarray(pts[s])
                out[done + s] = p.shape[0] + CellList(p).offdiag_energy()
        done += m
    return out


def i1_monte_carlo(params: ModelParams, a: float | None = None, n_samples: int = 1000,
                   seed=0) -> tuple[float, float]:
    """Monte Carlo estimate and standard error of I1 = gamma E^(a)[Phi]."""
    a = params.drift_a if a is None else a
    if n_samples < 100:
        raise ValueError("i1_monte_carlo needs at least 100 samples")
    if params.gamma == 0:
        return 0.0, 0.0
    phi = drifted_energies(params, a, n_samples, seed)
    return (float(params.gamma * phi.mean()),
            float(params.gamma * phi.std(ddof=1) / math.sqrt(n_samples)))


def optimal_drift(params: ModelParams) -> float:
    """a = beta^{-1/2} (N log N)^{1/3} for d=2, D=1; beta^{-1/2} N^{(d-D)/(D+2)} otherwise."""
    N, d, D = params.N, params.d, params.D
    if d == 2 and D == 1:
        return float((N * math.log(N)) ** (1 / 3) / math.sqrt(params.beta))
    return float(N ** ((d - D) / (D + 2)) / math.sqrt(params.beta))


def predicted_rate(params: ModelParams) -> float:
    """(beta + gamma) N^{8/3} (log N)^{2/3} for d=2, D=1; (beta + gamma) N^{d + 2(d-D)/(D+2)} otherwise."""
    N, d, D = params.N, params.d, params.D
    scale = params.beta + params.gamma
    if d == 2 and D == 1:
        return float(scale * N ** (8 / 3) * math.log(N) ** (2 / 3))
    return float(scale * N ** (d + 2 * (d - D) / (D + 2)))


@dataclass
class JensenReport:
    a: float
    I1_estimate: float
    I1_stderr: float
    I2_exact: float
    logZ_lower: float
    logZ_lower_stderr: float
    predicted_rate: float
    rate_ratio: float

    def to_dict(self) -> dict:
        return asdict(self)


def jensen_lower_bound(params: ModelParams, strategy="optimal", n_samples: int = 1000,
                       seed=0) -> JensenReport:
    """Evaluate -(I1 + I2) with ``strategy`` either ``"optimal"`` or an explicit drift a."""
    a = optimal_drift(params) if strategy == "optimal" else float(strategy)
    I1, se = i1_monte_carlo(params, a, n_samples, seed)
    I2 = i2_exact(params, a)
    lower = -(I1 + I2)
    rate = predicted_rate(params)
    return JensenReport(a=a, I1_estimate=I1, I1_stderr=se, I2_exact=I2, logZ_lower=lower,
                        logZ_lower_stderr=se, predicted_rate=rate,
                        rate_ratio=abs(lower) / rate if rate > 0 else float("nan"))


def direct_log_z(params: ModelParams, n_samples: int, seed) -> tuple[float, float]:
    """Plain Monte Carlo log E_P[exp(-gamma Phi)] with a delta-method standard error.

    Only feasible for a handful of sites; the variance grows exponentially in the
    lattice size.
    """
    rng = make_rng(seed)
    w = np.empty(n_samples)
    batch = 200_000
    done = 0
    while done < n_samples:
        m = min(batch, n_samples - done)
        _, u = sample_prior_batch(params, m, rng)
        w[done:done + m] = -params.gamma * batch_energy_bruteforce(np.swapaxes(u, 1, 2))
        done += m
    top = w.max()
    e = np.exp(w - top)
    mean = e.mean()
    return float(top + math.log(mean)), float(e.std(ddof=1) / (math.sqrt(n_samples) * mean))
