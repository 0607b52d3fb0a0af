"""Effective radius of the embedded manifold and power-law fits across N."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import pdist

from .lattice import FieldConfiguration

__all__ = [
    "RadiusReport",
    "ScalingFit",
    "effective_radius",
    "fit_scaling_exponent",
    "theoretical_exponents",
    "write_fit_report",
]


@dataclass(frozen=True)
class RadiusReport:
    effective_radius: float
    bbox_radius: float
    gyration_radius: float


def _points(field) -> np.ndarray:
    if isinstance(field, FieldConfiguration):
        return field.points
    pts = np.asarray(field, dtype=float)
    return pts[:, None] if pts.ndim == 1 else pts


def _diameter(pts: np.ndarray) -> float:
    if len(pts) < 2:
        return 0.0
    if pts.shape[1] >= 2 and len(pts) > pts.shape[1] + 1:
        try:
            pts = pts[ConvexHull(pts).vertices]
        except QhullError:
            pass  # degenerate (flat) point set: scan all pairs
    return float(pdist(pts).max())


def effective_radius(field) -> RadiusReport:
    """Diameter max_{z,w} |u(z) - u(w)| plus bounding-box and gyration radii."""
    pts = _points(field)
    extent = pts.max(axis=0) - pts.min(axis=0)
    bbox = float(extent.max())
    if pts.shape[1] == 1:
        diam = bbox
    else:
        diam = _diameter(pts)
    gyr = float(np.sqrt(np.mean(np.sum((pts - pts.mean(axis=0)) ** 2, axis=1))))
    return RadiusReport(effective_radius=diam, bbox_radius=bbox, gyration_radius=gyr)


@dataclass
class ScalingFit:
    exponent: float
    intercept: float
    stderr: float
    r_squared: float
    rho: float = 0.0
    points: list = field(default_factory=list)

    def predict(self, N) -> np.ndarray:
        N = np.asarray(N, dtype=float)
        return np.exp(self.intercept + self.exponent * np.log(N) + self.rho * np.log(np.log(N)))


def fit_scaling_exponent(points, log_correction: float = 0.0) -> ScalingFit:
    """Weighted least squares of log R = c + alpha log N + rho log log N with rho fixed.

    ``points`` is a sequence of ``(N, mean_radius, stderr)``.  Weights are the inverse
    variances of log R from the delta method, stderr / R; when every stderr is zero the
    fit is unweighted.  The reported standard error of alpha uses the residual-scaled
    covariance.
    """
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError("points must be a sequence of (N, mean_radius, stderr) triples")
    Ns, R, se = arr.T
    if len(np.unique(Ns)) < 3:
        raise ValueError("need at least 3 distinct N values for a scaling fit")
    if np.any(R <= 0):
        raise ValueError("all radii must be positive")
    if np.any(Ns <= 1) and log_correction != 0:
        raise ValueError("log correction requires N > 1")
    logN = np.log(Ns)
    y = np.log(R)
    if log_correction != 0:
        y = y - log_correction * np.log(logN)
    sigma = se / R
    if np.all(sigma > 0):
        w = 1.0 / sigma**2
    elif np.all(sigma == 0):
        w = np.ones_like(y)
    else:
        raise ValueError("stderr must be all positive or all zero")
    X = np.stack([np.ones_like(logN), logN], axis=1)
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    resid = y - X @ coef
    dof = len(y) - 2
    chi2 = float(np.sum(w * resid**2))
    cov = np.linalg.inv(X.T @ (w[:, None] * X)) * (chi2 / dof if dof > 0 else 0.0)
    ybar = np.sum(w * y) / np.sum(w)
    ss_tot = float(np.sum(w * (y - ybar) ** 2))
    r2 = 1.0 - chi2 / ss_tot if ss_tot > 0 else 1.0
    return ScalingFit(
        exponent=float(coef[1]),
        intercept=float(coef[0]),
        stderr=float(np.sqrt(max(cov[1, 1], 0.0))),
        r_squared=float(r2),
        rho=float(log_correction),
        points=[(float(a), float(b), float(c)) for a, b, c in arr],
    )


def theoretical_exponents(d: int, D: int, exact: bool = False):
    """Lower and upper N-exponents of the effective radius for given (d, D).

    d = 2 requires D = 1 and gives (4/3, 4/3).  For d >= 3 the pair is
    ((d - 2(d-D)/(D+2)) / D, d/2 + (d-D)/(D+2)).  ``exact=True`` returns Fractions.
    """
    if d < 2 or not 1 <= D <= d:
        raise ValueError(f"exponents defined for d >= 2 and 1 <= D <= d, got d={d}, D={D}")
    if d == 2:
        if D != 1:
            raise ValueError("for d = 2 only D = 1 is covered")
        lo = hi = Fraction(4, 3)
    else:
        gap = Fraction(d - D, D + 2)
        lo = (d - 2 * gap) / D
        hi = Fraction(d, 2) + gap
    return (lo, hi) if exact else (float(lo), float(hi))


def write_fit_report(path, fit: ScalingFit, d: int, D: int) -> dict:
    lo, hi = theoretical_exponents(d, D)
    report = asdict(fit)
    report["points"] = [{"N": p[0], "mean_radius": p[1], "stderr": p[2]} for p in fit.points]
    report["target_exponents"] = {"lower": lo, "upper": hi}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    return report
