"""Gaussian prior P_N, linear drift tilt and exact Gaussian quantities."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .lattice import (
    FieldConfiguration,
    LatticeShape,
    SpectralCoefficients,
    Spectrum1D,
    build_spectrum_1d,
    mode_eigenvalues,
    synthesize,
)

__all__ = [
    "ModelParams",
    "DriftCoefficients",
    "make_rng",
    "sample_prior",
    "sample_prior_batch",
    "drift_coefficients",
    "apply_drift",
    "axis_mode_indices",
    "log_rn_derivative",
    "pair_difference_variance",
    "write_field_csv",
    "read_field_csv",
]


@dataclass(frozen=True)
class ModelParams:
    shape: LatticeShape
    D: int = 1
    beta: float = 1.0
    gamma: float = 0.0
    drift_a: float = 0.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")
        if not self.drift_a >= 0:
            raise ValueError(f"drift amplitude must be nonnegative, got {self.drift_a}")
        if not 1 <= self.D <= self.shape.d:
            raise ValueError(f"range dimension D={self.D} must satisfy 1 <= D <= d={self.shape.d}")

    @classmethod
    def create(cls, N: int, d: int, D: int = 1, beta: float = 1.0, gamma: float = 0.0,
               drift_a: float = 0.0) -> "ModelParams":
        return cls(LatticeShape(N, d), D, float(beta), float(gamma), float(drift_a))

    @property
    def N(self) -> int:
        return self.shape.N

    @property
    def d(self) -> int:
        return self.shape.d

    @property
    def spectrum(self) -> Spectrum1D:
        return _spectrum(self.shape.N)

    @property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues of the N(d) non-constant modes."""
        return _mode_eigenvalues(self.shape)

    @property
    def prior_std(self) -> np.ndarray:
        """Standard deviation (2 beta lambda_k)^{-1/2} of each spectral coordinate."""
        return 1.0 / np.sqrt(2.0 * self.beta * self.eigenvalues)

    def to_dict(self) -> dict:
        return {"N": self.N, "d": self.d, "D": self.D, "beta": self.beta,
                "gamma": self.gamma, "drift_a": self.drift_a}


@lru_cache(maxsize=64)
def _spectrum(N: int) -> Spectrum1D:
    return build_spectrum_1d(N)


@lru_cache(maxsize=64)
def _mode_eigenvalues(shape: LatticeShape) -> np.ndarray:
    lam = mode_eigenvalues(shape, _spectrum(shape.N))
    lam.flags.writeable = False
    return lam


def make_rng(seed) -> np.random.Generator:
    """Explicitly seeded generator; a Generator passes through unchanged."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise ValueError("an explicit seed is required")
    return np.random.default_rng(seed)


def sample_prior(params: ModelParams, seed) -> tuple[SpectralCoefficients, FieldConfiguration]:
    """Draw X_k^(i) ~ N(0, (2 beta lambda_k)^{-1}) independently and synthesize the field.

    ``params.gamma`` plays no role.
    """
    rng = make_rng(seed)
    X = rng.standard_normal((params.D, params.shape.basis_size)) * params.prior_std
    coeffs = SpectralCoefficients(params.shape, X)
    return coeffs, synthesize(coeffs, params.spectrum)


def sample_prior_batch(params: ModelParams, n_samples: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised prior draws.

    Returns ``(X, u)`` with ``X`` of shape ``(n_samples, D, N(d))`` and ``u`` of shape
    ``(n_samples, D, total_sites)``.
    """
    import scipy.fft

    rng = make_rng(seed)
    shape = params.shape
    X = rng.standard_normal((n_samples, params.D, shape.basis_size)) * params.prior_std
    grid = np.zeros((n_samples, params.D, shape.total_sites))
    grid[:, :, 1:] = X
    grid = grid.reshape((n_samples, params.D) + shape.grid_shape)
    axes = tuple(range(2, shape.d + 2))
    u = scipy.fft.idctn(grid, type=2, norm="ortho", axes=axes)
    return X, u.reshape(n_samples, params.D, -1)


@dataclass(frozen=True)
class DriftCoefficients:
    """Expansion coefficients alpha_j of f(x) = x in the 1D basis, carrying the phi_0^{1-d} prefactor."""

    N: int
    d: int
    alpha: np.ndarray  # indexed by 1D mode number 0..2N


def drift_coefficients(spec: Spectrum1D, d: int) -> DriftCoefficients:
    phi0 = 1.0 / np.sqrt(spec.n)
    alpha = phi0 ** (1 - d) * (spec.phi @ spec.points.astype(float))
    alpha[0] = 0.0
    alpha.flags.writeable = False
    return DriftCoefficients(spec.N, d, alpha)


def apply_drift(field: FieldConfiguration, a: float) -> FieldConfiguration:
    """Add the linear stretch a * x_i to component i."""
    if a < 0:
        raise ValueError(f"drift amplitude must be nonnegative, got {a}")
    out = field.copy()
    if a == 0:
        return out
    coords = field.shape.site_coordinates()
    out.values += a * coords[:, : field.D].T
    return out


def axis_mode_indices(shape: LatticeShape, axis: int) -> np.ndarray:
    """Block indices of the modes j e_axis, j = 1..2N (mode number j on ``axis``, 0 elsewhere)."""
    n = shape.sites_per_axis
    j = np.arange(1, n)
    return j * n ** (shape.d - 1 - axis) - 1


def log_rn_derivative(coeffs: SpectralCoefficients, drift: DriftCoefficients, params: ModelParams,
                      a: float | None = None) -> float | np.ndarray:
    """log(dP^(a)/dP) evaluated at coefficients sampled in the P parameterisation.

    Accepts a single :class:`SpectralCoefficients` or a raw array whose last two axes
    are ``(D, N(d))``; a batch gives one value per sample.
    """
    a = params.drift_a if a is None else a
    X = coeffs.values if isinstance(coeffs, SpectralCoefficients) else np.asarray(coeffs)
    if a == 0:
        return 0.0 if X.ndim == 2 else np.zeros(X.shape[0])
    lam1 = params.spectrum.eigenvalues[1:]
    alpha = drift.alpha[1:]
    total = 0.0
    for i in range(X.shape[-2]):
        Xi = X[..., i, axis_mode_indices(params.shape, i)]
        total = total + np.sum((2 * a * alpha * Xi + (a * alpha) ** 2) * params.beta * lam1, axis=-1)
    return -total


def pair_difference_variance(z, w, params: ModelParams, component: int = 0) -> float:
    """Exact Var(u^(i)(z) - u^(i)(w)) = (2 beta)^{-1} sum_{k != 0} (phi_k(z) - phi_k(w))^2 / lambda_k.

    The value does not depend on ``component``.  ``z == w`` returns 0 with a warning.
    """
    if not 0 <= component < params.D:
        raise ValueError(f"component {component} out of range for D={params.D}")
    z = np.asarray(z, dtype=int)
    w = np.asarray(w, dtype=int)
    if np.array_equal(z, w):
        warnings.warn("degenerate variance query z == w; returning 0", RuntimeWarning, stacklevel=2)
        return 0.0
    return float(pair_difference_variances(z[None], w[None], params)[0])


def pair_difference_variances(zs, ws, params: ModelParams) -> np.ndarray:
    """Vectorised :func:`pair_difference_variance` over site arrays of shape ``(P, d)``."""
    shape = params.shape
    zs = np.atleast_2d(np.asarray(zs, dtype=int))
    ws = np.atleast_2d(np.asarray(ws, dtype=int))
    for s in (zs, ws):
        if s.shape[1] != shape.d or np.any(np.abs(s) > shape.N):
            raise ValueError(f"sites must be integer points of [-{shape.N}, {shape.N}]^{shape.d}")
    phi = params.spectrum.phi
    inv_lam = np.zeros(shape.total_sites)
    inv_lam[1:] = 1.0 / params.eigenvalues
    inv_lam = inv_lam.reshape(shape.grid_shape)
    out = np.empty(len(zs))
    # chunk over pairs to bound memory at (chunk, n^d)
    n_modes = shape.total_sites
    chunk = max(1, int(2e7 // n_modes))
    for start in range(0, len(zs), chunk):
        zc = zs[start:start + chunk] + shape.N
        wc = ws[start:start + chunk] + shape.N
        pz = np.ones((len(zc),) + (1,) * shape.d)
        pw = np.ones((len(zc),) + (1,) * shape.d)
        for ax in range(shape.d):
            view = [len(zc)] + [1] * shape.d
            view[ax + 1] = shape.sites_per_axis
            pz = pz * phi[:, zc[:, ax]].T.reshape(view)
            pw = pw * phi[:, wc[:, ax]].T.reshape(view)
        diff2 = (pz - pw) ** 2
        out[start:start + chunk] = np.sum((diff2 * inv_lam).reshape(len(zc), -1), axis=1)
    out /= 2.0 * params.beta
    same = np.all(zs == ws, axis=1)
    out[same] = 0.0
    return out


def write_field_csv(path, field: FieldConfiguration, params: ModelParams, seed) -> None:
    """Field dump: ``#``-prefixed metadata line, then site_index,x_1..x_d,u_1..u_D rows."""
    shape = field.shape
    coords = shape.site_coordinates()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# N={shape.N},d={shape.d},D={field.D},beta={params.beta!r},"
                 f"gamma={params.gamma!r},seed={seed}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["site_index"] + [f"x_{j + 1}" for j in range(shape.d)]
                        + [f"u_{i + 1}" for i in range(field.D)])
        for s in range(shape.total_sites):
            writer.writerow([s, *coords[s].tolist(), *(repr(float(v)) for v in field.values[:, s])])


def read_field_csv(path) -> tuple[FieldConfiguration, dict]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError(f"{path}: missing metadata line")
        meta = dict(item.split("=", 1) for item in header[1:].strip().split(","))
        rows = list(csv.reader(fh))
    shape = LatticeShape(int(meta["N"]), int(meta["d"]))
    D = int(meta["D"])
    body = np.array(rows[1:], dtype=float)
    values = body[:, 1 + shape.d:].T
    return FieldConfiguration(shape, values.reshape(D, -1)), meta
