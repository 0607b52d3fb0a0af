"""Neumann Laplacian eigenbasis on the cube [-N, N]^d of Z^d.

The 1D eigenpairs of the free-boundary path graph on {-N, ..., N} are

    lambda_k = 2 - 2 cos(pi k / n),
    phi_k(x) = c_k cos(pi k (x + N + 1/2) / n),      n = 2N + 1,

with c_0 = n^{-1/2} and c_k = (2/n)^{1/2} otherwise.  These are exactly the
orthonormal DCT-II basis vectors, so the d-dimensional transforms below are
separable type-II/III cosine transforms.

Sites are enumerated lexicographically with the last coordinate varying
fastest (numpy C order on a grid of shape ``(n,) * d``).  Modes use the same
order, so flat mode index 0 is the constant mode and flat index ``m``
corresponds to block index ``m - 1`` of a :class:`SpectralCoefficients`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft

__all__ = [
    "LatticeShape",
    "Spectrum1D",
    "SpectralCoefficients",
    "FieldConfiguration",
    "build_spectrum_1d",
    "eigenvalue_product",
    "mode_eigenvalues",
    "synthesize",
    "analyze",
    "dense_laplacian",
    "DENSE_SITE_LIMIT",
]

DENSE_SITE_LIMIT = 10_000


@dataclass(frozen=True)
class LatticeShape:
    """Geometry of S_N^d = [-N, N]^d intersected with Z^d."""

    N: int
    d: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"half-width N must be a positive integer, got {self.N!r}")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"dimension d must be a positive integer, got {self.d!r}")

    @property
    def sites_per_axis(self) -> int:
        return 2 * self.N + 1

    @property
    def total_sites(self) -> int:
        return self.sites_per_axis**self.d

    @property
    def basis_size(self) -> int:
        """N(d) = (2N+1)^d - 1, the number of non-constant eigenfunctions."""
        return self.total_sites - 1

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return (self.sites_per_axis,) * self.d

    def site_coordinates(self) -> np.ndarray:
        """Integer coordinates of all sites, shape ``(total_sites, d)``."""
        axis = np.arange(-self.N, self.N + 1)
        mesh = np.meshgrid(*([axis] * self.d), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def site_index(self, x) -> int:
        """Flat index of the site with coordinates ``x``."""
        x = np.asarray(x, dtype=int)
        if x.shape != (self.d,):
            raise ValueError(f"site must have {self.d} coordinates, got shape {x.shape}")
        if np.any(np.abs(x) > self.N):
            raise ValueError(f"site {tuple(x)} lies outside [-{self.N}, {self.N}]^{self.d}")
        return int(np.ravel_multi_index(tuple(x + self.N), self.grid_shape))

    def neighbor_table(self) -> np.ndarray:
        """Nearest neighbours of each site, shape ``(total_sites, 2d)``, padded with -1."""
        n = self.sites_per_axis
        idx = np.arange(self.total_sites).reshape(self.grid_shape)
        table = np.full((self.total_sites, 2 * self.d), -1, dtype=np.int64)
        for ax in range(self.d):
            fwd = np.full(self.grid_shape, -1, dtype=np.int64)
            bwd = np.full(self.grid_shape, -1, dtype=np.int64)
            lo = [slice(None)] * self.d
            hi = [slice(None)] * self.d
            lo[ax] = slice(0, n - 1)
            hi[ax] = slice(1, n)
            fwd[tuple(lo)] = idx[tuple(hi)]
            bwd[tuple(hi)] = idx[tuple(lo)]
            table[:, 2 * ax] = fwd.ravel()
            table[:, 2 * ax + 1] = bwd.ravel()
        return table

    def edges(self) -> np.ndarray:
        """Unordered nearest-neighbour edges as an ``(n_edges, 2)`` index array."""
        nbr = self.neighbor_table()[:, 0::2]
        src = np.repeat(np.arange(self.total_sites), self.d)
        dst = nbr.ravel()
        keep = dst >= 0
        return np.stack([src[keep], dst[keep]], axis=1)


@dataclass(frozen=True)
class Spectrum1D:
    """All 2N+1 eigenpairs of the 1D Neumann path Laplacian.

    ``phi[k, m]`` is phi_k evaluated at the site x = m - N.
    """

    N: int
    eigenvalues: np.ndarray
    phi: np.ndarray

    @property
    def n(self) -> int:
        return 2 * self.N + 1

    @property
    def points(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def __call__(self, k: int, x) -> np.ndarray:
        """Evaluate phi_k at integer site(s) ``x`` in {-N..N}."""
        return self.phi[k, np.asarray(x) + self.N]


def build_spectrum_1d(N: int) -> Spectrum1D:
    if int(N) != N or N < 1:
        raise ValueError(f"half-width N must be a positive integer, got {N!r}")
    n = 2 * N + 1
    k = np.arange(n)
    lam = 2.0 - 2.0 * np.cos(np.pi * k / n)
    lam[0] = 0.0
    m = np.arange(n)
    phi = np.sqrt(2.0 / n) * np.cos(np.pi * np.outer(k, m + 0.5) / n)
    phi[0, :] = 1.0 / np.sqrt(n)
    lam.flags.writeable = False
    phi.flags.writeable = False
    return Spectrum1D(N=N, eigenvalues=lam, phi=phi)


def eigenvalue_product(k, spec: Spectrum1D, d: int | None = None) -> float:
    """Eigenvalue of the product eigenfunction with mode numbers ``k``: sum of 1D eigenvalues."""
    k = tuple(int(v) for v in k)
    if d is not None and len(k) != d:
        raise ValueError(f"mode index has {len(k)} entries, expected d={d}")
    if any(v < 0 or v >= spec.n for v in k):
        raise ValueError(f"mode numbers must lie in 0..{spec.n - 1}, got {k}")
    return float(sum(spec.eigenvalues[v] for v in k))


def mode_eigenvalues(shape: LatticeShape, spec: Spectrum1D) -> np.ndarray:
    """Eigenvalues of all non-constant modes, flat lexicographic order, length N(d)."""
    lam = spec.eigenvalues
    total = np.zeros(shape.grid_shape)
    for ax in range(shape.d):
        view = [1] * shape.d
        view[ax] = shape.sites_per_axis
        total = total + lam.reshape(view)
    return total.ravel()[1:]


def mode_tuples(shape: LatticeShape):
    """Iterate over mode-number tuples in flat lexicographic order (constant mode first)."""
    return itertools.product(range(shape.sites_per_axis), repeat=shape.d)


@dataclass
class SpectralCoefficients:
    """Gaussian coordinates X_k^(i): one block of N(d) values per range component."""

    shape: LatticeShape
    values: np.ndarray  # (D, N(d))

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim == 1:
            self.values = self.values[None, :]
        if self.values.ndim != 2 or self.values.shape[1] != self.shape.basis_size:
            raise ValueError(
                f"coefficient blocks must have size N(d)={self.shape.basis_size}, "
                f"got array of shape {self.values.shape}"
            )

    @property
    def D(self) -> int:
        return self.values.shape[0]

    def as_grid(self) -> np.ndarray:
        """Coefficients on the full mode grid, shape ``(D, n, ..., n)``, constant mode = 0."""
        flat = np.zeros((self.D, self.shape.total_sites))
        flat[:, 1:] = self.values
        return flat.reshape((self.D,) + self.shape.grid_shape)


@dataclass
class FieldConfiguration:
    """Real-space embedding u^(i)(x) of every site; ``values`` has shape ``(D, total_sites)``."""

    shape: LatticeShape
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim == 1:
            self.values = self.values[None, :]
        if self.values.ndim != 2 or self.values.shape[1] != self.shape.total_sites:
            raise ValueError(
                f"field must have {self.shape.total_sites} sites per component, "
                f"got array of shape {self.values.shape}"
            )

    @property
    def D(self) -> int:
        return self.values.shape[0]

    @property
    def points(self) -> np.ndarray:
        """Embedded points, shape ``(total_sites, D)``."""
        return np.ascontiguousarray(self.values.T)

    def as_grid(self) -> np.ndarray:
        return self.values.reshape((self.D,) + self.shape.grid_shape)

    def copy(self) -> "FieldConfiguration":
        return FieldConfiguration(self.shape, self.values.copy())


def _check_spec(spec: Spectrum1D, shape: LatticeShape):
    if spec.N != shape.N:
        raise ValueError(f"spectrum built for N={spec.N} but lattice has N={shape.N}")


def _tensor_apply(grid: np.ndarray, matrix: np.ndarray, d: int) -> np.ndarray:
    # grid: (D, n, ..., n); contracts every lattice axis with matrix[old, new]
    out = grid
    for ax in range(1, d + 1):
        out = np.moveaxis(np.tensordot(out, matrix, axes=([ax], [0])), -1, ax)
    return out


def synthesize(
    coeffs: SpectralCoefficients,
    spec: Spectrum1D,
    shape: LatticeShape | None = None,
    method: str = "dct",
) -> FieldConfiguration:
    """Real-space field u^(i)(x) = sum_k X_k^(i) prod_j phi_{k_j}(x_j).

    ``method="dct"`` uses an orthonormal type-III cosine transform;
    ``method="tensor"`` contracts the explicit 1D basis axis by axis.
    """
    shape = shape or coeffs.shape
    _check_spec(spec, shape)
    if coeffs.shape != shape:
        raise ValueError(f"coefficients built for {coeffs.shape}, lattice is {shape}")
    grid = coeffs.as_grid()
    axes = tuple(range(1, shape.d + 1))
    if method == "dct":
        field = scipy.fft.idctn(grid, type=2, norm="ortho", axes=axes)
    elif method == "tensor":
        field = _tensor_apply(grid, spec.phi, shape.d)
    else:
        raise ValueError(f"unknown transform method {method!r}")
    return FieldConfiguration(shape, field.reshape(coeffs.D, -1))


def analyze(
    field: FieldConfiguration,
    spec: Spectrum1D,
    shape: LatticeShape | None = None,
    method: str = "dct",
) -> SpectralCoefficients:
    """Project a field onto the non-constant eigenfunctions (inverse of :func:`synthesize`).

    The constant-mode component (the site mean) is discarded.
    """
    shape = shape or field.shape
    _check_spec(spec, shape)
    if field.shape != shape:
        raise ValueError(f"field built for {field.shape}, lattice is {shape}")
    grid = field.as_grid()
    axes = tuple(range(1, shape.d + 1))
    if method == "dct":
        coef = scipy.fft.dctn(grid, type=2, norm="ortho", axes=axes)
    elif method == "tensor":
        coef = _tensor_apply(grid, spec.phi.T, shape.d)
    else:
        raise ValueError(f"unknown transform method {method!r}")
    return SpectralCoefficients(shape, coef.reshape(field.D, -1)[:, 1:])


def dense_laplacian(shape: LatticeShape, limit: int = DENSE_SITE_LIMIT) -> np.ndarray:
    """Dense graph Laplacian of the free-boundary grid (test oracle)."""
    if shape.total_sites > limit:
        raise ValueError(
            f"refusing to build a dense {shape.total_sites}x{shape.total_sites} Laplacian "
            f"(limit {limit} sites)"
        )
    M = shape.total_sites
    L = np.zeros((M, M))
    e = shape.edges()
    np.add.at(L, (e[:, 0], e[:, 0]), 1.0)
    np.add.at(L, (e[:, 1], e[:, 1]), 1.0)
    L[e[:, 0], e[:, 1]] = -1.0
    L[e[:, 1], e[:, 0]] = -1.0
    return L
