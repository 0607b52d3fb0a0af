"""Local time of the embedded lattice and the self-intersection energy.

The energy integral of the squared local time is evaluated exactly through

    int ell(y)^2 dy = sum_{x, x'} prod_i max(0, 1 - |u_i(x) - u_i(x')|),

i.e. every ordered pair of sites contributes the overlap volume of the two
unit cubes centred at its images.  Only pairs within L-infinity distance 1
contribute, which a unit-edge cell list finds in adjacent cells.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .lattice import FieldConfiguration

__all__ = [
    "EnergyBreakdown",
    "LocalTimeHistogram",
    "CellList",
    "StaleCellListError",
    "local_time_histogram",
    "self_intersection_energy",
    "brute_force_energy",
    "batch_energy_bruteforce",
    "energy_delta_single_site",
    "energy_by_quadrature",
    "write_histogram_csv",
]

QUADRATURE_SITE_LIMIT = 100


class StaleCellListError(RuntimeError):
    """The cell index no longer matches the positions it claims to index."""


@dataclass(frozen=True)
class EnergyBreakdown:
    total: float
    diagonal: float
    offdiag: float


@dataclass
class LocalTimeHistogram:
    """Counts ell(z) for integer levels z in the box ``[lo, hi]`` of Z^D.

    Level z collects the points of the half-open cube (z - 1/2, z + 1/2]^D.
    """

    counts: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    complete: bool

    def __getitem__(self, z) -> int:
        z = np.atleast_1d(np.asarray(z, dtype=int))
        if np.any(z < self.lo) or np.any(z > self.hi):
            return 0
        return int(self.counts[tuple(z - self.lo)])

    def items(self):
        for idx in np.argwhere(self.counts > 0):
            yield tuple(int(v) for v in idx + self.lo), int(self.counts[tuple(idx)])


def _as_points(field) -> np.ndarray:
    if isinstance(field, FieldConfiguration):
        return field.points
    pts = np.asarray(field, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    return np.ascontiguousarray(pts)


def local_time_histogram(field, window=None) -> LocalTimeHistogram:
    """Histogram of sites per unit level cube.

    ``window`` is a pair ``(lo, hi)`` of integer D-vectors (inclusive); by default the
    smallest box covering the field is used.  Points outside the window are dropped
    and ``complete`` is set to False.
    """
    pts = _as_points(field)
    D = pts.shape[1]
    levels = np.ceil(pts - 0.5).astype(np.int64)
    if window is None:
        lo, hi = levels.min(axis=0), levels.max(axis=0)
    else:
        lo = np.broadcast_to(np.asarray(window[0], dtype=np.int64), (D,)).copy()
        hi = np.broadcast_to(np.asarray(window[1], dtype=np.int64), (D,)).copy()
        if np.any(hi < lo):
            raise ValueError(f"empty window lo={lo}, hi={hi}")
    inside = np.all((levels >= lo) & (levels <= hi), axis=1)
    counts = np.zeros(tuple(hi - lo + 1), dtype=np.int64)
    np.add.at(counts, tuple((levels[inside] - lo).T), 1)
    return LocalTimeHistogram(counts, lo, hi, bool(inside.all()))


def _offsets(D: int) -> np.ndarray:
    return np.array(list(itertools.product((-1, 0, 1), repeat=D)), dtype=np.int64)


class CellList:
    """Unit-edge spatial hash over a set of points in R^D.

    Holds a reference to (not a copy of) the ``(M, D)`` point array; use
    :meth:`move` to change a point so the index stays consistent.
    """

    def __init__(self, points: np.ndarray):
        self.points = points
        M, D = points.shape
        size = 1
        while size < 2 * M:
            size *= 2
        self.mask = np.int64(size - 1)
        self.head = np.empty(size, dtype=np.int64)
        self.nxt = np.empty(M, dtype=np.int64)
        self.prv = np.empty(M, dtype=np.int64)
        self.cells = np.empty((M, D), dtype=np.int64)
        self.offsets = _offsets(D)
        self.rebuild()

    def rebuild(self):
        _kernels.build_cells(self.points, self.cells, self.head, self.nxt, self.prv, self.mask)

    def check_site(self, site: int):
        if not np.array_equal(np.floor(self.points[site]).astype(np.int64), self.cells[site]):
            raise StaleCellListError(f"cell index out of date for site {site}")

    def check(self):
        if not np.array_equal(np.floor(self.points).astype(np.int64), self.cells):
            raise StaleCellListError("cell index out of date")

    def offdiag_energy(self) -> float:
        return _kernels.offdiag_energy(self.points, self.cells, self.head, self.nxt,
                                       self.offsets, self.mask)

    def delta(self, site: int, new_value) -> float:
        q = np.ascontiguousarray(np.atleast_1d(np.asarray(new_value, dtype=float)))
        if q.shape != (self.points.shape[1],):
            raise ValueError(f"new value must be a point in R^{self.points.shape[1]}")
        self.check_site(site)
        return _kernels.delta_single_site(self.points, int(site), q, self.cells, self.head,
                                          self.nxt, self.offsets, self.mask)

    def move(self, site: int, new_value):
        q = np.ascontiguousarray(np.atleast_1d(np.asarray(new_value, dtype=float)))
        _kernels.move_site(int(site), q, self.points, self.cells, self.head, self.nxt,
                           self.prv, self.mask)

    def neighbors(self, site: int) -> np.ndarray:
        """Sites whose cube overlaps the cube of ``site`` (excluding itself)."""
        pts = self.points
        d = np.abs(pts - pts[site])
        mask = np.all(d < 1.0, axis=1)
        mask[site] = False
        return np.flatnonzero(mask)


def self_intersection_energy(field) -> EnergyBreakdown:
    """Exact int ell^2 via cell-list pair overlaps."""
    pts = _as_points(field)
    M = pts.shape[0]
    offdiag = CellList(pts.copy()).offdiag_energy()
    return EnergyBreakdown(total=float(M) + offdiag, diagonal=float(M), offdiag=offdiag)


def brute_force_energy(field) -> float:
    """O(M^2) evaluation of the pair-overlap sum (oracle for the cell list)."""
    pts = _as_points(field)
    M = pts.shape[0]
    total = 0.0
    chunk = max(1, int(4e6 // max(M, 1)))
    for start in range(0, M, chunk):
        diff = np.abs(pts[start:start + chunk, None, :] - pts[None, :, :])
        total += np.prod(np.clip(1.0 - diff, 0.0, None), axis=-1).sum()
    return float(total)


def batch_energy_bruteforce(points: np.ndarray) -> np.ndarray:
    """Energies of a batch of small point sets, ``points`` of shape ``(S, M, D)``."""
    points = np.asarray(points, dtype=float)
    M = points.shape[1]
    total = np.full(points.shape[0], float(M))
    for a in range(M):
        diff = np.abs(points[:, a + 1:, :] - points[:, a:a + 1, :])
        total += 2.0 * np.prod(np.clip(1.0 - diff, 0.0, None), axis=-1).sum(axis=1)
    return total


def energy_delta_single_site(state, site: int, new_value) -> float:
    """Phi(after) - Phi(before) when ``site`` moves to ``new_value``; touches only its pairs.

    ``state`` is a :class:`CellList` or any object exposing one as ``state.cells``.
    """
    cells = state if isinstance(state, CellList) else state.cells
    return cells.delta(site, new_value)


def energy_by_quadrature(field, step: float = 1e-3, limit: int = QUADRATURE_SITE_LIMIT) -> float:
    """Midpoint Riemann sum of int ell(y)^2 dy over a box covering the field (oracle)."""
    pts = _as_points(field)
    M, D = pts.shape
    if M > limit or D > 2:
        raise ValueError(f"quadrature oracle limited to <= {limit} sites and D <= 2 "
                         f"(got M={M}, D={D})")
    lo = pts.min(axis=0) - 1.0
    hi = pts.max(axis=0) + 1.0
    n = np.ceil((hi - lo) / step).astype(int)
    mids = [lo[c] + step * (np.arange(n[c]) + 0.5) for c in range(D)]
    if D == 1:
        ell = _interval_counts(mids[0], pts[:, 0])
        return float(np.sum(ell.astype(float) ** 2) * step)
    total = 0.0
    block = 256
    y0 = mids[0]
    for start in range(0, n[0], block):
        rows = y0[start:start + block]
        active = np.abs(rows[:, None] - pts[None, :, 0]) <= 0.5
        for r in range(len(rows)):
            sel = pts[active[r], 1]
            if sel.size:
                ell = _interval_counts(mids[1], sel)
                total += np.sum(ell.astype(float) ** 2)
    return float(total * step * step)


def _interval_counts(grid: np.ndarray, centres: np.ndarray) -> np.ndarray:
    # number of closed intervals [c - 1/2, c + 1/2] containing each sorted grid point
    start = np.searchsorted(grid, centres - 0.5, side="left")
    stop = np.searchsorted(grid, centres + 0.5, side="right")
    diff = np.zeros(len(grid) + 1, dtype=np.int64)
    np.add.at(diff, start, 1)
    np.add.at(diff, stop, -1)
    return np.cumsum(diff[:-1])


def write_histogram_csv(path, hist: LocalTimeHistogram) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("z_tuple,count\n")
        for z, c in hist.items():
            fh.write(f"{';'.join(str(v) for v in z)},{c}\n")
