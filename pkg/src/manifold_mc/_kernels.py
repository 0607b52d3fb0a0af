"""Compiled kernels: hashed cell list, pair-overlap energy, Metropolis site sweep.

Points are stored as a contiguous ``(M, D)`` float64 array.  Each site lives in
the unit cell ``floor(u)``; cells are chained into a hash table of buckets with
doubly linked lists so a site can be moved in O(1).  Bucket collisions are
harmless because every visited site's own cell is compared with the queried
cell before it is counted.
"""
from __future__ import annotations

import numpy as np
from numba import njit

_HASH_MULT = np.int64(1000003)


@njit(cache=True)
def cell_hash(cell, mask):
    h = np.int64(0)
    for c in range(cell.shape[0]):
        h = h * _HASH_MULT + cell[c]
    h = h ^ (h >> np.int64(29))
    return h & mask


@njit(cache=True)
def pair_overlap(pts, i, q):
    """Overlap volume of the unit cubes centred at pts[i] and q."""
    prod = 1.0
    for c in range(pts.shape[1]):
        t = 1.0 - abs(pts[i, c] - q[c])
        if t <= 0.0:
            return 0.0
        prod *= t
    return prod


@njit(cache=True)
def build_cells(pts, cells, head, nxt, prv, mask):
    head[:] = -1
    M, D = pts.shape
    for i in range(M):
        for c in range(D):
            cells[i, c] = np.int64(np.floor(pts[i, c]))
        b = cell_hash(cells[i], mask)
        nxt[i] = head[b]
        prv[i] = -1
        if head[b] >= 0:
            prv[head[b]] = i
        head[b] = i


@njit(cache=True)
def _unlink(i, cells, head, nxt, prv, mask):
    if prv[i] >= 0:
        nxt[prv[i]] = nxt[i]
    else:
        head[cell_hash(cells[i], mask)] = nxt[i]
    if nxt[i] >= 0:
        prv[nxt[i]] = prv[i]


@njit(cache=True)
def move_site(i, q, pts, cells, head, nxt, prv, mask):
    D = pts.shape[1]
    same = True
    newcell = np.empty(D, dtype=np.int64)
    for c in range(D):
        newcell[c] = np.int64(np.floor(q[c]))
        if newcell[c] != cells[i, c]:
            same = False
    if not same:
        _unlink(i, cells, head, nxt, prv, mask)
        for c in range(D):
            cells[i, c] = newcell[c]
        b = cell_hash(newcell, mask)
        nxt[i] = head[b]
        prv[i] = -1
        if head[b] >= 0:
            prv[head[b]] = i
        head[b] = i
    for c in range(D):
        pts[i, c] = q[c]


@njit(cache=True)
def site_overlap_sum(pts, i, q, cells, head, nxt, offsets, mask, only_greater):
    """Sum of overlaps between a cube at q and every site j != i (j > i if only_greater)."""
    D = pts.shape[1]
    base = np.empty(D, dtype=np.int64)
    for c in range(D):
        base[c] = np.int64(np.floor(q[c]))
    probe = np.empty(D, dtype=np.int64)
    total = 0.0
    for o in range(offsets.shape[0]):
        for c in range(D):
            probe[c] = base[c] + offsets[o, c]
        j = head[cell_hash(probe, mask)]
        while j >= 0:
            if j != i and (not only_greater or j > i):
                match = True
                for c in range(D):
                    if cells[j, c] != probe[c]:
                        match = False
                        break
                if match:
                    total += pair_overlap(pts, j, q)
            j = nxt[j]
    return total


@njit(cache=True)
def offdiag_energy(pts, cells, head, nxt, offsets, mask):
    """Sum over ordered pairs x != x' of the unit-cube overlap volume."""
    total = 0.0
    for i in range(pts.shape[0]):
        total += site_overlap_sum(pts, i, pts[i], cells, head, nxt, offsets, mask, True)
    return 2.0 * total


@njit(cache=True)
def delta_single_site(pts, i, q, cells, head, nxt, offsets, mask):
    before = site_overlap_sum(pts, i, pts[i], cells, head, nxt, offsets, mask, False)
    after = site_overlap_sum(pts, i, q, cells, head, nxt, offsets, mask, False)
    return 2.0 * (after - before)


@njit(cache=True)
def delta_elastic(pts, i, q, nbr):
    """Change of sum over edges |u(x) - u(y)|^2 when site i moves to q."""
    D = pts.shape[1]
    total = 0.0
    for e in range(nbr.shape[1]):
        j = nbr[i, e]
        if j < 0:
            continue
        for c in range(D):
            a = q[c] - pts[j, c]
            b = pts[i, c] - pts[j, c]
            total += a * a - b * b
    return total


@njit(cache=True)
def site_sweep(pts, order, noise, log_u, sigma, beta, gamma, nbr,
               cells, head, nxt, prv, offsets, mask):
    """One Metropolis pass; returns (accepted moves, total energy change)."""
    D = pts.shape[1]
    q = np.empty(D)
    accepted = 0
    dphi_total = 0.0
    for t in range(order.shape[0]):
        i = order[t]
        for c in range(D):
            q[c] = pts[i, c] + sigma * noise[t, c]
        log_ratio = -beta * delta_elastic(pts, i, q, nbr)
        dphi = 0.0
        if gamma != 0.0:
            dphi = delta_single_site(pts, i, q, cells, head, nxt, offsets, mask)
            log_ratio -= gamma * dphi
        if log_ratio >= 0.0 or log_u[t] < log_ratio:
            move_site(i, q, pts, cells, head, nxt, prv, mask)
            accepted += 1
            dphi_total += dphi
    return accepted, dphi_total
