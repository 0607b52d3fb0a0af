"""Metropolis sampling of the self-repelling measure Q_N.

The target density on real-space fields is proportional to

    exp(-beta * H(u) - gamma * Phi(u)),   H(u) = sum_{x~y} |u(x) - u(y)|^2,

which is the Gaussian prior with its spectral weights exp(-beta lambda_k X_k^2)
rewritten on the lattice, reweighted by the squared local time Phi.  Two
kernels are mixed: single-site Gaussian random-walk moves with incremental
Delta H and Delta Phi, and preconditioned Crank-Nicolson moves on the spectral
coordinates, which preserve the prior and are accepted on gamma * Delta Phi only.

Both H and Phi are invariant under a global translation, so the site mean is a
free direction: single-site moves let it diffuse and pCN moves carry it through
unchanged.  No observable depends on it.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .diagnostics import summarize
from .gff import ModelParams, make_rng, sample_prior
from .lattice import FieldConfiguration, SpectralCoefficients, analyze, synthesize
from .localtime import CellList, energy_delta_single_site
from .observables import effective_radius

__all__ = [
    "McmcSchedule",
    "ChainState",
    "Trace",
    "EnergyCacheError",
    "init_chain",
    "metropolis_site_sweep",
    "site_move_log_ratio",
    "pcn_global_move",
    "run_chain",
]

log = logging.getLogger(__name__)

TARGET_ACCEPTANCE = 0.35
RESYNC_TOLERANCE = 1e-6


class EnergyCacheError(RuntimeError):
    pass


@dataclass(frozen=True)
class McmcSchedule:
    n_sweeps: int = 1000
    burn_in: int = 100
    thinning: int = 1
    sigma_site: float = 0.5
    pcn_s: float = 0.1
    global_every: int = 10
    resync: int = 100
    tune: bool = True

    def __post_init__(self):
        if not 0 < self.pcn_s <= 1:
            raise ValueError(f"pCN parameter must lie in (0, 1], got {self.pcn_s}")
        if not self.sigma_site > 0:
            raise ValueError(f"site step size must be positive, got {self.sigma_site}")
        if not 0 <= self.burn_in < self.n_sweeps:
            raise ValueError(f"need 0 <= burn_in < n_sweeps, got {self.burn_in}, {self.n_sweeps}")
        if self.thinning < 1 or self.resync < 1 or self.global_every < 0:
            raise ValueError("thinning and resync must be >= 1, global_every >= 0")

    @property
    def n_records(self) -> int:
        return (self.n_sweeps - self.burn_in) // self.thinning


@dataclass
class ChainState:
    params: ModelParams
    points: np.ndarray  # (M, D); the field, shared with the cell list
    cells: CellList
    energy: float
    rng: np.random.Generator
    sigma_site: float
    coeffs: SpectralCoefficients | None = None
    energy_stale: bool = False
    step_count: int = 0
    accept_site: int = 0
    propose_site: int = 0
    accept_global: int = 0
    propose_global: int = 0
    neighbors: np.ndarray = field(default=None, repr=False)

    @property
    def field(self) -> FieldConfiguration:
        return FieldConfiguration(self.params.shape, self.points.T.copy())

    def full_energy(self) -> float:
        return float(self.points.shape[0]) + self.cells.offdiag_energy()

    def resync(self, tol: float = RESYNC_TOLERANCE) -> float:
        """Recompute the energy from scratch; return the divergence of the cache."""
        self.cells.check()
        fresh = self.full_energy()
        gap = 0.0 if self.energy_stale else abs(fresh - self.energy)
        if gap > tol * max(1.0, abs(fresh)):
            raise EnergyCacheError(f"cached energy {self.energy!r} drifted from {fresh!r}")
        self.energy = fresh
        self.energy_stale = False
        return gap

    def sync_coeffs(self) -> SpectralCoefficients:
        if self.coeffs is None:
            self.coeffs = analyze(self.field, self.params.spectrum)
        return self.coeffs


def init_chain(params: ModelParams, seed, sigma_site: float = 0.5) -> ChainState:
    """Start from an exact prior draw (gamma is ignored at initialisation)."""
    rng = make_rng(seed)
    coeffs, fld = sample_prior(params, rng)
    pts = np.ascontiguousarray(fld.values.T)
    cells = CellList(pts)
    state = ChainState(params=params, points=pts, cells=cells, energy=0.0, rng=rng,
                       sigma_site=float(sigma_site), coeffs=coeffs,
                       neighbors=params.shape.neighbor_table())
    state.energy = state.full_energy()
    return state


def site_move_log_ratio(state: ChainState, site: int, new_value) -> float:
    """Log Metropolis ratio -beta Delta H - gamma Delta Phi for moving one site."""
    q = np.ascontiguousarray(np.atleast_1d(np.asarray(new_value, dtype=float)))
    dH = _kernels.delta_elastic(state.points, int(site), q, state.neighbors)
    out = -state.params.beta * dH
    if state.params.gamma:
        out -= state.params.gamma * energy_delta_single_site(state, site, q)
    return out


def metropolis_site_sweep(state: ChainState, params: ModelParams | None = None,
                          schedule: McmcSchedule | None = None) -> ChainState:
    """One random-order pass of single-site Gaussian random-walk proposals."""
    params = params or state.params
    M, D = state.points.shape
    rng = state.rng
    order = rng.permutation(M)
    noise = rng.standard_normal((M, D))
    log_u = np.log(rng.random(M))
    c = state.cells
    accepted, dphi = _kernels.site_sweep(
        state.points, order, noise, log_u, state.sigma_site, params.beta, params.gamma,
        state.neighbors, c.cells, c.head, c.nxt, c.prv, c.offsets, c.mask)
    if params.gamma == 0.0:
        state.energy_stale = True
    else:
        state.energy += dphi
    state.accept_site += accepted
    state.propose_site += M
    state.step_count += 1
    if accepted:
        state.coeffs = None
    return state


def pcn_global_move(state: ChainState, params: ModelParams | None = None,
                    schedule: McmcSchedule | None = None, s: float | None = None) -> ChainState:
    """X' = sqrt(1 - s^2) X + s xi with xi a prior draw; accept on exp(-gamma Delta Phi)."""
    params = params or state.params
    s = (schedule.pcn_s if schedule is not None else 0.1) if s is None else s
    X = state.sync_coeffs()
    xi = state.rng.standard_normal(X.values.shape) * params.prior_std
    log_u = math.log(state.rng.random())
    state.propose_global += 1
    state.step_count += 1
    if s == 0:
        state.accept_global += 1
        return state
    Xp = SpectralCoefficients(params.shape, math.sqrt(1.0 - s * s) * X.values + s * xi)
    mean = state.points.mean(axis=0)
    new_pts = np.ascontiguousarray(synthesize(Xp, params.spectrum).values.T + mean)
    new_cells = CellList(new_pts)
    if params.gamma == 0.0:
        accept = True
        new_energy = state.energy
        stale = True
    else:
        if state.energy_stale:
            state.resync()
        new_energy = float(new_pts.shape[0]) + new_cells.offdiag_energy()
        accept = -params.gamma * (new_energy - state.energy) >= log_u
        stale = False
    if accept:
        state.points = new_pts
        state.cells = new_cells
        state.energy = new_energy
        state.energy_stale = stale
        state.coeffs = Xp
        state.accept_global += 1
    return state


@dataclass
class Trace:
    columns: dict
    params: dict
    schedule: dict
    seed: object
    diagnostics: dict = field(default_factory=dict)
    aborted: bool = False
    error: str | None = None
    max_resync_gap: float = 0.0
    final_sigma_site: float = float("nan")

    FIELDS = ("sweep", "energy", "radius", "accept_site", "accept_global")

    def __len__(self) -> int:
        return len(self.columns["sweep"])

    def __getitem__(self, key) -> np.ndarray:
        return np.asarray(self.columns[key])

    def write_csv(self, path) -> None:
        keys = list(self.FIELDS) + [k for k in self.columns if k not in self.FIELDS]
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(keys)
            for row in zip(*(self.columns[k] for k in keys)):
                writer.writerow([r if isinstance(r, (int, np.integer)) else repr(float(r)) for r in row])

    def sidecar(self) -> dict:
        return {"params": self.params, "schedule": self.schedule, "seed": _jsonable_seed(self.seed),
                "diagnostics": self.diagnostics, "aborted": self.aborted, "error": self.error,
                "max_resync_gap": self.max_resync_gap, "final_sigma_site": self.final_sigma_site}

    def write_sidecar(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.sidecar(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _jsonable_seed(seed):
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    if isinstance(seed, np.random.SeedSequence):
        return {"entropy": int(seed.entropy), "spawn_key": list(seed.spawn_key)}
    return repr(seed)


def _tune(sigma: float, rate: float, t: int) -> float:
    # Robbins-Monro step on log sigma; only called during burn-in
    return sigma * math.exp((rate - TARGET_ACCEPTANCE) / math.sqrt(t + 1.0))


def run_chain(params: ModelParams, schedule: McmcSchedule, seed, observers=None) -> Trace:
    """Run one chain and record observables every ``thinning`` sweeps after burn-in.

    ``observers`` maps column names to callables ``f(state) -> float`` evaluated at
    each record.  An observer exception aborts the run and returns the partial
    trace with ``aborted`` set.
    """
    observers = dict(observers or {})
    state = init_chain(params, seed, schedule.sigma_site)
    cols = {k: [] for k in Trace.FIELDS}
    for k in observers:
        cols[k] = []
    trace = Trace(columns=cols, params=params.to_dict(), schedule=asdict(schedule), seed=seed)
    last = [0, 0, 0, 0]
    for t in range(schedule.n_sweeps):
        before = state.accept_site
        metropolis_site_sweep(state, params, schedule)
        if schedule.tune and t < schedule.burn_in:
            rate = (state.accept_site - before) / state.points.shape[0]
            state.sigma_site = _tune(state.sigma_site, rate, t)
        if schedule.global_every and (t + 1) % schedule.global_every == 0:
            pcn_global_move(state, params, schedule)
        if (t + 1) % schedule.resync == 0:
            trace.max_resync_gap = max(trace.max_resync_gap, state.resync())
        if t >= schedule.burn_in and (t - schedule.burn_in + 1) % schedule.thinning == 0:
            if state.energy_stale:
                state.resync()
            ps = state.propose_site - last[1]
            pg = state.propose_global - last[3]
            row = {
                "sweep": t + 1,
                "energy": state.energy,
                "radius": effective_radius(state.points).effective_radius,
                "accept_site": (state.accept_site - last[0]) / ps if ps else float("nan"),
                "accept_global": (state.accept_global - last[2]) / pg if pg else float("nan"),
            }
            last = [state.accept_site, state.propose_site, state.accept_global, state.propose_global]
            try:
                for k, fn in observers.items():
                    row[k] = float(fn(state))
            except Exception as exc:  # observer failure aborts with a partial trace
                log.error("observer failed at sweep %d: %s", t + 1, exc)
                trace.aborted = True
                trace.error = f"{type(exc).__name__}: {exc}"
                break
            for k, v in row.items():
                cols[k].append(v)
    trace.final_sigma_site = state.sigma_site
    accept = {
        "site": state.accept_site / state.propose_site if state.propose_site else float("nan"),
        "global": state.accept_global / state.propose_global if state.propose_global else float("nan"),
    }
    if len(trace):
        trace.diagnostics = summarize(trace, accept)
    return trace
