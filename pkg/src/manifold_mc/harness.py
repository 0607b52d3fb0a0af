"""Scaling sweeps across N: seeding, orchestration, aggregation and persistence.

Output layout of a sweep rooted at ``out``::

    out/traces/N{N}_r{replica}.csv     trace columns sweep,energy,radius,accept_site,accept_global
    out/traces/N{N}_r{replica}.json    sidecar with params, schedule, seed, diagnostics
    out/points.csv                     N,mean_radius,stderr,ess,n_chains
    out/fit.json                       scaling fit with target exponents
    out/manifest.json                  written last, by atomic rename
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .gff import ModelParams
from .mcmc import McmcSchedule, run_chain
from .observables import ScalingFit, fit_scaling_exponent, theoretical_exponents

__all__ = [
    "ExperimentConfig",
    "ResultManifest",
    "replica_seed",
    "load_config",
    "run_sweep",
    "verify_manifest",
    "default_jobs",
]

log = logging.getLogger(__name__)

MIN_ESS = 50.0


@dataclass(frozen=True)
class ExperimentConfig:
    N_values: tuple
    d: int = 2
    D: int = 1
    beta: float = 1.0
    gamma: float = 1.0
    schedule: McmcSchedule = field(default_factory=McmcSchedule)
    replicas: int = 4
    seed: int = 0
    out: str = "out"
    rho: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "N_values", tuple(int(n) for n in self.N_values))
        if len(set(self.N_values)) < 3:
            raise ValueError("a scaling sweep needs at least 3 distinct N values")
        if self.replicas < 2:
            raise ValueError("need at least 2 replicas per N for a standard error")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        for N in self.N_values:
            ModelParams.create(N, self.d, self.D, self.beta, self.gamma)

    def model(self, N: int) -> ModelParams:
        return ModelParams.create(N, self.d, self.D, self.beta, self.gamma)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["N_values"] = list(self.N_values)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        sched = data.get("schedule", {})
        if isinstance(sched, dict):
            sknown = {f.name for f in dataclasses.fields(McmcSchedule)}
            bad = set(sched) - sknown
            if bad:
                raise ValueError(f"unknown schedule keys: {sorted(bad)}")
            data["schedule"] = McmcSchedule(**sched)
        return cls(**data)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return ExperimentConfig.from_dict(json.load(fh))


def replica_seed(master: int, N: int, replica: int) -> np.random.SeedSequence:
    """Independent stream for chain (N, replica); unaffected by how many replicas exist."""
    return np.random.SeedSequence(entropy=int(master), spawn_key=(int(N), int(replica)))


def default_jobs() -> int:
    return int(os.environ.get("MANIFOLD_MC_JOBS", "1"))


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _run_one(config: ExperimentConfig, N: int, replica: int, out: str) -> dict:
    t0 = time.perf_counter()
    trace = run_chain(config.model(N), config.schedule, replica_seed(config.seed, N, replica))
    stem = Path(out, "traces", f"N{N}_r{replica}")
    trace.write_csv(stem.with_suffix(".csv"))
    trace.write_sidecar(stem.with_suffix(".json"))
    rad = trace.diagnostics.get("radius", {})
    return {
        "N": N,
        "replica": replica,
        "trace": str(stem.with_suffix(".csv").relative_to(out)),
        "sidecar": str(stem.with_suffix(".json").relative_to(out)),
        "mean_radius": rad.get("mean", float("nan")),
        "stderr": rad.get("stderr", float("nan")),
        "ess": rad.get("ess", float("nan")),
        "tau": rad.get("tau", float("nan")),
        "low_confidence": bool(trace.diagnostics.get("low_confidence", True)),
        "aborted": trace.aborted,
        "seconds": time.perf_counter() - t0,
    }


@dataclass
class ResultManifest:
    config: dict
    runs: list
    aggregates: list
    fit: dict | None
    warnings: list
    version: str = __version__
    timing: dict = field(default_factory=dict)
    path: str | None = None

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out.pop("path")
        return out

    @property
    def scaling_fit(self) -> ScalingFit | None:
        if self.fit is None:
            return None
        keys = {f.name for f in dataclasses.fields(ScalingFit)}
        return ScalingFit(**{k: v for k, v in self.fit.items() if k in keys})

    @classmethod
    def load(cls, path) -> "ResultManifest":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        return cls(**data, path=str(path))


def _aggregate(runs: list, min_ess: float) -> tuple[list, list]:
    aggregates, warnings = [], []
    for N in sorted({r["N"] for r in runs}):
        chains = [r for r in runs if r["N"] == N]
        for r in chains:
            if r["low_confidence"]:
                warnings.append(f"N={N} replica {r['replica']}: trace shorter than 10 autocorrelation times")
            if r["aborted"]:
                warnings.append(f"N={N} replica {r['replica']}: chain aborted")
        good = [r for r in chains if np.isfinite(r["ess"]) and r["ess"] >= min_ess and not r["aborted"]]
        for r in chains:
            if r not in good:
                warnings.append(f"N={N} replica {r['replica']}: ESS {r['ess']:.1f} < {min_ess}, excluded")
        if not good:
            warnings.append(f"N={N}: no usable chains")
            continue
        ess = np.array([r["ess"] for r in good])
        means = np.array([r["mean_radius"] for r in good])
        ses = np.array([r["stderr"] for r in good])
        w = ess / ess.sum()
        mean = float(np.sum(w * means))
        within = float(np.sqrt(np.sum(w**2 * ses**2)))
        between = float(means.std(ddof=1) / math.sqrt(len(means))) if len(means) > 1 else 0.0
        aggregates.append({"N": N, "mean_radius": mean, "stderr": max(within, between),
                           "stderr_within": within, "stderr_between": between,
                           "ess": float(ess.sum()), "n_chains": len(good)})
    return aggregates, warnings


def _write_points(path, aggregates) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["N", "mean_radius", "stderr", "ess", "n_chains"])
        for a in aggregates:
            writer.writerow([a["N"], repr(a["mean_radius"]), repr(a["stderr"]), repr(a["ess"]),
                             a["n_chains"]])


def _atomic_json(path, data) -> None:
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def run_sweep(config: ExperimentConfig, jobs: int | None = None,
              min_ess: float = MIN_ESS) -> ResultManifest:
    """Run every (N, replica) chain, aggregate mean radii, fit the exponent, persist."""
    jobs = default_jobs() if jobs is None else jobs
    out = Path(config.out)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    tasks = [(N, r) for N in config.N_values for r in range(config.replicas)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_one, config, N, r, str(out)) for N, r in tasks]
            runs = [f.result() for f in futures]
    else:
        runs = [_run_one(config, N, r, str(out)) for N, r in tasks]
    runs.sort(key=lambda r: (r["N"], r["replica"]))
    seconds = {f"N{r['N']}_r{r['replica']}": r.pop("seconds") for r in runs}
    for r in runs:
        r["sha256"] = _sha256(out / r["trace"])
        r["sidecar_sha256"] = _sha256(out / r["sidecar"])
    aggregates, warnings = _aggregate(runs, min_ess)
    _write_points(out / "points.csv", aggregates)
    fit = None
    if len(aggregates) >= 3:
        sf = fit_scaling_exponent([(a["N"], a["mean_radius"], a["stderr"]) for a in aggregates],
                                  config.rho)
        fit = dataclasses.asdict(sf)
        fit["points"] = [list(p) for p in sf.points]
        try:
            lo, hi = theoretical_exponents(config.d, config.D)
            fit["target_exponents"] = {"lower": lo, "upper": hi}
        except ValueError:
            fit["target_exponents"] = None
        _atomic_json(out / "fit.json", fit)
    else:
        warnings.append("fewer than 3 usable N values; no scaling fit")
    manifest = ResultManifest(config=config.to_dict(), runs=runs, aggregates=aggregates, fit=fit,
                              warnings=warnings,
                              timing={"total_seconds": time.perf_counter() - t0, "runs": seconds,
                                      "finished": time.strftime("%Y-%m-%dT%H:%M:%S")})
    manifest.path = str(out / "manifest.json")
    _atomic_json(manifest.path, manifest.to_dict())
    return manifest


def verify_manifest(path) -> list:
    """Return a list of problems: missing files or hash mismatches."""
    manifest = ResultManifest.load(path)
    root = Path(path).parent
    problems = []
    for r in manifest.runs:
        for key, hkey in (("trace", "sha256"), ("sidecar", "sidecar_sha256")):
            p = root / r[key]
            if not p.exists():
                problems.append(f"missing {p}")
            elif _sha256(p) != r[hkey]:
                problems.append(f"hash mismatch for {p}")
    return problems
