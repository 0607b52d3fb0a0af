"""Autocorrelation-based error analysis for Markov chain traces."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

__all__ = ["SeriesSummary", "autocorrelation", "integrated_autocorr_time", "summarize_series",
           "summarize"]


def autocorrelation(x) -> np.ndarray:
    """Normalised autocorrelation function via FFT; rho[0] = 1."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    y = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(y, n=size)
    acov = np.fft.irfft(f * np.conj(f), n=size)[:n] / n
    if acov[0] == 0:
        return np.full(n, np.nan)
    return acov / acov[0]


def integrated_autocorr_time(x) -> float:
    """tau = 1 + 2 sum_t rho_t, truncated by Geyer's initial positive sequence.

    Pair sums Gamma_m = rho_{2m} + rho_{2m+1} are accumulated while positive and
    forced to be non-increasing (initial monotone sequence).
    """
    rho = autocorrelation(x)
    if np.isnan(rho[0]):
        return float("nan")
    n = len(rho)
    total = 0.0
    prev = np.inf
    for m in range(n // 2):
        gamma = rho[2 * m] + rho[2 * m + 1]
        if gamma <= 0:
            break
        gamma = min(gamma, prev)
        total += gamma
        prev = gamma
    return max(2.0 * total - 1.0, 1.0 / n)


@dataclass
class SeriesSummary:
    mean: float
    variance: float
    stderr: float
    tau: float
    ess: float
    n: int
    degenerate: bool
    low_confidence: bool


def summarize_series(x) -> SeriesSummary:
    x = np.asarray(x, dtype=float)
    x = x[np.isfinite(x)]
    n = len(x)
    if n == 0:
        raise ValueError("empty trace")
    var = float(x.var(ddof=1)) if n > 1 else 0.0
    if var == 0.0:
        return SeriesSummary(float(x.mean()), 0.0, 0.0, float("nan"), float("nan"), n,
                             degenerate=True, low_confidence=True)
    tau = integrated_autocorr_time(x)
    ess = n / tau
    return SeriesSummary(
        mean=float(x.mean()),
        variance=var,
        stderr=float(np.sqrt(var / ess)),
        tau=float(tau),
        ess=float(ess),
        n=n,
        degenerate=False,
        low_confidence=bool(n < 10 * tau),
    )


def summarize(trace, acceptance: dict | None = None, keys=None) -> dict:
    """Per-observable mean, stderr, tau and ESS plus acceptance rates."""
    cols = trace.columns if hasattr(trace, "columns") else trace
    keys = keys or [k for k in cols if k not in ("sweep", "accept_site", "accept_global")]
    out = {k: asdict(summarize_series(cols[k])) for k in keys}
    if acceptance is not None:
        out["acceptance"] = dict(acceptance)
    out["low_confidence"] = any(v["low_confidence"] for k, v in out.items() if k in keys)
    return out
