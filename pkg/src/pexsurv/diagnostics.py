"""Posterior summaries: mean/median/sd, HPD intervals, effective sample size.

Conventions follow the usual multi-chain reporting: descriptive statistics
pool all chains, the effective sample size is computed from the first chain
only.  The HPD interval is the empirical shortest interval; ESS uses the
initial-positive-sequence truncation of the autocorrelation sum.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "InsufficientDataError",
    "SchemaError",
    "Summary",
    "hpd_interval",
    "effective_sample_size",
    "summarize",
    "write_summary_csv",
    "format_summary_table",
]


class InsufficientDataError(ValueError):
    """Too few draws for the requested statistic."""


class SchemaError(ValueError):
    """Chains disagree about which parameters they monitor."""


@dataclass(frozen=True)
class Summary:
    """Posterior summary row for one monitored scalar."""

    name: str
    mean: float
    median: float
    sd: float
    hpd_low: float
    hpd_high: float
    ess: float


def hpd_interval(draws, mass: float = 0.95) -> tuple[float, float]:
    """Shortest contiguous interval holding at least ``mass`` of the draws.

    Among all windows of ceil(mass * n) consecutive sorted draws the
    narrowest wins; ties resolve to the lowest window so the result is
    deterministic.
    """
    x = np.sort(np.asarray(draws, dtype=float))
    n = x.size
    if n < 10:
        raise InsufficientDataError(f"need at least 10 draws for an HPD interval, got {n}")
    if not 0.0 < mass < 1.0:
        raise ValueError("mass must lie in (0, 1)")
    k = int(np.ceil(mass * n))
    widths = x[k - 1 :] - x[: n - k + 1]
    i = int(np.argmin(widths))  # argmin returns the first (lowest) minimizer
    return float(x[i]), float(x[i + k - 1])


def _autocorrelations(x: np.ndarray) -> np.ndarray:
    n = x.size
    x = x - x.mean()
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:n] / n
    return acov / acov[0]


def effective_sample_size(draws) -> float:
    """ESS = n / (1 + 2 * sum of autocorrelations), truncated a la Geyer.

    Lag pairs (rho_{2k} + rho_{2k+1}) are summed while they stay positive.
    A zero-variance sequence has no information content: the ESS is defined
    as 0 and a RuntimeWarning flags the degeneracy.  The estimate is capped
    at n.
    """
    x = np.asarray(draws, dtype=float)
    n = x.size
    if n < 100:
        raise InsufficientDataError(f"need at least 100 draws for an ESS estimate, got {n}")
    if np.ptp(x) == 0.0:
        warnings.warn("zero-variance draws: effective sample size set to 0", RuntimeWarning)
        return 0.0
    rho = _autocorrelations(x)
    pairs = rho[: 2 * (n // 2)].reshape(-1, 2).sum(axis=1)
    neg = np.flatnonzero(pairs <= 0.0)
    keep = pairs[: neg[0]] if neg.size else pairs
    tau = 2.0 * float(keep.sum()) - 1.0
    return float(min(n / tau, n))


def summarize(chains, mass: float = 0.95) -> list[Summary]:
    """Pooled mean/median/sd/HPD per parameter; ESS from the first chain."""
    if not chains:
        raise ValueError("need at least one chain")
    names = chains[0].names
    for c in chains[1:]:
        if c.names != names:
            raise SchemaError(
                f"chains monitor different parameters: {names} vs {c.names}"
            )
    out = []
    for name in names:
        pooled = np.concatenate([c.draws[name] for c in chains])
        low, high = hpd_interval(pooled, mass)
        out.append(
            Summary(
                name=name,
                mean=float(pooled.mean()),
                median=float(np.median(pooled)),
                sd=float(pooled.std(ddof=1)),
                hpd_low=low,
                hpd_high=high,
                ess=effective_sample_size(chains[0].draws[name]),
            )
        )
    return out


def write_summary_csv(summaries, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["parameter", "mean", "median", "sd", "hpd_low", "hpd_high", "ess"])
        for s in summaries:
            writer.writerow(
                [s.name]
                + [repr(float(v)) for v in (s.mean, s.median, s.sd, s.hpd_low, s.hpd_high, s.ess)]
            )


def format_summary_table(summaries, mass: float = 0.95) -> str:
    """Aligned plain-text table: Mean, Median, S.D., HPD bounds, ESS."""
    pct = f"{100 * mass:g}%"
    header = f"{'parameter':<14} {'mean':>12} {'median':>12} {'sd':>12} {'hpd ' + pct:>26} {'ess':>10}"
    lines = [header, "-" * len(header)]
    for s in summaries:
        hpd = f"({s.hpd_low:.4f}, {s.hpd_high:.4f})"
        lines.append(
            f"{s.name:<14} {s.mean:>12.4f} {s.median:>12.4f} {s.sd:>12.4f} {hpd:>26} {s.ess:>10.1f}"
        )
    return "\n".join(lines) + "\n"
