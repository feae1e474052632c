"""Two-sample tests, moment comparisons and Monte Carlo intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import Callable, Iterable

import numpy as np

from .errors import UsageError

__all__ = [
    "TwoSampleResult",
    "ks_critical",
    "ks_statistic",
    "ks_two_sample",
    "ks_one_sample",
    "moment_compare",
    "mc_mean_ci",
]

MIN_SAMPLES = 50


@dataclass(frozen=True)
class TwoSampleResult:
    statistic: float
    threshold: float
    n1: int
    n2: int
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def ks_critical(level: float) -> float:
    """Asymptotic Kolmogorov critical value ``c(level) = sqrt(-ln(level / 2) / 2)``."""
    if not 0.0 < level < 1.0:
        raise UsageError("level must lie in (0, 1)")
    return math.sqrt(-0.5 * math.log(level / 2.0))


def ks_statistic(a, b) -> float:
    """``sup_x |F_a(x) - F_b(x)|`` for two empirical distributions."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.abs(fa - fb).max())


def ks_two_sample(a, b, level: float = 0.01) -> TwoSampleResult:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size < MIN_SAMPLES or b.size < MIN_SAMPLES:
        raise UsageError(f"KS test needs at least {MIN_SAMPLES} samples per side")
    stat = ks_statistic(a, b)
    thr = ks_critical(level) * math.sqrt((a.size + b.size) / (a.size * b.size))
    return TwoSampleResult(stat, thr, a.size, b.size, stat <= thr)


def ks_one_sample(a, cdf: Callable[[np.ndarray], np.ndarray], level: float = 0.01) -> TwoSampleResult:
    """One-sample KS against a continuous CDF with threshold ``c(level) / sqrt(n)``.

    ``n2`` is reported as 0.
    """
    a = np.sort(np.asarray(a, dtype=float).ravel())
    n = a.size
    if n < MIN_SAMPLES:
        raise UsageError(f"KS test needs at least {MIN_SAMPLES} samples")
    f = np.asarray(cdf(a), dtype=float)
    i = np.arange(1, n + 1)
    stat = float(max((i / n - f).max(), (f - (i - 1) / n).max()))
    thr = ks_critical(level) / math.sqrt(n)
    return TwoSampleResult(stat, thr, n, 0, stat <= thr)


def moment_compare(a, b, orders: Iterable[int] = (1, 2), tol_in_stderr: float = 4.0) -> TwoSampleResult:
    """Largest ``|mean(a^p) - mean(b^p)| / pooled stderr`` over the requested orders."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size < 2 or b.size < 2:
        raise UsageError("moment comparison needs at least two samples per side")
    worst = 0.0
    for p in orders:
        if p not in (1, 2, 3, 4):
            raise UsageError("orders must be drawn from {1, 2, 3, 4}")
        pa, pb = a**p, b**p
        diff = abs(pa.mean() - pb.mean())
        se = math.sqrt(pa.var(ddof=1) / a.size + pb.var(ddof=1) / b.size)
        if se == 0.0:
            z = 0.0 if diff == 0.0 else math.inf
        else:
            z = diff / se
        worst = max(worst, z)
    return TwoSampleResult(worst, tol_in_stderr, a.size, b.size, worst <= tol_in_stderr)


def mc_mean_ci(samples) -> tuple[float, float]:
    """Sample mean and its standard error ``sd / sqrt(n)`` along the first axis."""
    x = np.asarray(samples, dtype=float)
    n = x.shape[0]
    if n < 2:
        raise UsageError("need at least two samples")
    mean = x.mean(axis=0)
    se = x.std(axis=0, ddof=1) / math.sqrt(n)
    if np.ndim(mean) == 0:
        return float(mean), float(se)
    return mean, se
