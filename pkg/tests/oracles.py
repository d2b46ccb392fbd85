"""Independent brute-force oracles used by the profiler tests.

Pure-Python single-pass recomputations, deliberately not sharing any code
with datasteer.profiling.
"""

from __future__ import annotations

import math


def naive_mean(values: list[float]) -> float:
    return sum(values) / len(values)


def naive_sample_std(values: list[float]) -> float:
    n = len(values)
    if n <= 1:
        return 0.0
    m = naive_mean(values)
    return math.sqrt(sum((v - m) ** 2 for v in values) / (n - 1))


def naive_quantile(values: list[float], q: float) -> float:
    """Linear-interpolation quantile over the sorted values."""
    s = sorted(values)
    pos = q * (len(s) - 1)
    lo = math.floor(pos)
    hi = math.ceil(pos)
    if lo == hi:
        return s[lo]
    return s[lo] + (s[hi] - s[lo]) * (pos - lo)


def naive_frequency_table(values: list[str], cap: int = 20) -> list[tuple[str, int]]:
    counts: dict[str, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ordered[:cap]
