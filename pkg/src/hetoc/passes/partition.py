"""Range partitioning by duty ratios.

Splits an iteration range [lb, ub) into contiguous per-device sub-ranges using
cumulative rounding (half up), with the final endpoint forced to ub so that
the sub-ranges always tile the full range exactly.
"""

from __future__ import annotations

import math


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def partition_range(lb: int, ub: int, ratios: list[float]) -> list[tuple[int, int]]:
    """Per-ratio sub-ranges of [lb, ub): disjoint, ordered, union exact."""
    if lb > ub:
        raise ValueError(f"range [{lb}, {ub}) is inverted")
    if not ratios:
        raise ValueError("need at least one ratio")
    n = ub - lb
    bounds = [lb]
    cum = 0.0
    for r in ratios[:-1]:
        cum += r
        b = lb + round_half_up(n * cum)
        bounds.append(min(max(b, bounds[-1]), ub))
    bounds.append(ub)
    return list(zip(bounds, bounds[1:]))
