"""Exhaustive reference solver for tiny shells.

Shares nothing with the production solvers beyond shell bounds: every lattice
center of the shell near the bounding box and every integer radius up to
``2^(n+1)`` is tried, then a DP over subsets of the target picks the cheapest
union.  Only meant for a dozen points.
"""

from __future__ import annotations

import itertools
import math
from typing import Dict

import numpy as np

from .core import shell_bounds_sq

MAX_POINTS = 16


def _shell_centers(n: int, d: int, lo_box: np.ndarray, hi_box: np.ndarray):
    lo, hi = shell_bounds_sq(n)
    ranges = [range(int(a), int(b) + 1) for a, b in zip(lo_box, hi_box)]
    for c in itertools.product(*ranges):
        m = sum(v * v for v in c)
        if lo < m <= hi:
            yield c


def brute_force_nu(points, n: int, s: float) -> float:
    """Minimum of ``sum (r/2^n)^s`` over covers by lattice balls centered in ``S_n``."""
    pts = np.asarray(points, dtype=np.int64)
    if pts.ndim == 1:
        pts = pts[:, None]
    k, d = pts.shape
    if k == 0:
        return 0.0
    if k > MAX_POINTS:
        raise ValueError("too many points for exhaustive search")
    R = 2 ** (n + 1)
    best: Dict[int, float] = {}
    box_lo = np.maximum(pts.min(axis=0) - R, -(2 ** n))
    box_hi = np.minimum(pts.max(axis=0) + R, 2 ** n)
    for c in _shell_centers(n, d, box_lo, box_hi):
        d2 = ((pts - np.array(c)) ** 2).sum(axis=1)
        for r in range(1, R + 1):
            mask = 0
            for i in range(k):
                if d2[i] <= r * r:
                    mask |= 1 << i
            if mask == 0:
                continue
            cost = (r / 2.0 ** n) ** s
            if cost < best.get(mask, math.inf):
                best[mask] = cost
    full = (1 << k) - 1
    dp = [math.inf] * (full + 1)
    dp[0] = 0.0
    items = list(best.items())
    for m in range(full + 1):
        if dp[m] == math.inf:
            continue
        # extend by a ball covering the lowest uncovered point
        free = ~m & full
        if free == 0:
            continue
        low = free & -free
        for mask, cost in items:
            if mask & low:
                nm = m | mask
                v = dp[m] + cost
                if v < dp[nm]:
                    dp[nm] = v
    return dp[full]
