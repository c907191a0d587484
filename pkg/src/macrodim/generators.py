"""Synthetic lattice sets with known or literature-known macroscopic dimension."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .core import SparseSet, enumerate_shell_lattice, shell_bounds_sq, shells_of

SPLITMIX_ID = "splitmix64/lemire6"
GOLDEN_GAMMA = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)

# +e1, -e1, +e2, -e2, +e3, -e3
STEPS_3D = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=np.int64)


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    d: int = 1
    s_star: Optional[float] = None
    n_max: Optional[int] = None
    steps: Optional[int] = None
    seed: Optional[int] = None
    prng: Optional[str] = None

    def to_json(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


def lacunary_spacing(n: int, d: int, s_star: float) -> int:
    return max(1, math.ceil(2.0 ** (n * (1.0 - s_star / d)) - 1e-12))


def gen_lacunary(d: int, s_star: float, n_max: int) -> SparseSet:
    """In every shell keep the lattice points whose coordinates are all multiples
    of ``g_n = max(1, ceil(2**(n (1 - s_star/d))))``; about ``2**(n s_star)`` points per shell."""
    if not (0 < s_star <= d):
        raise ValueError("s_star must lie in (0, d]")
    shells = {}
    for n in range(n_max + 1):
        g = lacunary_spacing(n, d, s_star)
        R = 2 ** n
        k = np.arange(-(R // g), R // g + 1, dtype=np.int64) * g
        grids = np.meshgrid(*([k] * d), indexing="ij")
        pts = np.column_stack([a.ravel() for a in grids])
        lo, hi = shell_bounds_sq(n)
        m = np.einsum("ij,ij->i", pts, pts)
        shells[n] = pts[(m > lo) & (m <= hi)]
    return SparseSet(d, n_max, shells)


def gen_full(d: int, n_max: int) -> SparseSet:
    return SparseSet(d, n_max, {n: enumerate_shell_lattice(n, d) for n in range(n_max + 1)})


def gen_singletons(d: int, n_max: int) -> SparseSet:
    """One point per shell, ``(2**n, 0, ...)``."""
    shells = {}
    for n in range(n_max + 1):
        p = np.zeros((1, d), dtype=np.int64)
        p[0, 0] = 2 ** n
        shells[n] = p
    return SparseSet(d, n_max, shells)


def splitmix64(seed: int, count: int, offset: int = 0) -> np.ndarray:
    """Counter-based SplitMix64: output ``i`` mixes ``seed + (offset + i + 1) * gamma`` (mod 2**64)."""
    idx = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
    z = np.uint64(seed % 2 ** 64) + idx * GOLDEN_GAMMA
    z = (z ^ (z >> np.uint64(30))) * MIX1
    z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


def uniform01(seed: int, count: int, offset: int = 0) -> np.ndarray:
    """Doubles in [0, 1) from the top 53 bits of :func:`splitmix64`."""
    return (splitmix64(seed, count, offset) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


def walk_directions(seed: int, steps: int) -> np.ndarray:
    """Step directions in {0..5}: multiply-shift of the high 32 bits (unbiased enough for 6 buckets)."""
    z = splitmix64(seed, steps)
    return (((z >> np.uint64(32)) * np.uint64(6)) >> np.uint64(32)).astype(np.int64)


def walk_path(steps: int, seed: int, chunk: int = 1 << 20) -> np.ndarray:
    """Positions of the simple random walk on Z^3 at times 0..steps."""
    pos = np.zeros((steps + 1, 3), dtype=np.int64)
    cur = np.zeros(3, dtype=np.int64)
    done = 0
    while done < steps:
        k = min(chunk, steps - done)
        z = splitmix64(seed, k, done)
        dirs = (((z >> np.uint64(32)) * np.uint64(6)) >> np.uint64(32)).astype(np.int64)
        path = np.cumsum(STEPS_3D[dirs], axis=0) + cur
        pos[done + 1:done + 1 + k] = path
        cur = path[-1]
        done += k
    return pos


def gen_walk_range(steps: int, seed: int, n_max: Optional[int] = None) -> SparseSet:
    """Sites visited by a seeded simple random walk on Z^3 started at the origin."""
    if steps < 0 or steps > 10 ** 7:
        raise ValueError("steps must lie in [0, 10^7]")
    sites = np.unique(walk_path(steps, seed), axis=0)
    top = int(shells_of(sites).max())
    if n_max is None:
        n_max = top
    elif top > n_max:
        sites = sites[shells_of(sites) <= n_max]
    return SparseSet.from_points(sites, d=3, n_max=n_max)


def gen_product(A: SparseSet, B: SparseSet, n_max: Optional[int] = None) -> SparseSet:
    """``{(a, b)}`` re-binned by the planar norm; shells above ``n_max`` are dropped."""
    if A.d != 1 or B.d != 1:
        raise ValueError("gen_product takes two one-dimensional sets")
    if n_max is None:
        n_max = max(A.n_max, B.n_max)
    a = A.all_points()[:, 0]
    b = B.all_points()[:, 0]
    if len(a) == 0 or len(b) == 0:
        return SparseSet(2, n_max, {})
    # drop factors that can only produce points beyond n_max
    lim = 2 ** n_max
    a = a[np.abs(a) <= lim]
    b = b[np.abs(b) <= lim]
    pts = np.column_stack([np.repeat(a, len(b)), np.tile(b, len(a))])
    sh = shells_of(pts)
    pts = pts[sh <= n_max]
    return SparseSet.from_points(pts, d=2, n_max=n_max)
