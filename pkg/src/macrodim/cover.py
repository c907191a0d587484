"""Per-shell proper covers: exact and heuristic solvers for the cover cost
``nu_n^s``, the radius statistic ``beta_n^s``, cover checking and the greedy
5r-covering selection.

A proper cover of ``E ∩ S_n`` is a finite family of closed balls with integer
centers inside ``S_n`` and integer radii ``>= 1`` whose union contains the
points; its cost is ``sum (r_i / 2**n) ** s``.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .core import Ball, ShellSet, ceil_sqrt, enumerate_shell_lattice, shell_bounds_sq, shells_of
from .errors import CapExceeded

CAP_1D = 100_000
CAP_BB = 50_000
BB_NODE_BUDGET = 2_000_000
ENUM_NODE_BUDGET = 200_000
REL_TOL = 1e-12
GREEDY_FULL_RADII = 64
GREEDY_MAX_POINTS = 2000
AUTO_NODE_BUDGET = 20_000


@dataclass(frozen=True)
class Cover:
    n: int
    balls: Tuple[Ball, ...] = ()

    def cost(self, s: float) -> float:
        return cover_cost(self.balls, self.n, s)


@dataclass(frozen=True)
class CoverSolution:
    cover: Cover
    s: float
    cost: float
    exact: bool
    beta: float
    solver: str = ""
    nodes: int = 0

    @property
    def n(self) -> int:
        return self.cover.n

    def to_json(self) -> dict:
        return {
            "n": self.cover.n,
            "s": self.s,
            "cost": self.cost,
            "exact": self.exact,
            "balls": [b.to_json() for b in self.cover.balls],
        }


@dataclass(frozen=True)
class BetaResult:
    value: float
    mode: str
    complete: bool
    covers_found: int = 1


def cover_cost(balls: Sequence[Ball], n: int, s: float) -> float:
    scale = 2.0 ** n
    return math.fsum((b.radius / scale) ** s for b in balls)


def _solution(balls, n, s, exact, solver, nodes=0) -> CoverSolution:
    balls = tuple(sorted(balls, key=lambda b: (b.center, b.radius)))
    beta = max((b.radius for b in balls), default=0) / 2.0 ** n
    return CoverSolution(Cover(n, balls), float(s), cover_cost(balls, n, s), exact, beta, solver, nodes)


def _tight(a: float, b: float) -> bool:
    return abs(a - b) <= REL_TOL * max(1.0, abs(a), abs(b))


def in_shell_center(center, n: int) -> bool:
    lo, hi = shell_bounds_sq(n)
    m = sum(int(c) * int(c) for c in center)
    return lo < m <= hi


def cover_verify(target: ShellSet, cover: Cover) -> bool:
    """True iff every center is a lattice point of ``S_n``, radii are >= 1 and all points are covered."""
    n = target.n
    if cover.n != n:
        return False
    for b in cover.balls:
        if len(b.center) != target.d and len(target):
            return False
        if b.radius < 1 or not in_shell_center(b.center, n):
            return False
    if len(target) == 0:
        return True
    covered = np.zeros(len(target), dtype=bool)
    pts = target.points
    for b in cover.balls:
        diff = pts - np.asarray(b.center, dtype=np.int64)
        covered |= np.einsum("ij,ij->i", diff, diff) <= b.radius * b.radius
    return bool(covered.all())


# ---------------------------------------------------------------------------
# one dimension: exact dynamic programming over contiguous groups


def _components_1d(n: int) -> List[Tuple[int, int]]:
    if n == 0:
        return [(-1, 1)]
    a, b = 2 ** (n - 1) + 1, 2 ** n
    return [(-b, -a), (a, b)]


def _group_balls(lo: int, hi: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Minimal admissible radius and smallest center achieving it, for the
    groups ``[lo, hi[j]]`` of a sorted 1D point list."""
    hi = np.asarray(hi, dtype=np.int64)
    best_r = None
    best_c = None
    mid_lo = (lo + hi) // 2
    for a, b in _components_1d(n):
        r = None
        for c0 in (mid_lo, mid_lo + 1):
            c = np.clip(c0, a, b)
            rc = np.maximum(c - lo, hi - c)
            r = rc if r is None else np.minimum(r, rc)
        r = np.maximum(r, 1)
        c = np.maximum(hi - r, a)
        if best_r is None:
            best_r, best_c = r, c
        else:
            better = r < best_r
            best_r = np.where(better, r, best_r)
            best_c = np.where(better, c, best_c)
    return best_r, best_c


def _cost_table(n: int, grid: Sequence[float]) -> np.ndarray:
    """``T[k, r] = (r / 2**n) ** grid[k]`` for every radius a 1D group can need."""
    rel = np.arange(2 ** (n + 1) + 1, dtype=np.float64) / 2.0 ** n
    return rel[None, :] ** np.asarray(grid, dtype=np.float64)[:, None]


def _dp_1d(x: np.ndarray, n: int, grid: Sequence[float]):
    """``g[k, i]``: optimal cost of covering points ``i..`` at exponent ``grid[k]``."""
    N = len(x)
    T = _cost_table(n, grid)
    g = np.zeros((len(grid), N + 1))
    for i in range(N - 1, -1, -1):
        r, _ = _group_balls(int(x[i]), x[i:], n)
        g[:, i] = (T[:, r] + g[:, i + 1:]).min(axis=1)
    return g, T


def _tight_row(x, g, T, k, i, n):
    r, c = _group_balls(int(x[i]), x[i:], n)
    tot = T[k, r] + g[k, i + 1:]
    ok = np.flatnonzero(np.abs(tot - g[k, i]) <= REL_TOL * max(1.0, g[k, i]))
    return r, c, ok


def _check_1d(target: ShellSet, cap: int):
    if target.d != 1:
        raise ValueError("nu_exact_1d needs a one-dimensional shell set")
    if len(target) > cap:
        raise CapExceeded(f"{len(target)} points exceed the 1D exact cap {cap}")


def nu_exact_1d_many(target: ShellSet, grid: Sequence[float], cap: int = CAP_1D) -> List[CoverSolution]:
    """:func:`nu_exact_1d` for several exponents sharing one sweep over the points."""
    _check_1d(target, cap)
    n = target.n
    if len(target) == 0:
        return [_solution((), n, s, True, "exact-1d") for s in grid]
    x = target.points[:, 0]
    g, T = _dp_1d(x, n, grid)
    out = []
    for k, s in enumerate(grid):
        balls = []
        i = 0
        while i < len(x):
            r, c, ok = _tight_row(x, g, T, k, i, n)
            # smallest center, then smallest radius, then the longest group
            key = np.lexsort((-ok, r[ok], c[ok]))
            j = int(ok[key[0]])
            balls.append(Ball((int(c[j]),), int(r[j])))
            i = i + j + 1
        out.append(_solution(balls, n, s, True, "exact-1d"))
    return out


def nu_exact_1d(target: ShellSet, s: float, cap: int = CAP_1D) -> CoverSolution:
    """Exact optimum for d = 1 by dynamic programming over sorted points.

    In one dimension an optimal cover can always be read as a partition of
    the sorted points into contiguous groups, each covered by its cheapest
    admissible ball; groups may straddle the two sign components.
    """
    return nu_exact_1d_many(target, [s], cap)[0]


def _beta_enumerate_1d(target: ShellSet, s: float, cap: int = CAP_1D) -> BetaResult:
    _check_1d(target, cap)
    n = target.n
    if len(target) == 0:
        return BetaResult(0.0, "enumerate", True, 1)
    x = target.points[:, 0]
    N = len(x)
    g, T = _dp_1d(x, n, [s])
    # h[i]: largest radius used along any optimal completion from i
    h = np.zeros(N + 1, dtype=np.int64)
    paths = [0] * (N + 1)
    paths[N] = 1
    for i in range(N - 1, -1, -1):
        r, _, ok = _tight_row(x, g, T, 0, i, n)
        h[i] = max(max(int(r[j]), int(h[i + j + 1])) for j in ok)
        paths[i] = sum(paths[i + j + 1] for j in ok)
    return BetaResult(h[0] / 2.0 ** n, "enumerate", True, paths[0])


# ---------------------------------------------------------------------------
# two and three dimensions: candidate balls and branch and bound


@dataclass
class Candidates:
    n: int
    k: int
    masks: List[int]
    costs: List[float]
    balls: List[Ball]

    def __len__(self):
        return len(self.masks)


def candidate_centers(target: ShellSet) -> np.ndarray:
    """Lattice points of ``S_n`` within the bounding box of the targets expanded by ``2**(n+1)``."""
    n = target.n
    cent = enumerate_shell_lattice(n, target.d)
    lo = target.points.min(axis=0) - 2 ** (n + 1)
    hi = target.points.max(axis=0) + 2 ** (n + 1)
    keep = np.all((cent >= lo) & (cent <= hi), axis=1)
    return cent[keep]


def _shell_volume(n: int, d: int) -> float:
    if n == 0:
        return 1.0
    unit = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}[d]
    return unit * (2.0 ** (n * d) - 2.0 ** ((n - 1) * d))


def build_candidates(target: ShellSet, s: float, cap: int = CAP_BB, prune: bool = True) -> Candidates:
    """All useful balls: every admissible center with every breakpoint radius
    ``max(1, ceil(dist))`` up to ``2**(n+1)``, one cheapest ball per covered
    subset, optionally with dominated balls removed."""
    n = target.n
    pts = target.points
    k = len(pts)
    if 0.9 * _shell_volume(n, target.d) * k > cap:
        raise CapExceeded(f"shell {n} has about {_shell_volume(n, target.d):.0f} centers; x {k} points exceeds the candidate cap {cap}")
    cent = candidate_centers(target)
    if len(cent) * k > cap:
        raise CapExceeded(f"{len(cent)} centers x {k} points exceed the candidate cap {cap}")
    rmax = 2 ** (n + 1)
    scale = 2.0 ** n
    best: Dict[int, Tuple[float, int, int]] = {}
    bits = [1 << j for j in range(k)]
    for ci, c in enumerate(cent):
        diff = pts - c
        rad = np.maximum(ceil_sqrt(np.einsum("ij,ij->i", diff, diff)), 1)
        order = np.argsort(rad, kind="stable")
        mask = 0
        pos = 0
        while pos < k:
            r = int(rad[order[pos]])
            if r > rmax:
                break
            while pos < k and rad[order[pos]] == r:
                mask |= bits[order[pos]]
                pos += 1
            cost = (r / scale) ** s
            prev = best.get(mask)
            if prev is None or cost < prev[0]:
                best[mask] = (cost, ci, r)
    items = sorted(best.items(), key=lambda kv: (kv[1][0], -kv[0].bit_count(), kv[1][1]))
    masks, costs, balls = [], [], []
    for mask, (cost, ci, r) in items:
        if prune and any((m & mask) == mask for m in masks):
            # an earlier (cheaper or equal) ball covers a superset
            continue
        masks.append(mask)
        costs.append(cost)
        balls.append(Ball(tuple(int(v) for v in cent[ci]), r))
    return Candidates(n, k, masks, costs, balls)


def _greedy_on(cands: Candidates, full: int) -> Tuple[float, List[int]]:
    chosen = []
    unc = full
    total = []
    while unc:
        best, bi = -1.0, -1
        for i, m in enumerate(cands.masks):
            g = (m & unc).bit_count()
            if g and g / cands.costs[i] > best:
                best, bi = g / cands.costs[i], i
        chosen.append(bi)
        total.append(cands.costs[bi])
        unc &= ~cands.masks[bi]
    return math.fsum(total), chosen


class _BB:
    def __init__(self, cands: Candidates, node_budget: int, collect: bool):
        self.c = cands
        self.full = (1 << cands.k) - 1
        self.budget = node_budget
        self.collect = collect
        self.nodes = 0
        self.memo: Dict[int, float] = {}
        self.by_elem: List[List[int]] = [[] for _ in range(cands.k)]
        for i, m in enumerate(cands.masks):
            for e in range(cands.k):
                if m >> e & 1:
                    self.by_elem[e].append(i)
        for e in range(cands.k):
            self.by_elem[e].sort(key=lambda i: (cands.costs[i], -cands.masks[i].bit_count(), i))
        # static per-element lower bound weights
        self.w = [min(cands.costs[i] / cands.masks[i].bit_count() for i in self.by_elem[e]) for e in range(cands.k)]
        self.best = math.inf
        self.best_sel: Optional[List[int]] = None
        self.found: List[Tuple[int, ...]] = []
        self.complete = True

    def lower(self, unc: int) -> float:
        lb = 0.0
        u = unc
        while u:
            low = u & -u
            lb += self.w[low.bit_length() - 1]
            u ^= low
        return lb

    def over(self, value: float) -> bool:
        if self.collect:
            return value > self.best and not _tight(value, self.best)
        return value >= self.best or _tight(value, self.best)

    def run(self, unc: int, cost: float, sel: List[int]):
        if unc == 0:
            if self.collect:
                if cost < self.best and not _tight(cost, self.best):
                    self.best = cost
                    self.found = []
                self.found.append(tuple(sorted(sel)))
            elif cost < self.best and not _tight(cost, self.best):
                self.best = cost
                self.best_sel = list(sel)
            return
        self.nodes += 1
        if self.nodes > self.budget:
            self.complete = False
            raise _Stop
        if self.over(cost + self.lower(unc)):
            return
        seen = self.memo.get(unc)
        if seen is not None and (cost > seen if self.collect else cost >= seen):
            if not (self.collect and _tight(cost, seen)):
                return
        if seen is None or cost < seen:
            self.memo[unc] = cost
        # branch on the uncovered element with the fewest candidate balls
        u = unc
        e_best, n_best = -1, None
        while u:
            low = u & -u
            e = low.bit_length() - 1
            cnt = len(self.by_elem[e])
            if n_best is None or cnt < n_best:
                e_best, n_best = e, cnt
            u ^= low
        for i in self.by_elem[e_best]:
            sel.append(i)
            self.run(unc & ~self.c.masks[i], cost + self.c.costs[i], sel)
            sel.pop()


class _Stop(Exception):
    pass


def _check_bb(target: ShellSet):
    if target.d not in (2, 3):
        raise ValueError("nu_exact_bb handles d in {2, 3}; use nu_exact_1d for d = 1")


def nu_exact_bb(target: ShellSet, s: float, cap: int = CAP_BB, node_budget: int = BB_NODE_BUDGET) -> CoverSolution:
    """Certified optimum by branch and bound over dominance-pruned candidate balls."""
    _check_bb(target)
    n = target.n
    if len(target) == 0:
        return _solution((), n, s, True, "exact-bb")
    cands = build_candidates(target, s, cap)
    full = (1 << cands.k) - 1
    ub, gsel = _greedy_on(cands, full)
    bb = _BB(cands, node_budget, collect=False)
    bb.best = ub * (1 + 4 * REL_TOL) + 1e-300
    bb.best_sel = gsel
    try:
        bb.run(full, 0.0, [])
    except _Stop:
        raise CapExceeded(f"branch and bound exceeded its node budget ({node_budget})") from None
    balls = [cands.balls[i] for i in bb.best_sel]
    return _solution(balls, n, s, True, "exact-bb", bb.nodes)


def _beta_enumerate_bb(target: ShellSet, s: float, cap: int, node_budget: int) -> BetaResult:
    _check_bb(target)
    n = target.n
    if len(target) == 0:
        return BetaResult(0.0, "enumerate", True, 1)
    opt = nu_exact_bb(target, s, cap)
    canon = opt.beta
    cands = build_candidates(target, s, cap)
    bb = _BB(cands, node_budget, collect=True)
    bb.best = opt.cost
    try:
        bb.run((1 << cands.k) - 1, 0.0, [])
    except _Stop:
        pass
    found = set(bb.found)
    value = canon
    for sel in found:
        value = max(value, max(cands.balls[i].radius for i in sel) / 2.0 ** n)
    return BetaResult(value, "enumerate", bb.complete, max(len(found), 1))


def nu_exact(target: ShellSet, s: float, **kw) -> CoverSolution:
    if target.d == 1:
        return nu_exact_1d(target, s, **{k: v for k, v in kw.items() if k == "cap"})
    return nu_exact_bb(target, s, **kw)


def beta(target: ShellSet, s: float, mode: str = "canonical", cap: Optional[int] = None,
         node_budget: int = ENUM_NODE_BUDGET) -> BetaResult:
    """Largest relative radius of optimal covers.

    ``canonical`` reads it off the tie-broken optimum (a lower bound for the
    maximum over all optimal covers); ``enumerate`` searches all optimal covers
    and reports whether the search finished within ``node_budget``.
    """
    if mode not in ("canonical", "enumerate"):
        raise ValueError("mode must be 'canonical' or 'enumerate'")
    if len(target) == 0:
        return BetaResult(0.0, mode, True, 1)
    if target.d == 1:
        cap = CAP_1D if cap is None else cap
        if mode == "canonical":
            return BetaResult(nu_exact_1d(target, s, cap).beta, mode, True)
        return _beta_enumerate_1d(target, s, cap)
    cap = CAP_BB if cap is None else cap
    if mode == "canonical":
        return BetaResult(nu_exact_bb(target, s, cap).beta, mode, True)
    return _beta_enumerate_bb(target, s, cap, node_budget)


# ---------------------------------------------------------------------------
# greedy upper bound


def _lattice_ball_count(r: int, d: int) -> int:
    """Upper bound on the number of lattice points in a closed ball of radius r."""
    return (2 * r + 1) ** d


def nu_greedy(target: ShellSet, s: float, full_radii: int = GREEDY_FULL_RADII) -> CoverSolution:
    """Greedy ratio cover with balls centred on the target points.

    Radii are all breakpoints for small shells and a doubling ladder otherwise;
    every selected ball is shrunk afterwards to the smallest radius that still
    covers the points it was chosen for.
    """
    n = target.n
    N = len(target)
    if N == 0:
        return _solution((), n, s, False, "greedy")
    pts = target.points
    scale = 2.0 ** n
    rmax = 2 ** (n + 1)
    d = target.d
    tree = cKDTree(pts.astype(np.float64))
    span = int(ceil_sqrt(np.array([int(((pts.max(axis=0) - pts.min(axis=0)) ** 2).sum())]))[0])
    top = max(1, min(rmax, span))
    if N <= full_radii:
        diff = pts[:, None, :] - pts[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        radii = np.unique(np.maximum(ceil_sqrt(d2.ravel()), 1))
        radii = radii[radii <= rmax]
    else:
        ladder = [1]
        while ladder[-1] < top:
            ladder.append(min(ladder[-1] * 2, top))
        radii = np.array(ladder, dtype=np.int64)
    radii = [int(r) for r in radii]
    costs = [(r / scale) ** s for r in radii]

    uncovered = np.ones(N, dtype=bool)
    left = N
    heap = []
    for ri, r in enumerate(radii):
        ub = min(N, _lattice_ball_count(r, d)) / costs[ri]
        for i in range(N):
            heap.append((-ub, ri, i))
    heapq.heapify(heap)
    chosen = []
    eps = 1e-7
    snap_tree, snap_idx = tree, np.arange(N)
    while left:
        negv, ri, i = heapq.heappop(heap)
        loc = snap_tree.query_ball_point(pts[i].astype(np.float64), radii[ri] + eps)
        idx = snap_idx[np.asarray(loc, dtype=np.int64)] if len(loc) else np.zeros(0, dtype=np.int64)
        idx = idx[uncovered[idx]]
        gain = len(idx)
        if gain == 0:
            continue
        val = gain / costs[ri]
        if heap and val < -heap[0][0] and not _tight(val, -heap[0][0]):
            heapq.heappush(heap, (-val, ri, i))
            continue
        chosen.append((i, idx))
        uncovered[idx] = False
        left -= gain
        if left and left * 2 < len(snap_idx):
            snap_idx = np.flatnonzero(uncovered)
            snap_tree = cKDTree(pts[snap_idx].astype(np.float64))
    balls = []
    for i, idx in chosen:
        diff = pts[idx] - pts[i]
        r = int(max(1, ceil_sqrt(np.einsum("ij,ij->i", diff, diff)).max()))
        balls.append(Ball(tuple(int(v) for v in pts[i]), r))
    return _solution(balls, n, s, False, "greedy")


# ---------------------------------------------------------------------------
# dyadic tree heuristic for large shells


@dataclass
class _TreeLevel:
    parent: np.ndarray      # cell -> cell index on the next coarser level
    center: np.ndarray      # cell -> index of its representative target point
    radius: np.ndarray      # cell -> integer radius covering the cell from that point


def _cell_ids(keys: np.ndarray, bits: int) -> Tuple[np.ndarray, np.ndarray]:
    """Cell index per point (cells numbered in lexicographic key order) and the first point of each cell."""
    d = keys.shape[1]
    if bits * d <= 62:
        packed = np.zeros(len(keys), dtype=np.int64)
        for i in range(d):
            packed = (packed << bits) | keys[:, i]
        _, first, inv = np.unique(packed, return_index=True, return_inverse=True)
    else:
        _, first, inv = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    return inv.ravel(), first


def _tree_levels(pts: np.ndarray, n: int, shift: int) -> List[_TreeLevel]:
    d = pts.shape[1]
    origin = -(2 ** (n + 1)) - shift
    rel = pts - origin
    top = n + 3
    levels = []
    prev_inv = None
    invs, firsts = [], []
    for j in range(top + 1):
        inv, first = _cell_ids(rel >> j, top + 2 - j)
        invs.append(inv)
        firsts.append(first)
    for j in range(top + 1):
        inv, first = invs[j], firsts[j]
        m = len(first)
        # doubled coordinates keep the cell centers integral
        mid2 = 2 * origin + ((rel >> j) * 2 + 1) * (1 << j)
        off = 2 * pts - mid2
        dist = np.einsum("ij,ij->i", off, off)
        order = np.lexsort((np.arange(len(pts)), dist, inv))
        start = np.r_[0, np.flatnonzero(np.diff(inv[order])) + 1]
        center = order[start]
        diff = pts - pts[center[inv]]
        d2 = np.einsum("ij,ij->i", diff, diff)
        far = np.zeros(m, dtype=np.int64)
        np.maximum.at(far, inv, d2)
        radius = np.maximum(ceil_sqrt(far), 1)
        parent = invs[j + 1][first] if j < top else np.zeros(m, dtype=np.int64)
        levels.append(_TreeLevel(parent, center, radius))
    return levels


def nu_tree_many(target: ShellSet, grid: Sequence[float], shifts: Optional[int] = None) -> List[CoverSolution]:
    """Upper bounds from nested dyadic cells: every cell is covered either by
    one ball around its most central point or through its sub-cells,
    whichever is cheaper; the best of ``d + 1`` shifted grids is kept."""
    n = target.n
    if len(target) == 0:
        return [_solution((), n, s, False, "tree") for s in grid]
    pts = target.points
    d = target.d
    shifts = d + 1 if shifts is None else shifts
    scale = 2.0 ** n
    best = [None] * len(grid)
    for q in range(shifts):
        levels = _tree_levels(pts, n, q * (2 ** (n + 3) // shifts))
        for k, s in enumerate(grid):
            below = None
            pick = []
            for j, lev in enumerate(levels):
                ball = (lev.radius / scale) ** s
                if below is None:
                    cost = ball
                    use = np.ones(len(ball), dtype=bool)
                else:
                    use = ball <= below
                    cost = np.where(use, ball, below)
                pick.append(use)
                if j + 1 < len(levels):
                    below = np.bincount(lev.parent, weights=cost, minlength=len(levels[j + 1].center))
            total = float(cost.sum())
            if best[k] is not None and total >= best[k][0]:
                continue
            balls = []
            active = np.ones(len(levels[-1].center), dtype=bool)
            for j in range(len(levels) - 1, -1, -1):
                lev = levels[j]
                chosen = active & pick[j]
                for c in np.flatnonzero(chosen):
                    balls.append(Ball(tuple(int(v) for v in pts[lev.center[c]]), int(lev.radius[c])))
                if j:
                    open_ = active & ~pick[j]
                    active = open_[levels[j - 1].parent]
            best[k] = (total, balls)
    return [_solution(best[k][1], n, s, False, "tree") for k, s in enumerate(grid)]


def nu_tree(target: ShellSet, s: float) -> CoverSolution:
    return nu_tree_many(target, [s])[0]


def nu_heuristic_many(target: ShellSet, grid: Sequence[float], greedy_max: int = GREEDY_MAX_POINTS) -> List[CoverSolution]:
    """Cheaper of the dyadic tree cover and (for shells up to ``greedy_max`` points) the ratio greedy."""
    out = nu_tree_many(target, grid)
    if len(target) <= greedy_max:
        for k, s in enumerate(grid):
            g = nu_greedy(target, s)
            if g.cost < out[k].cost:
                out[k] = g
    return out


def solve_many(target: ShellSet, grid: Sequence[float], solver: str = "auto",
               node_budget: Optional[int] = None) -> List[CoverSolution]:
    """Solve one shell for every exponent in ``grid``.

    ``exact`` raises CapExceeded when the instance is too large, ``greedy``
    uses the heuristic upper bounds, ``auto`` tries the exact solver (with a
    small node budget in dimensions 2 and 3) and falls back to the heuristic.
    """
    if solver not in ("auto", "exact", "greedy"):
        raise ValueError(f"unknown solver {solver!r}")
    if solver == "greedy":
        return nu_heuristic_many(target, grid)
    if target.d == 1:
        try:
            return nu_exact_1d_many(target, grid)
        except CapExceeded:
            if solver == "exact":
                raise
            return nu_heuristic_many(target, grid)
    budget = node_budget if node_budget is not None else (BB_NODE_BUDGET if solver == "exact" else AUTO_NODE_BUDGET)
    out = []
    for s in grid:
        try:
            out.append(nu_exact_bb(target, s, node_budget=budget))
        except CapExceeded:
            if solver == "exact":
                raise
            out.append(nu_heuristic_many(target, [s])[0])
    return out


def solve(target: ShellSet, s: float, solver: str = "auto", **kw) -> CoverSolution:
    return solve_many(target, [s], solver, **kw)[0]


# ---------------------------------------------------------------------------
# 5r covering


def _disjoint(a: Ball, b: Ball) -> bool:
    d2 = sum((x - y) ** 2 for x, y in zip(a.center, b.center))
    return d2 > (a.radius + b.radius) ** 2


def vitali_5r(balls: Sequence[Ball]) -> List[Ball]:
    """Greedy disjoint subfamily, largest radius first (ties by center), whose
    5-fold dilations cover the union of the input."""
    order = sorted(set(balls), key=lambda b: (-b.radius, b.center))
    picked: List[Ball] = []
    for b in order:
        if all(_disjoint(b, p) for p in picked):
            picked.append(b)
    return picked


def dilate(b: Ball, factor: int = 5) -> Ball:
    return Ball(b.center, factor * b.radius)


def single_ball_bound(target: ShellSet, s: float) -> float:
    """Cost of the cheapest single admissible ball containing the whole shell set
    (restricted to centers at target points, which keeps it cheap to compute)."""
    if len(target) == 0:
        return 0.0
    pts = target.points
    best = None
    for p in pts:
        diff = pts - p
        r = int(max(1, ceil_sqrt(np.einsum("ij,ij->i", diff, diff)).max()))
        if best is None or r < best:
            best = r
    return (best / 2.0 ** target.n) ** s
