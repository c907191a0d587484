"""Constructive subset extractions: the sequence-selection procedures, shell
localization, extraction of a set with summable cover costs, regularization
of local cover ratios and the atomic energy witness built from them.

Every stage returns a trace with one record per shell listing the inequalities
it relies on (left side, right side, whether it held).  Searches for "the
first index such that ..." run over the truncated range and set an
``incomplete`` flag when the range ends first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import Ball, ShellSet, SparseSet, ceil_sqrt, shell_bounds_sq
from .cover import beta as cover_beta
from .cover import solve
from .errors import CapExceeded, EmptyPipeline
from .measure import AtomicMeasure, ball_mass, combine, energy, proof_constant

TOL = 1e-12


def _le(a: float, b: float) -> bool:
    return a <= b + TOL * max(1.0, abs(a), abs(b))


def check(name: str, lhs: float, rhs: float, relation: str = "<=") -> dict:
    if relation == "<=":
        ok = _le(lhs, rhs)
    elif relation == "<":
        ok = lhs < rhs
    elif relation == ">=":
        ok = _le(rhs, lhs)
    elif relation == ">":
        ok = lhs > rhs
    else:
        raise ValueError(relation)
    return {"check": name, "lhs": float(lhs), "rhs": float(rhs), "relation": relation, "ok": bool(ok)}


@dataclass
class ExtractionTrace:
    stage: str
    records: List[dict] = field(default_factory=list)
    flags: Dict[str, object] = field(default_factory=dict)

    def all_ok(self) -> bool:
        return all(c["ok"] for r in self.records for c in r.get("checks", []) if not c.get("diagnostic"))

    def failed(self) -> List[Tuple[int, dict]]:
        return [(r.get("n"), c) for r in self.records for c in r.get("checks", []) if not c["ok"] and not c.get("diagnostic")]

    def record(self, n: int) -> Optional[dict]:
        for r in self.records:
            if r.get("n") == n:
                return r
        return None

    def to_json(self) -> dict:
        return {"stage": self.stage, "flags": self.flags, "records": self.records}


# ---------------------------------------------------------------------------
# sequences


def convsum1_diagnostics(a: Sequence[float], eps: float):
    """Partial sums ``A_n``, partial sums of ``a_n / A_n^(1+eps)`` and of ``a_n / A_n``."""
    a = np.asarray(a, dtype=np.float64)
    if np.any(a <= 0):
        raise ValueError("the sequence must be positive")
    A = np.cumsum(a)
    conv = np.cumsum(a / A ** (1.0 + eps))
    div = np.cumsum(a / A)
    return A, conv, div


def dyadic_level(x: np.ndarray) -> np.ndarray:
    """``j`` with ``2^(-j-1) <= x < 2^(-j)`` for ``0 < x < 1``."""
    x = np.asarray(x, dtype=np.float64)
    mant, exp = np.frexp(x)  # x = mant 2^exp, mant in [0.5, 1)
    return (-exp).astype(np.int64)


def _pow2_normalize(x: np.ndarray) -> Tuple[np.ndarray, float]:
    """Scale by a power of two so that every entry is < 1 (identity if already)."""
    top = float(x.max()) if len(x) else 0.0
    if top < 1.0:
        return x, 1.0
    k = math.frexp(top)[1]
    scale = 2.0 ** (-k)
    return x * scale, scale


@dataclass
class SequenceSelection:
    c: np.ndarray
    scale_a: float
    scale_b: float
    levels: np.ndarray
    blocks: List[dict]
    degenerate: bool
    incomplete: bool
    kind: str

    def selected(self) -> np.ndarray:
        return np.flatnonzero(self.c != 0)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "c": self.c.tolist(),
            "scale_a": self.scale_a,
            "scale_b": self.scale_b,
            "levels": self.levels.tolist(),
            "blocks": self.blocks,
            "degenerate": self.degenerate,
            "incomplete": self.incomplete,
        }


def select_convsum2(a: Sequence[float], b: Sequence[float], normalization: str = "strict") -> SequenceSelection:
    """Keep ``c_n = b_n`` on blocks whose sums of ``a_n b_n`` are pinned between
    ``1/(k+1)`` and ``2/k`` while the ``a``-levels strictly increase, so that
    ``sum a c`` grows like the harmonic series and ``sum a^2 c`` stays summable.

    Indices are visited in their given order (no rearrangement).  Levels
    ``j(n)`` are the dyadic classes of ``a``; indices at levels 0 and 1 are
    dropped.  Block ``k`` (from 2) takes indices whose level exceeds that of
    the previous block's closing index until the running sum passes
    ``1/(k+1)``; later indices at or below the new closing level are dropped.

    ``normalization``: ``strict`` only rescales (by powers of two) when an
    entry is >= 1; ``shift`` rescales ``a`` so that its largest entry sits at
    level 2, which makes the first block start immediately.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("a and b must have the same length")
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("sequences must be positive")
    if normalization == "strict":
        an, sa = _pow2_normalize(a)
    elif normalization == "shift":
        top = float(a.max()) if len(a) else 1.0
        sa = 2.0 ** (-2 - math.frexp(top)[1]) if len(a) else 1.0
        # largest entry now in [2^-3, 2^-2)
        an = a * sa
    else:
        raise ValueError("normalization must be 'strict' or 'shift'")
    bn, sb = _pow2_normalize(b)
    lev = dyadic_level(an)
    c = np.zeros(len(a))
    blocks = []
    k = 2
    j_prev = 1
    total = 0.0
    members: List[int] = []
    for n in range(len(a)):
        if lev[n] <= j_prev:
            continue
        members.append(n)
        total += an[n] * bn[n]
        c[n] = b[n]
        if total > 1.0 / (k + 1):
            j_prev = int(lev[n])
            blocks.append({
                "k": k, "indices": members, "closing_index": n, "level": j_prev,
                "sum": float(total), "lower": 1.0 / (k + 1), "upper": 2.0 / k,
                "ok": bool(1.0 / (k + 1) < total < 2.0 / k), "complete": True,
            })
            k += 1
            total = 0.0
            members = []
    incomplete = bool(members)
    if members:
        blocks.append({
            "k": k, "indices": members, "closing_index": None, "level": None,
            "sum": float(total), "lower": 1.0 / (k + 1), "upper": 2.0 / k,
            "ok": bool(total < 2.0 / k), "complete": False,
        })
    degenerate = bool(len(a) and np.all(lev <= 1))
    return SequenceSelection(c, sa, sb, lev, blocks, degenerate, incomplete, "convsum2")


def select_convsum3(a: Sequence[float], b: Sequence[float]) -> SequenceSelection:
    """Keep ``c_n = a_n`` on blocks with ``2^-k <= sum a_n b_n < 2^(-k+1)``.

    Levels are the dyadic classes of ``b``; classes are visited in increasing
    order and indices inside a class in increasing order.  Levels 0 and 1 are
    dropped; block ``k`` starts one level above the previous closing level,
    so ``b_n < 2^-k`` on it and ``sum c`` gains at least 1 per block.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("a and b must have the same length")
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("sequences must be positive")
    an, sa = _pow2_normalize(a)
    bn, sb = _pow2_normalize(b)
    lev = dyadic_level(bn)
    order = np.lexsort((np.arange(len(b)), lev))
    c = np.zeros(len(a))
    blocks = []
    k = 1
    start = 2
    total = 0.0
    members: List[int] = []
    closed_level = None
    for n in order:
        j = int(lev[n])
        if j < start:
            continue
        if closed_level is not None and j == closed_level:
            continue
        closed_level = None
        members.append(int(n))
        total += an[n] * bn[n]
        c[n] = a[n]
        if total >= 2.0 ** -k:
            blocks.append({
                "k": k, "indices": members, "closing_index": int(n), "level": j,
                "sum": float(total), "lower": 2.0 ** -k, "upper": 2.0 ** (-k + 1),
                "ok": bool(2.0 ** -k <= total < 2.0 ** (-k + 1)), "complete": True,
                "sum_c": float(math.fsum(an[members])),
            })
            k += 1
            start = j + 1
            closed_level = j
            total = 0.0
            members = []
    incomplete = bool(members)
    if members:
        blocks.append({
            "k": k, "indices": members, "closing_index": None, "level": None,
            "sum": float(total), "lower": 2.0 ** -k, "upper": 2.0 ** (-k + 1),
            "ok": bool(total < 2.0 ** (-k + 1)), "complete": False,
            "sum_c": float(math.fsum(an[members])),
        })
    degenerate = bool(len(b) and np.all(lev <= 1))
    return SequenceSelection(c, sa, sb, lev, blocks, degenerate, incomplete, "convsum3")


# ---------------------------------------------------------------------------
# per-shell helpers


def nu_shell(points: np.ndarray, n: int, s: float, solver: str) -> Tuple[float, bool]:
    if len(points) == 0:
        return 0.0, True
    sol = solve(ShellSet(n, points), s, solver)
    return sol.cost, sol.exact


def nu_all(E: SparseSet, s: float, n_max: int, solver: str):
    vals, exact = [], []
    for n in range(n_max + 1):
        v, ex = nu_shell(E.points(n), n, s, solver)
        vals.append(v)
        exact.append(ex)
    return vals, exact


# ---------------------------------------------------------------------------
# localization


def localize(E: SparseSet, s: float, n_max: Optional[int] = None, solver: str = "auto"):
    """Keep, in every shell, the grid cell of diameter ``<= 2^n alpha_n^(1/d)``
    carrying the largest cover cost, with ``alpha_n = 1 / sum_{k<=n} nu_k``."""
    n_max = E.n_max if n_max is None else n_max
    d = E.d
    trace = ExtractionTrace("localize")
    nus, _ = nu_all(E, s, n_max, solver)
    shells = {}
    A = 0.0
    for n in range(n_max + 1):
        A = math.fsum([A, nus[n]])
        pts = E.points(n)
        if len(pts) == 0 or A <= 0:
            continue
        alpha = 1.0 / A
        h = 2.0 ** n * alpha ** (1.0 / d) / math.sqrt(d)
        keys = np.floor((pts + 2.0 ** n) / h).astype(np.int64)
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        inv = inv.ravel()
        best, best_i = -1.0, -1
        for ci in range(len(uniq)):
            v, _ = nu_shell(pts[inv == ci], n, s, solver)
            if v > best:
                best, best_i = v, ci
        chosen = pts[inv == best_i]
        shells[n] = chosen
        side_cells = math.ceil(2.0 ** (n + 1) / h) + 1
        diam = 0.0
        if len(chosen) > 1:
            diff = chosen[:, None, :] - chosen[None, :, :]
            diam = math.sqrt(float(np.einsum("ijk,ijk->ij", diff, diff).max()))
        v_out = best
        checks = [
            check("pigeonhole nu(E cap A) >= nu(E)/#cells", best, nus[n] / len(uniq), ">="),
            check("diameter <= 2^n alpha^(1/d)", diam, 2.0 ** n * alpha ** (1.0 / d)),
            dict(check("nu(E cap A) >= alpha nu(E)", best, alpha * nus[n], ">="), diagnostic=True),
            dict(check("nu(E cap A) <= alpha^(s/d)", v_out, alpha ** (s / d)), diagnostic=True),
        ]
        trace.records.append({
            "n": n, "A_n": A, "alpha_n": alpha, "nu": nus[n], "cell_side": h,
            "cells_nonempty": int(len(uniq)), "cells_grid": side_cells ** d,
            "cell": uniq[best_i].tolist(), "nu_cell": best, "kept": int(len(chosen)), "checks": checks,
        })
    return SparseSet(d, E.n_max, shells), trace


# ---------------------------------------------------------------------------
# s-set extraction


def count_sq_le(m: int, d: int) -> int:
    """Number of lattice points of Z^d with squared norm <= m."""
    if m < 0:
        return 0
    if d == 1:
        return 2 * math.isqrt(m) + 1
    r = math.isqrt(m)
    return sum(count_sq_le(m - a * a, d - 1) for a in range(-r, r + 1))


def _count_annulus(lo: int, hi: int, d: int) -> int:
    """Lattice points with ``lo < |x|^2 <= hi``."""
    return count_sq_le(hi, d) - count_sq_le(lo, d)


def shell_rank(x, n: int) -> int:
    """0-based position of lattice point ``x`` in the lexicographic enumeration of ``Z^d ∩ S_n``."""
    lo, hi = shell_bounds_sq(n)
    x = [int(v) for v in x]
    rank = 0
    for i, xi in enumerate(x):
        rest = len(x) - i - 1
        r = math.isqrt(max(hi, 0))
        for a in range(-r, xi):
            if rest == 0:
                rank += 1 if lo < a * a <= hi else 0
            else:
                rank += _count_annulus(lo - a * a, hi - a * a, rest)
        lo -= xi * xi
        hi -= xi * xi
    return rank


def shell_size(n: int, d: int) -> int:
    lo, hi = shell_bounds_sq(n)
    return _count_annulus(lo, hi, d)


def epsilon_schedule(nus: Sequence[float], A: Sequence[float]):
    """The decreasing exponents ``eps_n`` built from the tail sums ``B_n^eps``."""
    N = len(nus)

    def tail(n: int, e: float) -> float:
        return math.fsum(nus[k] / A[k] ** (1 + e) for k in range(n, N) if A[k] > 0)

    eps = [0.0] * N
    marks = []
    incomplete = False
    n1 = next((n for n in range(1, N) if tail(n, 0.25) <= 1.0), None)
    if n1 is None:
        return [0.5] * N, marks, True
    marks.append(n1)
    for n in range(0, n1 + 1):
        eps[n] = 0.5
    p = 1
    cur = n1
    while cur < N - 1:
        e = 1.0 / 2 ** p
        nxt = next((n for n in range(cur + 1, N) if tail(n, e) <= e), None)
        fill = 1.0 / 2 ** (p + 1)
        if nxt is None:
            for n in range(cur + 1, N):
                eps[n] = fill
            incomplete = True
            break
        for n in range(cur + 1, nxt + 1):
            eps[n] = fill
        marks.append(nxt)
        cur = nxt
        p += 1
    return eps, marks, incomplete


def _change_points(pts: np.ndarray, n: int) -> Tuple[np.ndarray, List[np.ndarray]]:
    """Lattice points of ``S_n`` within distance 1 of some target point, sorted
    lexicographically, with the targets each one newly brings in."""
    d = pts.shape[1]
    offs = [np.zeros(d, dtype=np.int64)]
    for i in range(d):
        for sgn in (1, -1):
            o = np.zeros(d, dtype=np.int64)
            o[i] = sgn
            offs.append(o)
    cand = np.unique(np.concatenate([pts + o for o in offs]), axis=0)
    lo, hi = shell_bounds_sq(n)
    m = np.einsum("ij,ij->i", cand, cand)
    cand = cand[(m > lo) & (m <= hi)]
    seen = np.zeros(len(pts), dtype=bool)
    adds = []
    for x in cand:
        diff = pts - x
        near = (np.einsum("ij,ij->i", diff, diff) <= 1) & ~seen
        seen |= near
        adds.append(np.flatnonzero(near))
    return cand, adds


def extract_s_set(E: SparseSet, s: float, n_max: Optional[int] = None, solver: str = "exact",
                  full_scan: bool = False):
    """Subset whose per-shell cost is ``b_n nu_n^s(E)`` up to one unit ball.

    ``g_n(m)`` is the cost of the part of ``E`` within distance 1 of the first
    ``m`` lattice points of ``S_n`` (lexicographic order); it only changes at
    lattice points next to ``E``, so only those are evaluated.  The kept part
    stops at the least ``m`` with ``g_n(m) >= b_n nu_n^s(E)``.
    """
    n_max = E.n_max if n_max is None else n_max
    trace = ExtractionTrace("extract_s_set")
    try:
        nus, _ = nu_all(E, s, n_max, solver)
    except CapExceeded:
        nus = []
        for n in range(n_max + 1):
            try:
                nus.append(nu_shell(E.points(n), n, s, solver)[0])
            except CapExceeded:
                trace.flags["truncated_at"] = n
                n_max = n - 1
                break
    A = [math.fsum(nus[:k + 1]) for k in range(len(nus))]
    eps, marks, incomplete = epsilon_schedule(nus, A)
    trace.flags.update({"eps_marks": marks, "eps_incomplete": incomplete})
    shells = {}
    for n in range(n_max + 1):
        pts = E.points(n)
        if len(pts) == 0:
            continue
        b = 0.5 if A[n] <= 0 else min(0.5, A[n] ** -(1.0 + eps[n]))
        target = b * nus[n]
        unit = 2.0 ** (-n * s)
        cand, adds = _change_points(pts, n)
        acc = np.zeros(len(pts), dtype=bool)
        g_prev = 0.0
        chosen = None
        max_inc = 0.0
        evaluated = 0
        for x, add in zip(cand, adds):
            if len(add) == 0:
                continue
            acc[add] = True
            g, _ = nu_shell(pts[acc], n, s, solver)
            evaluated += 1
            max_inc = max(max_inc, g - g_prev)
            g_prev = g
            if chosen is None and _le(target, g) and g >= target:
                chosen = (x, g, acc.copy())
                if not full_scan:
                    break
        if chosen is None:
            # rounding guard: the full set reaches nu exactly
            chosen = (cand[-1], g_prev, acc.copy())
        x, g, keep = chosen
        shells[n] = pts[keep]
        checks = [
            check("b nu(E) <= nu(E~)", target, g),
            check("nu(E~) <= b nu(E) + 2^(-ns)", g, target + unit),
            check("max increment <= 2^(-ns)", max_inc, unit),
        ]
        trace.records.append({
            "n": n, "nu": nus[n], "A_n": A[n], "eps_n": eps[n], "b_n": b, "target": target,
            "m_n": shell_rank(x, n) + 1, "x_m": [int(v) for v in x], "g": g,
            "evaluations": evaluated, "kept": int(keep.sum()), "checks": checks,
        })
    return SparseSet(E.d, E.n_max, shells), trace


# ---------------------------------------------------------------------------
# regularization


def regularity_constant(d: int, s: float) -> float:
    return 5.0 * proof_constant(d, s)


def local_ratio(E_pts: np.ndarray, x, n: int, s: float, solver: str, r_max: int) -> Tuple[float, int]:
    """``max_r nu(E ∩ B(x, r)) / (r/2^n)^s`` over breakpoint radii up to ``r_max``."""
    diff = E_pts - np.asarray(x, dtype=np.int64)
    rad = np.maximum(ceil_sqrt(np.einsum("ij,ij->i", diff, diff)), 1)
    best, arg = 0.0, 1
    for r in np.unique(rad):
        if r > r_max:
            break
        v, _ = nu_shell(E_pts[rad <= r], n, s, solver)
        ratio = v / (r / 2.0 ** n) ** s
        if ratio > best:
            best, arg = ratio, int(r)
    return best, arg


def regularize(E: SparseSet, s: float, n_max: Optional[int] = None, solver: str = "exact",
               threshold: Optional[float] = None, probes: int = 0, seed: int = 0):
    """Drop points around which the local cover cost is too large relative to the radius.

    With the default threshold ``5 (5 (2 + sqrt(d)/2))^s`` nothing is ever
    removed from a lattice set: ``B(x, r)`` with ``x`` in the shell is itself
    an admissible cover, so every local ratio is at most 1.  The scan is
    skipped in that case and the trace says so.
    """
    n_max = E.n_max if n_max is None else n_max
    d = E.d
    cs = regularity_constant(d, s)
    thr = cs if threshold is None else float(threshold)
    K = proof_constant(d, s)
    trace = ExtractionTrace("regularize", flags={"threshold": thr, "c_s": cs, "shortcut": thr >= 1.0})
    rng = np.random.default_rng(seed)
    shells = {}
    for n in range(n_max + 1):
        pts = E.points(n)
        if len(pts) == 0:
            continue
        removed = np.zeros(len(pts), dtype=bool)
        if thr < 1.0:
            for i, x in enumerate(pts):
                v, _ = local_ratio(pts, x, n, s, solver, 2 ** (n + 1))
                removed[i] = v > thr
        kept = pts[~removed]
        shells[n] = kept
        nu_E, _ = nu_shell(pts, n, s, solver)
        nu_F, _ = nu_shell(kept, n, s, solver)
        lower = max(0.0, 1.0 - K / thr)
        checks = [
            check("nu(F) <= nu(E)", nu_F, nu_E),
            check("(4/5) nu(E) <= nu(F)", 0.8 * nu_E, nu_F),
        ]
        if threshold is not None:
            checks.append(dict(check("(1 - K/threshold) nu(E) <= nu(F)", lower * nu_E, nu_F), diagnostic=True))
        for _ in range(probes):
            x = kept[rng.integers(len(kept))] if len(kept) else pts[0]
            r = int(rng.integers(1, 2 ** (n + 1) + 1))
            diff = kept - x
            inside = kept[np.einsum("ij,ij->i", diff, diff) <= r * r]
            v, _ = nu_shell(inside, n, s, solver)
            checks.append(check(f"nu(F cap B({list(map(int, x))},{r})) <= c_s (r/2^n)^s", v, cs * (r / 2.0 ** n) ** s))
        trace.records.append({"n": n, "removed": int(removed.sum()), "nu_E": nu_E, "nu_F": nu_F, "checks": checks})
    return SparseSet(d, E.n_max, shells), trace


# ---------------------------------------------------------------------------
# energy witness


@dataclass
class WitnessResult:
    measure: AtomicMeasure
    stages: Dict[str, SparseSet]
    traces: List[ExtractionTrace]
    selection: Optional[SequenceSelection]
    diagnostics: dict

    def to_json(self) -> dict:
        return {
            "diagnostics": self.diagnostics,
            "selection": self.selection.to_json() if self.selection else None,
            "traces": [t.to_json() for t in self.traces],
            "stage_sizes": {k: {str(n): int(len(v.points(n))) for n in v.shell_indices()} for k, v in self.stages.items()},
        }


def atomize(points: np.ndarray, n: int, t: float, weight: float, solver: str = "exact") -> AtomicMeasure:
    """Split each ball cost of the canonical optimal cover evenly among the
    points it covers first (balls in canonical order), times ``weight``."""
    target = ShellSet(n, points)
    sol = solve(target, t, solver)
    pts = target.points
    owner_mass = np.zeros(len(pts))
    free = np.ones(len(pts), dtype=bool)
    for b in sol.cover.balls:
        diff = pts - np.asarray(b.center)
        new = (np.einsum("ij,ij->i", diff, diff) <= b.radius * b.radius) & free
        k = int(new.sum())
        if k == 0:
            raise AssertionError("optimal cover contains a redundant ball")
        owner_mass[new] = weight * (b.radius / 2.0 ** n) ** t / k
        free &= ~new
    return AtomicMeasure(pts, owner_mass)


def energy_witness(E: SparseSet, s: float, eps: float, n_max: Optional[int] = None,
                   solver: str = "exact", parity: Optional[str] = None, probes: int = 200,
                   seed: int = 0) -> WitnessResult:
    """Build an atomic measure on ``E`` from the extraction pipeline.

    localize -> extract_s_set -> block selection on
    ``a_n = beta_n^t(E2)^(eps/4)``, ``b_n = nu_n^t(E2)`` (``t = s - eps/2``)
    -> regularize at ``t`` -> atomize ``a_n nu_n^t(E4 ∩ .)``.
    """
    if not (0 < eps < s):
        raise ValueError("need 0 < eps < s")
    n_max = E.n_max if n_max is None else n_max
    t = s - eps / 2.0
    base = E.parity_split(parity).truncate(n_max)
    E1, tr1 = localize(base, s, n_max, solver if solver != "exact" else "auto")
    E2, tr2 = extract_s_set(E1, s, n_max, solver)
    shells2 = [n for n in range(n_max + 1) if len(E2.points(n))]
    if not shells2:
        raise EmptyPipeline("extraction left no points in range")
    a, b = [], []
    for n in shells2:
        tgt = E2.shell(n)
        sol = solve(tgt, t, solver)
        bt = cover_beta(tgt, t, "canonical").value
        a.append(bt ** (eps / 4.0))
        b.append(sol.cost)
    sel = select_convsum2(a, b, normalization="shift")
    keep3 = [n for n, c in zip(shells2, sel.c) if c != 0]
    if not keep3:
        raise EmptyPipeline("block selection removed every shell in range")
    E3 = E2.keep_shells(keep3)
    E4, tr4 = regularize(E3, t, n_max, solver)
    weights = dict(zip(shells2, a))
    parts = []
    shell_checks = []
    d = E.d
    cs = regularity_constant(d, t)
    rng = np.random.default_rng(seed)
    probe_ok = 0
    probe_total = 0
    series_w, series_m = [], []
    terms_w, terms_m = [], []
    for n in range(n_max + 1):
        pts = E4.points(n)
        if len(pts) == 0:
            series_w.append(math.fsum(terms_w))
            series_m.append(math.fsum(terms_m))
            continue
        mu_n = atomize(pts, n, t, weights[n], solver)
        parts.append(mu_n)
        nu4 = solve(E4.shell(n), t, solver).cost
        shell_checks.append({"n": n, **check("mass == a_n nu^t(E4)", mu_n.total(), weights[n] * nu4)})
        terms_w.append(2.0 ** (n * (s - eps)) * energy(mu_n, s - eps))
        terms_m.append(mu_n.total())
        series_w.append(math.fsum(terms_w))
        series_m.append(math.fsum(terms_m))
        for _ in range(probes if len(pts) else 0):
            x = pts[rng.integers(len(pts))]
            r = int(rng.integers(1, 2 ** (n + 1) + 1))
            m = ball_mass(mu_n, Ball(tuple(int(v) for v in x), r))
            probe_total += 1
            probe_ok += m <= 3 * cs * weights[n] * (r / 2.0 ** n) ** t * (1 + TOL)
    nested = E4.issubset(E3) and E3.issubset(E2) and E2.issubset(E1) and E1.issubset(base)
    diagnostics = {
        "s": s, "eps": eps, "t": t, "parity": parity,
        "shells_E2": shells2, "shells_E3": keep3, "shells_E4": E4.shell_indices(),
        "weighted_energy_partial_sums": series_w, "mass_partial_sums": series_m,
        "mass_checks": shell_checks, "nested": bool(nested),
        "ball_mass_probes": {"passed": int(probe_ok), "total": int(probe_total), "slack": 3.0, "c_s": cs},
        "atomization": "cover-cost splitting of the canonical optimal cover",
    }
    mu = combine(parts, d)
    stages = {"E": base, "E1": E1, "E2": E2, "E3": E3, "E4": E4}
    return WitnessResult(mu, stages, [tr1, tr2, tr4], sel, diagnostics)
