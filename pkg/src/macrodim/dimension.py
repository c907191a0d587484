"""s-grid sweeps of the per-shell cover cost and the truncated dimension estimate.

The estimate fits the slope of ``log2 nu_n^s`` against ``n`` over a window of
shells for every ``s`` on a grid and returns the largest ``s`` whose slope is
still above ``-tau``: for a set that looks self-similar at large scales
``nu_n^s`` behaves like ``2**(n (s* - s))`` so the slope crosses zero at ``s*``.
A finite truncation can never decide divergence of the full series; every
report carries that caveat.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .core import ShellSet, SparseSet
from .cover import solve_many
from .errors import InsufficientData

DEFAULT_TAU = 0.1
DEFAULT_STEP = 0.05
DEFAULT_N_LO = 4
CAVEAT = "truncated surrogate: slope threshold on a finite shell window, not a divergence test"


def s_grid(s_min: float, s_max: float, step: float = DEFAULT_STEP) -> List[float]:
    """Inclusive grid, rounded to 10 decimals so values print identically everywhere."""
    if step <= 0 or s_max < s_min:
        raise ValueError("need step > 0 and s_max >= s_min")
    count = int(math.floor((s_max - s_min) / step + 1e-9)) + 1
    return [round(s_min + i * step, 10) for i in range(count)]


@dataclass(frozen=True)
class NuRow:
    n: int
    s: float
    value: float
    solver: str
    beta: float
    exact: bool
    seconds: float = 0.0

    def to_json(self, timing: bool = False) -> dict:
        out = {"n": self.n, "s": self.s, "value": self.value, "solver": self.solver,
               "beta": self.beta, "exact": self.exact}
        if timing:
            out["seconds"] = self.seconds
        return out


@dataclass
class NuTable:
    d: int
    n_max: int
    rows: Dict[Tuple[int, float], NuRow] = field(default_factory=dict)

    def value(self, n: int, s: float) -> float:
        row = self.rows.get((n, s))
        return 0.0 if row is None else row.value

    def shells(self) -> List[int]:
        return sorted({n for n, _ in self.rows})

    def s_values(self) -> List[float]:
        return sorted({s for _, s in self.rows})

    def add(self, row: NuRow) -> None:
        self.rows[(row.n, row.s)] = row

    def to_json(self, timing: bool = False) -> list:
        return [self.rows[k].to_json(timing) for k in sorted(self.rows)]


def _solve_task(task):
    pts, n, grid, solver = task
    t0 = time.perf_counter()
    sols = solve_many(ShellSet(n, pts), grid, solver)
    dt = (time.perf_counter() - t0) / max(len(grid), 1)
    return [(n, sol.s, sol.cost, sol.solver, sol.beta, sol.exact, dt) for sol in sols]


def nu_profile(E: SparseSet, grid: Sequence[float], n_range: Optional[Iterable[int]] = None,
               solver: str = "auto", mapper: Callable = map) -> NuTable:
    """Table of ``nu_n^s`` for every shell in range and every ``s`` in the grid.

    ``mapper`` must behave like the builtin ``map`` (results in task order);
    an ordered process pool map works and keeps the table identical.
    """
    if n_range is None:
        n_range = range(E.n_max + 1)
    grid = [float(s) for s in grid]
    table = NuTable(E.d, E.n_max)
    tasks = []
    for n in n_range:
        pts = E.points(n)
        if len(pts) == 0:
            for s in grid:
                table.add(NuRow(n, s, 0.0, "empty", 0.0, True))
        else:
            tasks.append((pts, n, grid, solver))
    for rows in mapper(_solve_task, tasks):
        for n, s, value, tag, b, exact, dt in rows:
            table.add(NuRow(n, s, value, tag, b, exact, dt))
    return table


def fit_slope(ns: Sequence[int], values: Sequence[float]) -> Optional[float]:
    """Least-squares slope of log2(value) against n, zeros treated as missing."""
    pairs = [(n, math.log2(v)) for n, v in zip(ns, values) if v > 0]
    if len(pairs) < 2:
        return None
    x = np.array([p[0] for p in pairs], dtype=np.float64)
    y = np.array([p[1] for p in pairs], dtype=np.float64)
    xc = x - x.mean()
    return float((xc * (y - y.mean())).sum() / (xc * xc).sum())


@dataclass
class DimEstimate:
    s_grid: List[float]
    slopes: List[Optional[float]]
    s_hat: float
    tau: float
    window: Tuple[int, int]
    status: str
    table: Optional[NuTable] = None
    solver_policy: str = "auto"

    def to_json(self, include_table: bool = True) -> dict:
        out = {
            "s_grid": self.s_grid,
            "slopes": self.slopes,
            "s_hat": self.s_hat,
            "tau": self.tau,
            "window": list(self.window),
            "solver_policy": self.solver_policy,
            "status": self.status,
            "caveat": CAVEAT,
        }
        if include_table and self.table is not None:
            out["table"] = self.table.to_json()
        return out


def estimate_dim(table: NuTable, tau: float = DEFAULT_TAU, window: Optional[Tuple[int, int]] = None,
                 grid: Optional[Sequence[float]] = None, min_shells: int = 4,
                 solver_policy: str = "auto") -> DimEstimate:
    """Largest grid ``s`` whose fitted slope is strictly above ``-tau`` (0 if none).

    A window with no mass at all, or whose two outermost shells are empty
    (the set looks bounded), gives 0.  Otherwise fewer than ``min_shells``
    non-zero shells raises InsufficientData.
    """
    grid = list(table.s_values() if grid is None else grid)
    if window is None:
        window = (min(DEFAULT_N_LO, table.n_max), table.n_max)
    lo, hi = window
    ns = list(range(lo, hi + 1))
    if not grid:
        return DimEstimate([], [], 0.0, tau, (lo, hi), "empty", table, solver_policy)
    occupied = [n for n in ns if any(table.value(n, s) > 0 for s in grid)]
    if not occupied:
        return DimEstimate(grid, [None] * len(grid), 0.0, tau, (lo, hi), "empty", table, solver_policy)
    if len(ns) >= 2 and ns[-1] not in occupied and ns[-2] not in occupied:
        return DimEstimate(grid, [None] * len(grid), 0.0, tau, (lo, hi), "bounded", table, solver_policy)
    if len(occupied) < min_shells:
        raise InsufficientData(f"only {len(occupied)} non-zero shells in window [{lo}, {hi}] (need {min_shells})")
    slopes = [fit_slope(ns, [table.value(n, s) for n in ns]) for s in grid]
    s_hat = 0.0
    for s, k in zip(grid, slopes):
        if k is not None and k > -tau:
            s_hat = max(s_hat, s)
    return DimEstimate(grid, slopes, s_hat, tau, (lo, hi), "ok", table, solver_policy)


def dimension(E: SparseSet, grid: Sequence[float], tau: float = DEFAULT_TAU,
              window: Optional[Tuple[int, int]] = None, solver: str = "auto",
              mapper: Callable = map) -> DimEstimate:
    """Sweep and estimate in one call; only the shells inside the window are solved."""
    if window is None:
        window = (min(DEFAULT_N_LO, E.n_max), E.n_max)
    table = nu_profile(E, grid, range(window[0], window[1] + 1), solver, mapper)
    table.n_max = E.n_max
    return estimate_dim(table, tau, window, grid, solver_policy=solver)
