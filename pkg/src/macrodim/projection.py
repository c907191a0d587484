"""Orthogonal projections of planar lattice sets onto lines, the angle sets
``{theta : x projects into shell n}``, projected measures and the projection
experiment driver.

Projections land on real scalars ``t = x . e_theta``.  Sets are rounded
half-up to integers so the 1D cover machinery applies; a cover of the rounded
points by radius-``r`` balls gives a cover of the true scalars by radius
``r + 1`` balls, which is what :func:`rounding_check` compares against.
Measures are never rounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import ShellSet, SparseSet, shell_of, shell_of_real, shells_of, shells_of_real
from .dimension import DEFAULT_TAU, DimEstimate, NuTable, NuRow, dimension, estimate_dim, nu_profile
from .generators import uniform01
from .measure import AtomicMeasure

C0 = 4.0
SCHEMA_MARSTRAND = "macrodim.marstrand/1"


def reduce_angle(theta: float) -> float:
    t = math.fmod(theta, math.pi)
    if t < 0:
        t += math.pi
    return 0.0 if t >= math.pi else t


def unit(theta: float) -> np.ndarray:
    return np.array([math.cos(theta), math.sin(theta)])


def project_scalars(points: np.ndarray, theta: float) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    return pts[:, 0] * math.cos(theta) + pts[:, 1] * math.sin(theta)


def round_half_up(t: np.ndarray) -> np.ndarray:
    return np.floor(np.asarray(t) + 0.5).astype(np.int64)


@dataclass
class ProjectedSet:
    theta: float
    set: SparseSet
    provenance: Dict[int, List[Tuple[int, ...]]]

    def sources(self, t: int) -> List[Tuple[int, ...]]:
        return self.provenance.get(int(t), [])


def project(E: SparseSet, theta: float) -> ProjectedSet:
    """Half-up rounded projections onto ``L_theta`` with a map back to the source points."""
    if E.d != 2:
        raise ValueError("projections are defined for planar sets")
    theta = reduce_angle(theta)
    pts = E.all_points()
    if len(pts) == 0:
        return ProjectedSet(theta, SparseSet(1, E.n_max, {}), {})
    t = round_half_up(project_scalars(pts, theta))
    prov: Dict[int, List[Tuple[int, ...]]] = {}
    for v, p in zip(t.tolist(), pts.tolist()):
        prov.setdefault(v, []).append(tuple(p))
    return ProjectedSet(theta, SparseSet.from_points(np.unique(t)[:, None], d=1, n_max=E.n_max), prov)


# ---------------------------------------------------------------------------
# angle sets


@dataclass(frozen=True)
class AngleInterval:
    """Angles (mod pi) for which ``x`` projects into the 1D shell ``n``, as
    closed circle arcs ``(start, length)`` with ``start`` in ``[0, pi)``."""

    x: Tuple[int, int]
    n: int
    k: int
    arcs: Tuple[Tuple[float, float], ...]

    @property
    def length(self) -> float:
        return math.fsum(a[1] for a in self.arcs)

    @property
    def bound(self) -> float:
        return C0 * 2.0 ** (self.n - self.k)

    @property
    def within_bound(self) -> bool:
        return self.length <= self.bound

    def pieces(self) -> List[Tuple[float, float]]:
        """The arcs as sorted closed intervals inside ``[0, pi]``."""
        out = []
        for a, ln in self.arcs:
            b = a + ln
            if b <= math.pi:
                out.append((a, b))
            else:
                out.append((a, math.pi))
                out.append((0.0, b - math.pi))
        return sorted(out)

    def contains(self, theta: float, slack: float = 0.0) -> bool:
        th = reduce_angle(theta)
        for a, b in self.pieces():
            if a - slack <= th <= b + slack:
                return True
        return False


def in_projected_shell(x, theta: float, n: int) -> bool:
    t = x[0] * math.cos(theta) + x[1] * math.sin(theta)
    return shell_of_real(t) == n


def angle_interval(x, n: int) -> AngleInterval:
    """Closed-form ``{theta in [0, pi) : 2^(n-1) < |x . e_theta| <= 2^n}`` (``|.| <= 1`` for n = 0).

    With ``rho = |x|`` and ``phi = theta - atan2(x2, x1)`` the condition reads
    ``lo < |cos phi| <= hi``, which is two arcs symmetric about ``phi = 0``
    modulo pi; they merge into one when ``hi = 1`` or ``lo = 0``.
    """
    x = (int(x[0]), int(x[1]))
    rho = math.hypot(*x)
    if rho == 0:
        raise ValueError("x must be non-zero")
    k = shell_of(x)
    theta0 = math.atan2(x[1], x[0])
    if n == 0:
        lo, hi = 0.0, min(1.0, 1.0 / rho)
    else:
        lo, hi = 2.0 ** (n - 1) / rho, min(1.0, 2.0 ** n / rho)
    arcs = []
    if lo < hi:
        a_hi = math.acos(hi)
        a_lo = math.acos(lo) if lo < 1 else 0.0
        if a_hi == 0.0 or lo == 0.0:
            # one arc of |phi| <= a_lo (hi = 1) or |phi - pi/2| <= pi/2 - a_hi (lo = 0)
            if a_hi == 0.0 and lo == 0.0:
                arcs.append((0.0, math.pi))
            elif a_hi == 0.0:
                arcs.append((reduce_angle(theta0 - a_lo), 2 * a_lo))
            else:
                arcs.append((reduce_angle(theta0 + a_hi), math.pi - 2 * a_hi))
        else:
            arcs.append((reduce_angle(theta0 + a_hi), a_lo - a_hi))
            arcs.append((reduce_angle(theta0 - a_lo), a_lo - a_hi))
    return AngleInterval(x, n, k, tuple(sorted(arcs)))


def scan_angle_set(x, n: int, samples: int = 10_000) -> np.ndarray:
    """Brute-force membership on the grid ``theta_j = j pi / samples``."""
    th = np.arange(samples) * (math.pi / samples)
    t = x[0] * np.cos(th) + x[1] * np.sin(th)
    return shells_of_real(t) == n


# ---------------------------------------------------------------------------
# projected measures


def projected_measure(mu: AtomicMeasure, theta: float, n: int) -> AtomicMeasure:
    """Push forward onto ``L_theta`` the atoms whose projection lies in the 1D
    shell ``n``; positions are the unrounded scalars, masses unchanged."""
    if len(mu) == 0:
        return AtomicMeasure(np.zeros((0, 1)), np.zeros(0))
    t = project_scalars(mu.coords, theta)
    keep = shells_of_real(t) == n
    return AtomicMeasure(t[keep][:, None].astype(np.float64), mu.masses[keep])


# ---------------------------------------------------------------------------
# experiment


def jittered_angles(count: int, seed: int) -> List[float]:
    u = float(uniform01(seed, 1)[0])
    return [(j + u) * math.pi / count for j in range(count)]


@dataclass
class MarstrandReport:
    theta: List[float]
    s_hat_per_theta: List[float]
    s_hat_E: float
    settings: dict
    estimate_E: Optional[DimEstimate] = None
    per_theta: List[DimEstimate] = field(default_factory=list)

    @property
    def median(self) -> float:
        return float(np.median(self.s_hat_per_theta)) if self.s_hat_per_theta else 0.0

    @property
    def quartiles(self) -> Tuple[float, float]:
        if not self.s_hat_per_theta:
            return 0.0, 0.0
        q = np.quantile(self.s_hat_per_theta, [0.25, 0.75])
        return float(q[0]), float(q[1])

    def to_json(self) -> dict:
        q25, q75 = self.quartiles
        target = min(self.s_hat_E, 1.0)
        return {
            "schema": SCHEMA_MARSTRAND,
            "theta": self.theta,
            "s_hat_per_theta": self.s_hat_per_theta,
            "s_hat_E": self.s_hat_E,
            "median": self.median,
            "q25": q25,
            "q75": q75,
            "target_min_sE_1": target,
            "median_abs_deviation_from_target": float(np.median([abs(v - target) for v in self.s_hat_per_theta])) if self.s_hat_per_theta else 0.0,
            "settings": self.settings,
            "slopes_E": self.estimate_E.slopes if self.estimate_E else None,
        }

    def to_csv(self) -> str:
        lines = ["j,theta,s_hat"]
        for j, (t, v) in enumerate(zip(self.theta, self.s_hat_per_theta)):
            lines.append(f"{j},{t!r},{v!r}")
        return "\n".join(lines) + "\n"


def _theta_task(task):
    E, theta, grid, window, tau, parity = task
    P = project(E.parity_split(parity), theta).set
    return dimension(P, grid, tau, window, "exact")


def marstrand_experiment(E: SparseSet, theta_count: int, grid: Sequence[float],
                         window: Optional[Tuple[int, int]] = None, solver: str = "auto",
                         seed: int = 0, tau: float = DEFAULT_TAU, parity: Optional[str] = "even",
                         proj_grid: Optional[Sequence[float]] = None, mapper: Callable = map,
                         estimate_E: Optional[DimEstimate] = None) -> MarstrandReport:
    """Estimate ``s_hat(E)`` and ``s_hat(proj_theta E)`` on jittered angles.

    Each projection is solved with the exact 1D dynamic program; with
    ``parity`` set, only the even (or odd) shells of ``E`` are projected so
    neighbouring source shells never overlap.
    """
    if window is None:
        window = (min(4, E.n_max), E.n_max)
    if estimate_E is None:
        estimate_E = dimension(E, grid, tau, window, solver, mapper)
    if proj_grid is None:
        proj_grid = [s for s in grid if s <= 1.0 + 1e-12]
    thetas = jittered_angles(theta_count, seed)
    tasks = [(E, th, list(proj_grid), window, tau, parity) for th in thetas]
    per = list(mapper(_theta_task, tasks))
    settings = {
        "theta_count": theta_count,
        "seed": seed,
        "tau": tau,
        "window": list(window),
        "solver_E": solver,
        "solver_projection": "exact-1d",
        "parity": parity,
        "s_grid": list(grid),
        "s_grid_projection": list(proj_grid),
        "rounding": "half-up",
    }
    return MarstrandReport(thetas, [p.s_hat for p in per], estimate_E.s_hat, settings, estimate_E, per)


@dataclass
class RoundingCheck:
    s_hat_rounded: float
    s_hat_enlarged: float
    grid_step: float

    @property
    def agrees(self) -> bool:
        return abs(self.s_hat_rounded - self.s_hat_enlarged) <= self.grid_step + 1e-9


def rounding_check(E: SparseSet, theta: float, grid: Sequence[float], window: Tuple[int, int],
                   tau: float = DEFAULT_TAU, parity: Optional[str] = "even") -> RoundingCheck:
    """Compare the estimate on rounded projections with one built from the
    ``r + 1`` enlarged covers, which are valid covers of the unrounded scalars."""
    P = project(E.parity_split(parity), theta).set
    table = nu_profile(P, grid, range(window[0], window[1] + 1), "exact")
    from .cover import nu_exact_1d_many
    enlarged = NuTable(1, P.n_max)
    for n in range(window[0], window[1] + 1):
        sols = nu_exact_1d_many(P.shell(n), list(grid))
        for s, sol in zip(grid, sols):
            cost = math.fsum(((b.radius + 1) / 2.0 ** n) ** s for b in sol.cover.balls)
            enlarged.add(NuRow(n, float(s), cost, "enlarged", sol.beta, False))
    a = estimate_dim(table, tau, window, grid)
    b = estimate_dim(enlarged, tau, window, grid)
    step = grid[1] - grid[0] if len(grid) > 1 else 0.0
    return RoundingCheck(a.s_hat, b.s_hat, step)
