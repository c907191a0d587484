"""Finite atomic measures, clamped Riesz potentials and energies, and the
ball-ratio certificates built on them (mass distribution lower bound, the
5r-cover upper bound, and the high-pressure subset used for energies).

The kernel is ``1 / max(|x - y|**s, 1)`` so sub-unit interactions (including
an atom with itself) contribute the full product of masses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import Ball, ShellSet, SparseSet, ceil_sqrt, shells_of, shells_of_real
from .cover import Cover, vitali_5r
from .errors import DimensionMismatch, EmptyShell, HypothesisFailed, ParseError


@dataclass(frozen=True)
class AtomicMeasure:
    """Point masses ``masses[i]`` at ``coords[i]``; atoms are kept sorted
    lexicographically (then by mass) so every reduction has a fixed order."""

    coords: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords)
        if c.ndim == 1:
            c = c[:, None]
        m = np.asarray(self.masses, dtype=np.float64).ravel()
        if len(c) != len(m):
            raise ValueError("coords and masses have different lengths")
        if np.any(~np.isfinite(m)) or np.any(m <= 0):
            raise ValueError("atom masses must be finite and positive")
        if np.issubdtype(c.dtype, np.integer):
            c = c.astype(np.int64)
        else:
            c = c.astype(np.float64)
        if len(c):
            order = np.lexsort((m,) + tuple(c.T[::-1]))
            c, m = c[order], m[order]
        c.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "coords", c)
        object.__setattr__(self, "masses", m)

    @classmethod
    def empty(cls, d: int) -> "AtomicMeasure":
        return cls(np.zeros((0, d), dtype=np.int64), np.zeros(0))

    @classmethod
    def counting(cls, points, weight: float = 1.0) -> "AtomicMeasure":
        pts = np.asarray(points, dtype=np.int64)
        return cls(pts, np.full(len(pts), float(weight)))

    @property
    def d(self) -> int:
        return self.coords.shape[1]

    @property
    def integral(self) -> bool:
        return np.issubdtype(self.coords.dtype, np.integer)

    def __len__(self) -> int:
        return len(self.masses)

    def total(self) -> float:
        return math.fsum(self.masses)

    def shells(self) -> np.ndarray:
        if self.integral:
            return shells_of(self.coords)
        norms = np.sqrt(np.einsum("ij,ij->i", self.coords, self.coords))
        return shells_of_real(norms)

    def select(self, mask) -> "AtomicMeasure":
        mask = np.asarray(mask, dtype=bool)
        return AtomicMeasure(self.coords[mask], self.masses[mask])

    def scaled(self, factor: float) -> "AtomicMeasure":
        return AtomicMeasure(self.coords, self.masses * factor)

    def mass_on(self, points) -> float:
        """Total mass of atoms located on the given lattice points."""
        pts = np.asarray(points, dtype=np.int64).reshape(-1, self.d)
        if not len(pts) or not len(self):
            return 0.0
        keys = {tuple(p) for p in pts.tolist()}
        return math.fsum(m for x, m in zip(self.coords.tolist(), self.masses) if tuple(x) in keys)

    def to_rows(self):
        return [(tuple(x), float(m)) for x, m in zip(self.coords.tolist(), self.masses)]


def combine(measures: Sequence[AtomicMeasure], d: int) -> AtomicMeasure:
    parts = [m for m in measures if len(m)]
    if not parts:
        return AtomicMeasure.empty(d)
    return AtomicMeasure(np.concatenate([m.coords for m in parts]), np.concatenate([m.masses for m in parts]))


def restrict(mu: AtomicMeasure, n: int) -> AtomicMeasure:
    """Atoms of ``mu`` lying in shell ``S_n``, masses unchanged."""
    if not len(mu):
        return mu
    return mu.select(mu.shells() == n)


def ball_mass(mu: AtomicMeasure, b: Ball) -> float:
    if not len(mu):
        return 0.0
    diff = mu.coords - np.asarray(b.center)
    inside = np.einsum("ij,ij->i", diff, diff) <= b.radius * b.radius
    return math.fsum(mu.masses[inside])


def _kernel_row(mu: AtomicMeasure, x, s: float) -> np.ndarray:
    diff = mu.coords - np.asarray(x, dtype=mu.coords.dtype if mu.integral else np.float64)
    d2 = np.einsum("ij,ij->i", diff, diff).astype(np.float64)
    return mu.masses / np.maximum(d2 ** (s / 2.0), 1.0)


def potential(mu: AtomicMeasure, x, s: float) -> float:
    """``sum_y m_y / max(|x - y|**s, 1)``."""
    if s < 0:
        raise ValueError("s must be non-negative")
    if not len(mu):
        return 0.0
    return math.fsum(_kernel_row(mu, x, s))


def energy(mu: AtomicMeasure, s: float) -> float:
    """Double sum over atom pairs, diagonal included; equal by construction to
    ``sum_i m_i * potential(mu, x_i, s)``."""
    if s < 0:
        raise ValueError("s must be non-negative")
    return math.fsum(float(m) * potential(mu, x, s) for x, m in zip(mu.coords, mu.masses))


@dataclass
class EnergyReport:
    s: float
    shells: List[int]
    energies: List[float]
    weighted_partial: List[float]
    masses: List[float]

    def to_json(self) -> dict:
        return {
            "s": self.s,
            "shells": self.shells,
            "energy": self.energies,
            "weighted_partial_sums": self.weighted_partial,
            "shell_mass": self.masses,
        }


def energy_series(mu: AtomicMeasure, s: float, n_max: int) -> EnergyReport:
    """Per-shell ``I_s(mu_n)``, the partial sums of ``2**(ns) I_s(mu_n)`` and shell masses."""
    shells = mu.shells() if len(mu) else np.zeros(0, dtype=np.int64)
    energies, masses, partial = [], [], []
    terms = []
    for n in range(n_max + 1):
        mu_n = mu.select(shells == n) if len(mu) else mu
        e = energy(mu_n, s)
        energies.append(e)
        masses.append(mu_n.total())
        terms.append(2.0 ** (n * s) * e)
        partial.append(math.fsum(terms))
    return EnergyReport(float(s), list(range(n_max + 1)), energies, partial, masses)


# ---------------------------------------------------------------------------
# ball-ratio scans


def ratio_profile(mu_n: AtomicMeasure, x, n: int, s: float, r_max: int) -> Tuple[np.ndarray, np.ndarray]:
    """Breakpoint radii in ``[1, r_max]`` and the ratio ``mu_n(B(x,r)) / (r/2^n)^s`` there.

    Between breakpoints the ball mass is constant and the ratio decreases, so
    the maximum over integer radii is attained at ``r = 1`` or at some
    ``ceil(dist)``."""
    if not len(mu_n):
        return np.array([1], dtype=np.int64), np.zeros(1)
    diff = mu_n.coords - np.asarray(x, dtype=np.int64)
    d2 = np.einsum("ij,ij->i", diff, diff)
    rad = np.maximum(ceil_sqrt(d2), 1)
    order = np.argsort(rad, kind="stable")
    rad = rad[order]
    cum = np.cumsum(mu_n.masses[order])
    radii, idx = np.unique(rad, return_index=True)
    # mass inside B(x, r) = cumulative mass up to the last atom with that radius
    last = np.r_[idx[1:] - 1, len(rad) - 1]
    mass = cum[last]
    keep = radii <= r_max
    radii, mass = radii[keep], mass[keep]
    if len(radii) == 0 or radii[0] != 1:
        radii = np.r_[1, radii]
        mass = np.r_[0.0, mass]
    ratio = mass / (radii / 2.0 ** n) ** s
    return radii, ratio


def max_ratio(mu_n: AtomicMeasure, x, n: int, s: float, r_max: int) -> Tuple[float, int]:
    radii, ratio = ratio_profile(mu_n, x, n, s, r_max)
    i = int(np.argmax(ratio))
    return float(ratio[i]), int(radii[i])


@dataclass
class MdpShell:
    n: int
    c_n: float
    argmax: Optional[Tuple[Tuple[int, ...], int]]
    mass: float
    bound: float
    empty: bool

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "c_n": self.c_n,
            "argmax": None if self.argmax is None else {"x": list(self.argmax[0]), "r": self.argmax[1]},
            "mass_on_E": self.mass,
            "lower_bound": self.bound,
            "empty": self.empty,
        }


@dataclass
class MdpCertificate:
    s: float
    shells: List[MdpShell]
    partial: List[float] = field(default_factory=list)
    off_support: float = 0.0

    def bound(self, n: int) -> float:
        for sh in self.shells:
            if sh.n == n:
                return sh.bound
        return 0.0

    def to_json(self) -> dict:
        return {
            "s": self.s,
            "r_scan": "[1, 2^(n+1)]",
            "shells": [sh.to_json() for sh in self.shells],
            "partial_sums": self.partial,
            "mass_off_E": self.off_support,
        }


def mdp_shell(mu_n: AtomicMeasure, target: ShellSet, s: float) -> MdpShell:
    """Certified ``nu_n^s(E) >= mu_n(E) / (c_n 2^s)``.

    ``c_n`` is the largest ball ratio over ``x`` in ``E ∩ S_n`` and integer
    ``r`` in ``[1, 2^(n+1)]``.  The scan has to reach ``2^(n+1)``: a cover
    ball of radius ``r`` around a center in ``S_n`` sits inside ``B(y, 2r)``
    for any target point ``y`` it meets, and for ``r`` up to ``2^n`` that
    doubled radius runs up to ``2^(n+1)``; larger balls already hold all of
    ``mu_n``.
    """
    n = target.n
    mass = mu_n.mass_on(target.points) if len(target) else 0.0
    if len(target) == 0 or mass <= 0.0:
        raise EmptyShell(f"shell {n} carries no mass on the target set")
    r_max = 2 ** (n + 1)
    best, arg = -1.0, None
    for p in target.points:
        v, r = max_ratio(mu_n, p, n, s, r_max)
        if v > best:
            best, arg = v, (tuple(int(c) for c in p), r)
    return MdpShell(n, best, arg, mass, mass / (best * 2.0 ** s), False)


def mdp_certify(mu: AtomicMeasure, E: SparseSet, s: float, n_range: Optional[Sequence[int]] = None) -> MdpCertificate:
    if n_range is None:
        n_range = range(E.n_max + 1)
    shells = mu.shells() if len(mu) else np.zeros(0, dtype=np.int64)
    out, terms, partial = [], [], []
    for n in n_range:
        mu_n = mu.select(shells == n) if len(mu) else mu
        try:
            sh = mdp_shell(mu_n, E.shell(n), s)
        except EmptyShell:
            sh = MdpShell(n, 0.0, None, 0.0, 0.0, True)
        out.append(sh)
        terms.append(sh.bound)
        partial.append(math.fsum(terms))
    off = mu.total() - math.fsum(mu.mass_on(E.points(n)) for n in range(E.n_max + 1)) if len(mu) else 0.0
    return MdpCertificate(float(s), out, partial, max(off, 0.0))


@dataclass
class RatioBound:
    cover: Cover
    cost: float
    bound: float
    bound_statement: float
    family_size: int
    selected: List[Ball]

    def to_json(self) -> dict:
        return {
            "cost": self.cost,
            "bound": self.bound,
            "bound_statement_constant": self.bound_statement,
            "family_size": self.family_size,
            "selected": [b.to_json() for b in self.selected],
            "balls": [b.to_json() for b in self.cover.balls],
        }


def proof_constant(d: int, s: float) -> float:
    return (5 * (2 + math.sqrt(d) / 2)) ** s


def statement_constant(d: int, s: float) -> float:
    return (5 * (1 + math.sqrt(d) / 2)) ** s


def ratio_upper_bound(mu_n: AtomicMeasure, target: ShellSet, s: float, c: float) -> RatioBound:
    """Cover ``E ∩ S_n`` using balls where the measure is dense.

    The family is every ``B(x, r)``, ``x`` in the target, ``r`` in
    ``{1..2^n}`` with ratio ``> c``; a disjoint subfamily is selected by the
    5r rule and each selected ``B(x_i, r_i)`` becomes the cover ball
    ``B(x_i, 5*ceil(r_i + sqrt(d)/2))``.
    """
    n = target.n
    d = target.d
    r_top = 2 ** n
    family = []
    for p in target.points:
        radii, ratio = ratio_profile(mu_n, p, n, s, r_top)
        hit = radii[ratio > c]
        if len(hit) == 0:
            v, r = max_ratio(mu_n, p, n, s, r_top)
            raise HypothesisFailed(
                f"no radius in [1, {r_top}] has ratio > {c} at x={tuple(int(v_) for v_ in p)} (max {v} at r={r})",
                witness=tuple(int(v_) for v_ in p),
            )
        family.extend(Ball(tuple(int(v) for v in p), int(r)) for r in hit)
    picked = vitali_5r(family)
    grow = math.sqrt(d) / 2
    balls = tuple(sorted(Ball(b.center, 5 * math.ceil(b.radius + grow)) for b in picked))
    cover = Cover(n, balls)
    cost = cover.cost(s)
    total = mu_n.total()
    bound = proof_constant(d, s) * total / c
    if cost > bound * (1 + 1e-12):
        raise AssertionError(f"constructed cover cost {cost} exceeds {bound}")
    return RatioBound(cover, cost, bound, statement_constant(d, s) * total / c, len(family), picked)


@dataclass
class PressureResult:
    kept: ShellSet
    removed: ShellSet
    removed_mass: float


def pressure_set(mu_n: AtomicMeasure, target: ShellSet, s: float) -> PressureResult:
    """Split ``E ∩ S_n`` into points whose ball ratios never exceed 1 (over
    ``r`` in ``[1, 2^(n+1)]``) and the rest; report ``mu_n`` of the rest."""
    n = target.n
    keep = np.ones(len(target), dtype=bool)
    for i, p in enumerate(target.points):
        v, _ = max_ratio(mu_n, p, n, s, 2 ** (n + 1))
        keep[i] = v <= 1.0
    removed = target.subset(~keep)
    return PressureResult(target.subset(keep), removed, mu_n.mass_on(removed.points))


# ---------------------------------------------------------------------------
# measure files


def load_measure(path) -> AtomicMeasure:
    """CSV: ``d`` integer coordinates then a positive decimal mass per line."""
    path = Path(path)
    coords, masses = [], []
    d = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [t.strip() for t in line.split(",")]
            if len(parts) < 2:
                raise ParseError("expected coordinates followed by a mass", lineno, path)
            try:
                row = [int(t) for t in parts[:-1]]
                m = float(parts[-1])
            except ValueError:
                raise ParseError(f"malformed measure line {line!r}", lineno, path) from None
            if not (m > 0 and math.isfinite(m)):
                raise ParseError(f"mass must be positive, got {parts[-1]}", lineno, path)
            if d is None:
                d = len(row)
            elif len(row) != d:
                raise DimensionMismatch(f"{path}:{lineno}: expected {d} coordinates, got {len(row)}")
            coords.append(row)
            masses.append(m)
    if d is None:
        return AtomicMeasure.empty(1)
    return AtomicMeasure(np.array(coords, dtype=np.int64), np.array(masses))


def store_measure(mu: AtomicMeasure, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for x, m in zip(mu.coords.tolist(), mu.masses):
            fh.write(",".join(str(int(v)) for v in x) + "," + repr(float(m)) + "\n")
