"""Lattice geometry: points, closed balls, dyadic shells and sparse per-shell sets.

Shells follow a half-open outward convention::

    S_0 = {x : |x| <= 1}
    S_n = {x : 2**(n-1) < |x| <= 2**n}      (n >= 1)

so that the shells partition the whole space.  Balls are closed.  All
membership tests on lattice points are done on integer squared norms, so
there is no floating point involved in deciding which shell a point is in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Iterator, Optional, Tuple

import numpy as np

from .errors import BudgetExceeded, DimensionMismatch, ParseError

Point = Tuple[int, ...]

N_MAX_LIMIT = 24
ENUM_BUDGET = 20_000_000


def shell_bounds_sq(n: int) -> Tuple[int, int]:
    """Return ``(lo, hi)`` such that ``p`` is in ``S_n`` iff ``lo < |p|^2 <= hi``."""
    if n < 0:
        raise ValueError("shell index must be non-negative")
    if n == 0:
        return -1, 1
    return 4 ** (n - 1), 4 ** n


def shell_of_sq(m: int) -> int:
    """Shell index of a point with squared norm ``m``."""
    if m <= 1:
        return 0
    # smallest n with m <= 4**n
    return ((m - 1).bit_length() + 1) // 2


def shell_of(p) -> int:
    return shell_of_sq(sum(int(c) * int(c) for c in p))


def shells_of(points: np.ndarray) -> np.ndarray:
    """Vectorised :func:`shell_of` for an integer array of shape (k, d)."""
    pts = np.asarray(points, dtype=np.int64)
    if pts.ndim == 1:
        pts = pts[:, None]
    m = np.einsum("ij,ij->i", pts, pts)
    out = np.zeros(len(m), dtype=np.int64)
    big = m > 1
    if big.any():
        mb = m[big]
        n = np.ceil(np.log2(mb.astype(np.float64)) / 2.0).astype(np.int64)
        # float rounding can be off by one near powers of four
        n = np.where(mb > 4 ** n, n + 1, n)
        n = np.where((n > 1) & (mb <= 4 ** (n - 1)), n - 1, n)
        out[big] = n
    return out


def shell_of_real(t: float) -> int:
    """Shell index of a real norm (used for projected, unrounded scalars)."""
    a = abs(float(t))
    if a <= 1.0:
        return 0
    mant, exp = math.frexp(a)  # a = mant * 2**exp, mant in [0.5, 1)
    return exp - 1 if mant == 0.5 else exp


def shells_of_real(values) -> np.ndarray:
    return np.array([shell_of_real(v) for v in np.ravel(values)], dtype=np.int64)


@dataclass(frozen=True, order=True)
class Ball:
    center: Point
    radius: int

    def __post_init__(self):
        if int(self.radius) != self.radius or self.radius < 1:
            raise ValueError(f"ball radius must be an integer >= 1, got {self.radius!r}")
        object.__setattr__(self, "center", tuple(int(c) for c in self.center))
        object.__setattr__(self, "radius", int(self.radius))

    def contains(self, p) -> bool:
        return ball_contains(self, p)

    def to_json(self) -> dict:
        return {"center": list(self.center), "r": self.radius}


def ball_contains(b: Ball, p) -> bool:
    d2 = sum((int(a) - int(c)) ** 2 for a, c in zip(p, b.center))
    return d2 <= b.radius * b.radius


def ball_mask(center, radius: int, points: np.ndarray) -> np.ndarray:
    """Boolean mask of the rows of ``points`` lying in the closed ball."""
    diff = np.asarray(points, dtype=np.int64) - np.asarray(center, dtype=np.int64)
    return np.einsum("ij,ij->i", diff, diff) <= int(radius) ** 2


def ceil_sqrt(m: np.ndarray) -> np.ndarray:
    """Exact ceil(sqrt(m)) for non-negative int64 arrays."""
    m = np.asarray(m, dtype=np.int64)
    r = np.ceil(np.sqrt(m.astype(np.float64))).astype(np.int64)
    r = np.where(r * r < m, r + 1, r)
    r = np.where((r > 0) & ((r - 1) * (r - 1) >= m), r - 1, r)
    return r


def lex_sorted(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=np.int64)
    if len(pts) == 0:
        return pts.reshape(0, pts.shape[1] if pts.ndim == 2 else 1)
    order = np.lexsort(pts.T[::-1])
    return pts[order]


def unique_rows(points: np.ndarray) -> np.ndarray:
    """Lexicographically sorted unique rows."""
    pts = np.asarray(points, dtype=np.int64)
    if len(pts) == 0:
        return pts
    return np.unique(pts, axis=0)


def shell_lattice_count_estimate(n: int, d: int) -> int:
    side = 2 ** (n + 1) + 1
    return side ** d


def enumerate_shell_lattice(n: int, d: int, budget: int = ENUM_BUDGET) -> np.ndarray:
    """All points of ``Z^d ∩ S_n`` as an (k, d) array in lexicographic order."""
    if d not in (1, 2, 3):
        raise ValueError("only d in {1, 2, 3} is supported")
    est = shell_lattice_count_estimate(n, d) if d > 1 else 2 ** (n + 1) + 1
    if est > budget:
        raise BudgetExceeded(f"shell {n} in dimension {d} has up to {est} lattice points (budget {budget})")
    return np.concatenate(list(_shell_rows(n, d)), axis=0) if n >= 0 else None


def iter_shell_lattice(n: int, d: int, budget: int = ENUM_BUDGET) -> Iterator[Point]:
    """Stream version of :func:`enumerate_shell_lattice`."""
    for row in enumerate_shell_lattice(n, d, budget):
        yield tuple(int(c) for c in row)


def _shell_rows(n: int, d: int):
    lo, hi = shell_bounds_sq(n)
    R = 2 ** n
    if d == 1:
        xs = np.arange(-R, R + 1, dtype=np.int64)
        m = xs * xs
        yield xs[(m > lo) & (m <= hi)][:, None]
        return
    ys = np.arange(-R, R + 1, dtype=np.int64)
    if d == 2:
        for x in range(-R, R + 1):
            m = x * x + ys * ys
            sel = ys[(m > lo) & (m <= hi)]
            if len(sel):
                yield np.column_stack([np.full(len(sel), x, dtype=np.int64), sel])
        yield np.zeros((0, 2), dtype=np.int64)
        return
    Y, Z = np.meshgrid(ys, ys, indexing="ij")
    yz = np.column_stack([Y.ravel(), Z.ravel()])
    m_yz = (yz * yz).sum(axis=1)
    for x in range(-R, R + 1):
        m = x * x + m_yz
        sel = yz[(m > lo) & (m <= hi)]
        if len(sel):
            yield np.column_stack([np.full(len(sel), x, dtype=np.int64), sel])
    yield np.zeros((0, 3), dtype=np.int64)


def _empty(d: int) -> np.ndarray:
    return np.zeros((0, d), dtype=np.int64)


@dataclass(frozen=True)
class ShellSet:
    """The finite set ``E ∩ S_n``; points are unique and lexicographically sorted."""

    n: int
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64)
        if pts.ndim == 1:
            pts = pts[:, None]
        pts = unique_rows(pts)
        if len(pts) and np.any(shells_of(pts) != self.n):
            bad = pts[shells_of(pts) != self.n][0]
            raise ValueError(f"point {tuple(int(c) for c in bad)} is not in shell {self.n}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.points)

    def subset(self, mask: np.ndarray) -> "ShellSet":
        return ShellSet(self.n, self.points[np.asarray(mask, dtype=bool)])

    def within(self, center, radius: int) -> "ShellSet":
        return self.subset(ball_mask(center, radius, self.points))

    def as_tuples(self):
        return [tuple(int(c) for c in p) for p in self.points]


@dataclass(frozen=True)
class SparseSet:
    """An unbounded lattice set truncated at shell ``n_max``, stored shell by shell."""

    d: int
    n_max: int
    shells: Dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.n_max > N_MAX_LIMIT:
            raise ValueError(f"n_max={self.n_max} exceeds the supported limit {N_MAX_LIMIT}")
        clean = {}
        for n in sorted(self.shells):
            arr = np.asarray(self.shells[n], dtype=np.int64).reshape(-1, self.d)
            if len(arr) == 0:
                continue
            if n > self.n_max:
                raise ValueError(f"shell {n} beyond n_max={self.n_max}")
            arr = unique_rows(arr)
            if np.any(shells_of(arr) != n):
                raise ValueError(f"shell {n} contains points outside S_{n}")
            arr.setflags(write=False)
            clean[int(n)] = arr
        object.__setattr__(self, "shells", clean)

    @classmethod
    def from_points(cls, points, d: Optional[int] = None, n_max: Optional[int] = None) -> "SparseSet":
        pts = np.asarray(points, dtype=np.int64)
        if pts.size == 0:
            return cls(d or 1, n_max if n_max is not None else 0, {})
        if pts.ndim == 1:
            pts = pts[:, None] if (d in (None, 1)) else pts.reshape(-1, d)
        if d is not None and pts.shape[1] != d:
            raise DimensionMismatch(f"expected dimension {d}, got {pts.shape[1]}")
        d = pts.shape[1]
        sh = shells_of(pts)
        top = int(sh.max())
        if n_max is None:
            n_max = top
        elif top > n_max:
            raise ValueError(f"points reach shell {top} > n_max={n_max}")
        shells = {int(n): pts[sh == n] for n in np.unique(sh)}
        return cls(d, n_max, shells)

    def points(self, n: int) -> np.ndarray:
        return self.shells.get(n, _empty(self.d))

    def shell(self, n: int) -> ShellSet:
        return ShellSet(n, self.points(n))

    def shell_indices(self):
        return sorted(self.shells)

    def all_points(self) -> np.ndarray:
        if not self.shells:
            return _empty(self.d)
        return lex_sorted(np.concatenate([self.shells[n] for n in sorted(self.shells)]))

    def __len__(self) -> int:
        return sum(len(v) for v in self.shells.values())

    def count(self, n: int) -> int:
        return len(self.points(n))

    def with_shell(self, n: int, points) -> "SparseSet":
        shells = dict(self.shells)
        shells[n] = np.asarray(points, dtype=np.int64).reshape(-1, self.d)
        return SparseSet(self.d, self.n_max, shells)

    def keep_shells(self, keep: Iterable[int]) -> "SparseSet":
        keep = set(keep)
        return SparseSet(self.d, self.n_max, {n: v for n, v in self.shells.items() if n in keep})

    def parity_split(self, parity: Optional[str]) -> "SparseSet":
        """Keep only even or odd shells (``parity`` in {'even', 'odd', None})."""
        if parity is None:
            return self
        if parity not in ("even", "odd"):
            raise ValueError("parity must be 'even', 'odd' or None")
        r = 0 if parity == "even" else 1
        return self.keep_shells(n for n in self.shells if n % 2 == r)

    def truncate(self, n_max: int) -> "SparseSet":
        return SparseSet(self.d, n_max, {n: v for n, v in self.shells.items() if n <= n_max})

    def issubset(self, other: "SparseSet") -> bool:
        for n, pts in self.shells.items():
            if not len(pts):
                continue
            theirs = {tuple(p) for p in other.points(n).tolist()}
            if any(tuple(p) not in theirs for p in pts.tolist()):
                return False
        return True

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseSet):
            return NotImplemented
        if self.d != other.d or self.shell_indices() != other.shell_indices():
            return False
        return all(np.array_equal(self.shells[n], other.shells[n]) for n in self.shells)

    __hash__ = None


def load_set(path, n_max: Optional[int] = None) -> SparseSet:
    """Read a point-set CSV (one point per line, '#' comments)."""
    path = Path(path)
    rows = []
    d = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [t.strip() for t in line.split(",")]
            try:
                row = [int(t) for t in parts]
            except ValueError:
                raise ParseError(f"not a list of integers: {line!r}", lineno, path) from None
            if d is None:
                d = len(row)
                if d not in (1, 2, 3):
                    raise ParseError(f"unsupported dimension {d}", lineno, path)
            elif len(row) != d:
                raise DimensionMismatch(f"{path}:{lineno}: expected {d} coordinates, got {len(row)}")
            rows.append(row)
    if d is None:
        return SparseSet(1, n_max or 0, {})
    pts = np.array(rows, dtype=np.int64)
    return SparseSet.from_points(pts, d=d, n_max=n_max)


def store_set(s: SparseSet, path, header: Optional[str] = None) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for p in s.all_points():
            fh.write(",".join(str(int(c)) for c in p) + "\n")
