"""Randomized invariant checks shared by ``macrodim selftest`` and the test suite.

Each ``check_*`` function draws its instances from a seeded generator, runs
the production code and an independent route side by side, and returns a
``(ok, detail)`` pair.  The CLI calls them at reduced sizes.
"""

from __future__ import annotations

import math
from typing import Callable, List, Tuple

import numpy as np

from .core import Ball, ShellSet, SparseSet, enumerate_shell_lattice, shell_bounds_sq, shell_of
from .cover import nu_exact, vitali_5r
from .errors import HypothesisFailed
from .measure import (AtomicMeasure, energy, max_ratio, mdp_shell, pressure_set, proof_constant,
                      ratio_upper_bound)
from .oracle import brute_force_nu

Check = Tuple[bool, str]


# ---------------------------------------------------------------------------
# random instances


def random_shell_set(rng: np.random.Generator, d: int, n_max: int, k_max: int) -> ShellSet:
    n = int(rng.integers(0, n_max + 1))
    lattice = enumerate_shell_lattice(n, d)
    k = int(rng.integers(1, min(k_max, len(lattice)) + 1))
    idx = rng.choice(len(lattice), size=k, replace=False)
    return ShellSet(n, lattice[np.sort(idx)])


def random_measure_on(rng: np.random.Generator, target: ShellSet, extra: int = 3) -> AtomicMeasure:
    """Random positive masses on the target plus a few other lattice points of the shell."""
    lattice = enumerate_shell_lattice(target.n, target.d)
    pick = rng.choice(len(lattice), size=min(extra, len(lattice)), replace=False)
    pts = np.unique(np.concatenate([target.points, lattice[pick]]), axis=0)
    scale = 2.0 ** (-target.n * rng.uniform(0.0, 1.0))
    masses = rng.uniform(0.05, 1.0, size=len(pts)) * scale
    return AtomicMeasure(pts, masses)


def random_point_in_shell(rng: np.random.Generator, k: int, d: int = 2) -> Tuple[int, ...]:
    lo, hi = shell_bounds_sq(k)
    R = 2 ** k
    while True:
        x = tuple(int(v) for v in rng.integers(-R, R + 1, size=d))
        m = sum(v * v for v in x)
        if lo < m <= hi:
            return x


# ---------------------------------------------------------------------------
# cover solvers


def check_oracle(seed: int = 0, count_1d: int = 200, count_2d: int = 100, tol: float = 1e-12) -> Check:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for d, count, n_max, k_max in ((1, count_1d, 6, 12), (2, count_2d, 4, 8)):
        for _ in range(count):
            T = random_shell_set(rng, d, n_max, k_max)
            s = float(rng.uniform(0.05, d))
            a = nu_exact(T, s).cost
            b = brute_force_nu(T.points, T.n, s)
            worst = max(worst, abs(a - b))
            if abs(a - b) > tol:
                return False, f"d={d} n={T.n} s={s} points={T.as_tuples()}: solver {a} vs brute force {b}"
    return True, f"{count_1d} 1D + {count_2d} 2D instances, max |diff| = {worst:.3g}"


def check_vitali(seed: int = 0, count: int = 100) -> Check:
    rng = np.random.default_rng(seed)
    for _ in range(count):
        d = int(rng.integers(1, 3))
        k = int(rng.integers(1, 25))
        balls = [Ball(tuple(int(v) for v in rng.integers(-20, 21, size=d)), int(rng.integers(1, 8))) for _ in range(k)]
        picked = vitali_5r(balls)
        for i, a in enumerate(picked):
            for b in picked[i + 1:]:
                gap = sum((x - y) ** 2 for x, y in zip(a.center, b.center))
                if gap <= (a.radius + b.radius) ** 2:
                    return False, f"picked balls {a} and {b} intersect"
        grown = [Ball(b.center, 5 * b.radius) for b in picked]
        for b in balls:
            for p in _lattice_ball(b):
                if not any(g.contains(p) for g in grown):
                    return False, f"point {p} of {b} not covered by the 5-fold dilations"
    return True, f"{count} families"


def _lattice_ball(b: Ball):
    d = len(b.center)
    r = b.radius
    rng = np.arange(-r, r + 1)
    grids = np.meshgrid(*([rng] * d), indexing="ij")
    offs = np.column_stack([g.ravel() for g in grids])
    offs = offs[np.einsum("ij,ij->i", offs, offs) <= r * r]
    return [tuple(int(v) for v in row) for row in offs + np.asarray(b.center)]


# ---------------------------------------------------------------------------
# measures


def check_mdp(seed: int = 0, count: int = 200) -> Check:
    rng = np.random.default_rng(seed)
    for _ in range(count):
        d = int(rng.integers(1, 3))
        T = random_shell_set(rng, d, 5 if d == 1 else 3, 10 if d == 1 else 7)
        mu = random_measure_on(rng, T)
        s = float(rng.uniform(0.1, d))
        sh = mdp_shell(mu, T, s)
        nu = nu_exact(T, s).cost
        if sh.bound > nu * (1 + 1e-12):
            return False, f"lower bound {sh.bound} exceeds nu={nu} (n={T.n}, s={s})"
        if sh.mass > 0 and not sh.bound > 0:
            return False, f"bound is zero although mu(E)={sh.mass}"
    return True, f"{count} instances"


def check_ratio_bound(seed: int = 0, count: int = 100) -> Check:
    rng = np.random.default_rng(seed)
    done = 0
    tries = 0
    while done < count:
        tries += 1
        if tries > 20 * count:
            return False, f"only {done} instances passed the hypothesis check"
        d = int(rng.integers(1, 3))
        T = random_shell_set(rng, d, 5 if d == 1 else 3, 10 if d == 1 else 7)
        mu = random_measure_on(rng, T, extra=0)
        s = float(rng.uniform(0.1, d))
        n = T.n
        # half the largest c for which the hypothesis holds at every target point
        c = 0.5 * min(max_ratio(mu, p, n, s, 2 ** n)[0] for p in T.points)
        if not c > 0:
            continue
        try:
            rb = ratio_upper_bound(mu, T, s, c)
        except HypothesisFailed:
            continue
        total = mu.total()
        bound = proof_constant(d, s) * total / c
        if rb.cost > bound * (1 + 1e-12):
            return False, f"cover cost {rb.cost} > {bound}"
        for p in T.points:
            if not any(b.contains(tuple(p)) for b in rb.cover.balls):
                return False, f"constructed cover misses {tuple(p)}"
        done += 1
    return True, f"{count} instances"


def check_pressure(seed: int = 0, count: int = 200) -> Check:
    rng = np.random.default_rng(seed)
    for _ in range(count):
        d = int(rng.integers(1, 3))
        T = random_shell_set(rng, d, 8 if d == 1 else 4, 12 if d == 1 else 8)
        mu = random_measure_on(rng, T, extra=0)
        s = float(rng.uniform(0.1, d))
        n = T.n
        res = pressure_set(mu, T, s)
        lhs = energy(mu, s)
        rhs = 2.0 ** (-n * s) * res.removed_mass
        if lhs < rhs * (1 - 1e-12):
            return False, f"I_s={lhs} < 2^(-ns) mu(E^c)={rhs} (n={n}, s={s})"
    return True, f"{count} instances"


# ---------------------------------------------------------------------------
# sequences


def _random_pair(rng: np.random.Generator, length: int):
    n = np.arange(1, length + 1, dtype=np.float64)
    a = rng.uniform(0.2, 1.0, size=length) * n ** -rng.uniform(0.3, 1.0)
    b = rng.uniform(0.1, 1.0, size=length)
    return a, b


def check_sequences(seed: int = 0, count: int = 50, length: int = 4000) -> Check:
    from .extraction import select_convsum2, select_convsum3

    rng = np.random.default_rng(seed)
    for _ in range(count):
        a, b = _random_pair(rng, length)
        sel = select_convsum2(a, b)
        if not np.all((sel.c == 0) | (sel.c == b)):
            return False, "convsum2: c_n not in {0, b_n}"
        prev = 1
        for blk in sel.blocks:
            if not blk["ok"]:
                return False, f"convsum2 block {blk['k']}: sum {blk['sum']} outside ({blk['lower']}, {blk['upper']})"
            lv = sel.levels[blk["indices"]]
            if np.any(lv <= prev):
                return False, f"convsum2 block {blk['k']}: level not above {prev}"
            if blk["complete"]:
                prev = blk["level"]
        a3, b3 = _random_pair(rng, length)
        b3 = b3 * np.arange(1, length + 1) ** -0.5
        sel3 = select_convsum3(a3, b3)
        if not np.all((sel3.c == 0) | (sel3.c == a3)):
            return False, "convsum3: c_n not in {0, a_n}"
        for blk in sel3.blocks:
            if not blk["ok"]:
                return False, f"convsum3 block {blk['k']}: sum {blk['sum']} outside [{blk['lower']}, {blk['upper']})"
            if blk["complete"] and blk["sum_c"] < 1.0 - 1e-12:
                return False, f"convsum3 block {blk['k']}: sum of c = {blk['sum_c']} < 1"
    return True, f"{count} pairs each"


# ---------------------------------------------------------------------------
# angle sets


def check_angles(seed: int = 0, count: int = 200, samples: int = 10_000, k_max: int = 10) -> Check:
    from .projection import angle_interval, scan_angle_set

    rng = np.random.default_rng(seed)
    step = math.pi / samples
    over = []
    for _ in range(count):
        k = int(rng.integers(1, k_max + 1))
        x = random_point_in_shell(rng, k)
        n = int(rng.integers(0, k + 1))
        J = angle_interval(x, n)
        scan = scan_angle_set(x, n, samples)
        th = np.arange(samples) * step
        closed = np.array([J.contains(t) for t in th])
        bad = np.flatnonzero(closed != scan)
        if len(bad):
            ends = [e for a, b in J.pieces() for e in (a, b)]
            for j in bad:
                gap = min(min(abs(th[j] - e), math.pi - abs(th[j] - e)) for e in ends)
                if gap > 1e-9:
                    return False, f"x={x} n={n}: membership differs at theta={th[j]}"
        est = scan.sum() * step
        if abs(est - J.length) > 4 * step * max(1, len(J.arcs)):
            return False, f"x={x} n={n}: scan length {est} vs closed form {J.length}"
        if not J.within_bound:
            over.append((x, n, J.length, J.bound))
    if over:
        x, n, ln, bd = over[0]
        return False, f"{len(over)} of {count} exceed 4*2^(n-k); first x={x} n={n}: {ln} > {bd}"
    return True, f"{count} (x, n) pairs"


# ---------------------------------------------------------------------------
# extraction


def check_extraction(s_stars=(0.4, 0.7), n_max: int = 10, probes: int = 500, seed: int = 0) -> Check:
    from .extraction import extract_s_set, regularize
    from .generators import gen_lacunary

    rows = 0
    for s_star in s_stars:
        E = gen_lacunary(1, s_star, n_max)
        s = s_star
        F, tr = extract_s_set(E, s, solver="exact", full_scan=True)
        if not tr.all_ok():
            n, c = tr.failed()[0]
            return False, f"s*={s_star} shell {n}: {c['check']} ({c['lhs']} vs {c['rhs']})"
        G, tr2 = regularize(E, s, solver="exact", probes=-(-probes // (n_max + 1)), seed=seed)
        if not tr2.all_ok():
            n, c = tr2.failed()[0]
            return False, f"s*={s_star} shell {n}: {c['check']} ({c['lhs']} vs {c['rhs']})"
        rows += len(tr.records)
    return True, f"{len(s_stars)} fixtures, {rows} shells"


def check_determinism(seed: int = 7) -> Check:
    from .generators import gen_walk_range

    a = gen_walk_range(20_000, seed)
    b = gen_walk_range(20_000, seed)
    if a != b:
        return False, "walk range differs between runs"
    return True, f"walk range with {len(a)} sites reproduced"


def run_selftest(seed: int = 0) -> List[dict]:
    checks: List[Tuple[str, Callable[[], Check]]] = [
        ("cover oracle", lambda: check_oracle(seed, 20, 10)),
        ("5r covering", lambda: check_vitali(seed, 20)),
        ("mass distribution bound", lambda: check_mdp(seed, 20)),
        ("5r cover upper bound", lambda: check_ratio_bound(seed, 10)),
        ("energy vs high-pressure mass", lambda: check_pressure(seed, 20)),
        ("sequence selections", lambda: check_sequences(seed, 5, 1000)),
        ("angle intervals", lambda: check_angles(seed, 20, 2000)),
        ("s-set extraction", lambda: check_extraction((0.4,), 6, 50, seed)),
        ("determinism", lambda: check_determinism()),
    ]
    rows = []
    for name, fn in checks:
        try:
            ok, detail = fn()
        except Exception as exc:  # report, never crash the table
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        rows.append({"check": name, "ok": bool(ok), "detail": detail})
    return rows
