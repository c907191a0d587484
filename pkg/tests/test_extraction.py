from __future__ import annotations

import math

import numpy as np
import pytest

from macrodim.core import ShellSet, SparseSet, enumerate_shell_lattice, shell_bounds_sq
from macrodim.cover import nu_exact
from macrodim.extraction import (convsum1_diagnostics, dyadic_level, energy_witness, epsilon_schedule,
                                 extract_s_set, localize, regularity_constant, regularize, select_convsum2,
                                 select_convsum3, shell_rank, shell_size)
from macrodim.generators import gen_full, gen_lacunary, gen_singletons
from macrodim.selftest import check_sequences


def test_convsum1_bounded_partial_sums():
    a = np.ones(10_000)
    A, conv, div = convsum1_diagnostics(a, 0.5)
    assert np.array_equal(A, np.arange(1, 10_001))
    # sum 1/n^1.5 <= 1 + integral_1^inf x^-1.5 dx = 3
    assert conv[-1] <= 3.0
    assert div[-1] == pytest.approx(math.fsum(1 / n for n in range(1, 10_001)))


def test_convsum1_harmonic_divergence():
    n = np.arange(1, 10 ** 6 + 1, dtype=np.float64)
    _, _, div = convsum1_diagnostics(1 / n, 0.5)
    # still growing at the end: the last decade adds a visible amount
    assert div[-1] - div[10 ** 5 - 1] > 0.1


def test_convsum1_single_term():
    A, conv, div = convsum1_diagnostics([0.3], 1.0)
    assert A.tolist() == [0.3] and div.tolist() == [1.0]


def test_dyadic_level():
    assert dyadic_level(np.array([0.75, 0.5, 0.3, 0.25, 0.01])).tolist() == [0, 0, 1, 1, 6]


def test_convsum2_geometric():
    N = 30
    a = 2.0 ** -np.arange(1, N + 1)
    sel = select_convsum2(a, np.ones(N))
    assert len(sel.selected()) > 0
    assert np.all((sel.c == 0) | (sel.c == 1.0))
    assert all(b["ok"] for b in sel.blocks)


def test_convsum2_first_level():
    a = np.full(400, 0.02)  # 2^-6 <= a < 2^-5: level 5
    sel = select_convsum2(a, np.full(400, 0.9))
    assert sel.levels[0] == 5
    assert sel.selected()[0] == 0
    assert sel.blocks[0]["complete"]
    # the closing level is 5, so nothing after the first block can be kept
    assert sel.selected().max() == sel.blocks[0]["closing_index"]


def test_convsum2_shift_normalization():
    a = np.linspace(0.9, 0.01, 100)
    sel = select_convsum2(a, np.full(100, 0.5), normalization="shift")
    assert sel.levels.min() == 2
    assert not sel.degenerate
    strict = select_convsum2(a, np.full(100, 0.5))
    assert strict.levels.min() == 0


def test_convsum2_degenerate():
    sel = select_convsum2([0.9, 0.6], [1.0, 1.0])
    assert sel.degenerate and len(sel.selected()) == 0


def test_convsum3_geometric():
    N = 40
    b = 2.0 ** -np.arange(1, N + 1)
    sel = select_convsum3(np.full(N, 0.5), b)
    assert np.all((sel.c == 0) | (sel.c == 0.5))
    done = [blk for blk in sel.blocks if blk["complete"]]
    for blk in sel.blocks:
        assert blk["ok"]
    assert math.fsum(sel.c) >= len(done)


def test_sequence_selections_random():
    ok, detail = check_sequences(seed=1, count=10, length=3000)
    assert ok, detail


def test_localize_singletons():
    E = gen_singletons(1, 8)
    F, tr = localize(E, 0.5)
    assert F == E
    assert tr.all_ok()


def test_localize_full_line():
    E = gen_full(1, 8)
    F, tr = localize(E, 0.6, solver="exact")
    assert F.issubset(E)
    for rec in tr.records:
        n = rec["n"]
        pts = F.points(n)
        assert nu_exact(F.shell(n), 0.6).cost >= rec["alpha_n"] * rec["nu"] * (1 - 1e-12) or rec["cells_nonempty"] > 1 / rec["alpha_n"]
        if len(pts) > 1:
            assert pts.max() - pts.min() <= 2.0 ** n * rec["alpha_n"]


def test_shell_rank_and_size():
    for n, d in ((3, 1), (2, 2), (3, 2), (2, 3)):
        pts = enumerate_shell_lattice(n, d)
        assert shell_size(n, d) == len(pts)
        for i in (0, len(pts) // 3, len(pts) - 1):
            assert shell_rank(pts[i], n) == i


def test_epsilon_schedule_monotone():
    nus = [1.0] * 40
    A = [float(k + 1) for k in range(40)]
    eps, marks, incomplete = epsilon_schedule(nus, A)
    assert all(a >= b for a, b in zip(eps, eps[1:]))
    assert marks == sorted(marks)


def test_extract_singletons():
    E = gen_singletons(1, 8)
    F, tr = extract_s_set(E, 0.5)
    for rec in tr.records:
        assert rec["b_n"] * rec["nu"] > 0
        assert rec["kept"] == 1
    assert F == E


@pytest.mark.parametrize("s_star", [0.4, 0.7])
def test_extract_lacunary(s_star):
    E = gen_lacunary(1, s_star, 10)
    F, tr = extract_s_set(E, s_star, full_scan=True)
    assert tr.all_ok(), tr.failed()
    assert F.issubset(E)
    for rec in tr.records:
        n = rec["n"]
        nu_F = nu_exact(F.shell(n), s_star).cost
        assert rec["target"] <= nu_F * (1 + 1e-12)
        assert nu_F <= rec["target"] + 2.0 ** (-n * s_star) + 1e-12


def test_regularize_default_keeps_lattice_sets():
    E = gen_lacunary(1, 0.5, 8)
    F, tr = regularize(E, 0.5, probes=20)
    assert F == E and tr.flags["shortcut"]
    assert tr.all_ok()


def test_regularize_threshold_override():
    # a tight cluster next to a sparse tail; a low threshold strips the cluster
    n = 6
    cluster = [[40], [41], [42], [43], [44]]
    tail = [[-60], [-50], [60]]
    E = SparseSet(1, n, {n: np.array(cluster + tail)})
    F, tr = regularize(E, 0.5, threshold=0.3)
    rec = tr.records[0]
    assert rec["removed"] > 0
    assert rec["nu_F"] <= rec["nu_E"]
    kept = set(F.points(n).ravel().tolist())
    assert kept < {p[0] for p in cluster + tail}


def test_regularity_constant():
    assert regularity_constant(1, 0.5) == pytest.approx(5 * (5 * 2.5) ** 0.5)


def test_energy_witness_lacunary():
    E = gen_lacunary(1, 0.6, 10)
    W = energy_witness(E, 0.6, 0.2, probes=50)
    diag = W.diagnostics
    assert diag["nested"]
    assert all(c["ok"] for c in diag["mass_checks"])
    assert diag["ball_mass_probes"]["passed"] == diag["ball_mass_probes"]["total"]
    assert W.measure.total() > 0
    # every atom sits on the input set
    pts = {tuple(p) for p in E.all_points().tolist()}
    assert all(tuple(p) in pts for p in W.measure.coords.tolist())
    assert len(diag["weighted_energy_partial_sums"]) == 11
