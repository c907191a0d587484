from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from macrodim.core import Ball, ShellSet, SparseSet, enumerate_shell_lattice
from macrodim.cover import nu_exact
from macrodim.errors import EmptyShell, HypothesisFailed
from macrodim.generators import gen_lacunary
from macrodim.measure import (AtomicMeasure, ball_mass, combine, energy, energy_series, load_measure,
                              mdp_certify, mdp_shell, potential, pressure_set, ratio_upper_bound, restrict,
                              store_measure)
from macrodim.selftest import check_mdp, check_pressure, check_ratio_bound


def naive_potential(coords, masses, x, s):
    total = 0.0
    for y, m in zip(coords, masses):
        dist = math.sqrt(sum((float(a) - float(b)) ** 2 for a, b in zip(x, y)))
        total += m / max(dist ** s, 1.0)
    return total


def test_restrict():
    mu = AtomicMeasure(np.array([[0, 0], [3, 4], [2, 0]]), np.array([1.0, 2.0, 3.0]))
    assert restrict(mu, 0).total() == 1.0
    assert restrict(mu, 2).total() == 0.0
    assert math.fsum(restrict(mu, n).total() for n in range(5)) == mu.total()


def test_ball_mass():
    assert ball_mass(AtomicMeasure.empty(2), Ball((0, 0), 3)) == 0.0
    assert ball_mass(AtomicMeasure(np.array([[1, 1]]), np.array([1.0])), Ball((1, 1), 1)) == 1.0
    mu = AtomicMeasure(np.array([[0, 0], [3, 0]]), np.array([1.0, 1.0]))
    assert ball_mass(mu, Ball((0, 0), 2)) == 1.0


@pytest.mark.parametrize("s", [0.0, 0.5, 1.3, 2.0])
def test_potential_examples(s):
    mu = AtomicMeasure(np.array([[2, 0]]), np.array([1.0]))
    assert potential(mu, (0, 0), s) == pytest.approx(2.0 ** -s, rel=1e-15)
    assert potential(mu, (2, 0), s) == 1.0


def test_potential_matches_naive(rng):
    coords = rng.integers(-30, 31, size=(20, 2))
    masses = rng.uniform(0.1, 2.0, size=20)
    mu = AtomicMeasure(coords, masses)
    for _ in range(10):
        x = rng.integers(-30, 31, size=2)
        s = float(rng.uniform(0, 2))
        assert potential(mu, x, s) == pytest.approx(naive_potential(coords, masses, x, s), rel=1e-12)


def test_energy_examples():
    one = AtomicMeasure(np.array([[5]]), np.array([1.0]))
    assert energy(one, 0.7) == 1.0
    two = AtomicMeasure(np.array([[0], [2]]), np.array([1.0, 1.0]))
    for s in (0.3, 1.0, 1.7):
        assert energy(two, s) == pytest.approx(2 + 2 * 2.0 ** -s, rel=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_energy_is_mass_weighted_potential(seed):
    rng = np.random.default_rng(seed)
    coords = rng.integers(-100, 101, size=(50, 2))
    masses = rng.uniform(0.01, 1.0, size=50)
    mu = AtomicMeasure(coords, masses)
    s = float(rng.uniform(0.1, 2.0))
    direct = math.fsum(naive_potential(coords, masses, x, s) * m for x, m in zip(coords, masses))
    assert energy(mu, s) == pytest.approx(direct, rel=1e-12)


def test_energy_series():
    mu = AtomicMeasure(np.array([[5], [6]]), np.array([1.0, 1.0]))
    rep = energy_series(mu, 0.5, 5)
    nonzero = [e for e in rep.energies if e > 0]
    assert len(nonzero) == 1 and rep.energies[3] > 0
    empty = energy_series(AtomicMeasure.empty(1), 0.5, 4)
    assert all(v == 0 for v in empty.energies + empty.weighted_partial + empty.masses)


def test_energy_series_lacunary_naive():
    E = gen_lacunary(1, 0.5, 8)
    parts = [AtomicMeasure.counting(E.points(n), 1.0 / len(E.points(n))) for n in E.shell_indices()]
    mu = combine(parts, 1)
    s = 0.4
    rep = energy_series(mu, s, 8)
    running = 0.0
    for n in range(9):
        pts = E.points(n)
        if len(pts):
            m = np.full(len(pts), 1.0 / len(pts))
            e = math.fsum(naive_potential(pts, m, x, s) * w for x, w in zip(pts, m))
        else:
            e = 0.0
        running += 2.0 ** (n * s) * e
        assert rep.weighted_partial[n] == pytest.approx(running, rel=1e-12)


def test_mdp_singleton():
    n, s = 4, 0.6
    T = ShellSet(n, np.array([[12]]))
    mu = AtomicMeasure(np.array([[12]]), np.array([1.0]))
    sh = mdp_shell(mu, T, s)
    assert sh.c_n == pytest.approx(2.0 ** (n * s))
    assert sh.bound == pytest.approx(2.0 ** (-n * s) * 2.0 ** -s)
    assert sh.bound <= nu_exact(T, s).cost


def test_mdp_counting_full_shell():
    for n in (3, 5, 7):
        T = ShellSet(n, enumerate_shell_lattice(n, 1))
        mu = AtomicMeasure.counting(T.points)
        for s in (0.3, 0.8):
            assert mdp_shell(mu, T, s).bound <= nu_exact(T, s).cost * (1 + 1e-12)


def test_mdp_empty_shell():
    with pytest.raises(EmptyShell):
        mdp_shell(AtomicMeasure.empty(1), ShellSet(3, np.array([[5]])), 0.5)


def test_mdp_random():
    ok, detail = check_mdp(seed=5, count=40)
    assert ok, detail


def test_mdp_certificate_partial_sums():
    E = gen_lacunary(1, 0.5, 6)
    mu = combine([AtomicMeasure.counting(E.points(n)) for n in E.shell_indices()], 1)
    cert = mdp_certify(mu, E, 0.5)
    assert cert.partial[-1] == pytest.approx(math.fsum(sh.bound for sh in cert.shells))
    assert cert.off_support == 0.0


def test_ratio_bound_singleton():
    n, s = 3, 0.5
    c = 2.0 ** (n * s - 1)
    T = ShellSet(n, np.array([[6]]))
    mu = AtomicMeasure(np.array([[6]]), np.array([1.0]))
    rb = ratio_upper_bound(mu, T, s, c)
    assert rb.cost <= rb.bound


def test_ratio_bound_hypothesis_failure():
    T = ShellSet(3, np.array([[6]]))
    mu = AtomicMeasure(np.array([[6]]), np.array([1e-6]))
    with pytest.raises(HypothesisFailed) as info:
        ratio_upper_bound(mu, T, 0.5, 1.0)
    assert info.value.witness == (6,)


def test_ratio_bound_random():
    ok, detail = check_ratio_bound(seed=2, count=30)
    assert ok, detail


def test_pressure_examples():
    T = ShellSet(3, np.array([[5], [7]]))
    res = pressure_set(AtomicMeasure.empty(1), T, 0.5)
    assert np.array_equal(res.kept.points, T.points)
    res = pressure_set(AtomicMeasure(np.array([[5]]), np.array([100.0])), T, 0.5)
    assert 5 not in res.kept.points.ravel().tolist()


def test_pressure_energy_inequality():
    ok, detail = check_pressure(seed=9, count=60)
    assert ok, detail


def test_measure_io(tmp_path, rng):
    mu = AtomicMeasure(rng.integers(-50, 51, size=(30, 2)), rng.uniform(0.1, 1, size=30))
    p = tmp_path / "m.csv"
    store_measure(mu, p)
    nu = load_measure(p)
    assert np.array_equal(nu.coords, mu.coords) and np.array_equal(nu.masses, mu.masses)
