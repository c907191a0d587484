from __future__ import annotations

import json

import pytest

from macrodim.cli import main


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_writes_set_and_sidecar(tmp_path, capsys):
    out = tmp_path / "lac.csv"
    code, _, _ = run(["gen", "lacunary", "--d", 1, "--s-star", 0.5, "--nmax", 8, "--out", out], capsys)
    assert code == 0
    side = json.loads((tmp_path / "lac.json").read_text())
    assert side["schema"] == "macrodim.gen/1" and side["generator"]["s_star"] == 0.5
    assert out.read_text().startswith("# ")


def test_gen_walk_needs_seed(capsys):
    code, _, err = run(["gen", "walk", "--steps", 100], capsys)
    assert code == 2 and "--seed" in err


def test_dim_empty_input(tmp_path, capsys):
    p = tmp_path / "empty.csv"
    p.write_text("")
    code, out, _ = run(["dim", p], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["s_hat"] == 0.0 and rep["schema"] == "macrodim.dim/1"


def test_nu_exact_cap_exit(tmp_path, capsys):
    p = tmp_path / "big.csv"
    run(["gen", "full", "--d", 2, "--nmax", 9, "--out", p], capsys)
    code, _, err = run(["nu", p, "--solver", "exact", "--nmin", 9, "--smin", 1.0, "--smax", 1.0], capsys)
    assert code == 3 and "cap" in err


def test_parse_error_exit(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("1,2\nfoo\n")
    code, _, err = run(["dim", p], capsys)
    assert code == 4 and ":2:" in err


def test_grid_outside_dimension(tmp_path, capsys):
    p = tmp_path / "one.csv"
    p.write_text("5\n")
    code, _, err = run(["dim", p, "--smax", 1.5], capsys)
    assert code == 2


def test_argparse_usage_exit(capsys):
    with pytest.raises(SystemExit) as info:
        main(["nu", "--solver", "bogus", "x.csv"])
    assert info.value.code == 2


def test_selftest_passes(capsys):
    code, out, _ = run(["selftest"], capsys)
    assert code == 0 and "FAIL" not in out


def test_nu_byte_identical_across_threads(tmp_path, capsys):
    p = tmp_path / "lac2.csv"
    run(["gen", "lacunary", "--d", 2, "--s-star", 0.6, "--nmax", 8, "--out", p], capsys)
    texts = []
    for threads in (1, 3, 1):
        out = tmp_path / f"nu{threads}_{len(texts)}.json"
        code, _, _ = run(["nu", p, "--smin", 0.2, "--smax", 1.0, "--sstep", 0.2, "--threads", threads, "--out", out], capsys)
        assert code == 0
        texts.append(out.read_bytes() + (tmp_path / (out.stem + ".csv")).read_bytes())
    assert texts[0] == texts[1] == texts[2]


def test_energy_and_mdp(tmp_path, capsys):
    s = tmp_path / "s.csv"
    s.write_text("5\n6\n9\n")
    m = tmp_path / "m.csv"
    m.write_text("5,0.5\n6,0.25\n9,1.0\n")
    code, out, _ = run(["energy", "--measure", m, "-s", 0.5], capsys)
    assert code == 0 and json.loads(out)["schema"] == "macrodim.energy/1"
    code, out, _ = run(["mdp", s, "--measure", m, "-s", 0.5], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["schema"] == "macrodim.mdp/1"
    assert all(sh["lower_bound"] >= 0 for sh in rep["shells"])


def test_extract_and_witness(tmp_path, capsys):
    p = tmp_path / "lac.csv"
    run(["gen", "lacunary", "--d", 1, "--s-star", 0.6, "--nmax", 8, "--out", p], capsys)
    code, out, _ = run(["extract", p, "-s", 0.6, "--stage", "sset", "--set-out", tmp_path / "sub.csv"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["all_ok"] and (tmp_path / "sub.csv").exists()
    code, out, _ = run(["witness", p, "-s", 0.6, "--epsilon", 0.2, "--probes", 10,
                        "--measure-out", tmp_path / "mu.csv"], capsys)
    assert code == 0 and json.loads(out)["schema"] == "macrodim.witness/1"
