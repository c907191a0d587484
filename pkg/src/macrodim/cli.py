"""Command-line front end: ``macrodim <command> [options]``.

Every command writes a JSON report (``--out`` or stdout) carrying a
``schema`` field.  Reports are functions of the configuration, the input and
the seed only; wall-clock times are never written, and ``--threads`` only
changes how shells/angles are farmed out to an ordered process pool.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np

from . import __version__
from .core import N_MAX_LIMIT, SparseSet, load_set, store_set
from .dimension import DEFAULT_STEP, DEFAULT_TAU, dimension, nu_profile, s_grid
from .errors import BudgetExceeded, CapExceeded, DimensionMismatch, MacroDimError, ParseError
from .generators import SPLITMIX_ID, GeneratorSpec, gen_full, gen_lacunary, gen_product, gen_singletons, gen_walk_range
from .measure import energy_series, load_measure, mdp_certify, store_measure

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_CAP = 3
EXIT_PARSE = 4
EXIT_SELFTEST = 5


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    input: Optional[str]
    out: Optional[str]
    s_min: float
    s_max: float
    s_step: float
    n_min: Optional[int]
    n_max: Optional[int]
    tau: float
    solver: str
    theta_count: int
    epsilon: float
    seed: Optional[int]
    threads: int

    def grid(self, d: int) -> List[float]:
        if not (0 < self.s_min <= self.s_max <= d):
            raise UsageError(f"s-grid must lie in (0, {d}]: got [{self.s_min}, {self.s_max}]")
        return s_grid(self.s_min, self.s_max, self.s_step)

    def validate(self) -> None:
        if self.n_max is not None and not (0 <= self.n_max <= N_MAX_LIMIT):
            raise UsageError(f"--nmax must lie in [0, {N_MAX_LIMIT}]")
        if self.s_step <= 0:
            raise UsageError("--sstep must be positive")
        if self.threads < 1:
            raise UsageError("--threads must be >= 1")
        if self.tau < 0:
            raise UsageError("--tau must be non-negative")

    def to_json(self) -> dict:
        return {
            "s_min": self.s_min, "s_max": self.s_max, "s_step": self.s_step,
            "n_min": self.n_min, "n_max": self.n_max, "tau": self.tau, "solver": self.solver,
            "theta_count": self.theta_count, "epsilon": self.epsilon, "seed": self.seed,
        }


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        obj = float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def dumps(report: dict) -> str:
    return json.dumps(_plain(report), sort_keys=True, indent=2) + "\n"


def emit(report: dict, out: Optional[str]) -> None:
    text = dumps(report)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def sidecar(path: Optional[str], suffix: str) -> Optional[str]:
    if not path:
        return None
    p = Path(path)
    return str(p.with_name(p.stem + suffix))


@contextmanager
def worker_pool(threads: int):
    """Yield a ``map``-compatible callable; results always come back in task order."""
    if threads <= 1:
        yield map
        return
    with ProcessPoolExecutor(max_workers=threads) as pool:
        yield lambda fn, tasks: pool.map(fn, list(tasks), chunksize=1)


def _load(cfg: RunConfig) -> SparseSet:
    if not cfg.input:
        raise UsageError(f"{cfg.command} needs an input point-set file")
    E = load_set(cfg.input)
    if cfg.n_max is not None and E.n_max != cfg.n_max:
        E = E.truncate(cfg.n_max) if E.n_max > cfg.n_max else SparseSet(E.d, cfg.n_max, dict(E.shells))
    return E


def _window(cfg: RunConfig, E: SparseSet):
    hi = E.n_max
    lo = cfg.n_min if cfg.n_min is not None else min(4, hi)
    if lo > hi:
        raise UsageError(f"--nmin {lo} exceeds the top shell {hi}")
    return lo, hi


def _need_seed(cfg: RunConfig) -> int:
    if cfg.seed is None:
        raise UsageError(f"{cfg.command} is stochastic and needs --seed")
    return cfg.seed


# ---------------------------------------------------------------------------
# commands


def cmd_gen(cfg: RunConfig, args) -> dict:
    if cfg.n_max is None and args.kind != "walk":
        raise UsageError("gen needs --nmax")
    if args.kind == "lacunary":
        if args.s_star is None:
            raise UsageError("lacunary needs --s-star")
        E = gen_lacunary(args.d, args.s_star, cfg.n_max)
        spec = GeneratorSpec("lacunary", args.d, args.s_star, cfg.n_max)
    elif args.kind == "full":
        E = gen_full(args.d, cfg.n_max)
        spec = GeneratorSpec("full", args.d, n_max=cfg.n_max)
    elif args.kind == "singletons":
        E = gen_singletons(args.d, cfg.n_max)
        spec = GeneratorSpec("singletons", args.d, n_max=cfg.n_max)
    elif args.kind == "walk":
        seed = _need_seed(cfg)
        E = gen_walk_range(args.steps, seed, cfg.n_max)
        spec = GeneratorSpec("walk", 3, n_max=E.n_max, steps=args.steps, seed=seed, prng=SPLITMIX_ID)
    elif args.kind == "product":
        if args.s_star is None:
            raise UsageError("product needs --s-star (one value for both factors) or --s-star2")
        s2 = args.s_star2 if args.s_star2 is not None else args.s_star
        A = gen_lacunary(1, args.s_star, cfg.n_max)
        B = gen_lacunary(1, s2, cfg.n_max)
        E = gen_product(A, B, cfg.n_max)
        spec = GeneratorSpec(f"product-lacunary({args.s_star},{s2})", 2, n_max=cfg.n_max)
    else:
        raise UsageError(f"unknown generator {args.kind}")
    report = {
        "schema": "macrodim.gen/1",
        "generator": spec.to_json(),
        "d": E.d,
        "n_max": E.n_max,
        "counts": [E.count(n) for n in range(E.n_max + 1)],
    }
    if cfg.out:
        store_set(E, cfg.out, header=json.dumps(spec.to_json(), sort_keys=True))
        emit(report, sidecar(cfg.out, ".json"))
        return report
    emit(report, None)
    return report


def cmd_nu(cfg: RunConfig, args) -> dict:
    E = _load(cfg)
    grid = cfg.grid(E.d)
    lo = cfg.n_min if cfg.n_min is not None else 0
    with worker_pool(cfg.threads) as mapper:
        table = nu_profile(E, grid, range(lo, E.n_max + 1), cfg.solver, mapper)
    report = {"schema": "macrodim.nu/1", "config": cfg.to_json(), "d": E.d, "rows": table.to_json()}
    emit(report, cfg.out)
    csv = sidecar(cfg.out, ".csv")
    if csv:
        lines = ["n,s,value,solver,exact"]
        for r in table.to_json():
            lines.append(f"{r['n']},{r['s']!r},{r['value']!r},{r['solver']},{int(r['exact'])}")
        Path(csv).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return report


def cmd_dim(cfg: RunConfig, args) -> dict:
    E = _load(cfg)
    grid = cfg.grid(E.d)
    window = _window(cfg, E)
    with worker_pool(cfg.threads) as mapper:
        est = dimension(E, grid, cfg.tau, window, cfg.solver, mapper)
    report = {"schema": "macrodim.dim/1", "config": cfg.to_json(), "d": E.d, **est.to_json()}
    emit(report, cfg.out)
    return report


def cmd_energy(cfg: RunConfig, args) -> dict:
    if not args.measure:
        raise UsageError("energy needs --measure")
    mu = load_measure(args.measure)
    s = args.s if args.s is not None else cfg.s_min
    n_max = cfg.n_max if cfg.n_max is not None else (int(mu.shells().max()) if len(mu) else 0)
    rep = energy_series(mu, s, n_max)
    report = {"schema": "macrodim.energy/1", "config": cfg.to_json(), **rep.to_json()}
    emit(report, cfg.out)
    return report


def cmd_mdp(cfg: RunConfig, args) -> dict:
    if not args.measure:
        raise UsageError("mdp needs --measure")
    E = _load(cfg)
    mu = load_measure(args.measure)
    if len(mu) and mu.d != E.d:
        raise DimensionMismatch(f"measure has d={mu.d}, set has d={E.d}")
    s = args.s if args.s is not None else cfg.s_min
    cert = mdp_certify(mu, E, s)
    report = {"schema": "macrodim.mdp/1", "config": cfg.to_json(), **cert.to_json()}
    emit(report, cfg.out)
    return report


def cmd_extract(cfg: RunConfig, args) -> dict:
    from .extraction import extract_s_set, localize, regularize

    E = _load(cfg)
    s = args.s if args.s is not None else cfg.s_min
    if args.stage == "localize":
        F, trace = localize(E, s, solver=cfg.solver)
    elif args.stage == "sset":
        F, trace = extract_s_set(E, s, solver=cfg.solver)
    else:
        F, trace = regularize(E, s, solver=cfg.solver, probes=args.probes, seed=cfg.seed or 0)
    report = {
        "schema": "macrodim.extract/1",
        "config": cfg.to_json(),
        "stage": args.stage,
        "s": s,
        "all_ok": trace.all_ok(),
        "counts": [F.count(n) for n in range(F.n_max + 1)],
        "trace": trace.to_json(),
    }
    emit(report, cfg.out)
    if args.set_out:
        store_set(F, args.set_out, header=f"stage={args.stage} s={s}")
    return report


def cmd_witness(cfg: RunConfig, args) -> dict:
    from .extraction import energy_witness

    E = _load(cfg)
    s = args.s if args.s is not None else cfg.s_min
    W = energy_witness(E, s, cfg.epsilon, solver=cfg.solver, parity=args.parity,
                       probes=args.probes, seed=cfg.seed or 0)
    report = {"schema": "macrodim.witness/1", "config": cfg.to_json(), "s": s,
              "total_mass": W.measure.total(), "atoms": len(W.measure), **W.to_json()}
    emit(report, cfg.out)
    if args.measure_out:
        store_measure(W.measure, args.measure_out)
    return report


def cmd_marstrand(cfg: RunConfig, args) -> dict:
    from .projection import SCHEMA_MARSTRAND, marstrand_experiment

    E = _load(cfg)
    if E.d != 2:
        raise UsageError("marstrand needs a planar input set")
    seed = _need_seed(cfg)
    grid = cfg.grid(E.d)
    window = _window(cfg, E)
    parity = None if args.parity == "none" else args.parity
    with worker_pool(cfg.threads) as mapper:
        rep = marstrand_experiment(E, cfg.theta_count, grid, window, cfg.solver, seed, cfg.tau,
                                   parity=parity, mapper=mapper)
    report = {**rep.to_json(), "schema": SCHEMA_MARSTRAND, "config": cfg.to_json()}
    emit(report, cfg.out)
    csv = sidecar(cfg.out, ".csv")
    if csv:
        Path(csv).write_text(rep.to_csv(), encoding="utf-8")
    return report


def cmd_selftest(cfg: RunConfig, args) -> dict:
    from .selftest import run_selftest

    rows = run_selftest(seed=cfg.seed if cfg.seed is not None else 0)
    width = max(len(r["check"]) for r in rows)
    for r in rows:
        print(f"{r['check']:<{width}}  {'PASS' if r['ok'] else 'FAIL'}  {r['detail']}")
    report = {"schema": "macrodim.selftest/1", "rows": rows, "ok": all(r["ok"] for r in rows)}
    if cfg.out:
        emit(report, cfg.out)
    return report


COMMANDS = {
    "gen": cmd_gen,
    "nu": cmd_nu,
    "dim": cmd_dim,
    "energy": cmd_energy,
    "mdp": cmd_mdp,
    "extract": cmd_extract,
    "witness": cmd_witness,
    "marstrand": cmd_marstrand,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--smin", type=float, default=0.05)
    common.add_argument("--smax", type=float, default=1.0)
    common.add_argument("--sstep", type=float, default=DEFAULT_STEP)
    common.add_argument("--nmin", type=int, default=None, help="first shell of the fit window")
    common.add_argument("--nmax", type=int, default=None)
    common.add_argument("--tau", type=float, default=DEFAULT_TAU)
    common.add_argument("--solver", choices=["exact", "greedy", "auto"], default="auto")
    common.add_argument("--theta-count", type=int, default=64)
    common.add_argument("--epsilon", type=float, default=0.1)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out", default=None, help="report path (stdout if omitted)")
    common.add_argument("-s", "--s", type=float, default=None, help="exponent for single-s commands")

    p = argparse.ArgumentParser(prog="macrodim", description="Macroscopic Hausdorff dimension toolkit for lattice sets.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a synthetic point set")
    g.add_argument("kind", choices=["lacunary", "full", "singletons", "walk", "product"])
    g.add_argument("--d", type=int, default=1)
    g.add_argument("--s-star", type=float, default=None)
    g.add_argument("--s-star2", type=float, default=None)
    g.add_argument("--steps", type=int, default=10 ** 6)

    for name, text in (("nu", "per-shell cover costs over an s-grid"), ("dim", "truncated dimension estimate")):
        q = sub.add_parser(name, parents=[common], help=text)
        q.add_argument("input")

    q = sub.add_parser("energy", parents=[common], help="per-shell clamped Riesz energies of a measure")
    q.add_argument("--measure", required=True)

    q = sub.add_parser("mdp", parents=[common], help="mass-distribution lower bounds")
    q.add_argument("input")
    q.add_argument("--measure", required=True)

    q = sub.add_parser("extract", parents=[common], help="run one extraction stage")
    q.add_argument("input")
    q.add_argument("--stage", choices=["localize", "sset", "regularize"], default="sset")
    q.add_argument("--set-out", default=None)
    q.add_argument("--probes", type=int, default=0)

    q = sub.add_parser("witness", parents=[common], help="atomic energy witness measure")
    q.add_argument("input")
    q.add_argument("--parity", choices=["even", "odd"], default=None)
    q.add_argument("--probes", type=int, default=200)
    q.add_argument("--measure-out", default=None)

    q = sub.add_parser("marstrand", parents=[common], help="projection experiment on jittered angles")
    q.add_argument("input")
    q.add_argument("--parity", choices=["even", "odd", "none"], default="even")

    sub.add_parser("selftest", parents=[common], help="reduced-size invariant suite")
    return p


def config_from(args) -> RunConfig:
    cfg = RunConfig(
        command=args.command,
        input=getattr(args, "input", None),
        out=args.out,
        s_min=args.smin,
        s_max=args.smax,
        s_step=args.sstep,
        n_min=args.nmin,
        n_max=args.nmax,
        tau=args.tau,
        solver=args.solver,
        theta_count=args.theta_count,
        epsilon=args.epsilon,
        seed=args.seed,
        threads=args.threads,
    )
    cfg.validate()
    return cfg


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from(args)
        report = COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        print(f"macrodim {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CapExceeded, BudgetExceeded) as exc:
        print(f"macrodim {args.command}: size cap exceeded: {exc} (try --solver greedy or a smaller --nmax)", file=sys.stderr)
        return EXIT_CAP
    except (ParseError, DimensionMismatch) as exc:
        print(f"macrodim {args.command}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (MacroDimError, ValueError) as exc:
        print(f"macrodim {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except FileNotFoundError as exc:
        print(f"macrodim {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "selftest" and not report["ok"]:
        return EXIT_SELFTEST
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
