"""Command-line interface: ``lewisl1 {solve,precondition,gen,bench,oracle-check}``.

Every command writes one JSON report (schema ``v1``) to ``--out`` or stdout.
Option defaults can be set through ``LEWISL1_<FLAG>`` environment variables,
e.g. ``LEWISL1_EPS=0.05``; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, InstanceTooLargeError, L1Error
from .instances import KINDS, GenSpec, ProblemInstance, generate
from .mmio import ingest, write_matrix_market, write_vector
from .oracle import MAX_D, MAX_N
from .preconditioner import MODES, PreconditionConfig, precondition
from .solvers import METHODS, SolveConfig, solve_l1

SCHEMA_VERSION = "v1"
ENV_PREFIX = "LEWISL1_"
COMMANDS = ("solve", "precondition", "gen", "bench", "oracle-check")
QUANTILES = (0.0, 0.1, 0.5, 0.9, 1.0)

logger = logging.getLogger("lewisl1")


@dataclass
class RunConfig:
    command: str
    matrix: str | None = None
    rhs: str | None = None
    kind: str | None = None
    n: int | None = None
    d: int | None = None
    gen_seed: int = 0
    eps: float = 0.1
    method: str = "accelerated"
    mode: str = "lewis"
    c_sample: float = 4.0
    seed: int = 0
    max_lewis_iters: int = 30
    lewis_tol: float = 1e-4
    out: str | None = None
    oracle: bool = False
    seeds: int = 20
    jobs: int = 1
    prefix: str | None = None
    verbosity: int = 0

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if not 0 < self.eps <= 0.5:
            raise ConfigError(f"eps must be in (0, 1/2], got {self.eps}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.c_sample <= 0:
            raise ConfigError("c-sample must be positive")
        for p in (self.matrix, self.rhs):
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"input file not found: {p}")
        if self.command in ("solve", "precondition", "oracle-check"):
            has_files = self.matrix is not None and self.rhs is not None
            has_gen = self.kind is not None and self.n is not None and self.d is not None
            if not (has_files or has_gen):
                raise ConfigError("give --matrix and --rhs, or --kind, --n and --d")
        if self.command in ("gen", "bench") and not (self.kind and self.n and self.d):
            raise ConfigError(f"{self.command} needs --kind, --n and --d")
        if self.command == "gen" and not self.prefix:
            raise ConfigError("gen needs --prefix")
        if self.seeds < 1 or self.jobs < 1:
            raise ConfigError("--seeds and --jobs must be positive")

    def solve_config(self, seed: int | None = None) -> SolveConfig:
        return SolveConfig(mode=self.mode, c_sample=self.c_sample,
                           seed=self.seed if seed is None else seed,
                           max_lewis_iters=self.max_lewis_iters, lewis_tol=self.lewis_tol,
                           oracle=self.oracle)


def _env(name: str, cast, default):
    raw = os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))
    if raw is None:
        return default
    try:
        if cast is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return cast(raw)
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {ENV_PREFIX}{name.upper()}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lewisl1",
                                     description="Approximate l1 regression via Lewis weights.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=_env("out", str, None), help="report path (default stdout)")
        p.add_argument("-v", "--verbose", action="count", default=0, dest="verbosity")

    def source(p):
        p.add_argument("--matrix", help="Matrix Market file for A")
        p.add_argument("--rhs", help="right-hand side (text, CSV or Matrix Market)")
        generator(p, required=False)

    def generator(p, required=True):
        p.add_argument("--kind", choices=KINDS, required=required)
        p.add_argument("--n", type=int, required=required)
        p.add_argument("--d", type=int, required=required)
        p.add_argument("--gen-seed", type=int, default=_env("gen-seed", int, 0))

    def solving(p):
        p.add_argument("--eps", type=float, default=_env("eps", float, 0.1))
        p.add_argument("--method", choices=METHODS, default=_env("method", str, "accelerated"))
        sampling(p)
        p.add_argument("--oracle", action="store_true", default=_env("oracle", bool, False),
                       help=f"report the gap to the exact optimum (n <= {MAX_N}, d <= {MAX_D})")

    def sampling(p):
        p.add_argument("--mode", choices=MODES, default=_env("mode", str, "lewis"))
        p.add_argument("--c-sample", type=float, default=_env("c-sample", float, 4.0))
        p.add_argument("--seed", type=int, default=_env("seed", int, 0))
        p.add_argument("--max-lewis-iters", type=int, default=_env("max-lewis-iters", int, 30))
        p.add_argument("--lewis-tol", type=float, default=_env("lewis-tol", float, 1e-4))

    p = sub.add_parser("solve", help="solve one instance")
    source(p)
    solving(p)
    common(p)

    p = sub.add_parser("precondition", help="sample and rotate, report diagnostics")
    source(p)
    p.add_argument("--eps", type=float, default=_env("eps", float, 0.25))
    sampling(p)
    common(p)

    p = sub.add_parser("gen", help="write a synthetic instance as PREFIX.mtx and PREFIX.rhs")
    generator(p)
    p.add_argument("--prefix", required=True)
    common(p)

    p = sub.add_parser("bench", help="solve a generated instance family over many seeds")
    generator(p)
    solving(p)
    p.add_argument("--seeds", type=int, default=_env("seeds", int, 20))
    p.add_argument("--jobs", type=int, default=_env("jobs", int, 1))
    common(p)

    p = sub.add_parser("oracle-check", help="solve and compare with the exact optimum")
    source(p)
    solving(p)
    common(p)
    return parser


def parse_config(argv=None) -> RunConfig:
    return RunConfig(**vars(build_parser().parse_args(argv)))


def _instance(cfg: RunConfig) -> ProblemInstance:
    if cfg.matrix is not None:
        return ingest(cfg.matrix, cfg.rhs)
    return generate(GenSpec(cfg.kind, cfg.n, cfg.d, seed=cfg.gen_seed))


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def _solve_record(inst: ProblemInstance, cfg: RunConfig, seed: int | None = None) -> dict:
    r = solve_l1(inst.A, inst.b, cfg.eps, cfg.method, cfg.solve_config(seed))
    return {
        "objective_l1": r.objective_l1,
        "preconditioned_objective": r.preconditioned_objective,
        "x_hat": r.x_hat,
        "n": r.n, "d": r.d, "nnz": r.nnz, "N": r.N, "n_unique": r.n_unique,
        "mode": r.mode, "method": r.method, "eps": r.eps, "seed": r.seed,
        "exact_fit": r.exact_fit,
        "stage_counts": r.stage_counts, "epochs": r.epochs, "iterations": r.iterations,
        "grad_evals": r.grad_evals, "wall_ms": 1e3 * r.wall_time,
        "oracle_f_star": r.oracle_f_star, "oracle_gap": r.oracle_gap,
        "best_guess": r.best_guess,
        "candidates": [{k: c[k] for k in ("guess", "R", "objective", "grad_evals", "stages")}
                       for c in r.candidates],
        "config": r.config,
    }


def _bench_one(args):
    seed, cfg = args
    inst = generate(GenSpec(cfg.kind, cfg.n, cfg.d, seed=cfg.gen_seed + seed))
    rec = _solve_record(inst, cfg, cfg.seed + seed)
    rec["instance_seed"] = cfg.gen_seed + seed
    return rec


def _quantiles(values) -> dict | None:
    vals = np.asarray([v for v in values if v is not None and math.isfinite(v)], dtype=float)
    if vals.size == 0:
        return None
    return {f"q{int(round(100 * q)):02d}": float(np.quantile(vals, q)) for q in QUANTILES}


def run(cfg: RunConfig) -> dict:
    """Execute ``cfg`` and return the report body (without the envelope)."""
    if cfg.command == "gen":
        inst = _instance(cfg)
        mpath, bpath = f"{cfg.prefix}.mtx", f"{cfg.prefix}.rhs"
        write_matrix_market(mpath, inst.A, comment=f"{inst.kind} n={inst.n} d={inst.d} "
                                                   f"seed={inst.seed}")
        write_vector(bpath, inst.b)
        return {"matrix": mpath, "rhs": bpath, "kind": inst.kind, "n": inst.n, "d": inst.d,
                "nnz": inst.nnz, "seed": inst.seed}
    if cfg.command == "precondition":
        inst = _instance(cfg)
        t0 = time.perf_counter()
        P = precondition(inst.A, inst.b, PreconditionConfig(
            eps=cfg.eps, c_sample=cfg.c_sample, seed=cfg.seed, mode=cfg.mode,
            max_lewis_iters=cfg.max_lewis_iters, lewis_tol=cfg.lewis_tol))
        return {"n": inst.n, "d": inst.d, "nnz": inst.nnz, "N": P.N, "n_unique": P.n_unique,
                "mode": P.mode, "eps": cfg.eps, "seed": cfg.seed, "attempts": P.attempts,
                "wall_ms": 1e3 * (time.perf_counter() - t0), "diagnostics": P.diagnostics}
    if cfg.command == "bench":
        tasks = [(s, cfg) for s in range(cfg.seeds)]
        if cfg.jobs > 1:
            with ProcessPoolExecutor(cfg.jobs) as pool:
                records = list(pool.map(_bench_one, tasks))
        else:
            records = [_bench_one(t) for t in tasks]
        keys = ("objective_l1", "oracle_gap", "grad_evals", "wall_ms")
        return {"kind": cfg.kind, "n": cfg.n, "d": cfg.d, "method": cfg.method,
                "mode": cfg.mode, "eps": cfg.eps, "seeds": cfg.seeds, "records": records,
                "quantiles": {k: _quantiles([r[k] for r in records]) for k in keys}}
    inst = _instance(cfg)
    if cfg.command == "oracle-check":
        if inst.n > MAX_N or inst.d > MAX_D:
            raise InstanceTooLargeError(
                f"oracle-check needs n <= {MAX_N} and d <= {MAX_D}; got {inst.n} x {inst.d}")
        cfg.oracle = True
    return _solve_record(inst, cfg)


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(_clean(report), indent=2, allow_nan=False)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")


def main(argv=None) -> int:
    command, out = None, None
    try:
        ns = vars(build_parser().parse_args(argv))
        command, out = ns["command"], ns["out"]
        cfg = RunConfig(**ns)
        logging.basicConfig(level=logging.WARNING - 10 * min(cfg.verbosity, 2),
                            format="%(levelname)s %(name)s: %(message)s")
        body = run(cfg)
        _emit({"schema": SCHEMA_VERSION, "command": command, "status": "ok", **body}, out)
        return 0
    except L1Error as exc:
        _emit({"schema": SCHEMA_VERSION, "command": command, "status": "error",
               "error": exc.to_dict()}, out)
        return 2 if exc.category in ("config", "input", "dimension") else 1
    except (ValueError, OSError) as exc:
        _emit({"schema": SCHEMA_VERSION, "command": command, "status": "error",
               "error": {"category": "input", "message": str(exc)}}, out)
        return 2


if __name__ == "__main__":
    sys.exit(main())
