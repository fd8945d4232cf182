"""Command-line entry point: ``circbs {gen,perm,dist,run,verify}``.

Exit codes: 0 success, 2 config error, 3 guard violation, 4 numerical
failure (the message echoes the seed).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import load_config
from .distribution import full_distribution
from .errors import ConfigError, DomainError, GuardError, NumericalError
from .matrices import (
    circulant_from_phases,
    ginibre_matrix,
    haar_unitary,
    matrix_from_json,
    matrix_to_json,
    random_phases,
)
from .permanent import MAX_NAIVE, permanent_naive, permanent_ryser
from .records import FORMATS, atomic_write_text
from .streams import stream

EXIT_OK, EXIT_CONFIG, EXIT_GUARD, EXIT_NUMERICAL = 0, 2, 3, 4


def _emit(text: str, out) -> None:
    if out:
        atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from exc


def cmd_gen(args) -> int:
    if args.m < 1 or args.count < 1:
        raise ConfigError("--m and --count must be positive")
    rng = stream(args.seed, "gen", args.m)
    lines = []
    for _ in range(args.count):
        if args.ensemble == "circulant":
            phases = random_phases(args.m, rng)
            obj = json.loads(matrix_to_json(circulant_from_phases(phases).dense()))
            obj["phases"] = phases.tolist()
        elif args.ensemble == "haar":
            obj = json.loads(matrix_to_json(haar_unitary(args.m, rng)))
        else:
            n = args.n or args.m
            obj = json.loads(matrix_to_json(ginibre_matrix(n, args.m, rng)))
        obj["ensemble"] = args.ensemble
        obj["seed"] = args.seed
        lines.append(json.dumps(obj))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _read_matrix(path):
    text = sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    first = next((line for line in text.splitlines() if line.strip()), "")
    try:
        return matrix_from_json(first)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read matrix JSON from {path}: {exc}") from exc


def cmd_perm(args) -> int:
    if args.matrix:
        a = _read_matrix(args.matrix)
    elif args.random:
        a = ginibre_matrix(args.random, args.random, stream(args.seed, "perm", args.random))
    else:
        raise ConfigError("give a matrix file or --random N")
    if args.method == "naive":
        if a.shape[0] > MAX_NAIVE:
            raise GuardError(f"naive permanent limited to n <= {MAX_NAIVE}")
        value = permanent_naive(a)
    else:
        value = permanent_ryser(a)
    text = json.dumps({"n": a.shape[0], "re": value.real, "im": value.imag, "abs2": abs(value) ** 2})
    _emit(text + "\n", args.out)
    return EXIT_OK


def cmd_dist(args) -> int:
    inputs = _ints(args.inputs) if args.inputs else list(range(args.n))
    source = {"seed": args.seed}
    if args.matrix:
        u = _read_matrix(args.matrix)
        source["matrix"] = str(args.matrix)
    else:
        if args.m is None:
            raise ConfigError("give --m or a matrix file")
        rng = stream(args.seed, "dist", args.m)
        if args.ensemble == "circulant":
            u = circulant_from_phases(random_phases(args.m, rng))
        else:
            u = haar_unitary(args.m, rng)
        source["ensemble"] = args.ensemble
    dist = full_distribution(u, inputs, source)
    if args.format == "csv":
        rows = ["modes,probability"] + [
            f"{' '.join(map(str, s))},{float(p)!r}" for s, p in zip(dist.outcomes.tolist(), dist.probabilities)
        ]
        text = "\n".join(rows) + "\n"
    else:
        text = dist.to_jsonl()
    _emit(text, args.out)
    return EXIT_OK


def cmd_run(args) -> int:
    from .experiments import run_campaign

    cfg = load_config(args.config)
    if args.paper_scale:
        cfg = cfg.full_scale()
    cfg = cfg.with_overrides(master_seed=args.seed, workers=args.workers, output=args.out)
    if args.format:
        cfg = cfg.with_overrides(format=args.format)
    run_campaign(cfg, echo=print)
    print(f"wrote {cfg.output}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_checks

    results = run_checks(args.seed)
    for r in results:
        print(f"[{'PASS' if r.ok else 'FAIL'}] {r.name}: {r.detail}")
    failed = sum(not r.ok for r in results)
    if failed:
        raise NumericalError(f"{failed} oracle check(s) failed", seed=args.seed)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="circbs", description="Circulant boson sampling laboratory.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed_default=2021):
        sp.add_argument("--seed", type=int, default=seed_default, help="master seed (64-bit unsigned)")
        sp.add_argument("--out", default=None, help="output path (default: stdout)")

    g = sub.add_parser("gen", help="random matrices as JSON lines")
    g.add_argument("--ensemble", choices=("circulant", "haar", "gaussian"), default="circulant")
    g.add_argument("--m", type=int, required=True, help="number of modes")
    g.add_argument("--n", type=int, default=None, help="rows/cols of a Gaussian matrix (default m)")
    g.add_argument("--count", type=int, default=1)
    common(g)
    g.set_defaults(func=cmd_gen)

    pm = sub.add_parser("perm", help="permanent of one matrix")
    pm.add_argument("matrix", nargs="?", help="matrix JSON file, '-' for stdin")
    pm.add_argument("--random", type=int, default=None, metavar="N", help="use a seeded N x N Gaussian matrix")
    pm.add_argument("--method", choices=("ryser", "naive"), default="ryser")
    common(pm)
    pm.set_defaults(func=cmd_perm)

    d = sub.add_parser("dist", help="full output distribution")
    d.add_argument("--matrix", default=None, help="unitary as matrix JSON (default: seeded random)")
    d.add_argument("--ensemble", choices=("circulant", "haar"), default="circulant")
    d.add_argument("--n", type=int, default=2)
    d.add_argument("--m", type=int, default=None)
    d.add_argument("--inputs", default=None, help="comma-separated input modes (default 0..n-1)")
    d.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    common(d)
    d.set_defaults(func=cmd_dist)

    r = sub.add_parser("run", help="run an experiment campaign from a config file")
    r.add_argument("config")
    r.add_argument("--seed", type=int, default=None, help="override master_seed")
    r.add_argument("--workers", type=int, default=None)
    r.add_argument("--out", default=None, help="override output path")
    r.add_argument("--format", choices=FORMATS, default=None)
    r.add_argument("--paper-scale", action="store_true", help="use full sample counts")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run the oracle cross-check suite")
    v.add_argument("--seed", type=int, default=2021)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    seed = getattr(args, "seed", None)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GuardError as exc:
        print(f"guard violation: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DomainError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc} (seed {seed})", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
