"""Command-line entry point (``seed``)."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .bench import ALGORITHMS, DEFAULT_SEEDS, BenchConfig, emit_tables, run_bench, seed_once
from .dataset import DataError, cost_of_indices, load_csv, quantize
from .lsh import MODES
from .rejection import sampling_bias_report
from .synthetic import gaussian_mixture


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _algo_list(text: str) -> list[str]:
    algos = [t.strip() for t in text.split(",") if t.strip()]
    bad = [a for a in algos if a not in ALGORITHMS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown algorithm(s) {', '.join(bad)}")
    return algos


def _external(items: list[str]) -> dict[str, str]:
    out = {}
    for item in items:
        name, sep, path = item.partition("=")
        if not sep or not name or not path:
            raise argparse.ArgumentTypeError(f"expected NAME=PATH, got {item!r}")
        out[name] = path
    return out


def _data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="CSV file, one point per row")
    p.add_argument("--header", action="store_true", help="skip the first row")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--quantize", action="store_true",
                   help="snap coordinates to a grid derived from a 20-point cost estimate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seed", description="k-means++ seeding benchmarks")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="benchmark seeders across k values and seeds")
    _data_args(run)
    run.add_argument("--algo", type=_algo_list, default=list(ALGORITHMS),
                     help="comma-separated subset of " + ",".join(ALGORITHMS))
    run.add_argument("--k", type=_int_list, default=[100], help="comma-separated k values")
    run.add_argument("--seeds", type=int, default=DEFAULT_SEEDS, help="number of seeds per cell")
    run.add_argument("--global-seed", type=int, default=0)
    run.add_argument("--c", type=float, default=2.0, help="rejection approximation factor")
    run.add_argument("--lsh", choices=MODES, default="practical")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--format", choices=("csv", "markdown"), default="csv")
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--paranoid", action="store_true",
                     help="best-of-R restarts for the rejection seeder")
    run.add_argument("--centers", action="append", default=[], metavar="NAME=PATH",
                     help="cost an externally produced center index file")

    one = sub.add_parser("sample", help="seed once and print the chosen center indices")
    _data_args(one)
    one.add_argument("--algo", choices=ALGORITHMS, default="fast")
    one.add_argument("--k", type=int, required=True)
    one.add_argument("--seed", type=int, default=0)
    one.add_argument("--c", type=float, default=2.0)
    one.add_argument("--lsh", choices=MODES, default="practical")
    one.add_argument("--paranoid", action="store_true")
    one.add_argument("--out", help="write indices here instead of stdout")
    one.add_argument("--stats", help="write run statistics as JSON here")

    bias = sub.add_parser("bias", help="empirical vs exact D^2 frequencies for a fixed center set")
    _data_args(bias)
    bias.add_argument("--centers", type=_int_list, required=True, help="comma-separated indices")
    bias.add_argument("--c", type=float, default=2.0)
    bias.add_argument("--lsh", choices=MODES, default="practical")
    bias.add_argument("--trials", type=int, default=100_000)
    bias.add_argument("--structures", type=int, default=100)
    bias.add_argument("--seed", type=int, default=0)
    bias.add_argument("--out", required=True, help="CSV report path")

    gen = sub.add_parser("gen", help="write a synthetic Gaussian mixture as CSV")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--d", type=int, required=True)
    gen.add_argument("--components", type=int, default=100)
    gen.add_argument("--sigma", type=float, default=1.0)
    gen.add_argument("--spread", type=float, default=10.0)
    gen.add_argument("--separation", type=float, default=None, help="in units of sigma")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    return parser


def _load(args):
    ds = load_csv(args.data, delimiter=args.delimiter, header=args.header)
    if args.quantize:
        ds, rep = quantize(ds)
        logging.info("quantized: scaling %.6g, %d duplicates", rep.scaling_factor,
                     rep.clamped_duplicates)
    return ds


def cmd_run(args) -> int:
    cfg = BenchConfig(
        data=args.data, algorithms=args.algo, ks=args.k, seeds=list(range(args.seeds)),
        c=args.c, lsh=args.lsh, out=args.out, quantize=args.quantize, header=args.header,
        delimiter=args.delimiter, jobs=args.jobs, paranoid=args.paranoid,
        global_seed=args.global_seed, external=_external(args.centers),
    )
    res = run_bench(cfg)
    emit_tables(res, args.out, args.format)
    failed = [c for c in res.cells if not c.ok]
    for c in failed:
        print(f"cell {c.algorithm} k={c.k} seed={c.seed} failed: {c.error}", file=sys.stderr)
    print(f"{len(res.cells) - len(failed)}/{len(res.cells)} cells ok; tables in {args.out}")
    return 0 if not failed else 1


def cmd_sample(args) -> int:
    ds = _load(args)
    centers, stats = seed_once(ds, args.algo, args.k, args.seed, args.c, args.lsh, args.paranoid)
    text = "\n".join(str(c) for c in centers) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    info = {"algorithm": args.algo, "k": args.k, "cost": cost_of_indices(ds, centers)}
    if stats is not None:
        info["stats"] = stats
    if args.stats:
        Path(args.stats).write_text(json.dumps(info, indent=2))
    else:
        print(f"cost {info['cost']:.6g}", file=sys.stderr)
    return 0


def cmd_bias(args) -> int:
    ds = _load(args)
    rep = sampling_bias_report(ds, args.centers, args.c, args.trials, args.lsh, args.seed,
                               args.structures)
    rep.to_csv(args.out)
    bad = rep.violations()
    print(f"{ds.n - bad.size}/{ds.n} points within bounds; TV to D^2 {rep.total_variation():.4f}")
    return 0 if bad.size == 0 else 1


def cmd_gen(args) -> int:
    ds = gaussian_mixture(args.n, args.d, args.components, args.sigma, args.spread,
                          args.separation, args.seed)
    np.savetxt(args.out, ds.points, delimiter=",", fmt="%.10g")
    return 0


COMMANDS = {"run": cmd_run, "sample": cmd_sample, "bias": cmd_bias, "gen": cmd_gen}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (DataError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
