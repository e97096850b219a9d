"""Benchmark harness: every (algorithm, k, seed) cell, exact costs, relative runtimes."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import time
import traceback
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .baselines import kmeanspp_exact, uniform_sampling
from .dataset import Dataset, cost_of_indices, load_csv, quantize
from .fast import fast_kmeanspp
from .rejection import rejection_sampling

log = logging.getLogger(__name__)

ALGORITHMS = ("fast", "rejection", "kmeanspp", "uniform")
DEFAULT_SEEDS = 5


@dataclass
class BenchConfig:
    data: str | None = None
    algorithms: list[str] = field(default_factory=lambda: list(ALGORITHMS))
    ks: list[int] = field(default_factory=lambda: [100])
    seeds: list[int] = field(default_factory=lambda: list(range(DEFAULT_SEEDS)))
    c: float = 2.0
    lsh: str = "practical"
    out: str | None = None
    quantize: bool = False
    header: bool = False
    delimiter: str = ","
    jobs: int = 1
    paranoid: bool = False
    global_seed: int = 0
    warmup: bool = True
    # name -> file of center indices produced elsewhere; costed, not timed
    external: dict[str, str] = field(default_factory=dict)

    def validate(self) -> None:
        if not self.algorithms and not self.external:
            raise ValueError("no algorithms selected")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ValueError(f"unknown algorithm(s) {bad}; choose from {ALGORITHMS}")
        if not self.ks and self.algorithms:
            raise ValueError("no k values given")
        if any(k < 1 for k in self.ks):
            raise ValueError("k values must be positive")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        if not self.seeds and self.algorithms:
            raise ValueError("no seeds given")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")
        if self.c < 1:
            raise ValueError("c must be at least 1")


@dataclass
class CellResult:
    algorithm: str
    k: int
    seed: int
    cost: float = math.nan
    time: float = math.nan
    ok: bool = True
    error: str | None = None
    stats: dict | None = None
    centers: list[int] | None = None


@dataclass
class BenchResult:
    config: BenchConfig
    cells: list[CellResult]
    preprocess: dict | None = None

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.cells)

    def algorithms(self) -> list[str]:
        seen = list(self.config.algorithms)
        for c in self.cells:
            if c.algorithm not in seen:
                seen.append(c.algorithm)
        return seen

    def ks(self) -> list[int]:
        return sorted({c.k for c in self.cells})

    def _values(self, algo: str, k: int, attr: str) -> np.ndarray:
        return np.array([getattr(c, attr) for c in self.cells
                         if c.algorithm == algo and c.k == k and c.ok])

    def cost_table(self) -> dict[str, dict[int, float]]:
        return {a: {k: _mean(self._values(a, k, "cost")) for k in self.ks()} for a in self.algorithms()}

    def variance_table(self) -> dict[str, dict[int, float]]:
        return {a: {k: _var(self._values(a, k, "cost")) for k in self.ks()} for a in self.algorithms()}

    def reference(self) -> str:
        timed = [a for a in self.config.algorithms]
        return "fast" if "fast" in timed else timed[0]

    def reltime_table(self) -> dict[str, dict[int, float]]:
        """Per-seed time over the reference algorithm's time, averaged over seeds."""
        ref = self.reference()
        out: dict[str, dict[int, float]] = {}
        for a in self.config.algorithms:
            row = {}
            for k in self.ks():
                base = {c.seed: c.time for c in self.cells if c.algorithm == ref and c.k == k and c.ok}
                ratios = [c.time / base[c.seed] for c in self.cells
                          if c.algorithm == a and c.k == k and c.ok and c.seed in base]
                row[k] = _mean(np.array(ratios))
            out[a] = row
        return out


def _mean(v: np.ndarray) -> float:
    return float(v.mean()) if v.size else math.nan


def _var(v: np.ndarray) -> float:
    # population variance over seeds
    return float(v.var()) if v.size else math.nan


def cell_seed(global_seed: int, algorithm: str, k: int, seed: int) -> int:
    """Stable per-cell seed, independent of which other cells are run."""
    h = hashlib.blake2b(f"{global_seed}|{algorithm}|{k}|{seed}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little") >> 1


def seed_once(ds: Dataset, algorithm: str, k: int, rng_seed: int, c: float = 2.0,
              lsh: str = "practical", paranoid: bool = False):
    """Run one seeder; returns ``(centers, stats or None)``."""
    if algorithm == "fast":
        return fast_kmeanspp(ds, k, rng_seed), None
    if algorithm == "rejection":
        centers, stats = rejection_sampling(ds, k, c, lsh, rng_seed, paranoid=paranoid)
        return centers, stats.to_dict()
    if algorithm == "kmeanspp":
        return kmeanspp_exact(ds, k, rng_seed), None
    if algorithm == "uniform":
        return uniform_sampling(ds, k, rng_seed), None
    raise ValueError(f"unknown algorithm {algorithm!r}")


def run_cell(points: np.ndarray, algorithm: str, k: int, seed: int, cfg: BenchConfig,
             keep_centers: bool = False) -> CellResult:
    res = CellResult(algorithm, k, seed)
    # a fresh wrapper so that lazily computed metadata is paid inside the timed region
    ds = Dataset(points)
    try:
        rs = cell_seed(cfg.global_seed, algorithm, k, seed)
        t0 = time.perf_counter()
        centers, stats = seed_once(ds, algorithm, k, rs, cfg.c, cfg.lsh, cfg.paranoid)
        res.time = time.perf_counter() - t0
        res.cost = cost_of_indices(ds, centers)
        res.stats = stats
        if keep_centers:
            res.centers = list(centers)
    except Exception as exc:  # a failed cell is recorded and the run goes on
        res.ok = False
        res.error = f"{type(exc).__name__}: {exc}"
        log.debug("cell %s k=%d seed=%d failed\n%s", algorithm, k, seed, traceback.format_exc())
    return res


def read_centers(path) -> list[int]:
    text = Path(path).read_text()
    return [int(tok) for tok in text.replace(",", " ").split()]


def load_dataset(cfg: BenchConfig) -> tuple[Dataset, dict | None]:
    ds = load_csv(cfg.data, delimiter=cfg.delimiter, header=cfg.header)
    if not cfg.quantize:
        return ds, None
    ds, rep = quantize(ds)
    return ds, asdict(rep)


_POINTS = None


def _pool_cell(args):
    algorithm, k, seed, cfg = args
    return run_cell(_POINTS, algorithm, k, seed, cfg)


def run_bench(cfg: BenchConfig, ds: Dataset | None = None) -> BenchResult:
    cfg.validate()
    pre = None
    if ds is None:
        if cfg.data is None:
            raise ValueError("no dataset given")
        ds, pre = load_dataset(cfg)
    points = ds.points
    cells = [(a, k, s) for a in cfg.algorithms for k in cfg.ks for s in cfg.seeds]
    if cfg.warmup and cells:
        # compile kernels and touch caches; discarded
        sub = points[:min(points.shape[0], 256)]
        for a in cfg.algorithms:
            run_cell(sub, a, min(2, sub.shape[0]), 0, cfg)
    if cfg.jobs > 1 and len(cells) > 1:
        import multiprocessing as mp
        global _POINTS
        _POINTS = points
        with mp.get_context("fork").Pool(cfg.jobs) as pool:
            results = pool.map(_pool_cell, [(a, k, s, cfg) for a, k, s in cells])
        _POINTS = None
    else:
        results = [run_cell(points, a, k, s, cfg) for a, k, s in cells]
    for name, path in cfg.external.items():
        res = CellResult(name, 0, 0)
        try:
            centers = read_centers(path)
            res.k = len(centers)
            res.cost = cost_of_indices(ds, centers)
        except Exception as exc:
            res.ok = False
            res.error = f"{type(exc).__name__}: {exc}"
        results.append(res)
    return BenchResult(cfg, results, pre)


def _table_rows(table: dict[str, dict[int, float]], ks: list[int]) -> list[list[str]]:
    rows = [["algorithm"] + [str(k) for k in ks]]
    for a, row in table.items():
        rows.append([a] + [repr(float(row.get(k, math.nan))) for k in ks])
    return rows


def to_csv_text(rows: list[list[str]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def to_markdown(rows: list[list[str]]) -> str:
    head, body = rows[0], rows[1:]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    lines += ["| " + " | ".join(r) + " |" for r in body]
    return "\n".join(lines) + "\n"


def parse_markdown(text: str) -> list[list[str]]:
    rows = []
    for line in text.strip().splitlines():
        cells = [c.strip() for c in line.strip().strip("|").split("|")]
        if all(set(c) <= set("-: ") for c in cells):
            continue
        rows.append(cells)
    return rows


def emit_tables(res: BenchResult, out_dir, fmt: str = "csv") -> dict[str, Path]:
    """Write costs, relative runtimes, variances and raw per-cell stats."""
    if not res.cells:
        raise ValueError("no results to write")
    if fmt not in ("csv", "markdown"):
        raise ValueError(f"unknown table format {fmt!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ks = res.ks()
    tables = {
        "costs": res.cost_table(),
        "reltime": res.reltime_table(),
        "variance": res.variance_table(),
    }
    timed_ks = sorted({c.k for c in res.cells if c.algorithm in res.config.algorithms})
    written = {}
    for name, table in tables.items():
        rows = _table_rows(table, timed_ks if name == "reltime" else ks)
        if fmt == "csv":
            path = out / f"{name}.csv"
            path.write_text(to_csv_text(rows))
        else:
            path = out / f"{name}.md"
            path.write_text(to_markdown(rows))
        written[name] = path
    stats = {
        "config": asdict(res.config),
        "reference_algorithm": res.reference(),
        "preprocess": res.preprocess,
        "all_ok": res.ok,
        "cells": [asdict(c) for c in res.cells],
    }
    path = out / "stats.json"
    path.write_text(json.dumps(stats, indent=2, default=_json_default))
    written["stats"] = path
    return written


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")
