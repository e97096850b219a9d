"""Point sets, CSV ingestion, coordinate quantization and exact Euclidean costs."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

EXACT_ASPECT_LIMIT = 5000


class DataError(ValueError):
    """Raised for malformed input files. ``row`` and ``col`` are 1-based."""

    def __init__(self, message: str, row: int | None = None, col: int | None = None):
        where = ""
        if row is not None:
            where = f" (row {row}" + (f", col {col})" if col is not None else ")")
        super().__init__(message + where)
        self.row = row
        self.col = col


class Dataset:
    """An immutable set of ``n`` points in ``R^d``.

    ``max_dist_bound`` and ``aspect_ratio`` are computed on first access
    unless supplied.
    """

    def __init__(self, points, max_dist_bound: float | None = None,
                 aspect_ratio: float | None = None):
        pts = np.array(points, dtype=np.float64, copy=True, ndmin=2)
        if pts.ndim != 2:
            raise ValueError("points must be a 2-d array")
        if pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError("dataset needs at least one point and one coordinate")
        if not np.all(np.isfinite(pts)):
            raise ValueError("all coordinates must be finite")
        pts.setflags(write=False)
        self.points = pts
        if max_dist_bound is not None:
            self.__dict__["max_dist_bound"] = float(max_dist_bound)
        if aspect_ratio is not None:
            self.__dict__["aspect_ratio"] = float(aspect_ratio)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"Dataset(n={self.n}, d={self.d})"

    @cached_property
    def max_dist_bound(self) -> float:
        return estimate_maxdist(self)

    @cached_property
    def aspect_ratio(self) -> float:
        return compute_aspect_ratio(self)

    @cached_property
    def location_ids(self) -> np.ndarray:
        """Integer id per point; equal ids iff equal coordinates."""
        _, inverse = np.unique(self.points, axis=0, return_inverse=True)
        ids = inverse.reshape(-1).astype(np.int64)
        ids.setflags(write=False)
        return ids

    @cached_property
    def n_locations(self) -> int:
        return int(self.location_ids.max()) + 1


def load_csv(path: str | Path, delimiter: str = ",", header: bool = False) -> Dataset:
    path = Path(path)
    rows: list[list[float]] = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        for lineno, record in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not record or all(not f.strip() for f in record):
                raise DataError("empty line", row=lineno)
            if width is None:
                width = len(record)
            elif len(record) != width:
                raise DataError(f"expected {width} fields, found {len(record)}", row=lineno)
            try:
                row = [float(f) for f in record]
            except ValueError:
                for col, f in enumerate(record, start=1):
                    try:
                        float(f)
                    except ValueError:
                        raise DataError(f"cannot parse {f!r} as a number",
                                        row=lineno, col=col) from None
                raise
            for col, v in enumerate(row, start=1):
                if not math.isfinite(v):
                    raise DataError(f"non-finite value {record[col - 1]!r}", row=lineno, col=col)
            rows.append(row)
    if not rows:
        raise DataError(f"no data rows in {path}")
    return Dataset(np.asarray(rows, dtype=np.float64))


def dist(p, q) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"dimension mismatch: {p.shape} vs {q.shape}")
    diff = p - q
    return float(np.sqrt(np.dot(diff, diff)))


def estimate_maxdist(ds: Dataset) -> float:
    """Twice the largest distance from the first point; within [max, 2*max] of the true diameter."""
    diff = ds.points - ds.points[0]
    return 2.0 * float(np.sqrt(np.max(np.einsum("ij,ij->i", diff, diff))))


def _pairwise_extremes(points: np.ndarray, block: int = 1024) -> tuple[float, float]:
    from scipy.spatial.distance import cdist

    n = points.shape[0]
    lo, hi = math.inf, 0.0
    for i in range(0, n, block):
        dm = cdist(points[i:i + block], points[i:])
        hi = max(hi, float(dm.max()))
        pos = dm[dm > 0]
        if pos.size:
            lo = min(lo, float(pos.min()))
    return lo, hi


def compute_aspect_ratio(ds: Dataset) -> float:
    """Max over min positive pairwise distance.

    Exact up to ``EXACT_ASPECT_LIMIT`` points. Above that, an upper bound:
    ``max_dist_bound`` over the smallest positive gap between coordinate
    values, which lower-bounds every positive pairwise distance.
    """
    if ds.n_locations < 2:
        return 1.0
    if ds.n <= EXACT_ASPECT_LIMIT:
        lo, hi = _pairwise_extremes(ds.points)
        return max(1.0, hi / lo)
    gap = math.inf
    for j in range(ds.d):
        vals = np.unique(ds.points[:, j])
        if vals.size > 1:
            gap = min(gap, float(np.min(np.diff(vals))))
    return max(1.0, ds.max_dist_bound / gap)


@dataclass(frozen=True)
class PreprocessReport:
    scaling_factor: float
    estimated_opt: float
    clamped_duplicates: int
    degenerate: bool = False


def quantize(ds: Dataset, sample_size: int = 20, error_divisor: float = 200.0,
             rng_seed: int | None = 0) -> tuple[Dataset, PreprocessReport]:
    """Snap coordinates to an integer grid whose pitch is derived from a crude cost estimate.

    The estimate is the cost of ``sample_size`` uniformly chosen points used
    as centers; the grid pitch is that cost over ``n * d * error_divisor``.
    A zero estimate leaves the data untouched and sets ``degenerate``.
    """
    rng = np.random.default_rng(rng_seed)
    m = min(sample_size, ds.n)
    sample = rng.choice(ds.n, size=m, replace=False)
    opt = clustering_cost(ds, ds.points[sample])
    if opt <= 0.0:
        return ds, PreprocessReport(1.0, 0.0, 0, degenerate=True)
    scale = opt / (ds.n * ds.d * error_divisor)
    q = np.floor(ds.points / scale)
    out = Dataset(q)
    clamped = ds.n_locations - out.n_locations
    return out, PreprocessReport(scale, opt, clamped)


def nearest_center(points: np.ndarray, centers: np.ndarray,
                   block: int = 2048) -> tuple[np.ndarray, np.ndarray]:
    """Index of and exact squared distance to the nearest center for every point.

    Candidates come from the norm expansion (BLAS); the winning distance is
    then recomputed from coordinate differences so cancellation never leaks
    into the returned values.
    """
    points = np.asarray(points, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    if centers.ndim == 1:
        centers = centers.reshape(1, -1)
    if centers.shape[0] == 0:
        raise ValueError("center set is empty")
    if centers.shape[1] != points.shape[1]:
        raise ValueError("centers and points have different dimension")
    shift = points.mean(axis=0)
    P = points - shift
    C = centers - shift
    cn = np.einsum("ij,ij->i", C, C)
    idx = np.empty(points.shape[0], dtype=np.int64)
    for s in range(0, P.shape[0], block):
        blk = P[s:s + block]
        scores = cn[None, :] - 2.0 * (blk @ C.T)
        idx[s:s + block] = np.argmin(scores, axis=1)
    diff = P - C[idx]
    return idx, np.einsum("ij,ij->i", diff, diff)


def clustering_cost(ds: Dataset | np.ndarray, centers) -> float:
    """Sum over points of the squared distance to the closest center."""
    pts = ds.points if isinstance(ds, Dataset) else np.asarray(ds, dtype=np.float64)
    _, d2 = nearest_center(pts, np.asarray(centers, dtype=np.float64))
    return float(d2.sum())


def cost_of_indices(ds: Dataset, indices: Sequence[int]) -> float:
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("center set is empty")
    return clustering_cost(ds, ds.points[idx])


def prefix_costs(ds: Dataset, indices: Sequence[int]) -> np.ndarray:
    """Cost of every prefix of an ordered center list (the solution for each k' <= k)."""
    out = np.empty(len(indices))
    best = np.full(ds.n, np.inf)
    for i, c in enumerate(indices):
        diff = ds.points - ds.points[c]
        np.minimum(best, np.einsum("ij,ij->i", diff, diff), out=best)
        out[i] = best.sum()
    return out
