"""K-means and DBSCAN baselines over per-pixel feature vectors.

Both clusterers are deterministic by construction: K-means funnels all
randomness through a seeded generator with a fixed draw order, and
DBSCAN pins the classic algorithm's order-dependence (cluster seeds and
border-point ties resolved in point-index order).  Euclidean distance
throughout.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EmptyInputError, InsufficientPointsError, ShapeError
from .grids import ImageRaster, SegmentMap
from .segments import label_components

# cap on elements per pairwise-distance block, keeps temporaries small
_BLOCK = 1 << 22


@dataclass(frozen=True)
class FeatureMatrix:
    """(n, d) feature rows plus the pixel each row came from.

    NODATA pixels are excluded before construction, so rows never
    contain NaN.
    """

    data: np.ndarray
    rows: np.ndarray
    cols: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ValueError("feature data must be 2-D")
        if np.isnan(data).any():
            raise ValueError("feature rows must not contain NaN")
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        if rows.shape != (data.shape[0],) or cols.shape != (data.shape[0],):
            raise ValueError("provenance arrays must have one entry per feature row")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class KMeansConfig:
    k: int
    max_iters: int = 100
    tol: float = 1e-6
    seed: int = 0
    include_xy: bool = False
    xy_weight: float = 1.0

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if self.tol < 0:
            raise ConfigError("tol must be >= 0")
        if self.xy_weight < 0:
            raise ConfigError("xy_weight must be >= 0")


@dataclass(frozen=True)
class DbscanConfig:
    eps: float
    min_pts: int
    include_xy: bool = False
    xy_weight: float = 1.0

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigError("eps must be > 0")
        if self.min_pts < 1:
            raise ConfigError("min_pts must be >= 1")
        if self.xy_weight < 0:
            raise ConfigError("xy_weight must be >= 0")


@dataclass(frozen=True)
class KMeansResult:
    assignments: np.ndarray
    centroids: np.ndarray
    objective: float
    n_iters: int
    # objective after each Lloyd iteration; non-increasing
    objective_history: tuple[float, ...] = field(repr=False)


def build_features(
    img: ImageRaster, include_xy: bool = False, xy_weight: float = 1.0
) -> FeatureMatrix:
    """Per-band z-scored spectral features for every valid pixel.

    Zero-variance bands become all-zero columns.  With include_xy, the
    normalized pixel coordinates (row/height, col/width) scaled by
    xy_weight are appended, un-normalized, so spatial closeness can be
    traded against spectral closeness.  Points follow raster-scan order.
    """
    valid = img.valid_mask
    if not valid.any():
        raise EmptyInputError("raster has no valid pixels")
    rows, cols = np.nonzero(valid)
    spectral = img.values[:, rows, cols].astype(np.float64).T
    mean = spectral.mean(axis=0)
    std = spectral.std(axis=0)
    feats = np.where(std > 0, (spectral - mean) / np.where(std > 0, std, 1.0), 0.0)
    if include_xy:
        xy = np.stack([rows / img.height, cols / img.width], axis=1) * xy_weight
        feats = np.concatenate([feats, xy], axis=1)
    return FeatureMatrix(feats, rows, cols)


def _as_array(X) -> np.ndarray:
    data = X.data if isinstance(X, FeatureMatrix) else np.asarray(X, dtype=np.float64)
    return np.ascontiguousarray(data, dtype=np.float64)


def _sq_dists(data: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Exact squared Euclidean distances, chunked; no BLAS involved."""
    n, d = data.shape
    k = centroids.shape[0]
    out = np.empty((n, k), dtype=np.float64)
    step = max(1, _BLOCK // max(1, k * d))
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        diff = data[lo:hi, None, :] - centroids[None, :, :]
        out[lo:hi] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def kmeans_pp_init(data: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded k-means++ seeding.

    Draw order: one uniform index for the first center, then one
    uniform float per remaining center for the D^2 sampling.
    """
    n = data.shape[0]
    centroids = np.empty((k, data.shape[1]), dtype=np.float64)
    centroids[0] = data[int(rng.integers(n))]
    d2 = ((data - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = float(d2.sum())
        r = rng.random()
        if total > 0:
            idx = int(np.searchsorted(np.cumsum(d2), r * total, side="right"))
            idx = min(idx, n - 1)
        else:
            # all remaining mass at chosen centers; fall back to uniform
            idx = int(r * n) % n
        centroids[j] = data[idx]
        d2 = np.minimum(d2, ((data - centroids[j]) ** 2).sum(axis=1))
    return centroids


def _repair_empty(
    data: np.ndarray, assign: np.ndarray, d2min: np.ndarray, k: int
) -> np.ndarray:
    """Give each empty cluster the point farthest from its own centroid.

    Only clusters of size >= 2 donate, so no repair creates a new empty
    cluster; ascending empty-cluster order keeps the result deterministic.
    """
    sizes = np.bincount(assign, minlength=k)
    empties = np.flatnonzero(sizes == 0)
    if empties.size == 0:
        return assign
    assign = assign.copy()
    score = d2min.copy()
    for e in empties:
        score[sizes[assign] < 2] = -1.0
        donor = int(np.argmax(score))
        sizes[assign[donor]] -= 1
        assign[donor] = e
        sizes[e] += 1
        score[donor] = -1.0
    return assign


def _cost(data: np.ndarray, assign: np.ndarray, centroids: np.ndarray) -> float:
    return float(((data - centroids[assign]) ** 2).sum())


def kmeans(X, cfg: KMeansConfig) -> KMeansResult:
    """Lloyd's algorithm from seeded k-means++ starting centroids.

    Stops when the largest centroid move drops below tol (or at an exact
    fixed point, or after max_iters).  A final assignment pass pins
    every point to its nearest centroid; the returned objective is the
    within-cluster squared-distance sum over that assignment.
    """
    data = _as_array(X)
    n = data.shape[0]
    if n < cfg.k:
        raise InsufficientPointsError(f"{n} points < k={cfg.k}")
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    centroids = kmeans_pp_init(data, cfg.k, rng)

    assign = np.zeros(n, dtype=np.int64)
    history: list[float] = []
    n_iters = 0
    for _ in range(cfg.max_iters):
        n_iters += 1
        d2 = _sq_dists(data, centroids)
        assign = np.argmin(d2, axis=1)
        assign = _repair_empty(data, assign, d2[np.arange(n), assign], cfg.k)
        new_centroids = np.empty_like(centroids)
        for j in range(cfg.k):
            new_centroids[j] = data[assign == j].mean(axis=0)
        movement = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
        centroids = new_centroids
        history.append(_cost(data, assign, centroids))
        if movement == 0.0 or movement < cfg.tol:
            break

    final = np.argmin(_sq_dists(data, centroids), axis=1)
    if np.unique(final).size == cfg.k:
        assign = final
    objective = _cost(data, assign, centroids)
    return KMeansResult(assign, centroids, objective, n_iters, tuple(history))


class _EpsGrid:
    """Uniform grid with cell size eps over the feature bounding box.

    Any two points within eps of each other land in the same or an
    adjacent cell, so neighborhood queries only scan the 3^d cell block
    around a point.
    """

    def __init__(self, data: np.ndarray, eps: float):
        self.data = data
        self.eps = eps
        cells = np.floor((data - data.min(axis=0)) / eps).astype(np.int64)
        uniq, inverse = np.unique(cells, axis=0, return_inverse=True)
        self.cell_of = inverse
        order = np.argsort(inverse, kind="stable")
        counts = np.bincount(inverse, minlength=len(uniq))
        self._points = order
        self._starts = np.concatenate([[0], np.cumsum(counts)])
        self._index = {tuple(c): i for i, c in enumerate(uniq.tolist())}
        self._uniq = uniq
        self._offsets = list(itertools.product((-1, 0, 1), repeat=data.shape[1]))
        self._cand_cache: dict[int, np.ndarray] = {}

    def cell_points(self, cell_idx: int) -> np.ndarray:
        return self._points[self._starts[cell_idx]:self._starts[cell_idx + 1]]

    def candidates(self, cell_idx: int) -> np.ndarray:
        """Point indices in the cell and all adjacent cells, ascending."""
        cached = self._cand_cache.get(cell_idx)
        if cached is not None:
            return cached
        base = self._uniq[cell_idx].tolist()
        parts = []
        for off in self._offsets:
            j = self._index.get(tuple(b + o for b, o in zip(base, off)))
            if j is not None:
                parts.append(self.cell_points(j))
        cand = np.sort(np.concatenate(parts))
        self._cand_cache[cell_idx] = cand
        return cand

    def neighbor_counts(self, eps2: float) -> np.ndarray:
        """Number of points within eps of each point, itself included."""
        counts = np.zeros(self.data.shape[0], dtype=np.int64)
        for cell_idx in range(len(self._uniq)):
            pts = self.cell_points(cell_idx)
            cand = self.candidates(cell_idx)
            cand_data = self.data[cand]
            step = max(1, _BLOCK // max(1, cand.size * self.data.shape[1]))
            for lo in range(0, pts.size, step):
                block = pts[lo:lo + step]
                diff = self.data[block][:, None, :] - cand_data[None, :, :]
                d2 = np.einsum("ijk,ijk->ij", diff, diff)
                counts[block] = (d2 <= eps2).sum(axis=1)
        return counts

    def neighbors_of(self, seeds: np.ndarray, eps2: float) -> np.ndarray:
        """Union of eps-neighborhoods of the seed points, ascending."""
        found = []
        for cell_idx in np.unique(self.cell_of[seeds]):
            pts = seeds[self.cell_of[seeds] == cell_idx]
            cand = self.candidates(int(cell_idx))
            cand_data = self.data[cand]
            step = max(1, _BLOCK // max(1, cand.size * self.data.shape[1]))
            for lo in range(0, pts.size, step):
                block = pts[lo:lo + step]
                diff = self.data[block][:, None, :] - cand_data[None, :, :]
                d2 = np.einsum("ijk,ijk->ij", diff, diff)
                hit = (d2 <= eps2).any(axis=0)
                if hit.any():
                    found.append(cand[hit])
        if not found:
            return np.empty(0, dtype=np.int64)
        return np.unique(np.concatenate(found))


def dbscan(X, cfg: DbscanConfig) -> np.ndarray:
    """Density clustering; returns a cluster id per point, 0 = noise.

    A point is core when its eps-neighborhood (itself included) holds at
    least min_pts points.  Clusters grow from core points visited in
    index order; border points keep the first cluster that reaches them.
    The uniform eps-grid only accelerates the scan — output is identical
    to the naive O(n^2) algorithm.
    """
    data = _as_array(X)
    n = data.shape[0]
    labels = np.zeros(n, dtype=np.int64)
    if n == 0:
        return labels
    eps2 = cfg.eps * cfg.eps
    grid = _EpsGrid(data, cfg.eps)
    core = grid.neighbor_counts(eps2) >= cfg.min_pts

    cluster = 0
    for i in range(n):
        if labels[i] != 0 or not core[i]:
            continue
        cluster += 1
        labels[i] = cluster
        frontier = np.array([i], dtype=np.int64)
        while frontier.size:
            seeds = frontier[core[frontier]]
            if seeds.size == 0:
                break
            nbrs = grid.neighbors_of(seeds, eps2)
            new = nbrs[labels[nbrs] == 0]
            labels[new] = cluster
            frontier = new
    return labels


def assignments_to_segment_map(
    assignments: np.ndarray,
    rows: np.ndarray,
    cols: np.ndarray,
    width: int,
    height: int,
    connectivity: int = 4,
) -> SegmentMap:
    """Paint cluster ids onto the pixel grid and split them spatially.

    Feature-space clusters need not be contiguous, so each cluster is
    broken into connected components.  Assignment 0 means noise; noise
    and unpainted (NODATA) pixels stay background.
    """
    assignments = np.asarray(assignments)
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    if assignments.shape != rows.shape or rows.shape != cols.shape:
        raise ShapeError("assignments and provenance lengths differ")
    if assignments.size and assignments.min() < 0:
        raise ShapeError("cluster ids must be >= 0 (0 = noise)")
    if rows.size and (rows.min() < 0 or rows.max() >= height or cols.min() < 0 or cols.max() >= width):
        raise ShapeError("provenance pixel outside the raster")
    paint = np.zeros((height, width), dtype=np.int64)
    paint[rows, cols] = assignments
    return SegmentMap(label_components(paint, paint > 0, connectivity))
