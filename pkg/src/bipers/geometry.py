"""Point clouds with a real-valued function, metrics, synthetic data, grids.

A cloud is a set of points in R^d together with one function value per
point (in the experiments the function is a "popularity rank": a
permutation of 1..n, where *lower* values enter the bifiltration first).

All randomness is drawn from the Philox counter-based bit generator so
that a seed pins down every sample bit-for-bit on a given platform.
Derived seeds for pipeline stages come from ``numpy.random.SeedSequence``
spawning, which is the documented, collision-resistant derivation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

__all__ = [
    "PointCloud",
    "GridSpec",
    "rng",
    "derive_seeds",
    "distance_matrix",
    "sample_gaussian_cloud",
    "sample_clustered_cloud",
    "assign_ranks",
    "replace_points",
    "save_cloud_csv",
    "load_cloud_csv",
]


def rng(seed: int) -> np.random.Generator:
    """Deterministic generator: Philox (counter-based) keyed by ``seed``."""
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def derive_seeds(seed: int, n: int) -> list[int]:
    """Derive ``n`` independent child seeds from a root seed.

    Uses SeedSequence spawning; the same root always yields the same
    children, and children never collide with the root stream.
    """
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PointCloud:
    """Points in R^d plus one function value per point.

    Immutable after construction; safe to share across threads.

    Attributes:
        points: (n, d) float array of coordinates.
        func: (n,) float array, one function value per point.
        labels: optional opaque string per point.
    """

    points: np.ndarray
    func: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise ValueError("points must be a 2-d array (all vectors share one dimension)")
        if pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError("cloud must contain at least one point of dimension >= 1")
        fv = np.asarray(self.func, dtype=np.float64)
        if fv.shape != (pts.shape[0],):
            raise ValueError("func must hold exactly one value per point")
        if self.labels is not None and len(self.labels) != pts.shape[0]:
            raise ValueError("labels must hold exactly one entry per point")
        object.__setattr__(self, "points", _readonly(pts))
        object.__setattr__(self, "func", _readonly(fv))

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def distance_matrix(cloud: PointCloud) -> np.ndarray:
    """Euclidean distance matrix of a cloud.

    Each unordered pair is computed once (via ``pdist``), so the result
    is exactly symmetric with an exactly zero diagonal.
    """
    if cloud.n_points == 1:
        return np.zeros((1, 1))
    return squareform(pdist(cloud.points))


def sample_gaussian_cloud(
    n: int, d: int, mean: float = 0.0, sd: float = 1.0, seed: int = 0
) -> PointCloud:
    """Cloud of ``n`` points with i.i.d. Normal(mean, sd) coordinates.

    Function values default to ranks 1..n in sampling order; use
    :func:`assign_ranks` to permute them.  Same seed, same cloud.
    """
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    if sd <= 0:
        raise ValueError("need sd > 0")
    pts = rng(seed).normal(mean, sd, size=(n, d))
    return PointCloud(pts, np.arange(1, n + 1, dtype=np.float64))


def sample_clustered_cloud(
    n: int,
    d: int,
    k_clusters: int = 4,
    separation: float = 8.0,
    sd: float = 1.0,
    seed: int = 0,
) -> PointCloud:
    """Gaussian mixture with ``k_clusters`` planted clusters.

    Cluster centers are drawn on a sphere of radius ``separation`` so the
    cloud carries genuine connected-component structure at small scales.
    Stand-in for structured (non-random) data in the experiments.
    """
    if k_clusters < 1 or k_clusters > n:
        raise ValueError("need 1 <= k_clusters <= n")
    g = rng(seed)
    centers = g.normal(size=(k_clusters, d))
    centers *= separation / np.linalg.norm(centers, axis=1, keepdims=True)
    assign = np.sort(np.arange(n) % k_clusters)
    pts = centers[assign] + g.normal(0.0, sd, size=(n, d))
    return PointCloud(pts, np.arange(1, n + 1, dtype=np.float64))


def assign_ranks(cloud: PointCloud, order) -> PointCloud:
    """Replace function values by a rank permutation of 1..n.

    ``order`` is either an explicit permutation of {1..n} or an integer
    seed from which one is drawn.  Lower rank means earlier appearance
    in the bifiltration.  Coordinates are preserved exactly.
    """
    n = cloud.n_points
    if isinstance(order, (int, np.integer)):
        perm = rng(int(order)).permutation(n) + 1
    else:
        perm = np.asarray(order, dtype=np.float64)
        if perm.shape != (n,):
            raise ValueError("permutation length must equal the number of points")
        if not np.array_equal(np.sort(perm), np.arange(1, n + 1)):
            raise ValueError("order must be a permutation of 1..n")
    return PointCloud(cloud.points, np.asarray(perm, dtype=np.float64), cloud.labels)


def replace_points(base: PointCloud, pool: PointCloud, k: int, seed: int = 0) -> PointCloud:
    """Replace ``k`` seed-chosen points of ``base`` with pool points.

    Replacement is nested in ``k``: for a fixed seed, the points replaced
    at ``k`` are a subset of those replaced at ``k + 1``, and pool points
    are consumed in a fixed seeded order.  A replacement vector inherits
    the function value (rank slot) of the vector it displaces, so a rank
    permutation stays a permutation.
    """
    if k < 0 or k > base.n_points:
        raise ValueError("k must lie in [0, n_base]")
    if k > pool.n_points:
        raise ValueError("pool has fewer than k points")
    if pool.dim != base.dim:
        raise ValueError("pool dimension does not match base dimension")
    if k == 0:
        return base
    g = rng(seed)
    base_order = g.permutation(base.n_points)
    pool_order = g.permutation(pool.n_points)
    pts = np.array(base.points)
    pts[base_order[:k]] = pool.points[pool_order[:k]]
    return PointCloud(pts, base.func, base.labels)


@dataclass(frozen=True)
class GridSpec:
    """Uniform m x n evaluation grid on the (function, scale) plane.

    The axis values are ``count`` evenly spaced points including both
    range endpoints (a single-point axis sits at the upper endpoint, so
    upward snapping still covers the whole range).  Coarsening snaps a
    grade up to the least grid value >= it; grades above the range clamp
    to the boundary value.
    """

    m: int
    n: int
    func_range: tuple[float, float]
    scale_range: tuple[float, float]

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("need m >= 1 and n >= 1")
        a0, a1 = self.func_range
        e0, e1 = self.scale_range
        if not a0 < a1:
            raise ValueError("func_range must satisfy min < max")
        if not (0 <= e0 < e1):
            raise ValueError("scale_range must satisfy 0 <= min < max")
        object.__setattr__(self, "func_range", (float(a0), float(a1)))
        object.__setattr__(self, "scale_range", (float(e0), float(e1)))

    @staticmethod
    def _axis(lo: float, hi: float, count: int) -> np.ndarray:
        if count == 1:
            return np.array([hi])
        return np.linspace(lo, hi, count)

    @property
    def func_values(self) -> np.ndarray:
        return self._axis(*self.func_range, self.m)

    @property
    def scale_values(self) -> np.ndarray:
        return self._axis(*self.scale_range, self.n)

    def snap_func(self, values) -> np.ndarray:
        return self.func_values[self.func_index(values)]

    def snap_scale(self, values) -> np.ndarray:
        return self.scale_values[self.scale_index(values)]

    def func_index(self, values) -> np.ndarray:
        return self._snap_index(np.asarray(values, dtype=np.float64), self.func_values)

    def scale_index(self, values) -> np.ndarray:
        return self._snap_index(np.asarray(values, dtype=np.float64), self.scale_values)

    @staticmethod
    def _snap_index(values: np.ndarray, axis: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(axis, values, side="left")
        return np.minimum(idx, len(axis) - 1)

    @classmethod
    def for_clouds(cls, clouds, m: int, n: int, max_scale: float | None = None) -> "GridSpec":
        """Grid covering the function values and pairwise distances of clouds.

        The scale axis runs from 0 to the largest pairwise distance over
        the union of all clouds (so the complete complex is reachable),
        unless ``max_scale`` overrides it.
        """
        clouds = list(clouds)
        fmin = min(float(c.func.min()) for c in clouds)
        fmax = max(float(c.func.max()) for c in clouds)
        if fmax <= fmin:
            fmax = fmin + 1.0
        if max_scale is None:
            pts = np.vstack([c.points for c in clouds])
            union = PointCloud(pts, np.zeros(len(pts)))
            max_scale = float(distance_matrix(union).max())
        if max_scale <= 0:
            max_scale = 1.0
        return cls(m, n, (fmin, fmax), (0.0, max_scale))


def save_cloud_csv(cloud: PointCloud, path) -> None:
    """Write the cloud CSV: header ``rank,x0,...``, one row per point."""
    lines = ["rank," + ",".join(f"x{i}" for i in range(cloud.dim))]
    for f, row in zip(cloud.func, cloud.points):
        lines.append(",".join([repr(float(f))] + [repr(float(x)) for x in row]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_cloud_csv(path) -> PointCloud:
    """Read a cloud CSV written by :func:`save_cloud_csv`.

    Rejects ragged rows and malformed headers.
    """
    with open(path, encoding="utf-8") as fh:
        rows = [line.strip() for line in fh if line.strip()]
    if not rows:
        raise ValueError("empty cloud file")
    header = rows[0].split(",")
    if header[0] != "rank" or len(header) < 2:
        raise ValueError("cloud CSV must start with header 'rank,x0,...'")
    width = len(header)
    func, pts = [], []
    for i, row in enumerate(rows[1:], start=2):
        cells = row.split(",")
        if len(cells) != width:
            raise ValueError(f"ragged row at line {i}: expected {width} cells")
        func.append(float(cells[0]))
        pts.append([float(c) for c in cells[1:]])
    return PointCloud(np.array(pts), np.array(func))
