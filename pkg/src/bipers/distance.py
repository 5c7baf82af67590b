"""Bottleneck distance between diagrams and matching distance between modules.

The bottleneck distance is exact: binary search over the candidate set
(all cross-diagram birth/death differences plus diagonal costs) with a
feasibility test at each threshold.  Feasibility is a max-flow problem
on multiplicity-collapsed diagram points, where either diagram's points
may be matched to the diagonal at half their lifespan.  Bars with
infinite death must pair with each other (in sorted birth order, which
is optimal); a mismatch in their counts makes the distance infinite.

The matching distance is approximated by a finite grid of slice lines:
angles uniform in the open interval (0, 90) degrees and, per angle,
offsets uniform in the open range for which the line crosses the grid
rectangle.  Each line contributes its bottleneck distance scaled by the
line's slope weight; the supremum and the realizing line are returned.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .bifiltration import Bifiltration, coarsen
from .bipersistence import SliceLine, exit_parameter, slice_barcode
from .geometry import GridSpec
from .persistence import PersistenceDiagram

__all__ = [
    "Matching",
    "LineResult",
    "MatchingDistanceResult",
    "bottleneck_distance",
    "bottleneck_matching",
    "matching_distance",
    "realizing_bar_lengths",
    "sample_lines",
    "common_grid",
]

INF = float("inf")


@dataclass(frozen=True)
class Matching:
    """Partial bijection between two diagrams; the rest goes to the diagonal."""

    pairs: tuple  # ((b1, d1), (b2, d2)) matched point pairs
    diagonal_1: tuple  # points of diagram 1 sent to their diagonal projection
    diagonal_2: tuple
    cost: float


class _Dinic:
    def __init__(self, n: int):
        self.adj: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[int] = []

    def add_edge(self, u: int, v: int, cap: int) -> int:
        idx = len(self.to)
        self.adj[u].append(idx)
        self.to.append(v)
        self.cap.append(cap)
        self.adj[v].append(idx + 1)
        self.to.append(u)
        self.cap.append(0)
        return idx

    def max_flow(self, s: int, t: int) -> int:
        flow = 0
        n = len(self.adj)
        while True:
            level = [-1] * n
            level[s] = 0
            queue = [s]
            for u in queue:
                for idx in self.adj[u]:
                    v = self.to[idx]
                    if self.cap[idx] > 0 and level[v] < 0:
                        level[v] = level[u] + 1
                        queue.append(v)
            if level[t] < 0:
                return flow
            it = [0] * n

            def dfs(u: int, pushed: int) -> int:
                if u == t:
                    return pushed
                while it[u] < len(self.adj[u]):
                    idx = self.adj[u][it[u]]
                    v = self.to[idx]
                    if self.cap[idx] > 0 and level[v] == level[u] + 1:
                        got = dfs(v, min(pushed, self.cap[idx]))
                        if got:
                            self.cap[idx] -= got
                            self.cap[idx ^ 1] += got
                            return got
                    it[u] += 1
                return 0

            while True:
                pushed = dfs(s, 1 << 60)
                if not pushed:
                    break
                flow += pushed


def _collapse(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if not len(points):
        return points.reshape(0, 2), np.zeros(0, dtype=np.int64)
    uniq, counts = np.unique(points, axis=0, return_counts=True)
    return uniq, counts


class _FiniteParts:
    """Multiplicity-collapsed finite points of two diagrams plus geometry."""

    def __init__(self, p1: np.ndarray, p2: np.ndarray):
        self.u1, self.c1 = _collapse(p1)
        self.u2, self.c2 = _collapse(p2)
        self.diag1 = (self.u1[:, 1] - self.u1[:, 0]) / 2.0
        self.diag2 = (self.u2[:, 1] - self.u2[:, 0]) / 2.0
        if len(self.u1) and len(self.u2):
            db = np.abs(self.u1[:, 0, None] - self.u2[None, :, 0])
            dd = np.abs(self.u1[:, 1, None] - self.u2[None, :, 1])
            self.dist = np.maximum(db, dd)
        else:
            self.dist = np.zeros((len(self.u1), len(self.u2)))

    def candidates(self) -> np.ndarray:
        cands = [np.array([0.0]), self.diag1, self.diag2]
        if self.dist.size:
            cands.append(self.dist.ravel())
        return np.unique(np.concatenate(cands))

    def feasible(self, r: float, want_flow: bool = False):
        k1, k2 = len(self.u1), len(self.u2)
        n1, n2 = int(self.c1.sum()), int(self.c2.sum())
        # nodes: 0 source, 1 sink, 2..2+k1 left, then right, then dL, dR
        left = [2 + i for i in range(k1)]
        right = [2 + k1 + j for j in range(k2)]
        dl, dr = 2 + k1 + k2, 3 + k1 + k2
        g = _Dinic(4 + k1 + k2)
        big = 1 << 40
        pair_edges = {}
        for i in range(k1):
            g.add_edge(0, left[i], int(self.c1[i]))
        g.add_edge(0, dl, n2)
        for j in range(k2):
            g.add_edge(right[j], 1, int(self.c2[j]))
        g.add_edge(dr, 1, n1)
        for i in range(k1):
            for j in range(k2):
                if self.dist[i, j] <= r:
                    pair_edges[(i, j)] = g.add_edge(left[i], right[j], big)
            if self.diag1[i] <= r:
                pair_edges[(i, -1)] = g.add_edge(left[i], dr, big)
        for j in range(k2):
            if self.diag2[j] <= r:
                pair_edges[(-1, j)] = g.add_edge(dl, right[j], big)
        g.add_edge(dl, dr, big)
        ok = g.max_flow(0, 1) == n1 + n2
        if not want_flow:
            return ok
        return ok, g, pair_edges, big


def _split_infinite(diagram: PersistenceDiagram) -> tuple[np.ndarray, np.ndarray]:
    p = diagram.pairs
    inf_mask = np.isinf(p[:, 1])
    return p[~inf_mask], p[inf_mask]


def bottleneck_distance(d1: PersistenceDiagram, d2: PersistenceDiagram) -> float:
    """Exact bottleneck distance between two diagrams of the same degree."""
    value, _ = _bottleneck(d1, d2, want_matching=False)
    return value


def bottleneck_matching(d1: PersistenceDiagram, d2: PersistenceDiagram) -> tuple[float, Matching]:
    """Bottleneck distance plus one matching realizing it."""
    return _bottleneck(d1, d2, want_matching=True)


def _bottleneck(d1, d2, want_matching: bool):
    if d1.degree != d2.degree:
        raise ValueError("diagrams must have the same degree")
    f1, i1 = _split_infinite(d1)
    f2_, i2 = _split_infinite(d2)
    if len(i1) != len(i2):
        return INF, None
    # sorted-order pairing minimizes the max birth difference
    inf_pairs = ()
    inf_cost = 0.0
    if len(i1):
        b1 = np.sort(i1[:, 0])
        b2 = np.sort(i2[:, 0])
        inf_cost = float(np.max(np.abs(b1 - b2)))
        inf_pairs = tuple(((b, INF), (c, INF)) for b, c in zip(b1, b2))
    # zero-length points sit on the diagonal: free to match there, and a
    # diagonal projection is never a worse partner than an explicit
    # diagonal point, so dropping them changes nothing
    f1 = f1[f1[:, 0] < f1[:, 1]]
    f2_ = f2_[f2_[:, 0] < f2_[:, 1]]
    if f1.shape == f2_.shape and np.array_equal(f1, f2_):
        fin_cost = 0.0
        if not want_matching:
            return max(inf_cost, fin_cost), None
        pairs = inf_pairs + tuple(zip(map(tuple, f1), map(tuple, f2_)))
        return max(inf_cost, fin_cost), Matching(pairs, (), (), max(inf_cost, fin_cost))
    parts = _FiniteParts(f1, f2_)
    cands = parts.candidates()
    lo, hi = 0, len(cands) - 1
    if not parts.feasible(float(cands[hi])):
        raise AssertionError("bottleneck feasibility must hold at the max candidate")
    while lo < hi:
        mid = (lo + hi) // 2
        if parts.feasible(float(cands[mid])):
            hi = mid
        else:
            lo = mid + 1
    fin_cost = float(cands[lo])
    value = max(inf_cost, fin_cost)
    if not want_matching:
        return value, None
    ok, g, pair_edges, big = parts.feasible(fin_cost, want_flow=True)
    pairs = list(inf_pairs)
    diag1, diag2 = [], []
    for (i, j), idx in pair_edges.items():
        used = big - g.cap[idx]
        for _ in range(used):
            if i >= 0 and j >= 0:
                pairs.append((tuple(parts.u1[i]), tuple(parts.u2[j])))
            elif j < 0:
                diag1.append(tuple(parts.u1[i]))
            else:
                diag2.append(tuple(parts.u2[j]))
    return value, Matching(tuple(pairs), tuple(diag1), tuple(diag2), value)


class LineResult(NamedTuple):
    angle_deg: float
    offset: float
    slope: float
    weight: float
    bottleneck: float
    weighted: float


@dataclass(frozen=True)
class MatchingDistanceResult:
    """Approximate matching distance plus the full per-line table.

    Lines, diagrams and the value live in normalized coordinates: the
    common grid rectangle is affinely mapped onto the unit square before
    slicing (``grid`` is the unit-square GridSpec; ``data_grid`` keeps
    the coarsening grid in data units).
    """

    value: float
    realizing_line: SliceLine | None
    diagrams: tuple[PersistenceDiagram, PersistenceDiagram] | None
    per_line: tuple[LineResult, ...]
    grid: GridSpec
    degree: int
    data_grid: GridSpec | None = None


def sample_lines(grid: GridSpec, num_angles: int, num_offsets: int) -> list[SliceLine]:
    """Line grid: angles open-uniform in (0, 90), offsets per angle.

    For each angle, offsets are uniform strictly inside the range for
    which the line meets the grid rectangle.
    """
    if num_angles < 1 or num_offsets < 1:
        raise ValueError("need at least one angle and one offset")
    a0, a1 = grid.func_range
    e0, e1 = grid.scale_range
    lines = []
    for k in range(1, num_angles + 1):
        angle = 90.0 * k / (num_angles + 1)
        t = math.radians(angle)
        lo = -a1 * math.sin(t) + e0 * math.cos(t)
        hi = -a0 * math.sin(t) + e1 * math.cos(t)
        for kk in range(1, num_offsets + 1):
            offset = lo + (hi - lo) * kk / (num_offsets + 1)
            lines.append(SliceLine(angle, offset))
    return lines


def common_grid(a: Bifiltration, b: Bifiltration, m: int = 20, n: int = 20) -> GridSpec:
    """Shared GridSpec covering the grades of both bifiltrations."""
    if a.grid is not None and a.grid == b.grid:
        return a.grid

    def ranges(bif):
        grades = [bif.vertex_grades]
        if len(bif.edge_grades):
            grades.append(bif.edge_grades)
        if len(bif.triangle_grades):
            grades.append(bif.triangle_grades)
        g = np.vstack(grades)
        return g[:, 0].min(), g[:, 0].max(), g[:, 1].max()

    fa0, fa1, ea = ranges(a)
    fb0, fb1, eb = ranges(b)
    fmin, fmax = min(fa0, fb0), max(fa1, fb1)
    if fmax <= fmin:
        fmax = fmin + 1.0
    emax = max(ea, eb)
    if emax <= 0:
        emax = 1.0
    return GridSpec(m, n, (float(fmin), float(fmax)), (0.0, float(emax)))


def _normalize_to_unit(bif: Bifiltration, grid: GridSpec) -> Bifiltration:
    """Map grades affinely so the grid rectangle becomes the unit square."""
    a0, a1 = grid.func_range
    e0, e1 = grid.scale_range
    fa, fe = 1.0 / (a1 - a0), 1.0 / (e1 - e0)

    def scale(g: np.ndarray) -> np.ndarray:
        if not len(g):
            return g
        return np.column_stack([(g[:, 0] - a0) * fa, (g[:, 1] - e0) * fe])

    return Bifiltration(
        scale(bif.vertex_grades),
        bif.edges,
        scale(bif.edge_grades),
        bif.triangles,
        scale(bif.triangle_grades),
        max_dim=bif.max_dim,
    )


_WORKER: dict = {}


def _init_worker(a: Bifiltration, b: Bifiltration, degree: int):
    _WORKER["a"] = a
    _WORKER["b"] = b
    _WORKER["degree"] = degree


def _line_bottleneck(task):
    idx, angle, offset = task
    line = SliceLine(angle, offset)
    da = slice_barcode(_WORKER["a"], line, _WORKER["degree"])
    db = slice_barcode(_WORKER["b"], line, _WORKER["degree"])
    if da == db:
        return idx, 0.0
    return idx, bottleneck_distance(da, db)


def matching_distance(
    a: Bifiltration,
    b: Bifiltration,
    degree: int = 0,
    num_angles: int = 20,
    num_offsets: int = 20,
    grid: GridSpec | None = None,
    jobs: int = 1,
) -> MatchingDistanceResult:
    """Weighted supremum of per-line bottleneck distances over a line grid.

    Both modules are coarsened onto a common grid, and the grid
    rectangle is normalized to the unit square before slicing, so the
    value is scale-free and its quantization tracks the bin width.
    Ties in the maximum are broken toward the smallest angle index, then
    offset index, so parallel execution returns exactly the serial
    result.
    """
    if grid is None:
        grid = common_grid(a, b)
    if a.grid != grid:
        a = coarsen(a, grid)
    if b.grid != grid:
        b = coarsen(b, grid)
    data_grid = grid
    a = _normalize_to_unit(a, data_grid)
    b = _normalize_to_unit(b, data_grid)
    grid = GridSpec(data_grid.m, data_grid.n, (0.0, 1.0), (0.0, 1.0))
    lines = sample_lines(grid, num_angles, num_offsets)
    tasks = [(i, ln.angle_deg, ln.offset) for i, ln in enumerate(lines)]
    values = np.zeros(len(lines))
    if jobs > 1:
        with ProcessPoolExecutor(
            max_workers=jobs, initializer=_init_worker, initargs=(a, b, degree)
        ) as pool:
            for idx, val in pool.map(_line_bottleneck, tasks, chunksize=8):
                values[idx] = val
    else:
        _init_worker(a, b, degree)
        for task in tasks:
            idx, val = _line_bottleneck(task)
            values[idx] = val
    per_line = []
    best_idx, best = 0, -1.0
    for i, ln in enumerate(lines):
        weighted = ln.weight * values[i]
        per_line.append(
            LineResult(ln.angle_deg, ln.offset, ln.slope, ln.weight, float(values[i]), weighted)
        )
        if weighted > best:
            best, best_idx = weighted, i
    best_line = lines[best_idx]
    diagrams = (
        slice_barcode(a, best_line, degree),
        slice_barcode(b, best_line, degree),
    )
    return MatchingDistanceResult(
        float(best), best_line, diagrams, tuple(per_line), grid, degree, data_grid
    )


def realizing_bar_lengths(result: MatchingDistanceResult):
    """Bar lengths of the two diagrams on the realizing line, plus their mean.

    Zero-length bars are dropped; infinite bars are truncated at the
    parameter where the line exits the grid rectangle (statistics only;
    bottleneck matching never truncates).  Returns
    ``(mean, (lengths_1, lengths_2))`` with mean 0.0 for no bars at all.
    """
    if result.realizing_line is None or result.diagrams is None:
        raise ValueError("result carries no realizing line")
    t_exit = exit_parameter(result.realizing_line, result.grid)

    def lengths(diagram: PersistenceDiagram) -> np.ndarray:
        p = diagram.drop_zero_length().pairs
        if not len(p):
            return np.zeros(0)
        deaths = np.where(np.isinf(p[:, 1]), t_exit, p[:, 1])
        return np.maximum(deaths - p[:, 0], 0.0)

    l1, l2 = lengths(result.diagrams[0]), lengths(result.diagrams[1])
    total = len(l1) + len(l2)
    mean = float((l1.sum() + l2.sum()) / total) if total else 0.0
    return mean, (l1, l2)
