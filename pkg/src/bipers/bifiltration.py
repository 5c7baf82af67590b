"""Function-Rips bifiltrations up to dimension 2.

Each simplex carries its appearance bigrade in the (function, scale)
plane: a vertex appears at (func(p), 0), an edge at (max endpoint func,
endpoint distance), a triangle at (max vertex func, max pairwise
distance).  Rips presence is strict in the scale coordinate ("distance
less than eps"); that rule is encoded once, in :func:`present_at`.  On a
coarsened bifiltration all grades sit on grid values and grid-indexed
computations use closed thresholds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .geometry import GridSpec, PointCloud, distance_matrix

__all__ = [
    "Simplex",
    "Bifiltration",
    "build_function_rips",
    "coarsen",
    "present_at",
    "save_bifiltration",
    "load_bifiltration",
]


class Simplex(NamedTuple):
    vertices: tuple[int, ...]
    grade: tuple[float, float]


def _sorted_rows(verts: np.ndarray, grades: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(verts) == 0:
        return verts, grades
    order = np.lexsort(tuple(verts[:, k] for k in reversed(range(verts.shape[1]))))
    return verts[order], grades[order]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Bifiltration:
    """Bigraded simplicial complex, immutable, closed under faces.

    Vertices are implicit ids 0..n-1 with grades ``vertex_grades``;
    edges/triangles are index arrays with one (alpha, eps) grade row per
    simplex.  ``max_dim`` records which dimensions were built (degree-1
    homology needs max_dim == 2 even if no triangle exists).
    """

    vertex_grades: np.ndarray  # (n, 2)
    edges: np.ndarray  # (E, 2) int32
    edge_grades: np.ndarray  # (E, 2)
    triangles: np.ndarray  # (T, 3) int32
    triangle_grades: np.ndarray  # (T, 2)
    max_dim: int = 2
    grid: GridSpec | None = None

    def __post_init__(self):
        vg = np.asarray(self.vertex_grades, dtype=np.float64).reshape(-1, 2)
        ed = np.asarray(self.edges, dtype=np.int32).reshape(-1, 2)
        eg = np.asarray(self.edge_grades, dtype=np.float64).reshape(-1, 2)
        tr = np.asarray(self.triangles, dtype=np.int32).reshape(-1, 3)
        tg = np.asarray(self.triangle_grades, dtype=np.float64).reshape(-1, 2)
        if len(ed) != len(eg) or len(tr) != len(tg):
            raise ValueError("each simplex needs exactly one grade")
        if self.max_dim not in (1, 2):
            raise ValueError("max_dim must be 1 or 2")
        if self.max_dim == 1 and len(tr):
            raise ValueError("triangles present but max_dim == 1")
        ed, eg = _sorted_rows(ed, eg)
        tr, tg = _sorted_rows(tr, tg)
        for name, arr in (("vertex", vg), ("edge", eg), ("triangle", tg)):
            if len(arr) and np.any(arr[:, 1] < 0):
                raise ValueError(f"{name} scale grades must be nonnegative")
        object.__setattr__(self, "vertex_grades", _readonly(vg))
        object.__setattr__(self, "edges", _readonly(ed))
        object.__setattr__(self, "edge_grades", _readonly(eg))
        object.__setattr__(self, "triangles", _readonly(tr))
        object.__setattr__(self, "triangle_grades", _readonly(tg))

    @property
    def source_size(self) -> int:
        return self.vertex_grades.shape[0]

    def validate_faces(self) -> None:
        """Check face closure and monotone grading; raises on violation."""
        n = self.source_size
        if len(self.edges) and (self.edges.min() < 0 or self.edges.max() >= n):
            raise ValueError("edge endpoint out of range")
        if np.any(self.edges[:, 0] >= self.edges[:, 1]):
            raise ValueError("edge vertices must be strictly increasing")
        if len(self.triangles) and np.any(
            (self.triangles[:, 0] >= self.triangles[:, 1])
            | (self.triangles[:, 1] >= self.triangles[:, 2])
        ):
            raise ValueError("triangle vertices must be strictly increasing")
        for k in range(2):
            lo = self.vertex_grades[self.edges[:, k]]
            if np.any(lo > self.edge_grades):
                raise ValueError("edge grade below a vertex grade")
        egrade = {tuple(e): g for e, g in zip(map(tuple, self.edges), self.edge_grades)}
        for t, g in zip(map(tuple, self.triangles), self.triangle_grades):
            for f in ((t[0], t[1]), (t[0], t[2]), (t[1], t[2])):
                fg = egrade.get(f)
                if fg is None:
                    raise ValueError(f"triangle {t} missing edge {f}")
                if fg[0] > g[0] or fg[1] > g[1]:
                    raise ValueError(f"triangle {t} graded below its edge {f}")

    def simplices(self) -> list[Simplex]:
        """All simplices sorted by (grade_alpha, grade_eps, dim, vertices)."""
        out = [
            Simplex((int(i),), (float(g[0]), float(g[1])))
            for i, g in enumerate(self.vertex_grades)
        ]
        out += [
            Simplex(tuple(int(v) for v in e), (float(g[0]), float(g[1])))
            for e, g in zip(self.edges, self.edge_grades)
        ]
        out += [
            Simplex(tuple(int(v) for v in t), (float(g[0]), float(g[1])))
            for t, g in zip(self.triangles, self.triangle_grades)
        ]
        out.sort(key=lambda s: (s.grade[0], s.grade[1], len(s.vertices), s.vertices))
        return out

    @classmethod
    def from_simplices(cls, simplices: Iterable, max_dim: int = 2, grid=None) -> "Bifiltration":
        """Build from (vertices, (alpha, eps)) pairs; validates face closure."""
        vg: dict[int, tuple[float, float]] = {}
        ed, eg, tr, tg = [], [], [], []
        for verts, grade in simplices:
            verts = tuple(int(v) for v in verts)
            grade = (float(grade[0]), float(grade[1]))
            if len(verts) == 1:
                vg[verts[0]] = grade
            elif len(verts) == 2:
                ed.append(verts)
                eg.append(grade)
            elif len(verts) == 3:
                tr.append(verts)
                tg.append(grade)
            else:
                raise ValueError("simplices of dimension >= 3 are not supported")
        n = max(vg) + 1 if vg else 0
        if sorted(vg) != list(range(n)):
            raise ValueError("vertex ids must cover 0..n-1")
        bif = cls(
            np.array([vg[i] for i in range(n)]).reshape(-1, 2),
            np.array(ed, dtype=np.int32).reshape(-1, 2),
            np.array(eg).reshape(-1, 2),
            np.array(tr, dtype=np.int32).reshape(-1, 3),
            np.array(tg).reshape(-1, 2),
            max_dim=max_dim,
            grid=grid,
        )
        bif.validate_faces()
        return bif


def build_function_rips(
    cloud: PointCloud,
    dist: np.ndarray | None = None,
    max_dim: int = 2,
    max_scale: float | None = None,
) -> Bifiltration:
    """Function-Rips bifiltration of a cloud up to ``max_dim``.

    Contains every vertex, every edge with endpoint distance strictly
    below ``max_scale``, and every triangle whose three edges appear.
    ``max_scale`` defaults to one ulp above the largest pairwise
    distance, so the complete simplex is reachable.
    """
    if max_dim not in (1, 2):
        raise ValueError("max_dim must be 1 or 2")
    if dist is None:
        dist = distance_matrix(cloud)
    n = cloud.n_points
    if dist.shape != (n, n):
        raise ValueError("distance matrix inconsistent with cloud")
    if max_scale is None:
        max_scale = np.nextafter(float(dist.max()), np.inf) if n > 1 else 1.0
    if max_scale <= 0:
        raise ValueError("max_scale must be positive")
    func = cloud.func
    vertex_grades = np.column_stack([func, np.zeros(n)])

    iu, ju = np.triu_indices(n, k=1)
    d = dist[iu, ju]
    keep = d < max_scale
    edges = np.column_stack([iu[keep], ju[keep]]).astype(np.int32)
    edge_grades = np.column_stack([np.maximum(func[iu[keep]], func[ju[keep]]), d[keep]])

    tr = np.empty((0, 3), dtype=np.int32)
    tg = np.empty((0, 2))
    if max_dim == 2 and n >= 3:
        adj = dist < max_scale
        np.fill_diagonal(adj, False)
        ids = np.arange(n)
        tri_rows = []
        for i, j in edges:
            ks = ids[(ids > j) & adj[i] & adj[j]]
            if len(ks):
                tri_rows.append(
                    np.column_stack([np.full(len(ks), i), np.full(len(ks), j), ks])
                )
        if tri_rows:
            tr = np.vstack(tri_rows).astype(np.int32)
            a, b, c = tr[:, 0], tr[:, 1], tr[:, 2]
            tg = np.column_stack(
                [
                    np.maximum(np.maximum(func[a], func[b]), func[c]),
                    np.maximum(np.maximum(dist[a, b], dist[a, c]), dist[b, c]),
                ]
            )
    return Bifiltration(vertex_grades, edges, edge_grades, tr, tg, max_dim=max_dim)


def coarsen(bif: Bifiltration, grid: GridSpec) -> Bifiltration:
    """Snap every grade up to the least grid value >= it, per coordinate.

    Grades above the range clamp to the boundary value; the result is
    still a legal bifiltration (monotone snapping preserves face order)
    and is idempotent under repeated coarsening with the same grid.
    """

    def snap(grades: np.ndarray) -> np.ndarray:
        if not len(grades):
            return grades
        return np.column_stack([grid.snap_func(grades[:, 0]), grid.snap_scale(grades[:, 1])])

    return Bifiltration(
        snap(bif.vertex_grades),
        bif.edges,
        snap(bif.edge_grades),
        bif.triangles,
        snap(bif.triangle_grades),
        max_dim=bif.max_dim,
        grid=grid,
    )


def present_at(bif: Bifiltration, alpha: float, eps: float):
    """Presence masks (vertices, edges, triangles) at a continuous point.

    A simplex is present at (alpha, eps) iff grade_alpha <= alpha and
    grade_eps < eps -- the strict Rips inequality in the scale axis.
    """

    def mask(grades: np.ndarray) -> np.ndarray:
        if not len(grades):
            return np.zeros(0, dtype=bool)
        return (grades[:, 0] <= alpha) & (grades[:, 1] < eps)

    return mask(bif.vertex_grades), mask(bif.edge_grades), mask(bif.triangle_grades)


def save_bifiltration(bif: Bifiltration, path) -> None:
    """Text interchange format: one ``v0 [v1 [v2]] ; alpha eps`` per line."""
    lines = []
    for s in bif.simplices():
        verts = " ".join(str(v) for v in s.vertices)
        lines.append(f"{verts} ; {repr(s.grade[0])} {repr(s.grade[1])}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))


def load_bifiltration(path, max_dim: int = 2) -> Bifiltration:
    simplices = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                left, right = line.split(";")
                verts = tuple(int(v) for v in left.split())
                a, e = (float(x) for x in right.split())
            except ValueError as exc:
                raise ValueError(f"malformed bifiltration line {lineno}: {line!r}") from exc
            simplices.append((verts, (a, e)))
    return Bifiltration.from_simplices(simplices, max_dim=max_dim)
