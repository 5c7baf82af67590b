"""Grid invariants of two-parameter modules and slices along lines.

The Hilbert function is computed column-by-column: for every function
threshold on the grid, the scale-filtered subcomplex is reduced once and
Betti numbers are read off at each scale value.  Bigraded Betti numbers
come from ranks of the module's internal maps at each grid point
(cokernel of the map from the two predecessors counts generators;
relations drop out of the corresponding kernel).  Slices restrict the
module to a line of positive slope via its order-preserving isometric
parameterization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import f2
from .bifiltration import Bifiltration, coarsen
from .geometry import GridSpec
from .persistence import (
    FilteredComplex,
    PersistenceDiagram,
    count_alive,
    h0_diagram_unionfind,
    reduce_and_extract,
)

__all__ = [
    "HilbertGrid",
    "BettiGrid",
    "SliceLine",
    "hilbert_function",
    "bigraded_betti",
    "push_to_line",
    "slice_barcode",
    "exit_parameter",
    "save_hilbert_csv",
    "load_hilbert_csv",
    "save_betti_csv",
    "load_betti_csv",
]


@dataclass(frozen=True)
class HilbertGrid:
    """Homology dimensions on an m x n grid; values[i, j] at (alpha_i, eps_j)."""

    degree: int
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int64)
        if v.shape != (self.grid.m, self.grid.n):
            raise ValueError("values must have shape (m, n)")
        if np.any(v < 0):
            raise ValueError("Hilbert values are nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class BettiGrid:
    """Birth (xi0), death (xi1) and second-syzygy (xi2) counts per grid point."""

    degree: int
    grid: GridSpec
    xi0: np.ndarray
    xi1: np.ndarray
    xi2: np.ndarray

    def __post_init__(self):
        for name in ("xi0", "xi1", "xi2"):
            v = np.asarray(getattr(self, name), dtype=np.int64)
            if v.shape != (self.grid.m, self.grid.n):
                raise ValueError(f"{name} must have shape (m, n)")
            if np.any(v < 0):
                raise ValueError(f"{name} entries are nonnegative")
            v.setflags(write=False)
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class SliceLine:
    """Line of positive slope in the (function, scale) plane.

    ``angle_deg`` lies in (0, 90]; the line is the locus of
    ``-x sin(angle) + y cos(angle) = offset``.  Its parameterization is
    the order-preserving isometry whose zero sits where the line meets
    the nonnegative part of a coordinate axis.  The weight is
    ``1/sqrt(1 + q^2)`` with ``q = max(slope, 1/slope)``, so a diagonal
    line gets the largest weight ``1/sqrt(2)`` and the weight vanishes
    as the line degenerates to horizontal or vertical.
    """

    angle_deg: float
    offset: float

    def __post_init__(self):
        if not 0.0 < self.angle_deg <= 90.0:
            raise ValueError("angle must lie in (0, 90] degrees")
        if self.angle_deg == 90.0 and self.offset > 0:
            raise ValueError("a vertical line needs offset <= 0 to meet the axes")

    @property
    def slope(self) -> float:
        if self.angle_deg == 90.0:
            return math.inf
        return math.tan(math.radians(self.angle_deg))

    @property
    def weight(self) -> float:
        m = self.slope
        if math.isinf(m):
            return 0.0
        q = max(m, 1.0 / m)
        return 1.0 / math.sqrt(1.0 + q * q)

    @property
    def direction(self) -> tuple[float, float]:
        t = math.radians(self.angle_deg)
        return (math.cos(t), math.sin(t))

    @property
    def basepoint(self) -> tuple[float, float]:
        cos_t, sin_t = self.direction
        if self.angle_deg == 90.0:
            return (-self.offset, 0.0)
        if self.offset >= 0:
            return (0.0, self.offset / cos_t)
        return (-self.offset / sin_t, 0.0)

    def point_at(self, t: float) -> tuple[float, float]:
        x0, y0 = self.basepoint
        cos_t, sin_t = self.direction
        return (x0 + t * cos_t, y0 + t * sin_t)

    @classmethod
    def through(cls, p, q) -> "SliceLine":
        """Line through two points; requires positive slope between them."""
        dx, dy = q[0] - p[0], q[1] - p[1]
        if dx < 0:
            dx, dy = -dx, -dy
        if dx == 0 and dy == 0:
            raise ValueError("points coincide")
        if dy <= 0 or dx < 0:
            raise ValueError("line through the points must have positive slope")
        angle = math.degrees(math.atan2(dy, dx))
        t = math.radians(angle)
        offset = -p[0] * math.sin(t) + p[1] * math.cos(t)
        return cls(angle, offset)


def push_to_line(grade, line: SliceLine) -> float:
    """Smallest parameter t with line(t) >= grade coordinatewise.

    Returns +inf when no such t exists (vertical line left of the
    grade's function value).
    """
    a, e = float(grade[0]), float(grade[1])
    x0, y0 = line.basepoint
    if line.angle_deg == 90.0:
        return float(e - y0) if a <= x0 else math.inf
    cos_t, sin_t = line.direction
    return max((a - x0) / cos_t, (e - y0) / sin_t)


def _push_many(grades: np.ndarray, line: SliceLine) -> np.ndarray:
    if not len(grades):
        return np.zeros(0)
    x0, y0 = line.basepoint
    cos_t, sin_t = line.direction
    if line.angle_deg == 90.0:
        out = grades[:, 1] - y0
        return np.where(grades[:, 0] <= x0, out, np.inf)
    return np.maximum((grades[:, 0] - x0) / cos_t, (grades[:, 1] - y0) / sin_t)


def exit_parameter(line: SliceLine, grid: GridSpec) -> float:
    """Parameter at which the line leaves the grid rectangle (upper-right)."""
    amax = grid.func_range[1]
    emax = grid.scale_range[1]
    x0, y0 = line.basepoint
    if line.angle_deg == 90.0:
        return emax - y0
    cos_t, sin_t = line.direction
    return min((amax - x0) / cos_t, (emax - y0) / sin_t)


def slice_barcode(
    bif: Bifiltration,
    line: SliceLine,
    degree: int,
    drop_zero_length: bool = False,
    method: str = "auto",
) -> PersistenceDiagram:
    """Barcode of the module restricted to a slice line.

    Every simplex gets filtration value ``push_to_line(grade, line)``;
    the resulting one-parameter filtration is reduced.  Degree 0 runs on
    the union-find fast path by default (identical output to the column
    reduction); pass ``method="reduction"`` to force the generic path.
    """
    if degree not in (0, 1):
        raise ValueError("degree must be 0 or 1")
    if line.angle_deg == 90.0:
        raise ValueError("vertical lines are excluded from the slice API")
    if degree == 1 and bif.max_dim < 2:
        raise ValueError("degree-1 slices need a bifiltration built with max_dim=2")
    vvals = _push_many(bif.vertex_grades, line)
    evals = _push_many(bif.edge_grades, line)
    if degree == 0 and method in ("auto", "unionfind"):
        return h0_diagram_unionfind(vvals, bif.edges, evals, drop_zero_length)
    simplices = [((int(i),), float(v)) for i, v in enumerate(vvals)]
    simplices += [
        (tuple(int(x) for x in e), float(v)) for e, v in zip(bif.edges, evals)
    ]
    if degree == 1:
        tvals = _push_many(bif.triangle_grades, line)
        simplices += [
            (tuple(int(x) for x in t), float(v)) for t, v in zip(bif.triangles, tvals)
        ]
    fc = FilteredComplex(simplices, validate=False)
    return reduce_and_extract(fc, degree, drop_zero_length)


def _column_complex(bif: Bifiltration, alpha_idx_keep, degree: int) -> FilteredComplex:
    grid = bif.grid
    vi = grid.func_index(bif.vertex_grades[:, 0])
    simplices = [
        ((int(i),), float(e))
        for i, (ci, e) in enumerate(zip(vi, bif.vertex_grades[:, 1]))
        if ci <= alpha_idx_keep
    ]
    ei = grid.func_index(bif.edge_grades[:, 0])
    simplices += [
        (tuple(int(x) for x in edge), float(g))
        for edge, ci, g in zip(bif.edges, ei, bif.edge_grades[:, 1])
        if ci <= alpha_idx_keep
    ]
    if degree == 1:
        ti = grid.func_index(bif.triangle_grades[:, 0])
        simplices += [
            (tuple(int(x) for x in tri), float(g))
            for tri, ci, g in zip(bif.triangles, ti, bif.triangle_grades[:, 1])
            if ci <= alpha_idx_keep
        ]
    return FilteredComplex(simplices, validate=False)


def hilbert_function(bif: Bifiltration, grid: GridSpec, degree: int) -> HilbertGrid:
    """Hilbert function of the grid-coarsened module at every grid point."""
    if degree not in (0, 1):
        raise ValueError("degree must be 0 or 1")
    if degree == 1 and bif.max_dim < 2:
        raise ValueError("degree 1 needs a bifiltration built with max_dim=2")
    if bif.grid is None or bif.grid != grid:
        bif = coarsen(bif, grid)
    values = np.zeros((grid.m, grid.n), dtype=np.int64)
    for i in range(grid.m):
        fc = _column_complex(bif, i, degree)
        diagram = reduce_and_extract(fc, degree)
        for j, eps in enumerate(grid.scale_values):
            values[i, j] = count_alive(diagram, float(eps))
    return HilbertGrid(degree, grid, values)


class _ModulePoint:
    """Homology basis at one grid point with class-coordinate queries."""

    __slots__ = ("dim", "_solver", "_n_boundary", "reps")

    def __init__(self, boundaries: list[int], cycles: list[int]):
        self._solver = f2.Solver()
        basis = f2.BitBasis()
        self._n_boundary = 0
        for b in boundaries:
            if basis.add(b):
                self._solver.add(b)
                self._n_boundary += 1
        self.reps: list[int] = []
        for z in cycles:
            if basis.add(z):
                self.reps.append(z)
                self._solver.add(z)
        self.dim = len(self.reps)

    def coords(self, cycle: int) -> int:
        """Coordinates of a cycle's class over this point's homology basis."""
        combo = self._solver.express(cycle)
        if combo is None:
            raise ValueError("chain is not a cycle of this subcomplex")
        return combo >> self._n_boundary


def _cycles_at(bif: Bifiltration, degree: int, vmask, emask) -> list[int]:
    if degree == 0:
        return [1 << int(i) for i in np.nonzero(vmask)[0]]
    present = np.nonzero(emask)[0]
    columns = []
    for e in present:
        u, v = bif.edges[e]
        columns.append((1 << int(u)) | (1 << int(v)))
    combos = f2.kernel_basis(columns)
    cycles = []
    for combo in combos:
        vec = 0
        k = 0
        while combo:
            if combo & 1:
                vec |= 1 << int(present[k])
            combo >>= 1
            k += 1
        cycles.append(vec)
    return cycles


def _boundaries_at(bif: Bifiltration, degree: int, emask, tmask, edge_pos) -> list[int]:
    if degree == 0:
        out = []
        for e in np.nonzero(emask)[0]:
            u, v = bif.edges[e]
            out.append((1 << int(u)) | (1 << int(v)))
        return out
    out = []
    for t in np.nonzero(tmask)[0]:
        a, b, c = (int(x) for x in bif.triangles[t])
        out.append(
            (1 << edge_pos[(a, b)]) | (1 << edge_pos[(a, c)]) | (1 << edge_pos[(b, c)])
        )
    return out


def bigraded_betti(bif: Bifiltration, grid: GridSpec, degree: int) -> BettiGrid:
    """Bigraded Betti numbers of the grid-coarsened module.

    At each grid point the generator count is the dimension of the
    cokernel of the map in from the two predecessor points, and the
    relation count comes from the kernel of that map modulo the image
    from the common predecessor (the module is zero below the grid).
    Intended for desk-scale modules; cost grows with grid size times
    the cost of Gaussian elimination on the complex.
    """
    if degree not in (0, 1):
        raise ValueError("degree must be 0 or 1")
    if degree == 1 and bif.max_dim < 2:
        raise ValueError("degree 1 needs a bifiltration built with max_dim=2")
    if bif.grid is None or bif.grid != grid:
        bif = coarsen(bif, grid)

    vcell = np.column_stack(
        [grid.func_index(bif.vertex_grades[:, 0]), grid.scale_index(bif.vertex_grades[:, 1])]
    )
    ecell = np.column_stack(
        [grid.func_index(bif.edge_grades[:, 0]), grid.scale_index(bif.edge_grades[:, 1])]
    ) if len(bif.edges) else np.zeros((0, 2), dtype=np.int64)
    tcell = np.column_stack(
        [grid.func_index(bif.triangle_grades[:, 0]), grid.scale_index(bif.triangle_grades[:, 1])]
    ) if len(bif.triangles) else np.zeros((0, 2), dtype=np.int64)
    edge_pos = {tuple(int(v) for v in e): k for k, e in enumerate(bif.edges)}

    points: dict[tuple[int, int], _ModulePoint] = {}

    def module_at(i: int, j: int) -> _ModulePoint:
        if i < 0 or j < 0:
            return _EMPTY_POINT
        key = (i, j)
        mp = points.get(key)
        if mp is None:
            vmask = (vcell[:, 0] <= i) & (vcell[:, 1] <= j)
            emask = (ecell[:, 0] <= i) & (ecell[:, 1] <= j) if len(ecell) else np.zeros(0, bool)
            tmask = (tcell[:, 0] <= i) & (tcell[:, 1] <= j) if len(tcell) else np.zeros(0, bool)
            cycles = _cycles_at(bif, degree, vmask, emask)
            bounds = _boundaries_at(bif, degree, emask, tmask, edge_pos)
            mp = _ModulePoint(bounds, cycles)
            points[key] = mp
        return mp

    xi0 = np.zeros((grid.m, grid.n), dtype=np.int64)
    xi1 = np.zeros((grid.m, grid.n), dtype=np.int64)
    xi2 = np.zeros((grid.m, grid.n), dtype=np.int64)
    for i in range(grid.m):
        for j in range(grid.n):
            target = module_at(i, j)
            left, below = module_at(i - 1, j), module_at(i, j - 1)
            corner = module_at(i - 1, j - 1)
            incoming = [target.coords(z) for z in left.reps]
            incoming += [target.coords(z) for z in below.reps]
            rank_in = f2.rank(incoming)
            k1, k2 = left.dim, below.dim
            corner_cols = []
            for z in corner.reps:
                corner_cols.append(left.coords(z) | (below.coords(z) << k1))
            rank_corner = f2.rank(corner_cols)
            xi0[i, j] = target.dim - rank_in
            xi1[i, j] = (k1 + k2 - rank_in) - rank_corner
            xi2[i, j] = corner.dim - rank_corner
    return BettiGrid(degree, grid, xi0, xi1, xi2)


_EMPTY_POINT = _ModulePoint([], [])


def _grid_header(grid: GridSpec) -> list[str]:
    a0, a1 = grid.func_range
    e0, e1 = grid.scale_range
    return [
        f"{repr(a0)},{repr(a1)},{grid.m}",
        f"{repr(e0)},{repr(e1)},{grid.n}",
    ]


def _parse_grid_header(lines: list[str]) -> GridSpec:
    a0, a1, m = lines[0].split(",")
    e0, e1, n = lines[1].split(",")
    return GridSpec(int(m), int(n), (float(a0), float(a1)), (float(e0), float(e1)))


def save_hilbert_csv(hg: HilbertGrid, path) -> None:
    """Two GridSpec header lines, then m rows of n integer columns."""
    lines = _grid_header(hg.grid)
    for row in hg.values:
        lines.append(",".join(str(int(v)) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_hilbert_csv(path, degree: int = 0) -> HilbertGrid:
    with open(path, encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if len(lines) < 2:
        raise ValueError("Hilbert CSV needs two header lines")
    grid = _parse_grid_header(lines[:2])
    rows = [[int(c) for c in line.split(",")] for line in lines[2:]]
    if len(rows) != grid.m or any(len(r) != grid.n for r in rows):
        raise ValueError("Hilbert CSV body does not match the declared grid")
    return HilbertGrid(degree, grid, np.array(rows))


def save_betti_csv(bg: BettiGrid, path) -> None:
    """GridSpec headers, then ``i,j,xi0,xi1`` triples for nonzero entries."""
    lines = _grid_header(bg.grid)
    for i in range(bg.grid.m):
        for j in range(bg.grid.n):
            if bg.xi0[i, j] or bg.xi1[i, j]:
                lines.append(f"{i},{j},{int(bg.xi0[i, j])},{int(bg.xi1[i, j])}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_betti_csv(path, degree: int = 0) -> BettiGrid:
    with open(path, encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    grid = _parse_grid_header(lines[:2])
    xi0 = np.zeros((grid.m, grid.n), dtype=np.int64)
    xi1 = np.zeros((grid.m, grid.n), dtype=np.int64)
    for line in lines[2:]:
        i, j, a, b = (int(c) for c in line.split(","))
        xi0[i, j] = a
        xi1[i, j] = b
    return BettiGrid(degree, grid, xi0, xi1, np.zeros_like(xi0))
