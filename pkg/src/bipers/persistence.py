"""One-parameter persistent homology over the two-element field.

The canonical implementation is standard left-to-right column reduction
of the boundary matrix (columns as int bitmasks, pivot = highest set
bit).  A numba union-find kernel provides a fast path for degree-0
barcodes of large filtrations; it implements the same elder rule and is
cross-checked against the reduction in the test suite.

Elder rule tie-break: when two components with equal birth merge, the
class whose representative vertex comes later in the fixed total order
dies.  The total order sorts simplices by (value, dimension, vertices).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

__all__ = [
    "FilteredComplex",
    "PersistenceDiagram",
    "reduce_and_extract",
    "betti_at",
    "count_alive",
    "h0_diagram_unionfind",
    "save_diagrams",
    "load_diagrams",
]

INF = float("inf")


@dataclass(frozen=True)
class PersistenceDiagram:
    """Multiset of (birth, death) pairs for one homology degree.

    ``pairs`` is a (k, 2) float array in canonical (birth, death) sort;
    death may be +inf.  Equality is multiset equality.
    """

    degree: int
    pairs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pairs, dtype=np.float64).reshape(-1, 2)
        if p.size and np.any(p[:, 0] > p[:, 1]):
            raise ValueError("every pair must satisfy birth <= death")
        p = p[np.lexsort((p[:, 1], p[:, 0]))]
        p.setflags(write=False)
        object.__setattr__(self, "pairs", p)

    def __len__(self) -> int:
        return self.pairs.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PersistenceDiagram):
            return NotImplemented
        return self.degree == other.degree and self.pairs.shape == other.pairs.shape and bool(
            np.array_equal(self.pairs, other.pairs)
        )

    def __hash__(self):
        return hash((self.degree, self.pairs.tobytes()))

    def drop_zero_length(self) -> "PersistenceDiagram":
        p = self.pairs
        return PersistenceDiagram(self.degree, p[p[:, 0] < p[:, 1]])


class FilteredComplex:
    """Simplices in a total order compatible with the filtration.

    Faces precede cofaces and values are nondecreasing along the order.
    """

    def __init__(self, simplices: list[tuple[tuple[int, ...], float]], validate: bool = True):
        order = sorted(
            ((tuple(v), float(x)) for v, x in simplices),
            key=lambda s: (s[1], len(s[0]), s[0]),
        )
        self.simplices: list[tuple[int, ...]] = [s[0] for s in order]
        self.values: np.ndarray = np.array([s[1] for s in order])
        self.index: dict[tuple[int, ...], int] = {s: i for i, s in enumerate(self.simplices)}
        if len(self.index) != len(self.simplices):
            raise ValueError("duplicate simplex in filtration")
        if validate:
            self._validate()

    def _validate(self) -> None:
        for j, verts in enumerate(self.simplices):
            if len(verts) == 1:
                continue
            for f in _facets(verts):
                i = self.index.get(f)
                if i is None:
                    raise ValueError(f"face {f} of {verts} missing from complex")
                if i >= j:
                    raise ValueError(f"face {f} does not precede {verts}")
                if self.values[i] > self.values[j]:
                    raise ValueError(f"filtration value decreases from {f} to {verts}")

    def __len__(self) -> int:
        return len(self.simplices)


def _facets(verts: tuple[int, ...]):
    for k in range(len(verts)):
        yield verts[:k] + verts[k + 1 :]


def reduce_and_extract(
    fc: FilteredComplex, degree: int, drop_zero_length: bool = False
) -> PersistenceDiagram:
    """Barcode in one degree by boundary-matrix column reduction.

    Zero-length pairs are retained unless ``drop_zero_length`` is set
    (slice diagrams feed the bottleneck distance, where diagonal points
    are free anyway).
    """
    if degree not in (0, 1):
        raise ValueError("degree must be 0 or 1")
    n = len(fc)
    cols: list[int] = [0] * n
    pivot_of: dict[int, int] = {}  # low row -> column index holding it
    positive: list[bool] = [False] * n
    for j, verts in enumerate(fc.simplices):
        col = 0
        if len(verts) > 1:
            for f in _facets(verts):
                col ^= 1 << fc.index[f]
        while col:
            low = col.bit_length() - 1
            k = pivot_of.get(low)
            if k is None:
                break
            col ^= cols[k]
        cols[j] = col
        if col == 0:
            positive[j] = True
        else:
            pivot_of[col.bit_length() - 1] = j

    pairs = []
    for i, verts in enumerate(fc.simplices):
        if len(verts) != degree + 1 or not positive[i]:
            continue
        j = pivot_of.get(i)
        death = fc.values[j] if j is not None else INF
        pairs.append((fc.values[i], death))
    diagram = PersistenceDiagram(degree, np.array(pairs).reshape(-1, 2))
    return diagram.drop_zero_length() if drop_zero_length else diagram


def count_alive(diagram: PersistenceDiagram, t: float) -> int:
    """Number of bars with birth <= t < death."""
    p = diagram.pairs
    if not len(p):
        return 0
    return int(np.count_nonzero((p[:, 0] <= t) & (t < p[:, 1])))


def betti_at(fc: FilteredComplex, t: float, degree: int) -> int:
    """Betti number of the sublevel complex with filtration value <= t."""
    return count_alive(reduce_and_extract(fc, degree), t)


@njit(cache=True)
def _uf_find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        parent[x], x = root, parent[x]
    return root


@njit(cache=True)
def _h0_pairs(vertex_values, edges, edge_values):
    """Union-find H0 persistence; edges must be presorted by (value, verts).

    Returns (births, deaths) of the merge pairs and the birth values of
    the immortal components.  Component representative = vertex with the
    smallest (value, id); on a merge the larger representative dies.
    """
    n = vertex_values.shape[0]
    parent = np.arange(n)
    rep = np.arange(n)
    births = np.empty(edges.shape[0])
    deaths = np.empty(edges.shape[0])
    k = 0
    for e in range(edges.shape[0]):
        ru = _uf_find(parent, edges[e, 0])
        rv = _uf_find(parent, edges[e, 1])
        if ru == rv:
            continue
        au, av = rep[ru], rep[rv]
        u_elder = (vertex_values[au] < vertex_values[av]) or (
            vertex_values[au] == vertex_values[av] and au < av
        )
        win, lose = (ru, rv) if u_elder else (rv, ru)
        births[k] = vertex_values[rep[lose]]
        deaths[k] = edge_values[e]
        k += 1
        parent[lose] = win
    roots = np.empty(n, dtype=np.int64)
    r = 0
    for v in range(n):
        if _uf_find(parent, v) == v:
            roots[r] = rep[v]
            r += 1
    return births[:k], deaths[:k], vertex_values[roots[:r]]


def h0_diagram_unionfind(
    vertex_values: np.ndarray,
    edges: np.ndarray,
    edge_values: np.ndarray,
    drop_zero_length: bool = False,
) -> PersistenceDiagram:
    """Degree-0 barcode of a vertex/edge filtration via union-find.

    ``vertex_values[i]`` is the birth of vertex ``i``; ``edges`` is an
    (E, 2) int array of endpoint ids with values ``edge_values`` (each
    >= both endpoint values).  Agrees exactly with
    :func:`reduce_and_extract` at degree 0.
    """
    vertex_values = np.ascontiguousarray(vertex_values, dtype=np.float64)
    edges = np.ascontiguousarray(edges, dtype=np.int64).reshape(-1, 2)
    edge_values = np.ascontiguousarray(edge_values, dtype=np.float64)
    order = np.lexsort((edges[:, 1], edges[:, 0], edge_values))
    births, deaths, immortal = _h0_pairs(vertex_values, edges[order], edge_values[order])
    pairs = np.concatenate(
        [
            np.column_stack([births, deaths]),
            np.column_stack([immortal, np.full(len(immortal), INF)]),
        ]
    )
    diagram = PersistenceDiagram(0, pairs)
    return diagram.drop_zero_length() if drop_zero_length else diagram


def save_diagrams(diagrams, path) -> None:
    """Write diagrams as lines ``degree birth death`` (inf literal allowed)."""
    if isinstance(diagrams, PersistenceDiagram):
        diagrams = [diagrams]
    lines = []
    for dg in sorted(diagrams, key=lambda d: d.degree):
        for b, d in dg.pairs:
            dtxt = "inf" if np.isinf(d) else repr(float(d))
            lines.append(f"{dg.degree} {repr(float(b))} {dtxt}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))


def load_diagrams(path) -> dict[int, PersistenceDiagram]:
    """Read the diagram text format; returns one diagram per degree."""
    per_degree: dict[int, list[tuple[float, float]]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split()
            if len(cells) != 3:
                raise ValueError(f"malformed diagram line {lineno}: {line!r}")
            deg = int(cells[0])
            per_degree.setdefault(deg, []).append((float(cells[1]), float(cells[2])))
    return {
        deg: PersistenceDiagram(deg, np.array(pairs).reshape(-1, 2))
        for deg, pairs in per_degree.items()
    }
