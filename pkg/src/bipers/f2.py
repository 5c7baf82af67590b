"""Linear algebra over the two-element field on int bitmasks.

Vectors are Python ints: bit ``i`` set means coordinate ``i`` is 1.
Addition is XOR; the leading coordinate of ``v`` is ``v.bit_length()-1``.
"""

from __future__ import annotations

__all__ = ["BitBasis", "rank", "kernel_basis"]


class BitBasis:
    """Incremental row basis with reduction and membership queries."""

    def __init__(self):
        self._rows: dict[int, int] = {}  # leading bit -> vector

    def __len__(self) -> int:
        return len(self._rows)

    def reduce(self, v: int) -> int:
        """Reduce ``v`` against the basis; 0 means v lies in the span."""
        while v:
            lead = v.bit_length() - 1
            row = self._rows.get(lead)
            if row is None:
                return v
            v ^= row
        return 0

    def add(self, v: int) -> bool:
        """Insert ``v`` if independent. Returns True if the basis grew."""
        r = self.reduce(v)
        if r == 0:
            return False
        self._rows[r.bit_length() - 1] = r
        return True


class Solver:
    """Basis that also tracks how each reduction combines input vectors.

    ``express(v)`` returns the combination bitmask over previously added
    vectors that reproduces ``v``, or None if v is outside the span.
    """

    def __init__(self):
        self._rows: dict[int, tuple[int, int]] = {}  # lead -> (vector, combo)
        self._count = 0

    def add(self, v: int) -> bool:
        combo = 1 << self._count
        self._count += 1
        v, combo = self._reduce(v, combo)
        if v == 0:
            return False
        self._rows[v.bit_length() - 1] = (v, combo)
        return True

    def _reduce(self, v: int, combo: int) -> tuple[int, int]:
        while v:
            lead = v.bit_length() - 1
            row = self._rows.get(lead)
            if row is None:
                break
            v ^= row[0]
            combo ^= row[1]
        return v, combo

    def express(self, v: int) -> int | None:
        v, combo = self._reduce(v, 0)
        return None if v else combo


def rank(vectors) -> int:
    """Rank of a collection of bitmask vectors."""
    basis = BitBasis()
    for v in vectors:
        basis.add(v)
    return len(basis)


def kernel_basis(columns: list[int]) -> list[int]:
    """Kernel of the linear map whose j-th column is ``columns[j]``.

    Returns combination bitmasks over column indices: bit j of a kernel
    vector selects column j.
    """
    rows: dict[int, tuple[int, int]] = {}
    kernel = []
    for j, col in enumerate(columns):
        combo = 1 << j
        while col:
            lead = col.bit_length() - 1
            row = rows.get(lead)
            if row is None:
                break
            col ^= row[0]
            combo ^= row[1]
        if col == 0:
            kernel.append(combo)
        else:
            rows[col.bit_length() - 1] = (col, combo)
    return kernel
