"""Write-only SVG plots of grid invariants (no SVG parsing anywhere)."""

from __future__ import annotations

import math

import numpy as np

from .bipersistence import BettiGrid, HilbertGrid

__all__ = ["hilbert_svg", "save_plot_svg"]

_CELL = 24
_MARGIN = 30


def _gray(value: float, vmax: float) -> str:
    # darker cell = larger value
    level = 255 if vmax <= 0 else int(round(255 * (1.0 - min(value / vmax, 1.0))))
    return f"rgb({level},{level},{level})"


def hilbert_svg(
    hilbert: HilbertGrid,
    betti: BettiGrid | None = None,
    mask: np.ndarray | None = None,
) -> str:
    """SVG document: grayscale Hilbert cells, generator/relation dots, mask.

    Function axis runs left to right, scale axis bottom to top.  Green
    dots mark births (area proportional to the count), red dots mark
    deaths, red outlines mark significant pixels.
    """
    m, n = hilbert.grid.m, hilbert.grid.n
    width = 2 * _MARGIN + m * _CELL
    height = 2 * _MARGIN + n * _CELL
    vmax = float(hilbert.values.max()) if hilbert.values.size else 0.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]

    def cell_origin(i: int, j: int) -> tuple[int, int]:
        return _MARGIN + i * _CELL, _MARGIN + (n - 1 - j) * _CELL

    for i in range(m):
        for j in range(n):
            x, y = cell_origin(i, j)
            fill = _gray(float(hilbert.values[i, j]), vmax)
            parts.append(
                f'<rect x="{x}" y="{y}" width="{_CELL}" height="{_CELL}" fill="{fill}"/>'
            )
    if betti is not None:
        ref = max(float(betti.xi0.max()), float(betti.xi1.max()), 1.0)
        for arr, color, shift in ((betti.xi0, "green", -5), (betti.xi1, "red", 5)):
            for i in range(m):
                for j in range(n):
                    v = float(arr[i, j])
                    if v <= 0:
                        continue
                    x, y = cell_origin(i, j)
                    r = 0.45 * _CELL * math.sqrt(v / ref)
                    parts.append(
                        f'<circle cx="{x + _CELL // 2 + shift}" cy="{y + _CELL // 2}" '
                        f'r="{r:.2f}" fill="{color}" fill-opacity="0.7"/>'
                    )
    if mask is not None:
        for i in range(m):
            for j in range(n):
                if mask[i, j]:
                    x, y = cell_origin(i, j)
                    parts.append(
                        f'<rect x="{x}" y="{y}" width="{_CELL}" height="{_CELL}" '
                        'fill="none" stroke="red" stroke-width="2"/>'
                    )
    parts.append(
        f'<text x="{width // 2}" y="{height - 8}" text-anchor="middle" '
        'font-size="11">function value</text>'
    )
    parts.append(
        f'<text x="12" y="{height // 2}" text-anchor="middle" font-size="11" '
        f'transform="rotate(-90 12 {height // 2})">scale</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts)


def save_plot_svg(path, hilbert: HilbertGrid, betti=None, mask=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(hilbert_svg(hilbert, betti, mask) + "\n")
