"""Foliated charts for product systems: base cells x fiber leaf.

The base domain is ``[0, 1)`` with periodic wrap-around, so a chart may be
rotated by an offset (a cell can straddle ``0``). Cells are half-open.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ArgumentError, DomainError
from .metric_core import LeafModel


class PlaqueId(NamedTuple):
    chart: int
    cell: int


@dataclass(frozen=True, eq=False)
class Chart:
    """Cells ``[e_i, e_{i+1})`` (mod 1) with ``e_K = e_0 + 1``."""

    id: int
    edges: np.ndarray = field(repr=False)
    fiber: LeafModel = LeafModel.circle(1.0)

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.float64)
        if e.ndim != 1 or e.size < 2:
            raise ArgumentError("a chart needs at least one cell")
        if np.any(np.diff(e) <= 0) or not np.isclose(e[-1] - e[0], 1.0, rtol=0, atol=1e-12):
            raise ArgumentError("edges must increase and span exactly one period")
        if not (0.0 <= e[0] < 1.0):
            raise ArgumentError("first edge must lie in [0, 1)")
        object.__setattr__(self, "edges", e)

    @classmethod
    def uniform(cls, K: int, fiber: LeafModel = LeafModel.circle(1.0), offset: float = 0.0,
                chart_id: int = 0) -> "Chart":
        if K < 1:
            raise ArgumentError("K must be >= 1")
        return cls(chart_id, offset % 1.0 + np.arange(K + 1) / K, fiber)

    @property
    def K(self) -> int:
        return self.edges.size - 1

    def cell_arcs(self, i: int):
        """Cell ``i`` as a list of ``[a, b)`` intervals inside ``[0, 1)``."""
        a, b = self.edges[i], self.edges[i + 1]
        if a >= 1.0:
            a, b = a - 1.0, b - 1.0
        if b <= 1.0:
            return [(a, b)]
        return [(a, 1.0), (0.0, b - 1.0)]

    def cell_index(self, base):
        """Vectorized cell lookup for base coordinates in ``[0, 1)``."""
        x = np.asarray(base, dtype=np.float64)
        if np.any(~np.isfinite(x)) or np.any(x < 0) or np.any(x >= 1):
            raise DomainError("base coordinate outside [0, 1)")
        u = x - self.edges[0]
        u = np.where(u < 0, u + 1.0, u)
        rel = self.edges - self.edges[0]
        idx = np.searchsorted(rel, u, side="right") - 1
        return np.clip(idx, 0, self.K - 1)

    def contains(self, base):
        x = np.asarray(base, dtype=np.float64)
        return np.isfinite(x) & (x >= 0) & (x < 1)

    def cell_midpoint(self, i: int) -> float:
        return float((0.5 * (self.edges[i] + self.edges[i + 1])) % 1.0)


def locate(chart: Chart, point):
    """``(PlaqueId, fiber coordinate)`` of a product point ``(base, fiber)``."""
    base, fib = point
    cell = int(chart.cell_index(base))
    return PlaqueId(chart.id, cell), float(chart.fiber.reduce(fib))


def overlap_pairs(chart1: Chart, chart2: Chart):
    """All ``(cell1, cell2)`` whose base cells intersect in positive length."""
    if chart1.fiber != chart2.fiber:
        raise ArgumentError("charts have different fiber models")
    pairs = []
    for i in range(chart1.K):
        arcs1 = chart1.cell_arcs(i)
        for j in range(chart2.K):
            arcs2 = chart2.cell_arcs(j)
            if any(min(b1, b2) - max(a1, a2) > 1e-15 for a1, b1 in arcs1 for a2, b2 in arcs2):
                pairs.append((i, j))
    return pairs
