"""Empirical conditional measures along the plaques of a chart.

Orbit samples are binned by base cell; each bin's fiber coordinates (quantized
at 1e-12) become a weighted point set. Masses are reported relative to the
bin's probability normalization times a factor chosen so that the unit ball
around the anchor has mass one.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional

import numpy as np

from .errors import ArgumentError, DomainError
from .lamination import Chart, PlaqueId
from .metric_core import LeafMetric, LeafModel

log = logging.getLogger(__name__)

QUANTUM = 1e-12
MIN_BIN_SAMPLES = 1000
HIST_CELLS = 1 << 12


def _quantize(v):
    return np.round(np.asarray(v, dtype=np.float64) / QUANTUM) * QUANTUM


@dataclass(frozen=True, eq=False)
class EmpiricalConditional:
    """Weighted fiber points of one plaque.

    ``weights`` are raw counts summing to ``raw_mass``; normalized masses are
    ``factor * weight / raw_mass``.
    """

    plaque: PlaqueId
    points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    leaf: LeafModel
    anchor: float = 0.0
    factor: float = 1.0
    metric: Optional[LeafMetric] = None
    min_samples: int = MIN_BIN_SAMPLES
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64)
        w = np.asarray(self.weights, dtype=np.float64)
        if p.shape != w.shape or p.ndim != 1:
            raise ArgumentError("points and weights must be 1-D arrays of equal length")
        if p.size and np.any(np.diff(p) <= 0):
            order = np.argsort(p, kind="stable")
            p, w = p[order], w[order]
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "_cum", np.concatenate([[0.0], np.cumsum(w)]))
        if self.metric is None:
            object.__setattr__(self, "metric", LeafMetric.intrinsic(self.leaf))

    @classmethod
    def from_samples(cls, plaque, fiber_values, leaf: LeafModel, weights=None, metric=None,
                     min_samples: int = MIN_BIN_SAMPLES) -> "EmpiricalConditional":
        v = _quantize(leaf.reduce(fiber_values))
        if weights is None:
            pts, counts = np.unique(v, return_counts=True)
            w = counts.astype(np.float64)
        else:
            pts, inv = np.unique(v, return_inverse=True)
            w = np.bincount(inv, weights=np.asarray(weights, dtype=np.float64), minlength=pts.size)
        cond = cls(plaque, pts, w, leaf, metric=metric, min_samples=min_samples)
        if cond.raw_mass <= 0:
            return cond
        cond = replace(cond, anchor=cond.weighted_median())
        return normalize_unit_ball(cond, cond.metric)

    @property
    def raw_mass(self) -> float:
        return float(self._cum[-1])

    @property
    def qualified(self) -> bool:
        return self.raw_mass >= self.min_samples

    def weighted_median(self) -> float:
        i = int(np.searchsorted(self._cum[1:], 0.5 * self.raw_mass, side="left"))
        return float(self.points[min(i, self.points.size - 1)])

    def total(self) -> float:
        """Normalized mass of the whole plaque."""
        return self.factor

    def probabilities(self) -> np.ndarray:
        return self.weights / self.raw_mass

    def _raw_interval(self, lo, hi, closed):
        left = "left" if closed else "right"
        right = "right" if closed else "left"
        return (self._cum[np.searchsorted(self.points, hi, side=right)]
                - self._cum[np.searchsorted(self.points, lo, side=left)])

    def raw_ball_mass(self, center, r, metric: Optional[LeafMetric] = None, closed: bool = False):
        """Raw count in ``B(center, r)``; vectorized over ``center``/``r``."""
        m = metric or self.metric
        lo, hi = m.ball_arc(center, r)
        lo, hi = np.asarray(lo, dtype=np.float64), np.asarray(hi, dtype=np.float64)
        if not self.leaf.periodic:
            out = self._raw_interval(lo, hi, closed)
        else:
            L = self.leaf.size
            out = np.zeros(np.broadcast(lo, hi).shape)
            for shift in (-L, 0.0, L):
                # arcs are shorter than L, so each point is hit by at most one shift
                out = out + self._raw_interval(lo + shift, hi + shift, closed)
            out = np.where(hi - lo >= L, self.raw_mass, out)
        out = np.minimum(out, self.raw_mass)
        return float(out) if np.ndim(out) == 0 else out

    def ball_mass(self, center, r, metric: Optional[LeafMetric] = None, closed: bool = False):
        """Normalized mass of ``B(center, r)``."""
        out = self.factor * np.asarray(self.raw_ball_mass(center, r, metric, closed)) / self.raw_mass
        return float(out) if out.ndim == 0 else out

    def histogram(self, cells: int = HIST_CELLS, lo: float = 0.0, hi: Optional[float] = None) -> np.ndarray:
        """Normalized masses on ``cells`` equal cells of ``[lo, hi)``."""
        hi = self.leaf.size if hi is None else hi
        h, _ = np.histogram(self.points, bins=cells, range=(lo, hi), weights=self.weights)
        return self.factor * h / self.raw_mass

    def to_record(self) -> dict:
        return {"plaque": f"{self.plaque.chart}:{self.plaque.cell}", "raw_mass": int(self.raw_mass),
                "anchor": self.anchor, "factor": self.factor, "support_points": int(self.points.size),
                "qualified": bool(self.qualified)}


def normalize_unit_ball(cond: EmpiricalConditional, metric: Optional[LeafMetric] = None) -> EmpiricalConditional:
    """Rescale so that ``B(anchor, 1)`` carries mass one."""
    m = metric or cond.metric
    raw = cond.raw_ball_mass(cond.anchor, 1.0, m)
    if not raw > 0:
        raise ArgumentError("unit ball around the anchor carries no mass")
    return replace(cond, factor=cond.raw_mass / raw, metric=m)


def proportionality(cond: EmpiricalConditional, y: float, metric: Optional[LeafMetric] = None) -> float:
    """``beta = 1 / mu_x(B(y, 1))`` under the anchor normalization."""
    mass = cond.ball_mass(y, 1.0, metric or cond.metric)
    if not mass > 0:
        raise ArgumentError("unit ball around y carries no mass")
    return 1.0 / float(mass)


def ks_uniform(cond: EmpiricalConditional) -> float:
    """Kolmogorov-Smirnov distance between the plaque law and the uniform law on the fiber."""
    u = cond.points / cond.leaf.size
    F = cond._cum / cond.raw_mass
    return float(max(np.max(np.abs(F[1:] - u)), np.max(np.abs(F[:-1] - u))))


def merge(conds: Iterable[EmpiricalConditional], plaque: PlaqueId, metric: Optional[LeafMetric] = None,
          min_samples: Optional[int] = None) -> EmpiricalConditional:
    """Mass-weighted merge of sibling conditionals into one plaque."""
    conds = list(conds)
    if not conds:
        raise ArgumentError("nothing to merge")
    leaf = conds[0].leaf
    pts = np.concatenate([c.points for c in conds])
    w = np.concatenate([c.weights for c in conds])
    u, inv = np.unique(pts, return_inverse=True)
    merged = EmpiricalConditional(plaque, u, np.bincount(inv, weights=w, minlength=u.size), leaf,
                                  metric=metric or conds[0].metric,
                                  min_samples=conds[0].min_samples if min_samples is None else min_samples)
    if merged.raw_mass <= 0:
        return merged
    merged = replace(merged, anchor=merged.weighted_median())
    return normalize_unit_ball(merged)


# ---------------------------------------------------------------------------
# disintegration of an orbit
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class Disintegration:
    """Map ``PlaqueId -> EmpiricalConditional`` plus binning diagnostics."""

    chart: Chart
    conditionals: Dict[PlaqueId, EmpiricalConditional]
    binned: int
    skipped: int
    diagnostics: List[str] = field(default_factory=list)

    def __getitem__(self, key):
        return self.conditionals[key]

    def __iter__(self):
        return iter(self.conditionals)

    def __len__(self):
        return len(self.conditionals)

    def items(self):
        return self.conditionals.items()

    def values(self):
        return self.conditionals.values()

    @property
    def flagged(self) -> List[PlaqueId]:
        return [k for k, c in self.conditionals.items() if not c.qualified]

    def qualifying(self) -> Dict[PlaqueId, EmpiricalConditional]:
        return {k: c for k, c in self.conditionals.items() if c.qualified}

    def to_csv(self, path, cells: int = HIST_CELLS, exact_limit: int = HIST_CELLS) -> None:
        """Rows ``(plaque_id, fiber_coord, weight)`` with normalized weights.

        Plaques with at most ``exact_limit`` support points are listed exactly;
        others as ``cells``-cell histograms (cell midpoints).
        """
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["plaque_id", "fiber_coord", "weight"])
            for pid in sorted(self.conditionals):
                c = self.conditionals[pid]
                tag = f"{pid.chart}:{pid.cell}"
                if c.points.size <= exact_limit:
                    coords, mass = c.points, c.factor * c.weights / c.raw_mass
                else:
                    mass = c.histogram(cells)
                    coords = (np.arange(cells) + 0.5) * c.leaf.size / cells
                for x, m in zip(coords, mass):
                    if m > 0:
                        w.writerow([tag, repr(float(x)), repr(float(m))])

    def summary(self) -> list:
        return [self.conditionals[k].to_record() for k in sorted(self.conditionals)]

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump({"binned": self.binned, "skipped": self.skipped, "plaques": self.summary(),
                       "diagnostics": self.diagnostics}, fh, indent=2, sort_keys=True)


def disintegrate(orbit, chart: Chart, metric: Optional[LeafMetric] = None,
                 min_samples: int = MIN_BIN_SAMPLES) -> Disintegration:
    """Bin an orbit (``.base``/``.fiber`` arrays) by the plaques of ``chart``.

    States outside the chart domain are skipped and counted.
    """
    base = np.asarray(orbit.base, dtype=np.float64)
    fib = np.asarray(orbit.fiber, dtype=np.float64)
    leaf = chart.fiber
    ok = np.isfinite(base) & (base >= 0) & (base < 1) & np.isfinite(fib)
    if not leaf.periodic:
        ok &= (fib >= 0) & (fib <= leaf.size)
    skipped = int((~ok).sum())
    base, fib = base[ok], fib[ok]
    diags = []
    if skipped:
        diags.append(f"skipped {skipped} states outside the chart domain")
    if base.size == 0:
        diags.append("orbit does not meet the chart")
        log.warning("orbit does not meet chart %d", chart.id)
        return Disintegration(chart, {}, 0, skipped, diags)
    idx = chart.cell_index(base)
    order = np.argsort(idx, kind="stable")
    counts = np.bincount(idx, minlength=chart.K)
    bounds = np.concatenate([[0], np.cumsum(counts)])
    sorted_fib = fib[order]
    conds = {}
    for i in range(chart.K):
        if counts[i] == 0:
            continue
        pid = PlaqueId(chart.id, i)
        conds[pid] = EmpiricalConditional.from_samples(pid, sorted_fib[bounds[i]:bounds[i + 1]], leaf,
                                                       metric=metric, min_samples=min_samples)
    low = [k for k, c in conds.items() if not c.qualified]
    if low:
        diags.append(f"{len(low)} plaques below {min_samples} samples")
    return Disintegration(chart, conds, int(base.size), skipped, diags)


# ---------------------------------------------------------------------------
# chart overlaps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OverlapReport:
    max_deviation: float
    deviations: Dict[tuple, float]
    flagged: List[tuple]
    max_flagged_deviation: float

    def to_record(self) -> dict:
        return {"max_deviation": self.max_deviation, "flagged": [list(p) for p in self.flagged],
                "max_flagged_deviation": self.max_flagged_deviation, "pairs": len(self.deviations)}


def tv_distance(c1: EmpiricalConditional, c2: EmpiricalConditional, cells: int = 64) -> float:
    """Total variation between two plaque laws (each rescaled to mass one) on a common binning."""
    h1 = c1.histogram(cells) / c1.factor
    h2 = c2.histogram(cells) / c2.factor
    return 0.5 * float(np.abs(h1 - h2).sum())


def overlap_consistency(map1: Disintegration, map2: Disintegration, overlaps=None, cells: int = 64,
                        min_samples: Optional[int] = None) -> OverlapReport:
    """Max total-variation deviation between overlapping plaques' fiber laws.

    Pairs where either plaque has fewer than ``min_samples`` samples are
    flagged and excluded from ``max_deviation``.
    """
    from .lamination import overlap_pairs

    if overlaps is None:
        overlaps = overlap_pairs(map1.chart, map2.chart)
    devs, flagged = {}, []
    worst, worst_flag = 0.0, 0.0
    for i, j in overlaps:
        c1 = map1.conditionals.get(PlaqueId(map1.chart.id, i))
        c2 = map2.conditionals.get(PlaqueId(map2.chart.id, j))
        if c1 is None or c2 is None:
            flagged.append((i, j))
            worst_flag = 1.0
            continue
        d = tv_distance(c1, c2, cells)
        devs[(i, j)] = d
        m1 = c1.min_samples if min_samples is None else min_samples
        if c1.raw_mass < m1 or c2.raw_mass < m1:
            flagged.append((i, j))
            worst_flag = max(worst_flag, d)
        else:
            worst = max(worst, d)
    return OverlapReport(worst, devs, flagged, worst_flag)
