"""System -> orbit -> disintegration -> ladders/atoms -> verdict."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from . import classifier as clf
from .disintegration import Disintegration, OverlapReport, disintegrate, normalize_unit_ball, overlap_consistency
from .errors import ArgumentError
from .lamination import Chart, PlaqueId
from .metric_core import LeafMetric
from .systems import SystemSpec, orbit

METRIC_RULES = ("intrinsic", "sup", "pullback")


def plaque_metric_factory(spec: SystemSpec, chart: Chart, rule: str = "intrinsic", scale: float = 1.0,
                          N: int = 64) -> Callable[[PlaqueId], LeafMetric]:
    """Fiber metric per plaque; plaque-dependent metrics are frozen at the cell midpoint."""
    fiber = spec.fiber
    if rule == "intrinsic":
        m = LeafMetric.scaled(fiber, scale)
        return lambda pid: m
    if rule == "sup":
        if not spec.has_fiber:
            raise ArgumentError("sup metric needs a fiber system")
        return lambda pid: LeafMetric.truncated_sup(spec, chart.cell_midpoint(pid.cell), N).rescaled(scale)
    if rule == "pullback":
        if spec.kind == "NeutralCenterToy":
            def make(pid):
                xm = chart.cell_midpoint(pid.cell)
                return LeafMetric.pullback(fiber, lambda v: spec.conjugacy_inverse(xm, v),
                                           lambda u: spec.conjugacy(xm, u)).rescaled(scale)
            return make
        m = spec.invariant_metric().rescaled(scale)
        return lambda pid: m
    raise ArgumentError(f"unknown metric rule {rule!r}")


@dataclass(eq=False)
class RunResult:
    spec: SystemSpec
    disintegration: Disintegration
    ladders: List[clf.DistortionLadder]
    atom_scans: Dict[PlaqueId, List[clf.Atom]]
    verdict: clf.DichotomyVerdict
    overlap: Optional[OverlapReport] = None
    metric_description: str = ""


def run_dichotomy(spec: SystemSpec, T: int, seed: int, cells: int = 64, overlap_cells: Optional[int] = None,
                  metric: str = "intrinsic", scale: float = 1.0, N: int = 64, eps=None, x0=None,
                  burn_in: int = 0, thresholds: clf.Thresholds = clf.Thresholds(), chart_offset: float = 0.0
                  ) -> RunResult:
    """Full dichotomy experiment on one orbit.

    Rotations have a trivial base and are treated as a single plaque.
    """
    if not spec.has_fiber:
        cells, overlap_cells = 1, None
    stream = orbit(spec, x0, T, seed, burn_in)
    chart = Chart.uniform(cells, spec.fiber, chart_offset, chart_id=0)
    metric_for = plaque_metric_factory(spec, chart, metric, scale, N)
    raw = disintegrate(stream, chart, min_samples=thresholds.min_bin)
    conds = {pid: normalize_unit_ball(c, metric_for(pid)) for pid, c in raw.items()}
    dis = Disintegration(chart, conds, raw.binned, raw.skipped, raw.diagnostics)

    ladders, scans = [], {}
    for pid in sorted(dis.qualifying()):
        c = dis[pid]
        ladders.append(clf.distortion_ladder(c, c.metric, eps, min_ball_samples=thresholds.min_ball_samples,
                                             n_anchors=thresholds.anchors_per_plaque))
        scans[pid] = clf.atom_detect(c, thresholds.eps_min, thresholds.theta, thresholds.max_atoms)
    verdict = clf.classify(ladders, scans, thresholds)

    overlap = None
    if overlap_cells:
        chart2 = Chart.uniform(overlap_cells, spec.fiber, chart_offset, chart_id=1)
        coarse = Chart.uniform(cells, spec.fiber, chart_offset, chart_id=0)
        overlap = overlap_consistency(disintegrate(stream, coarse, min_samples=thresholds.min_bin),
                                      disintegrate(stream, chart2, min_samples=thresholds.min_bin))
    return RunResult(spec, dis, ladders, scans, verdict, overlap,
                     metric_for(PlaqueId(0, 0)).describe())
