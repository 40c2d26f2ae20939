"""Distortion ladders, atom scans, and the atomic / Hausdorff verdict."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .disintegration import EmpiricalConditional
from .errors import ArgumentError
from .metric_core import HausdorffMeasure, LeafMetric

log = logging.getLogger(__name__)

ATOMIC, HAUSDORFF, INCONCLUSIVE = "Atomic", "Hausdorff", "Inconclusive"


def default_eps_ladder(k_min: int = 2, k_max: int = 12) -> np.ndarray:
    return 2.0 ** -np.arange(k_min, k_max + 1)


@dataclass(frozen=True)
class Thresholds:
    cv_max: float = 0.1
    theta: float = 0.9
    quorum: float = 0.9
    min_bin: int = 1000
    eps_min: float = 1e-3
    max_atoms: int = 32
    min_ball_samples: int = 400
    divergence_factor: float = 10.0
    tail: int = 3
    anchors_per_plaque: int = 8

    def __post_init__(self):
        if not (0 < self.theta <= 1):
            raise ArgumentError("theta must lie in (0, 1]")
        if not (0 < self.quorum <= 1):
            raise ArgumentError("quorum must lie in (0, 1]")
        if self.eps_min <= 0 or self.cv_max <= 0:
            raise ArgumentError("eps_min and cv_max must be positive")
        if self.max_atoms < 1 or self.tail < 1 or self.anchors_per_plaque < 1:
            raise ArgumentError("max_atoms, tail and anchors_per_plaque must be >= 1")

    def to_record(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# distortion ladders
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DistortionLadder:
    """Ratios ``mu_x(B(y, eps_k)) / lambda(B(y, eps_k))`` for anchors ``y``.

    Arrays are ``(anchors, rungs)``; ``eps`` lists the kept rungs only.
    """

    plaque: object
    eps: np.ndarray
    anchors: np.ndarray
    mu: np.ndarray
    lam: np.ndarray
    counts: np.ndarray
    dropped: tuple = ()
    diagnostics: tuple = ()

    @property
    def ratios(self) -> np.ndarray:
        return self.mu / self.lam

    @property
    def rungs(self) -> int:
        return self.eps.size

    def tail(self, k: int = 3) -> np.ndarray:
        return self.ratios[:, -k:] if self.rungs else self.ratios

    @property
    def delta_upper(self) -> float:
        return float(self.tail().max()) if self.rungs else float("nan")

    @property
    def delta_lower(self) -> float:
        return float(self.tail().min()) if self.rungs else float("nan")

    def rows(self, anchor_offset: int = 0):
        """CSV rows ``(anchor_id, eps, mu_ball, lambda_ball, ratio)``."""
        r = self.ratios
        for i in range(self.anchors.size):
            for j, e in enumerate(self.eps):
                yield (anchor_offset + i, float(e), float(self.mu[i, j]), float(self.lam[i, j]), float(r[i, j]))


def quantile_anchors(cond: EmpiricalConditional, n: int) -> np.ndarray:
    """The plaque anchor plus ``n - 1`` weighted quantiles of the support."""
    if n <= 1:
        return np.array([cond.anchor])
    q = (np.arange(n - 1) + 0.5) / (n - 1) * cond.raw_mass
    idx = np.minimum(np.searchsorted(cond._cum[1:], q, side="left"), cond.points.size - 1)
    return np.concatenate([[cond.anchor], cond.points[idx]])


def distortion_ladder(cond: EmpiricalConditional, metric: Optional[LeafMetric] = None, eps=None,
                      anchors=None, min_ball_samples: int = 400, n_anchors: int = 8) -> DistortionLadder:
    """Distortion ratios over a decreasing ``eps`` ladder.

    A rung is dropped when its Hausdorff denominator vanishes or when the
    median raw sample count of its balls falls below ``min_ball_samples``.
    """
    metric = metric or cond.metric
    eps = default_eps_ladder() if eps is None else np.asarray(eps, dtype=np.float64)
    if eps.ndim != 1 or eps.size == 0 or np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise ArgumentError("eps ladder must be positive and strictly decreasing")
    y = quantile_anchors(cond, n_anchors) if anchors is None else np.atleast_1d(np.asarray(anchors, float))
    lam_fn = HausdorffMeasure(metric)
    mu = np.empty((y.size, eps.size))
    lam = np.empty((y.size, eps.size))
    cnt = np.empty((y.size, eps.size))
    for j, e in enumerate(eps):
        cnt[:, j] = cond.raw_ball_mass(y, np.full(y.size, e), metric)
        mu[:, j] = cond.factor * cnt[:, j] / cond.raw_mass
        lam[:, j] = lam_fn(y, np.full(y.size, e))
    keep = np.ones(eps.size, dtype=bool)
    diags, dropped = [], []
    for j, e in enumerate(eps):
        if np.any(lam[:, j] <= 0):
            keep[j] = False
            diags.append(f"rung eps={e:g} dropped: zero Hausdorff measure")
        elif np.median(cnt[:, j]) < min_ball_samples:
            keep[j] = False
            diags.append(f"rung eps={e:g} dropped: median ball count {np.median(cnt[:, j]):g} < {min_ball_samples}")
        if not keep[j]:
            dropped.append(float(e))
    return DistortionLadder(cond.plaque, eps[keep], y, mu[:, keep], lam[:, keep], cnt[:, keep],
                            tuple(dropped), tuple(diags))


@dataclass(frozen=True)
class UniformityResult:
    delta_bar: float
    cv: float
    anchors: int
    max_ratio: float
    insufficient: bool = False

    def passes(self, cv_max: float) -> bool:
        return (not self.insufficient) and np.isfinite(self.delta_bar) and self.delta_bar > 0 and self.cv < cv_max


def uniformity_check(ladders: Sequence[DistortionLadder], tail: int = 3) -> UniformityResult:
    """Pooled ``Delta_bar`` (median deepest-rung ratio) and the coefficient of
    variation of all ratios in the deepest ``tail`` rungs."""
    usable = [L for L in ladders if L.rungs >= tail]
    deepest = [L.ratios[:, -1] for L in usable]
    tails = [L.ratios[:, -tail:].ravel() for L in usable]
    n_anchors = int(sum(L.anchors.size for L in usable))
    max_ratio = float(max((L.ratios.max() for L in usable if L.ratios.size), default=np.nan))
    if not usable:
        return UniformityResult(float("nan"), float("nan"), 0, max_ratio, True)
    d = float(np.median(np.concatenate(deepest)))
    if n_anchors < 2:
        return UniformityResult(d, 0.0, n_anchors, max_ratio, True)
    pool = np.concatenate(tails)
    m = pool.mean()
    cv = float(pool.std() / m) if m > 0 else float("inf")
    return UniformityResult(d, cv, n_anchors, max_ratio, False)


def hausdorff_mismatch(cond: EmpiricalConditional, delta_bar: float, cells: int = 64,
                       metric: Optional[LeafMetric] = None) -> float:
    """Relative total variation between ``mu_x`` and ``delta_bar * lambda_x``
    on ``cells`` equal coordinate cells of the fiber."""
    metric = metric or cond.metric
    edges = np.linspace(0.0, cond.leaf.size, cells + 1)
    mu = cond.histogram(cells)
    lam = HausdorffMeasure(metric).set_measure(edges[:-1], edges[1:])
    return float(0.5 * np.abs(mu - delta_bar * lam).sum() / mu.sum())


# ---------------------------------------------------------------------------
# atoms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    center: float
    mass: float


def _window_masses(cond, w, metric, eps_min):
    # mass of remaining weight inside the open ball around every support point
    cum = np.concatenate([[0.0], np.cumsum(w)])
    p = cond.points
    lo, hi = metric.ball_arc(p, np.full(p.size, eps_min))
    lo, hi = np.asarray(lo), np.asarray(hi)
    shifts = (-cond.leaf.size, 0.0, cond.leaf.size) if cond.leaf.periodic else (0.0,)
    out = np.zeros(p.size)
    for s in shifts:
        out += cum[np.searchsorted(p, hi + s, side="left")] - cum[np.searchsorted(p, lo + s, side="right")]
    return out, lo, hi


def atom_detect(cond: EmpiricalConditional, eps_min: float = 1e-3, theta: float = 0.9,
                max_atoms: int = 32, metric: Optional[LeafMetric] = None) -> List[Atom]:
    """Greedy ``eps_min``-cluster scan.

    Repeatedly takes the open ball ``B(p, eps_min)`` of largest remaining
    mass. Returns the smallest cluster list covering ``theta`` of the plaque
    mass with every cluster above ``theta / k``; otherwise an empty list.
    Masses are fractions of the plaque's total mass.
    """
    if not (0 < theta <= 1) or eps_min <= 0:
        raise ArgumentError("need 0 < theta <= 1 and eps_min > 0")
    if cond.raw_mass <= 0:
        return []
    metric = metric or cond.metric
    w = cond.weights / cond.raw_mass
    found: List[Atom] = []
    for k in range(1, max_atoms + 1):
        masses, lo, hi = _window_masses(cond, w, metric, eps_min)
        i = int(np.argmax(masses))
        if masses[i] < theta / max_atoms:
            break
        found.append(Atom(float(cond.points[i]), float(masses[i])))
        # remove the chosen ball from the remaining weight
        p = cond.points
        inside = np.zeros(p.size, dtype=bool)
        shifts = (-cond.leaf.size, 0.0, cond.leaf.size) if cond.leaf.periodic else (0.0,)
        for s in shifts:
            inside |= (p - s > lo[i]) & (p - s < hi[i])
        w = np.where(inside, 0.0, w)
        total = sum(a.mass for a in found)
        if total >= theta and all(a.mass >= theta / k for a in found):
            return sorted(found, key=lambda a: a.center)
        if total >= theta:
            break
    return []


# ---------------------------------------------------------------------------
# verdict
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DichotomyVerdict:
    verdict: str
    delta_bar: Optional[float]
    cv: float
    atoms: Dict[str, List[Atom]] = field(default_factory=dict)
    plaques_used: int = 0
    diagnostics: Dict[str, object] = field(default_factory=dict)

    @property
    def atom_count(self) -> int:
        return sum(len(v) for v in self.atoms.values())

    def to_record(self) -> dict:
        return {
            "verdict": self.verdict,
            "delta_bar": self.delta_bar,
            "cv": self.cv,
            "atoms": [{"plaque": k, "center": a.center, "mass": a.mass}
                      for k in sorted(self.atoms) for a in self.atoms[k]],
            "plaques_used": self.plaques_used,
            "diagnostics": self.diagnostics,
        }


def _tag(pid) -> str:
    return f"{pid.chart}:{pid.cell}" if hasattr(pid, "chart") else str(pid)


def classify(ladders: Sequence[DistortionLadder], atom_scans: Dict[object, List[Atom]],
             thresholds: Thresholds = Thresholds()) -> DichotomyVerdict:
    """Atomic if atom scans succeed on a quorum of plaques; Hausdorff if the
    distortion ratios are uniform and bounded; otherwise Inconclusive."""
    th = thresholds
    n_plaques = len(atom_scans)
    atomic_plaques = sum(1 for v in atom_scans.values() if v)
    u = uniformity_check(ladders, th.tail)
    cv = float(u.cv) if np.isfinite(u.cv) else None
    diag = {
        "atomic_plaques": atomic_plaques,
        "anchors": u.anchors,
        "insufficient_anchors": u.insufficient,
        "max_ratio": u.max_ratio if np.isfinite(u.max_ratio) else None,
        "delta_upper": max((L.delta_upper for L in ladders if L.rungs), default=None),
        "delta_lower": min((L.delta_lower for L in ladders if L.rungs), default=None),
    }
    if n_plaques and atomic_plaques >= th.quorum * n_plaques:
        atoms = {_tag(k): v for k, v in atom_scans.items() if v}
        return DichotomyVerdict(ATOMIC, None, cv if cv is not None else float("nan"), atoms, n_plaques, diag)
    bounded = np.isfinite(u.max_ratio) and u.max_ratio <= th.divergence_factor * u.delta_bar
    diag["bounded_ratios"] = bool(bounded)
    if u.passes(th.cv_max) and bounded:
        return DichotomyVerdict(HAUSDORFF, u.delta_bar, u.cv, {}, n_plaques, diag)
    return DichotomyVerdict(INCONCLUSIVE, None, cv if cv is not None else float("nan"), {}, n_plaques, diag)
