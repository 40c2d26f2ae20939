"""Packing and covering numbers of Euclidean balls, packing-regularity
certificates, and constant transfer for strongly equivalent metrics."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .errors import ArgumentError
from .metric_core import HausdorffMeasure, LeafMetric

_TOL = 1e-12


@dataclass(frozen=True)
class PackingResult:
    """``count`` balls of radius ``s`` packed into / covering ``B(0, r)`` in R^n."""

    kind: str  # "packing" or "covering"
    n: int
    r: float
    s: float
    count: int
    centers: np.ndarray = field(repr=False)
    seed_count: int = 0

    @property
    def normalized_density(self) -> float:
        return self.count * self.s ** self.n / self.r ** self.n

    def verify(self, grid_step: float | None = None) -> bool:
        if self.kind == "packing":
            return verify_packing(self.centers, self.r, self.s)
        return verify_covering(self.centers, self.n, self.r, self.s, grid_step)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{k}" for k in range(self.n)])
            for c in self.centers:
                w.writerow([repr(float(v)) for v in c])


def _check_args(n, r, s, strict):
    if n not in (1, 2, 3):
        raise ArgumentError("n must be 1, 2 or 3")
    if not (r > 0 and s > 0):
        raise ArgumentError("radii must be positive")
    if (strict and s >= r) or s > r:
        raise ArgumentError(f"need s {'<' if strict else '<='} r (got s={s}, r={r})")


def verify_packing(centers, r, s) -> bool:
    """Open balls ``B(c, s)`` pairwise disjoint and inside ``B(0, r)``."""
    centers = np.asarray(centers, dtype=np.float64)
    if len(centers) == 0:
        return True
    if np.any(np.linalg.norm(centers, axis=1) + s > r * (1 + _TOL)):
        return False
    tree = cKDTree(centers)
    return len(tree.query_pairs(2 * s * (1 - 1e-9))) == 0


def covering_grid(n, r, step):
    """Grid points of spacing ``step`` inside the open ball ``B(0, r)``."""
    k = int(math.floor(r / step))
    axis = np.arange(-k, k + 1) * step
    mesh = np.meshgrid(*[axis] * n, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    return pts[np.sum(pts ** 2, axis=1) < r * r]


def verify_covering(centers, n, r, s, grid_step=None) -> bool:
    """Every point of a ``s/8`` verification grid of ``B(0, r)`` lies in some ``B(c, s)``."""
    step = s / 8 if grid_step is None else grid_step
    if n == 1:
        # the grid check is exact enough in 1-D; add the interval endpoints' neighbourhood
        pts = np.concatenate([covering_grid(1, r, step)[:, 0], [-r * (1 - 1e-12), r * (1 - 1e-12)]])[:, None]
    else:
        pts = covering_grid(n, r, step)
    return kernels.uncovered_count(np.asarray(centers, dtype=np.float64), pts, s, r) == 0


# ---------------------------------------------------------------------------
# packing
# ---------------------------------------------------------------------------

def _lattice(n, spacing, reach, offset, hexagonal=False):
    if hexagonal and n == 2:
        dy = spacing * math.sqrt(3) / 2
        rows = int(math.ceil(reach / dy)) + 1
        cols = int(math.ceil(reach / spacing)) + 2
        j = np.arange(-rows, rows + 1)
        i = np.arange(-cols, cols + 1)
        I, J = np.meshgrid(i, j, indexing="ij")
        x = (I + 0.5 * (J % 2)) * spacing + offset[0]
        y = J * dy + offset[1]
        return np.stack([x.ravel(), y.ravel()], axis=1)
    k = int(math.ceil(reach / spacing)) + 1
    axis = np.arange(-k, k + 1) * spacing
    mesh = np.meshgrid(*[axis] * n, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1) + np.asarray(offset)


def _ring_seed(r, s):
    """Concentric rings of tangent circles, outermost first (2-D)."""
    pts = []
    rad = r - s
    while rad >= 0:
        if rad < s:
            pts.append([0.0, 0.0])
            break
        k = int(math.floor(math.pi / math.asin(min(1.0, s / rad)) + 1e-12))
        th = 2 * math.pi * np.arange(k) / k
        pts.extend(np.stack([rad * np.cos(th), rad * np.sin(th)], axis=1))
        rad -= math.sqrt(3) * s if k >= 6 else 2 * s
    return np.asarray(pts)


def _greedy_from_seed(n, r, s, seed):
    inside = np.linalg.norm(seed, axis=1) <= (r - s) * (1 + _TOL) if len(seed) else np.zeros(0, bool)
    base = seed[inside]
    # thin the seed in case a ring/lattice puts two centers too close
    keep = kernels.greedy_extend(np.zeros((0, n)), base, s, r)
    base = base[keep]
    # gaps in a saturated lattice can only open up near the boundary sphere
    step = s / 2
    band = _lattice(n, step, r, np.zeros(n))
    norms = np.linalg.norm(band, axis=1)
    band = band[(norms <= (r - s) * (1 + _TOL)) & (norms >= r - 6 * s)]
    order = np.argsort(-np.linalg.norm(band, axis=1), kind="stable")
    band = band[order]
    extra = kernels.greedy_extend(base, band, s, r)
    return np.concatenate([base, band[extra]]), len(base)


def greedy_pack(n: int, r: float, s: float) -> PackingResult:
    """Disjoint open balls of radius ``s`` inside ``B(0, r)`` in R^n.

    1-D uses the exact construction (``floor(r/s)`` tangent intervals). In 2-D
    and 3-D several lattice seeds (cubic, shifted cubic, hexagonal, rings) are
    each greedily extended along the boundary band; the largest is returned.
    """
    _check_args(n, r, s, strict=True)
    if n == 1:
        k = int(math.floor(r / s * (1 + 1e-12)))
        centers = (-r + s + 2 * s * np.arange(k))[:, None]
        return PackingResult("packing", 1, float(r), float(s), k, centers, k)

    seeds = []
    for off in itertools.product((0.0, s), repeat=n):
        seeds.append(_lattice(n, 2 * s, r, off))
    if n == 2:
        seeds.append(_lattice(2, 2 * s, r, (0.0, 0.0), hexagonal=True))
        seeds.append(_lattice(2, 2 * s, r, (s, 0.0), hexagonal=True))
        seeds.append(_ring_seed(r, s))
    best, best_seed = None, 0
    for seed in seeds:
        centers, seed_count = _greedy_from_seed(n, r, s, seed)
        if best is None or len(centers) > len(best):
            best, best_seed = centers, seed_count
    return PackingResult("packing", n, float(r), float(s), len(best), best, best_seed)


# ---------------------------------------------------------------------------
# covering
# ---------------------------------------------------------------------------

def greedy_cover(n: int, r: float, s: float) -> PackingResult:
    """Open balls of radius ``s`` covering ``B(0, r)`` in R^n.

    The cube ``[-r, r]^n`` is cut into ``k^n`` cells with
    ``k = floor(r sqrt(n) / s) + 1``, so every closed cell sits inside the open
    ball of radius ``s`` around its center; cells missing ``B(0, r)`` are
    dropped. In 1-D this is optimal: ``1`` if ``s >= r`` else ``floor(r/s) + 1``.
    """
    _check_args(n, r, s, strict=False)
    if s >= r:
        return PackingResult("covering", n, float(r), float(s), 1, np.zeros((1, n)), 1)
    k = int(math.floor(r * math.sqrt(n) / s * (1 + 1e-12))) + 1
    h = 2 * r / k
    axis = -r + h * (np.arange(k) + 0.5)
    mesh = np.meshgrid(*[axis] * n, indexing="ij")
    centers = np.stack([m.ravel() for m in mesh], axis=1)
    # distance from the origin to the nearest point of each cell
    gap = np.maximum(np.abs(centers) - h / 2, 0.0)
    centers = centers[np.sum(gap ** 2, axis=1) < r * r]
    return PackingResult("covering", n, float(r), float(s), len(centers), centers, len(centers))


def packing_count_oracle(r: float, s: float) -> int:
    """Exact 1-D packing number of open intervals of half-length s in (-r, r)."""
    return int(math.floor(r / s * (1 + 1e-12)))


def covering_count_oracle(r: float, s: float) -> int:
    """Exact 1-D covering number of (-r, r) by open intervals of half-length s."""
    return 1 if s >= r else int(math.floor(r / s * (1 + 1e-12))) + 1


# ---------------------------------------------------------------------------
# regularity certificate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RungEvidence:
    r: float
    s: float
    packing_count: int
    covering_count: int
    ball_mass: float
    packed_mass: float
    covering_ratio: float
    residual_fraction: float


@dataclass(frozen=True)
class RegularityCertificate:
    r0: float
    C_hat: float
    p_hat: float
    verdict: str
    evidence: tuple = field(repr=False)
    r_dependence: bool = False
    diagnostics: tuple = ()

    def to_record(self) -> dict:
        return {
            "r0": self.r0,
            "C_hat": self.C_hat,
            "p_hat": self.p_hat,
            "verdict": self.verdict,
            "r_dependence": self.r_dependence,
            "diagnostics": list(self.diagnostics),
            "evidence": [e.__dict__ for e in self.evidence],
        }


def default_r_ladder(r0):
    return tuple(r0 * 2.0 ** -i for i in range(3))


def default_s_ladder(r):
    return tuple(r * 2.0 ** -j for j in range(3, 9))


def certify_regularity(metric: LeafMetric, measure=None, r0: float = 1.0, r_ladder=None,
                       s_ladders=None, tail: int = 3) -> RegularityCertificate:
    """Empirical check of packing regularity at the leaf center.

    For every ``r`` and ``s`` the Euclidean packing and covering of the
    metric ball are computed and compared with ``measure`` (default: the
    Hausdorff measure of ``metric``). The liminf/limsup over ``s`` are read off
    the last ``tail`` rungs: ``C_hat`` takes the best covering ratio there and
    ``p_hat`` the worst residual fraction, each maximized over ``r``.
    """
    if metric.rule != "intrinsic":
        return RegularityCertificate(r0, math.inf, 1.0, "inconclusive", (), False,
                                     (f"unsupported metric rule {metric.rule!r}",))
    measure = HausdorffMeasure(metric) if measure is None else measure
    n, c = metric.leaf.dimension, metric.scale
    x = metric.leaf.center
    r_ladder = tuple(default_r_ladder(r0) if r_ladder is None else r_ladder)
    if not r_ladder or any(r <= 0 for r in r_ladder) or any(a <= b for a, b in zip(r_ladder, r_ladder[1:])):
        raise ArgumentError("r_ladder must be positive and strictly decreasing")
    if s_ladders is None:
        s_ladders = [default_s_ladder(r) for r in r_ladder]
    s_ladders = [tuple(sl) for sl in s_ladders]
    if len(s_ladders) != len(r_ladder):
        raise ArgumentError("need one s ladder per r")

    evidence, diagnostics = [], []
    C_per_r, p_per_r = [], []
    for r, s_list in zip(r_ladder, s_ladders):
        if any(s >= r or s <= 0 for s in s_list) or any(a <= b for a, b in zip(s_list, s_list[1:])):
            raise ArgumentError("s ladders must be positive, decreasing and below r")
        if s_list[0] / s_list[-1] < 4 * (1 - 1e-12):
            diagnostics.append(f"s ladder at r={r:g} spans < 3 octaves")
        rung_C, rung_p = [], []
        for s in s_list:
            try:
                lam_ball = float(measure(x, r))
                pack = greedy_pack(n, r / c, s / c)
                cover = greedy_cover(n, r / c, s / c)
                # leaf coordinates are Euclidean; the metric ball B(x, r) has coordinate radius r/c
                pts = x + (pack.centers if metric.leaf.kind == "box" else pack.centers[:, 0])
                packed = float(np.sum(measure(pts, s))) if pack.count else 0.0
            except Exception as exc:  # measure oracle failure
                return RegularityCertificate(r0, math.inf, 1.0, "inconclusive", tuple(evidence), False,
                                             tuple(diagnostics + [f"measure oracle failed: {exc}"]))
            if not (lam_ball > 0 and math.isfinite(lam_ball)):
                return RegularityCertificate(r0, math.inf, 1.0, "refuted", tuple(evidence), False,
                                             tuple(diagnostics + [f"lambda(B(x,{r:g})) = {lam_ball}"]))
            ratio = cover.count * s ** n / lam_ball
            resid = max(0.0, 1.0 - packed / lam_ball)
            evidence.append(RungEvidence(r, s, pack.count, cover.count, lam_ball, packed, ratio, resid))
            rung_C.append(ratio)
            rung_p.append(resid)
        C_per_r.append(min(rung_C[-tail:]))
        p_per_r.append(max(rung_p[-tail:]))

    C_hat = max(C_per_r)
    p_hat = max(p_per_r)
    r_dep = (max(C_per_r) > 1.1 * min(C_per_r)) or (max(p_per_r) - min(p_per_r) > 0.1)
    if r_dep:
        diagnostics.append("covering/residual constants vary with r")
    verdict = "certified" if (p_hat < 1 and math.isfinite(C_hat)) else "refuted"
    return RegularityCertificate(r0, C_hat, p_hat, verdict, tuple(evidence), r_dep, tuple(diagnostics))


# ---------------------------------------------------------------------------
# constant transfer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransferConstants:
    A: float
    B: float
    m: int
    Q: float
    l: int
    R: float
    alpha: float
    beta: float

    def to_record(self) -> dict:
        return dict(self.__dict__)


def transfer_constants(A: float, B: float, m: int, Q: float) -> TransferConstants:
    """Constants for a metric ``rho`` with ``A d <= rho <= B d``, where the
    Hausdorff measure of ``d`` has doubling constant ``Q``:

    ``l = ceil(log2(B/A))``, doubling constant of ``lambda_rho``
    ``R = Q**(l+1) B**m / A**m``, and density bounds ``alpha = A**m R**-l``,
    ``beta = B**m Q**l`` for ``d lambda_rho / d lambda``.
    """
    if not (A > 0):
        raise ArgumentError("A must be positive")
    if not (B >= A):
        raise ArgumentError("need A <= B")
    if not (Q >= 1):
        raise ArgumentError("Q must be >= 1")
    if int(m) != m or m < 1:
        raise ArgumentError("m must be a positive integer")
    m = int(m)
    ratio = B / A
    l = 0
    while 2.0 ** l < ratio * (1 - 1e-15):
        l += 1
    R = Q ** (l + 1) * B ** m / A ** m
    alpha = A ** m * R ** (-l)
    beta = B ** m * Q ** l
    return TransferConstants(float(A), float(B), m, float(Q), l, float(R), float(alpha), float(beta))


def density_ratios(rho_metric: LeafMetric, d_metric: LeafMetric, centers, r) -> np.ndarray:
    """``lambda_rho(B_d(x, r)) / lambda_d(B_d(x, r))`` for each center (1-D leaves)."""
    lam_rho = HausdorffMeasure(rho_metric)
    lam_d = HausdorffMeasure(d_metric)
    out = []
    for x in np.atleast_1d(centers):
        lo, hi = d_metric.ball_arc(x, r)
        out.append(lam_rho.set_measure(lo, hi) / lam_d.set_measure(lo, hi))
    return np.asarray(out)
