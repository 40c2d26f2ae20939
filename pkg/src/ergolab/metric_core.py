"""Leaf models, leaf metrics, balls, and Hausdorff measure estimation.

Hausdorff measures use the premeasure ``rho_m(B(x, r)) = r**m`` on open balls.
With this convention the 1-D Hausdorff measure of an arc is *half* its metric
length, and in R^n the Hausdorff measure is Lebesgue volume divided by the
volume of the unit ball, so ``lambda(B(x, r)) = r**n`` for balls away from the
leaf boundary.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Optional

import numpy as np

from .errors import ArgumentError, DomainError

log = logging.getLogger(__name__)

_LEAF_KINDS = ("interval", "circle", "box")
_RULES = ("intrinsic", "pullback", "sup", "tabulated")


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


# ---------------------------------------------------------------------------
# leaf models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LeafModel:
    """A model leaf: ``[0, L]``, a circle ``[0, C)``, or a box ``[0, side]^n``."""

    kind: str
    size: float
    dimension: int = 1

    def __post_init__(self):
        if self.kind not in _LEAF_KINDS:
            raise ArgumentError(f"unknown leaf kind {self.kind!r}")
        if not (self.size > 0 and math.isfinite(self.size)):
            raise ArgumentError("leaf size must be positive and finite")
        if self.dimension not in (1, 2, 3):
            raise ArgumentError("leaf dimension must be 1, 2 or 3")
        if self.kind != "box" and self.dimension != 1:
            raise ArgumentError(f"{self.kind} leaves are one-dimensional")

    @classmethod
    def interval(cls, length: float = 1.0) -> "LeafModel":
        return cls("interval", float(length), 1)

    @classmethod
    def circle(cls, circumference: float = 1.0) -> "LeafModel":
        return cls("circle", float(circumference), 1)

    @classmethod
    def box(cls, dimension: int, side: float = 1.0) -> "LeafModel":
        return cls("box", float(side), int(dimension))

    @property
    def periodic(self) -> bool:
        return self.kind == "circle"

    @property
    def center(self):
        if self.kind == "box":
            return np.full(self.dimension, self.size / 2)
        return self.size / 2

    def reduce(self, p):
        """Validate ``p`` and return it in fundamental-domain coordinates.

        Circle coordinates are reduced modulo the circumference; interval and
        box coordinates outside ``[0, size]`` raise :class:`DomainError`.
        """
        arr = np.asarray(p, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise DomainError("non-finite leaf coordinate")
        if self.kind == "circle":
            return np.mod(arr, self.size)
        if self.kind == "box" and (arr.ndim == 0 or arr.shape[-1] != self.dimension):
            raise DomainError(f"box points need a trailing axis of length {self.dimension}")
        if np.any(arr < 0) or np.any(arr > self.size):
            raise DomainError(f"point outside [0, {self.size}]")
        return arr

    def describe(self) -> str:
        if self.kind == "box":
            return f"EuclideanBox(dimension={self.dimension}, side={self.size:g})"
        name = {"interval": "FlatInterval", "circle": "Circle"}[self.kind]
        return f"{name}({self.size:g})"


def _circle_gap(a, b, C):
    d = np.abs(a - b) % C
    return np.minimum(d, C - d)


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LeafMetric:
    """A computable metric on a model leaf.

    ``rule`` is one of ``intrinsic``, ``pullback``, ``sup`` (truncated orbit
    supremum, see :mod:`ergolab.metric_systems`) or ``tabulated``. Every rule
    carries a multiplicative ``scale``; ``Scaled(c)`` is intrinsic with
    ``scale=c``.
    """

    leaf: LeafModel
    rule: str = "intrinsic"
    scale: float = 1.0
    forward: Optional[Callable] = None
    inverse: Optional[Callable] = None
    system: Any = None
    base_point: float = 0.0
    N: int = 0
    oracle: Optional[Callable] = None
    tolerance: float = 1e-12
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if self.rule not in _RULES:
            raise ArgumentError(f"unknown metric rule {self.rule!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ArgumentError("metric scale must be positive")
        if self.rule == "pullback" and (self.forward is None or self.inverse is None):
            raise ArgumentError("pullback metric needs forward and inverse maps")
        if self.rule == "tabulated" and self.oracle is None:
            raise ArgumentError("tabulated metric needs a distance oracle")
        if self.rule == "sup" and self.N < 0:
            raise ArgumentError("truncation level N must be >= 0")
        if self.rule in ("pullback", "sup") and self.leaf.kind == "box":
            raise ArgumentError(f"{self.rule} metrics are implemented for 1-D leaves only")

    # -- constructors -------------------------------------------------------

    @classmethod
    def intrinsic(cls, leaf: LeafModel) -> "LeafMetric":
        return cls(leaf)

    @classmethod
    def scaled(cls, leaf: LeafModel, c: float) -> "LeafMetric":
        return cls(leaf, scale=float(c))

    @classmethod
    def pullback(cls, leaf: LeafModel, forward: Callable, inverse: Callable) -> "LeafMetric":
        """``d(a, b) = d_leaf(forward(a), forward(b))``.

        ``forward`` must be an increasing homeomorphism of the leaf (a lift
        commuting with ``+C`` on circles) and ``inverse`` its inverse.
        """
        return cls(leaf, rule="pullback", forward=forward, inverse=inverse)

    @classmethod
    def truncated_sup(cls, system, base_point: float, N: int, tolerance: float = 1e-9) -> "LeafMetric":
        return cls(system.fiber, rule="sup", system=system, base_point=float(base_point), N=int(N),
                   tolerance=tolerance)

    @classmethod
    def tabulated(cls, leaf: LeafModel, oracle: Callable, tolerance: float = 1e-12) -> "LeafMetric":
        return cls(leaf, rule="tabulated", oracle=oracle, tolerance=tolerance)

    def rescaled(self, c: float) -> "LeafMetric":
        return replace(self, scale=self.scale * float(c))

    @property
    def dimension(self) -> int:
        return self.leaf.dimension

    @property
    def exact(self) -> bool:
        return self.rule in ("intrinsic", "pullback")

    def describe(self) -> str:
        base = {"intrinsic": "Intrinsic", "pullback": "Pullback", "sup": f"TruncatedSup(N={self.N})",
                "tabulated": "Tabulated"}[self.rule]
        if self.scale != 1.0:
            base = f"Scaled({self.scale:g})*{base}" if self.rule != "intrinsic" else f"Scaled({self.scale:g})"
        return f"{base} on {self.leaf.describe()}"

    # -- evaluation ---------------------------------------------------------

    def _intrinsic(self, a, b):
        if self.leaf.kind == "circle":
            return _circle_gap(a, b, self.leaf.size)
        if self.leaf.kind == "box":
            return np.sqrt(np.sum((a - b) ** 2, axis=-1))
        return np.abs(a - b)

    def distance(self, a, b):
        a = self.leaf.reduce(a)
        b = self.leaf.reduce(b)
        if self.rule == "intrinsic":
            d = self._intrinsic(a, b)
        elif self.rule == "pullback":
            d = self._intrinsic(np.asarray(self.forward(a), dtype=np.float64),
                                np.asarray(self.forward(b), dtype=np.float64))
        elif self.rule == "sup":
            from .metric_systems import sup_metric_truncated

            d = sup_metric_truncated(self.system, self.base_point, a, b, self.N)
        else:
            d = self._tabulated(a, b)
        d = self.scale * np.asarray(d, dtype=np.float64)
        return float(d) if d.ndim == 0 else d

    __call__ = distance

    def _tabulated(self, a, b):
        if a.ndim == 0 and b.ndim == 0:
            return float(self.oracle(float(a), float(b)))
        try:
            out = np.asarray(self.oracle(a, b), dtype=np.float64)
            if out.shape == np.broadcast(a, b).shape:
                return out
        except Exception:
            pass
        return np.vectorize(lambda x, y: float(self.oracle(x, y)))(a, b)

    # -- 1-D ball geometry --------------------------------------------------

    def ball_arc(self, center, r):
        """Coordinate bounds ``(lo, hi)`` of the open ball ``B(center, r)``.

        Works for 1-D leaves. Bounds are unwrapped on circles (``lo`` may be
        negative, ``hi`` may exceed ``C``) and clipped on intervals; a ball
        covering a whole circle is returned as an arc of length ``C``.
        Vectorized over ``center``.
        """
        if self.leaf.kind == "box":
            raise ArgumentError("ball_arc is defined for 1-D leaves")
        c = self.leaf.reduce(center)
        rho = np.maximum(np.asarray(r, dtype=np.float64), 0.0) / self.scale
        L = self.leaf.size
        if self.rule == "intrinsic":
            lo, hi = c - rho, c + rho
        elif self.rule == "pullback":
            u = np.asarray(self.forward(c), dtype=np.float64)
            if self.leaf.periodic:
                rho_c = np.minimum(rho, L / 2)
                lo = np.asarray(self.inverse(u - rho_c), dtype=np.float64)
                hi = np.asarray(self.inverse(u + rho_c), dtype=np.float64)
                lo = np.where(rho >= L / 2, c - L / 2, lo)
                hi = np.where(rho >= L / 2, c + L / 2, hi)
            else:
                u_lo = float(self.forward(0.0))
                u_hi = float(self.forward(L))
                lo = np.asarray(self.inverse(np.maximum(u - rho, u_lo)), dtype=np.float64)
                hi = np.asarray(self.inverse(np.minimum(u + rho, u_hi)), dtype=np.float64)
        else:
            lo, hi = self._arc_by_bisection(c, np.asarray(r, dtype=np.float64))
        if self.leaf.periodic:
            full = (hi - lo) >= L
            lo = np.where(full, c - L / 2, lo)
            hi = np.where(full, c + L / 2, hi)
        else:
            lo = np.clip(lo, 0.0, L)
            hi = np.clip(hi, 0.0, L)
        if np.ndim(lo) == 0:
            return float(lo), float(hi)
        return lo, hi

    def _arc_by_bisection(self, c, r, iters=60):
        # assumes d(c, c +/- t) is nondecreasing in t on the half-span
        c_arr, r_arr = np.broadcast_arrays(np.atleast_1d(c), np.atleast_1d(r))
        L = self.leaf.size
        out_lo = np.empty(c_arr.shape)
        out_hi = np.empty(c_arr.shape)
        for i, (ci, ri) in enumerate(zip(c_arr, r_arr)):
            bounds = []
            for sign in (-1.0, 1.0):
                span = L / 2 if self.leaf.periodic else (ci if sign < 0 else L - ci)
                if ri <= 0:
                    bounds.append(0.0)
                    continue
                far = ci + sign * span
                if self.leaf.periodic:
                    far = far % L
                if self.distance(ci, far) < ri:
                    bounds.append(span)
                    continue
                a, b = 0.0, span
                for _ in range(iters):
                    mid = 0.5 * (a + b)
                    p = ci + sign * mid
                    if self.leaf.periodic:
                        p = p % L
                    if self.distance(ci, p) < ri:
                        a = mid
                    else:
                        b = mid
                bounds.append(a)
            out_lo[i] = ci - bounds[0]
            out_hi[i] = ci + bounds[1]
        if np.ndim(c) == 0 and np.ndim(r) == 0:
            return float(out_lo[0]), float(out_hi[0])
        return out_lo, out_hi

    def arc_length(self, lo, hi, resolution: int = 2048):
        """Metric length of the coordinate arc ``[lo, hi]`` (1-D leaves)."""
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        span = np.maximum(hi - lo, 0.0)
        if self.rule == "intrinsic":
            out = self.scale * span
        elif self.rule == "pullback" and self.leaf.periodic:
            # forward is a lift: it commutes with integer shifts of the circumference
            L = self.leaf.size
            shift = np.floor(lo / L) * L
            f_lo = np.asarray(self.forward(lo - shift), dtype=np.float64)
            f_hi = np.asarray(self.forward(hi - shift), dtype=np.float64)
            out = self.scale * (f_hi - f_lo)
        elif self.rule == "pullback":
            out = self.scale * np.abs(np.asarray(self.forward(hi)) - np.asarray(self.forward(lo)))
        else:
            out = np.vectorize(lambda a, b: self._polygonal_length(a, b, resolution))(lo, hi)
        return float(out) if np.ndim(out) == 0 else out

    def _polygonal_length(self, lo, hi, resolution):
        if hi <= lo:
            return 0.0
        grid = np.linspace(lo, hi, resolution + 1)
        if self.leaf.periodic:
            grid = np.mod(grid, self.leaf.size)
        return float(np.sum(self.distance(grid[:-1], grid[1:])))


def distance(metric: LeafMetric, a, b):
    return metric.distance(a, b)


@dataclass(frozen=True)
class Ball:
    center: Any
    radius: float

    def __post_init__(self):
        if not (self.radius >= 0):
            raise ArgumentError("ball radius must be >= 0")


# ---------------------------------------------------------------------------
# measures on a leaf (ball oracles)
# ---------------------------------------------------------------------------

class HausdorffMeasure:
    """Ball oracle for the m-dimensional Hausdorff measure of ``metric``
    (m = leaf dimension, premeasure ``r**m``)."""

    def __init__(self, metric: LeafMetric):
        self.metric = metric

    def __call__(self, center, radius, closed=False):
        # ball boundaries are null for this measure, so closed == open
        m = self.metric
        if m.leaf.kind != "box":
            lo, hi = m.ball_arc(center, radius)
            return 0.5 * m.arc_length(lo, hi)
        return self._box_ball(center, radius)

    def set_measure(self, lo, hi):
        """Measure of the coordinate arc ``[lo, hi]`` (1-D leaves)."""
        return 0.5 * self.metric.arc_length(lo, hi)

    def total(self):
        m = self.metric
        if m.leaf.kind == "box":
            n = m.leaf.dimension
            return (m.scale * m.leaf.size) ** n / unit_ball_volume(n)
        L = m.leaf.size
        return 0.5 * m.arc_length(0.0, L)

    def _box_ball(self, center, radius):
        m = self.metric
        n, side = m.leaf.dimension, m.leaf.size
        c = np.atleast_2d(m.leaf.reduce(center))
        rho = float(radius) / m.scale
        out = np.zeros(c.shape[0])
        if rho > 0:
            inside = np.all((c - rho >= 0) & (c + rho <= side), axis=1)
            out[inside] = float(radius) ** n
            for i in np.flatnonzero(~inside):
                out[i] = (m.scale ** n) * _clipped_ball_volume(c[i], rho, side, n) / unit_ball_volume(n)
        return out if np.ndim(center) > 1 else float(out[0])


def _clipped_ball_volume(c, rho, side, n, res=256):
    """Lebesgue volume of ``B(c, rho) ∩ [0, side]^n`` by midpoint quadrature."""
    lo = np.maximum(c - rho, 0.0)
    hi = np.minimum(c + rho, side)
    if np.any(hi <= lo):
        return 0.0
    axes = [lo[k] + (np.arange(res) + 0.5) * (hi[k] - lo[k]) / res for k in range(n)]
    cell = np.prod((hi - lo) / res)
    mesh = np.meshgrid(*axes, indexing="ij")
    sq = sum((mesh[k] - c[k]) ** 2 for k in range(n))
    return float(np.count_nonzero(sq < rho * rho) * cell)


class AtomicMeasure:
    """Finite sum of weighted Dirac masses on a leaf."""

    def __init__(self, metric: LeafMetric, points, weights=None):
        self.metric = metric
        pts = np.asarray(points, dtype=np.float64)
        if metric.leaf.kind == "box":
            pts = np.atleast_2d(pts)
        else:
            pts = np.atleast_1d(pts)
        self.points = metric.leaf.reduce(pts)
        k = self.points.shape[0]
        self.weights = np.ones(k) if weights is None else np.asarray(weights, dtype=np.float64)

    def __call__(self, center, radius, closed=False):
        centers = np.asarray(center, dtype=np.float64)
        single = centers.ndim == (1 if self.metric.leaf.kind == "box" else 0)
        centers = np.atleast_2d(centers) if self.metric.leaf.kind == "box" else np.atleast_1d(centers)
        out = np.empty(len(centers))
        for i, c in enumerate(centers):
            d = np.atleast_1d(self.metric.distance(np.broadcast_to(c, self.points.shape), self.points))
            inside = d <= radius if closed else d < radius
            out[i] = float(np.sum(self.weights[inside]))
        return float(out[0]) if single else out


def DiracMeasure(metric: LeafMetric, point, mass: float = 1.0) -> AtomicMeasure:
    pts = np.asarray(point, dtype=np.float64)
    return AtomicMeasure(metric, pts[None, ...] if pts.ndim else [float(pts)], [mass])


# ---------------------------------------------------------------------------
# Hausdorff estimation (Caratheodory method II with structured covers)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HausdorffEstimate:
    value: float
    m: int
    delta_ladder: tuple
    per_delta_values: tuple
    converged: bool
    closed_form: Optional[float] = None
    gap: Optional[float] = None

    def to_record(self) -> dict:
        return {
            "value": self.value,
            "m": self.m,
            "ladder": list(self.delta_ladder),
            "per_delta_values": list(self.per_delta_values),
            "converged": self.converged,
            "closed_form": self.closed_form,
            "gap": self.gap,
        }


def default_delta_ladder(m: int = 1):
    top = {1: 14, 2: 10, 3: 7}[m]
    return tuple(2.0 ** -j for j in range(3, top + 1))


def _check_ladder(ladder, name="ladder"):
    arr = np.asarray(ladder, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ArgumentError(f"{name} must be a non-empty sequence")
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise ArgumentError(f"{name} entries must be positive")
    if np.any(np.diff(arr) >= 0):
        raise ArgumentError(f"{name} must be strictly decreasing")
    return arr


def hausdorff_estimate(metric: LeafMetric, region=None, m: Optional[int] = None,
                       delta_ladder=None, tol: float = 1e-3) -> HausdorffEstimate:
    """Estimate the m-dimensional Hausdorff measure of ``region``.

    ``region`` is a :class:`Ball` or ``None`` for the whole leaf. For each
    ``delta`` a structured cover by balls of diameter ``<= delta`` is built
    (equal-length arcs in 1-D, cubic grid cells in 2-D/3-D); its cost
    ``sum r_i**m`` upper-bounds the premeasure infimum. Costs are then
    propagated up the ladder, since a cover admissible at a finer scale is
    admissible at every coarser one.
    """
    n = metric.leaf.dimension
    if m is None:
        m = n
    if m != n:
        raise ArgumentError(f"m={m} does not match leaf dimension {n}")
    ladder = _check_ladder(delta_ladder if delta_ladder is not None else default_delta_ladder(m),
                           "delta_ladder")
    if region is not None and not isinstance(region, Ball):
        raise ArgumentError("region must be a Ball or None")

    if region is not None and region.radius == 0:
        zeros = tuple(0.0 for _ in ladder)
        return HausdorffEstimate(0.0, m, tuple(ladder), zeros, True, 0.0, None)

    if n == 1:
        lo, hi = (0.0, metric.leaf.size) if region is None else metric.ball_arc(region.center, region.radius)
        costs = [_cover_cost_1d(metric, lo, hi, d) for d in ladder]
        closed = 0.5 * metric.arc_length(lo, hi) if metric.exact else None
    else:
        costs = [_cover_cost_box(metric, region, d) for d in ladder]
        closed = _box_closed_form(metric, region)

    values = np.minimum.accumulate(np.asarray(costs)[::-1])[::-1]
    value = float(values[-1])
    if len(values) >= 2:
        prev = float(values[-2])
        converged = abs(value - prev) <= tol * max(abs(value), 1e-300)
    else:
        converged = False
    gap = None if closed in (None, 0.0) else value / closed - 1.0
    return HausdorffEstimate(value, m, tuple(float(d) for d in ladder), tuple(float(v) for v in values),
                             bool(converged), None if closed is None else float(closed), gap)


def _cover_cost_1d(metric, lo, hi, delta):
    total_len = metric.arc_length(lo, hi)
    if total_len <= 0:
        return 0.0
    k = max(1, int(math.ceil(total_len / delta - 1e-12)))
    for _ in range(40):
        edges = _equal_length_edges(metric, lo, hi, k)
        mids = _equal_length_midpoints(metric, edges)
        r = np.maximum(metric.distance(_wrap(metric, mids), _wrap(metric, edges[:-1])),
                       metric.distance(_wrap(metric, mids), _wrap(metric, edges[1:])))
        r = np.atleast_1d(r)
        if 2 * r.max() <= delta * (1 + 1e-12):
            return float(np.sum(r))
        k = int(math.ceil(k * 1.25)) + 1
    raise ArgumentError("could not build an admissible cover")


def _wrap(metric, p):
    return np.mod(p, metric.leaf.size) if metric.leaf.periodic else np.clip(p, 0.0, metric.leaf.size)


def _equal_length_edges(metric, lo, hi, k):
    if metric.rule == "intrinsic":
        return np.linspace(lo, hi, k + 1)
    grid = np.linspace(lo, hi, max(4096, 8 * k) + 1)
    step = np.atleast_1d(metric.distance(_wrap(metric, grid[:-1]), _wrap(metric, grid[1:])))
    cum = np.concatenate([[0.0], np.cumsum(step)])
    targets = np.linspace(0.0, cum[-1], k + 1)
    edges = np.interp(targets, cum, grid)
    edges[0], edges[-1] = lo, hi
    return edges


def _equal_length_midpoints(metric, edges):
    mids = 0.5 * (edges[:-1] + edges[1:])
    if metric.rule == "intrinsic":
        return mids
    # balance the two half-pieces: a few secant steps on d(mid, a) - d(mid, b)
    a, b = edges[:-1], edges[1:]
    for _ in range(3):
        da = np.atleast_1d(metric.distance(_wrap(metric, mids), _wrap(metric, a)))
        db = np.atleast_1d(metric.distance(_wrap(metric, mids), _wrap(metric, b)))
        tot = da + db
        safe = tot > 0
        frac = np.where(safe, 0.5 * (db - da) / np.where(safe, tot, 1.0), 0.0)
        mids = np.clip(mids + frac * (b - a), a, b)
    return mids


def _cover_cost_box(metric, region, delta):
    n, side, c = metric.leaf.dimension, metric.leaf.size, metric.scale
    h = delta / (math.sqrt(n) * c)
    r = c * h * math.sqrt(n) / 2
    per_axis = int(math.ceil(side / h - 1e-12))
    if region is None:
        return float(per_axis ** n * r ** n)
    count = _cells_meeting_ball(metric.leaf.reduce(region.center), region.radius / c, h, per_axis, n)
    return float(count * r ** n)


def _cells_meeting_ball(center, rho, h, per_axis, n):
    """Number of grid cells ``prod [i_k h, (i_k+1) h)`` (``0 <= i_k < per_axis``)
    meeting the open ball ``B(center, rho)``."""
    def axis_gap(k):
        i = np.arange(per_axis)
        lo, hi = i * h, (i + 1) * h
        return np.maximum(0.0, np.maximum(lo - center[k], center[k] - hi))

    gaps = [axis_gap(k) for k in range(n - 1)]
    mesh = np.meshgrid(*gaps, indexing="ij")
    sq = sum(g ** 2 for g in mesh) if mesh else np.zeros(())
    rem = rho * rho - sq
    ok = rem > 0
    w = np.sqrt(np.where(ok, rem, 0.0))
    cl = center[n - 1]
    lo_idx = np.floor(np.maximum(cl - w, 0.0) / h)
    hi_idx = np.ceil(np.minimum(cl + w, per_axis * h) / h) - 1
    counts = np.where(ok, np.maximum(hi_idx - lo_idx + 1, 0), 0)
    return int(np.sum(counts))


def _box_closed_form(metric, region):
    if metric.rule != "intrinsic":
        return None
    n, side, c = metric.leaf.dimension, metric.leaf.size, metric.scale
    if region is None:
        return (c * side) ** n / unit_ball_volume(n)
    return float(HausdorffMeasure(metric)(region.center, region.radius))


# ---------------------------------------------------------------------------
# doubling and annulus diagnostics
# ---------------------------------------------------------------------------

def doubling_constant(measure, centers, radii) -> float:
    """Empirical doubling constant ``max nu(B(x, 2r)) / nu(B(x, r))`` over the scan.

    A zero-mass denominator makes the result ``inf`` (logged with the offending
    center and radius).
    """
    worst = 0.0
    for x in centers:
        for r in radii:
            num = float(measure(x, 2 * r))
            den = float(measure(x, r))
            if den <= 0:
                log.warning("zero mass in B(%s, %g); doubling ratio is infinite", x, r)
                return math.inf
            worst = max(worst, num / den)
    return worst


def annulus_mass_profile(measure, ball: Ball, widths) -> np.ndarray:
    """Masses of the shells ``{y : r - w < d(x, y) < r + w}`` for each width ``w``."""
    w = _check_ladder(widths, "widths")
    out = np.empty(w.size)
    for i, wi in enumerate(w):
        outer = float(measure(ball.center, ball.radius + wi))
        inner_r = ball.radius - wi
        inner = float(measure(ball.center, inner_r, closed=True)) if inner_r >= 0 else 0.0
        out[i] = outer - inner
    return out
