"""Invariant fiber-metric systems: truncated orbit suprema, pullback families,
invariance defects, and bi-Lipschitz comparison.

A metric system assigns a fiber metric ``d_x`` to every base point ``x``.
Everything here is vectorized over samples ``(x, a, b)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ArgumentError
from .metric_core import LeafMetric, LeafModel, _circle_gap

PROVENANCES = ("Intrinsic", "SupTruncated", "Pullback", "Supplied")
DEFAULT_N = 64


def _fiber_gap(leaf: LeafModel, a, b):
    # reference distance d_c; no domain reduction on intervals so that
    # expanding backward iterates stay representable
    if leaf.periodic:
        return _circle_gap(a, b, leaf.size)
    return np.abs(a - b)


def _require_fiber(spec):
    if not getattr(spec, "has_fiber", False):
        raise ArgumentError(f"{getattr(spec, 'kind', spec)!r} has no fiber structure")


def sup_levels(spec, x, a, b, N: int) -> np.ndarray:
    """``d^{(k)}_x(a, b)`` for ``k = 0..N`` stacked on axis 0.

    ``d^{(k)} = max_{|n| <= k} d_c(A^n a, A^n b)``, iterating along the fiber
    orbit of ``(x, a)`` and ``(x, b)``. Backward steps use
    :meth:`SystemSpec.base_inverse` (the ``x/2`` branch over the doubling map).
    """
    _require_fiber(spec)
    N = int(N)
    if N < 0:
        raise ArgumentError("truncation level N must be >= 0")
    x, a, b = np.broadcast_arrays(*(np.asarray(t, dtype=np.float64) for t in (x, a, b)))
    x, a, b = x.copy(), a.copy(), b.copy()
    leaf = spec.fiber
    out = np.empty((N + 1,) + x.shape)
    cur = _fiber_gap(leaf, a, b)
    out[0] = cur
    xf, af, bf = x, a, b
    xb, ab, bb = x, a, b
    for k in range(1, N + 1):
        af, bf = spec.fiber_map(xf, af), spec.fiber_map(xf, bf)
        xf = spec.base_map(xf)
        xb = spec.base_inverse(xb)
        ab, bb = spec.fiber_inverse(xb, ab), spec.fiber_inverse(xb, bb)
        cur = np.maximum(cur, np.maximum(_fiber_gap(leaf, af, bf), _fiber_gap(leaf, ab, bb)))
        out[k] = cur
    return out


def sup_metric_truncated(spec, x, a, b, N: int = DEFAULT_N):
    """Truncated orbit-supremum metric ``d^{(N)}_x(a, b)``."""
    d = sup_levels(spec, x, a, b, N)[-1]
    return float(d) if d.ndim == 0 else d


# ---------------------------------------------------------------------------
# metric systems
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MetricSystem:
    """A family ``x -> d_x`` of fiber metrics.

    Plaque-constant systems hold one :class:`LeafMetric`; ``SupTruncated``
    systems evaluate :func:`sup_metric_truncated`; ``family`` systems map base
    points to metrics (or directly to distances via ``pair_distance``).
    """

    provenance: str
    fiber: LeafModel
    metric: Optional[LeafMetric] = None
    spec: object = None
    N: int = 0
    family: Optional[Callable] = None
    pair_distance: Optional[Callable] = None
    scale: float = 1.0

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ArgumentError(f"unknown provenance {self.provenance!r}")
        if self.provenance == "SupTruncated":
            _require_fiber(self.spec)
        elif self.metric is None and self.family is None and self.pair_distance is None:
            raise ArgumentError("metric system needs a metric, a family, or a pair distance")

    @classmethod
    def intrinsic(cls, fiber: LeafModel, scale: float = 1.0) -> "MetricSystem":
        return cls("Intrinsic", fiber, metric=LeafMetric.scaled(fiber, scale), scale=float(scale))

    @classmethod
    def sup_truncated(cls, spec, N: int = DEFAULT_N) -> "MetricSystem":
        return cls("SupTruncated", spec.fiber, spec=spec, N=int(N))

    @classmethod
    def pullback(cls, fiber: LeafModel, forward: Callable, inverse: Callable) -> "MetricSystem":
        return cls("Pullback", fiber, metric=LeafMetric.pullback(fiber, forward, inverse))

    @classmethod
    def pullback_family(cls, fiber: LeafModel, forward_at: Callable) -> "MetricSystem":
        """``d_x(a, b) = d_c(forward_at(x, a), forward_at(x, b))``."""
        def pd(x, a, b):
            return _fiber_gap(fiber, np.mod(forward_at(x, a), fiber.size) if fiber.periodic else forward_at(x, a),
                              np.mod(forward_at(x, b), fiber.size) if fiber.periodic else forward_at(x, b))
        return cls("Pullback", fiber, pair_distance=pd)

    @classmethod
    def supplied(cls, metric: LeafMetric = None, family: Callable = None) -> "MetricSystem":
        fiber = metric.leaf if metric is not None else None
        if fiber is None:
            raise ArgumentError("supplied systems need a representative metric")
        return cls("Supplied", fiber, metric=metric, family=family)

    def describe(self) -> str:
        if self.provenance == "SupTruncated":
            return f"SupTruncated({self.N})"
        return self.provenance

    def metric_at(self, x) -> LeafMetric:
        if self.provenance == "SupTruncated":
            return LeafMetric.truncated_sup(self.spec, float(x), self.N)
        if self.family is not None:
            return self.family(float(x))
        if self.metric is not None:
            return self.metric
        pd = self.pair_distance
        return LeafMetric.tabulated(self.fiber, lambda a, b, _x=float(x): pd(_x, a, b))

    def distance(self, x, a, b):
        """Vectorized ``d_x(a, b)`` over broadcast sample arrays."""
        if self.provenance == "SupTruncated":
            return sup_metric_truncated(self.spec, x, a, b, self.N)
        if self.pair_distance is not None:
            return self.pair_distance(np.asarray(x, dtype=np.float64), np.asarray(a, dtype=np.float64),
                                      np.asarray(b, dtype=np.float64))
        if self.family is not None:
            x, a, b = np.broadcast_arrays(np.asarray(x, float), np.asarray(a, float), np.asarray(b, float))
            out = np.array([self.family(xi).distance(ai, bi) for xi, ai, bi in zip(x.ravel(), a.ravel(), b.ravel())])
            return out.reshape(x.shape)
        # plaque-constant metric; fiber points taken modulo the leaf on circles
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        return self.metric.distance(a, b)


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

def sample_triples(spec, count: int, seed: int = 0):
    """Random ``(x, a, b)`` with ``x`` uniform on the base and ``a, b`` on the fiber."""
    rng = np.random.default_rng(seed)
    L = spec.fiber.size
    return rng.random(count), rng.random(count) * L, rng.random(count) * L


@dataclass(frozen=True)
class DefectReport:
    max_defect: float
    worst_index: int
    worst_pair: tuple
    defects: np.ndarray

    def __float__(self):
        return self.max_defect


def _as_triples(samples):
    x, a, b = samples
    return (np.atleast_1d(np.asarray(x, dtype=np.float64)), np.atleast_1d(np.asarray(a, dtype=np.float64)),
            np.atleast_1d(np.asarray(b, dtype=np.float64)))


def invariance_defect(system: MetricSystem, spec, samples) -> DefectReport:
    """``max |d_{f(x)}(A_x a, A_x b) - d_x(a, b)|`` over ``samples = (x, a, b)``."""
    _require_fiber(spec)
    x, a, b = _as_triples(samples)
    before = np.asarray(system.distance(x, a, b))
    fx = spec.base_map(x)
    after = np.asarray(system.distance(fx, spec.fiber_map(x, a), spec.fiber_map(x, b)))
    defects = np.abs(after - before)
    i = int(np.argmax(defects))
    return DefectReport(float(defects[i]), i, (float(x[i]), float(a[i]), float(b[i])), defects)


def truncation_gap(spec, samples, N: int) -> np.ndarray:
    """Per-sample bound ``max(gap(x, a, b), gap(f x, A a, A b))`` with
    ``gap = d^{(N+1)} - d^{(N)}``; it dominates the invariance defect of
    ``SupTruncated(N)``."""
    x, a, b = _as_triples(samples)
    g0 = np.diff(sup_levels(spec, x, a, b, N + 1)[-2:], axis=0)[0]
    g1 = np.diff(sup_levels(spec, spec.base_map(x), spec.fiber_map(x, a), spec.fiber_map(x, b), N + 1)[-2:],
                 axis=0)[0]
    return np.maximum(g0, g1)


def stabilization(spec, samples, N: int = DEFAULT_N) -> float:
    """``max_samples (d^{(N)} - d^{(N // 2)})``: convergence evidence for the truncation."""
    x, a, b = _as_triples(samples)
    lv = sup_levels(spec, x, a, b, N)
    return float(np.max(lv[N] - lv[N // 2]))


@dataclass(frozen=True)
class BiLipschitzReport:
    A_hat: float
    B_hat: float
    sample_size: int
    skipped: int
    max_violation: float = 0.0

    @property
    def passing(self) -> bool:
        return self.max_violation == 0.0

    def to_record(self) -> dict:
        return {"A_hat": self.A_hat, "B_hat": self.B_hat, "sample_size": self.sample_size,
                "skipped": self.skipped, "max_violation": self.max_violation}


def bilipschitz_constants(system: MetricSystem, reference: MetricSystem, samples,
                          bounds: Optional[tuple] = None, atol: float = 1e-15) -> BiLipschitzReport:
    """Empirical ``A_hat <= d_sys / d_ref <= B_hat`` over sample triples.

    Pairs with ``d_ref <= atol`` are skipped. With ``bounds=(lo, hi)`` the
    report's ``max_violation`` is the largest excess of ``d_sys`` outside
    ``[lo d_ref, hi d_ref]``.
    """
    if system.fiber != reference.fiber:
        raise ArgumentError("metric systems live on different fiber models")
    x, a, b = _as_triples(samples)
    ds = np.asarray(system.distance(x, a, b), dtype=np.float64)
    dr = np.asarray(reference.distance(x, a, b), dtype=np.float64)
    keep = dr > atol
    if not np.any(keep):
        raise ArgumentError("all sample pairs are coincident under the reference metric")
    ratio = ds[keep] / dr[keep]
    viol = 0.0
    if bounds is not None:
        lo, hi = bounds
        excess = np.maximum(lo * dr[keep] - ds[keep], ds[keep] - hi * dr[keep])
        viol = float(max(0.0, np.max(excess)))
    return BiLipschitzReport(float(ratio.min()), float(ratio.max()), int(keep.sum()), int((~keep).sum()), viol)


def measured_neutral_bound(spec, samples, N: int = DEFAULT_N) -> float:
    """Measured ``K = max_{|n|<=N} d_c(A^n a, A^n b) / d_c(a, b)`` (at least 1)."""
    x, a, b = _as_triples(samples)
    lv = sup_levels(spec, x, a, b, N)
    keep = lv[0] > 1e-15
    return float(max(1.0, np.max(lv[N][keep] / lv[0][keep])))
