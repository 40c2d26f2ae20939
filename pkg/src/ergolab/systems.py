"""Built-in Z-actions: circle rotations and skew products over a base map.

States are ``x`` for :class:`Rotation` and ``(x, v)`` (base, fiber) for the
skew products. Doubling-based orbits are generated from a random bit stream
(see :func:`ergolab.kernels.doubling_orbit`), which realizes the exact orbit
of a Lebesgue-random base point instead of the degenerate floating-point one.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional

import numpy as np

from . import kernels
from .errors import ArgumentError
from .metric_core import LeafMetric, LeafModel

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
SQRT2_FRAC = math.sqrt(2.0) - 1.0
KINDS = ("Rotation", "ProductDoublingRotation", "ConjugatedRotationCocycle", "ContractingFiber",
         "NeutralCenterToy")
DRIVES = ("graph", "identity")


def _twist(u, eps):
    """Circle diffeomorphism lift ``u + eps/(2 pi) sin(2 pi u)`` (``|eps| < 1``)."""
    return u + eps / (2 * np.pi) * np.sin(2 * np.pi * u)


def _untwist(v, eps, iters=50):
    v = np.asarray(v, dtype=np.float64)
    u = v.copy()
    for _ in range(iters):
        step = (_twist(u, eps) - v) / (1.0 + eps * np.cos(2 * np.pi * u))
        u = u - step
        if np.all(np.abs(step) < 1e-17):
            break
    return u if u.ndim else float(u)


@dataclass(frozen=True)
class SystemSpec:
    """A built-in system. Parameters irrelevant to ``kind`` are ignored.

    ``alpha`` may be a :class:`fractions.Fraction`, in which case rotations are
    computed exactly. It defaults to the golden mean, except for the
    neutral-center toy whose base already rotates by ``omega`` (golden mean)
    and whose fiber rotates by ``sqrt(2) - 1``.
    """

    kind: str
    alpha: object = None
    rate: float = 0.5
    drive: str = "graph"
    amplitude: float = 1.0 / 128
    twist: float = 0.3
    omega: float = GOLDEN

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ArgumentError(f"unknown system kind {self.kind!r}")
        if self.alpha is None:
            object.__setattr__(self, "alpha", SQRT2_FRAC if self.kind == "NeutralCenterToy" else GOLDEN)
        a = self.alpha
        if isinstance(a, Fraction):
            if not (0 <= a < 1):
                raise ArgumentError("alpha must lie in [0, 1)")
        elif not (0 <= float(a) < 1):
            raise ArgumentError("alpha must lie in [0, 1)")
        if not (0 < self.rate < 1):
            raise ArgumentError("contraction rate must lie in (0, 1)")
        if self.drive not in DRIVES:
            raise ArgumentError(f"unknown drive {self.drive!r}")
        if not (0 <= abs(self.twist) < 1):
            raise ArgumentError("twist must satisfy |twist| < 1")
        if not (0 <= self.omega < 1):
            raise ArgumentError("omega must lie in [0, 1)")
        if self.kind == "ContractingFiber" and self.drive == "graph":
            c, a = self.rate, self.amplitude
            # keep the fiber orbit inside [0, 1]: |tau - 1/2| <= a (2 + c)/(1 - c) <= 1/2
            if a * (2 + c) / (1 - c) > 0.5:
                raise ArgumentError("graph amplitude too large for the fiber [0, 1]")

    # -- structure ------------------------------------------------------------

    @property
    def has_fiber(self) -> bool:
        return self.kind != "Rotation"

    @property
    def fiber(self) -> LeafModel:
        if self.kind == "ContractingFiber":
            return LeafModel.interval(1.0)
        return LeafModel.circle(1.0)

    @property
    def base_invertible(self) -> bool:
        return self.kind in ("Rotation", "NeutralCenterToy")

    @property
    def isometric_fibers(self) -> bool:
        return self.kind == "ProductDoublingRotation"

    def neutral_bound(self) -> float:
        """Bound ``K`` with ``d_c(A^n a, A^n b) <= K d_c(a, b)`` for all n."""
        if self.kind == "NeutralCenterToy":
            return (1 + abs(self.twist)) / (1 - abs(self.twist))
        if self.kind == "ConjugatedRotationCocycle":
            return (1 + abs(self.twist)) / (1 - abs(self.twist))
        if self.kind == "ProductDoublingRotation":
            return 1.0
        raise ArgumentError(f"{self.kind} has no neutral-center bound")

    # -- maps -------------------------------------------------------------------

    def base_map(self, x):
        if self.kind == "Rotation":
            return (x + self.alpha) % 1
        if self.kind == "NeutralCenterToy":
            return np.mod(np.asarray(x) + self.omega, 1.0) if np.ndim(x) else (x + self.omega) % 1.0
        return np.mod(2 * np.asarray(x, dtype=np.float64), 1.0) if np.ndim(x) else (2 * x) % 1.0

    def base_inverse(self, x):
        """Inverse base map; for the doubling map the branch ``x / 2`` is used."""
        if self.kind == "Rotation":
            return (x - self.alpha) % 1
        if self.kind == "NeutralCenterToy":
            return np.mod(np.asarray(x) - self.omega, 1.0) if np.ndim(x) else (x - self.omega) % 1.0
        return np.asarray(x) / 2.0 if np.ndim(x) else x / 2.0

    def drive_values(self, x):
        """Drive ``tau(x)`` for :attr:`ContractingFiber`.

        ``graph``: ``tau(x) = (phi(2x) - c phi(x)) / (1 - c)`` with
        ``phi(x) = 1/2 + a sin(2 pi x)``, so ``v = phi(x)`` is an invariant,
        attracting graph. ``identity``: ``tau(x) = x``.
        """
        x = np.asarray(x, dtype=np.float64)
        if self.drive == "identity":
            return x
        c = self.rate
        return (self.invariant_graph(np.mod(2 * x, 1.0)) - c * self.invariant_graph(x)) / (1 - c)

    def invariant_graph(self, x):
        return 0.5 + self.amplitude * np.sin(2 * np.pi * np.asarray(x, dtype=np.float64))

    def conjugacy(self, x, u):
        """Fiber conjugacy ``h_x`` (``h`` for the cocycle, ``h_x`` with twist ``eps*x`` for the toy)."""
        eps = self.twist if self.kind == "ConjugatedRotationCocycle" else self.twist * np.asarray(x)
        return _twist(u, eps)

    def conjugacy_inverse(self, x, v):
        eps = self.twist if self.kind == "ConjugatedRotationCocycle" else self.twist * np.asarray(x)
        return _untwist(v, eps)

    def fiber_map(self, x, v):
        """``A_x(v)``; vectorized over numpy inputs."""
        k = self.kind
        a = float(self.alpha)
        if k == "ProductDoublingRotation":
            return np.mod(np.asarray(v) + a, 1.0) if np.ndim(v) else (v + a) % 1.0
        if k == "ContractingFiber":
            c = self.rate
            out = c * np.asarray(v, dtype=np.float64) + (1 - c) * self.drive_values(x)
            return out if out.ndim else float(out)
        if k == "ConjugatedRotationCocycle":
            u = self.conjugacy_inverse(x, v)
            return np.mod(self.conjugacy(x, np.asarray(u) + a), 1.0)
        if k == "NeutralCenterToy":
            u = self.conjugacy_inverse(x, v)
            return np.mod(self.conjugacy(self.base_map(x), np.asarray(u) + a), 1.0)
        raise ArgumentError("Rotation has no fiber structure")

    def fiber_inverse(self, x, v):
        """``A_x^{-1}(v)`` where ``x`` is the base point *before* the step."""
        k = self.kind
        a = float(self.alpha)
        if k == "ProductDoublingRotation":
            return np.mod(np.asarray(v) - a, 1.0) if np.ndim(v) else (v - a) % 1.0
        if k == "ContractingFiber":
            c = self.rate
            out = (np.asarray(v, dtype=np.float64) - (1 - c) * self.drive_values(x)) / c
            return out if out.ndim else float(out)
        if k == "ConjugatedRotationCocycle":
            u = self.conjugacy_inverse(x, v)
            return np.mod(self.conjugacy(x, np.asarray(u) - a), 1.0)
        if k == "NeutralCenterToy":
            u = self.conjugacy_inverse(self.base_map(x), v)
            return np.mod(self.conjugacy(x, np.asarray(u) - a), 1.0)
        raise ArgumentError("Rotation has no fiber structure")

    def invariant_metric(self) -> LeafMetric:
        """A fiber metric preserved by the cocycle (where one is known in closed form)."""
        if self.kind in ("ProductDoublingRotation", "Rotation"):
            return LeafMetric.intrinsic(self.fiber)
        if self.kind == "ConjugatedRotationCocycle":
            eps = self.twist
            return LeafMetric.pullback(self.fiber, lambda v: _untwist(v, eps), lambda u: _twist(u, eps))
        raise ArgumentError(f"no closed-form invariant metric for {self.kind}")


def step(spec: SystemSpec, state):
    """One application of the system map."""
    if spec.kind == "Rotation":
        return spec.base_map(state)
    x, v = state
    return spec.base_map(x), spec.fiber_map(x, v)


# ---------------------------------------------------------------------------
# orbits
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class OrbitStream:
    """``T`` consecutive states, regenerated identically for a fixed
    ``(spec, x0, seed, burn_in)``."""

    spec: SystemSpec
    x0: object
    T: int
    seed: int
    burn_in: int = 0
    base: np.ndarray = field(init=False, repr=False)
    fiber: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.T < 1:
            raise ArgumentError("T must be >= 1")
        self.base, self.fiber = _generate(self.spec, self.x0, self.T, self.seed, self.burn_in)

    def __len__(self) -> int:
        return self.T

    def __iter__(self) -> Iterator:
        if self.spec.kind == "Rotation":
            return iter(self.fiber.tolist())
        return zip(self.base.tolist(), self.fiber.tolist())

    def replay(self) -> "OrbitStream":
        return OrbitStream(self.spec, self.x0, self.T, self.seed, self.burn_in)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "base", "fiber"])
            for n, (b, f) in enumerate(zip(self.base, self.fiber)):
                w.writerow([n, repr(float(b)), repr(float(f))])

    def to_npy(self, path) -> None:
        np.save(path, np.stack([self.base, self.fiber], axis=1))


def orbit(spec: SystemSpec, x0=None, T: int = 1000, seed: int = 0, burn_in: int = 0) -> OrbitStream:
    """Orbit of ``x0`` (``None`` draws a seeded random initial state)."""
    return OrbitStream(spec, x0, int(T), int(seed), int(burn_in))


def _random_bits(rng, count):
    return rng.integers(0, 2, size=count, dtype=np.uint8)


def _float_bits(x, count=53):
    k = int(math.floor(float(x) * 2.0 ** count))
    return np.array([(k >> (count - 1 - j)) & 1 for j in range(count)], dtype=np.uint8)


def _generate(spec: SystemSpec, x0, T, seed, burn_in):
    rng = np.random.default_rng(seed)
    total = T + burn_in
    k = spec.kind

    if k == "Rotation":
        a = spec.alpha
        x = rng.random() if x0 is None else x0
        n = np.arange(total, dtype=np.int64)
        if isinstance(a, Fraction) and isinstance(x, (int, Fraction)):
            fx = Fraction(x) % 1
            q = a.denominator * fx.denominator
            fiber = ((fx.numerator * a.denominator + n * (a.numerator * fx.denominator)) % q) / q
        elif isinstance(a, Fraction):
            fiber = np.mod(float(x) + ((n * a.numerator) % a.denominator) / a.denominator, 1.0)
        else:
            fiber = np.mod(float(x) + np.mod(n * float(a), 1.0), 1.0)
        return np.zeros(T), np.asarray(fiber, dtype=np.float64)[burn_in:]

    if spec.base_invertible:  # NeutralCenterToy: rotation base
        if x0 is None:
            xb, v = rng.random(), rng.random()
        else:
            xb, v = x0
        n = np.arange(total, dtype=np.float64)
        base = np.mod(xb + np.mod(n * spec.omega, 1.0), 1.0)
        u0 = spec.conjugacy_inverse(xb, v)
        u = np.mod(u0 + np.mod(n * float(spec.alpha), 1.0), 1.0)
        fiber = np.mod(spec.conjugacy(base, u), 1.0)
        return base[burn_in:], fiber[burn_in:]

    # doubling base driven by a bit stream
    if x0 is None:
        bits = _random_bits(rng, total + 52)
        v = rng.random()
    else:
        xb, v = x0
        bits = np.concatenate([_float_bits(xb), _random_bits(rng, total)])
    base = kernels.doubling_orbit(bits, total)

    if k == "ProductDoublingRotation":
        n = np.arange(total, dtype=np.float64)
        fiber = np.mod(v + np.mod(n * float(spec.alpha), 1.0), 1.0)
    elif k == "ConjugatedRotationCocycle":
        n = np.arange(total, dtype=np.float64)
        u0 = spec.conjugacy_inverse(0.0, v)
        fiber = np.mod(spec.conjugacy(0.0, np.mod(u0 + np.mod(n * float(spec.alpha), 1.0), 1.0)), 1.0)
    else:  # ContractingFiber
        fiber = kernels.affine_recursion(spec.drive_values(base), float(v), spec.rate)
    return base[burn_in:], fiber[burn_in:]
