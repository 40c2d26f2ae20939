"""Hot inner loops.

Each kernel has a numba version (``*_nb``) and a numpy/scipy version
(``*_np``). The public wrapper picks one according to ``_accel.USE_NUMBA``;
tests call both directly to check they agree.
"""

import numpy as np
from scipy import signal
from scipy.spatial import cKDTree

from . import _accel
from ._accel import njit

_MANTISSA_BITS = 53
_BIT_WEIGHTS = np.ldexp(1.0, -np.arange(1, _MANTISSA_BITS + 1))


# ---------------------------------------------------------------------------
# doubling map driven by a bit stream
# ---------------------------------------------------------------------------

@njit(cache=True)
def doubling_orbit_nb(bits, T):
    out = np.empty(T, dtype=np.float64)
    state = np.uint64(0)
    one = np.uint64(1)
    for j in range(_MANTISSA_BITS - 1):
        state = (state << one) | np.uint64(bits[j])
    mask = (one << np.uint64(_MANTISSA_BITS)) - one
    scale = 2.0 ** -_MANTISSA_BITS
    for n in range(T):
        state = ((state << one) | np.uint64(bits[n + _MANTISSA_BITS - 1])) & mask
        out[n] = np.float64(state) * scale
    return out


def doubling_orbit_np(bits, T, chunk=1 << 18):
    windows = np.lib.stride_tricks.sliding_window_view(bits[: T + _MANTISSA_BITS - 1], _MANTISSA_BITS)
    out = np.empty(T, dtype=np.float64)
    for a in range(0, T, chunk):
        b = min(T, a + chunk)
        out[a:b] = windows[a:b].astype(np.float64) @ _BIT_WEIGHTS
    return out


def doubling_orbit(bits, T):
    """Orbit ``x_n = 0.b_n b_{n+1} ... b_{n+52}`` (binary) of the doubling map.

    ``bits`` must hold at least ``T + 52`` entries in {0, 1}. Consecutive states
    satisfy ``x_{n+1} = 2 x_n mod 1`` up to the freshly revealed last bit.
    """
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    if bits.size < T + _MANTISSA_BITS - 1:
        raise ValueError("bit stream too short for requested orbit length")
    if _accel.USE_NUMBA:
        return doubling_orbit_nb(bits, T)
    return doubling_orbit_np(bits, T)


# ---------------------------------------------------------------------------
# affine fiber contraction v_{n+1} = c v_n + (1 - c) tau_n
# ---------------------------------------------------------------------------

@njit(cache=True)
def affine_recursion_nb(tau, v0, c):
    T = tau.shape[0]
    out = np.empty(T, dtype=np.float64)
    v = v0
    out[0] = v
    for n in range(1, T):
        v = c * v + (1.0 - c) * tau[n - 1]
        out[n] = v
    return out


def affine_recursion_np(tau, v0, c):
    out = np.empty(tau.shape[0], dtype=np.float64)
    out[0] = v0
    if tau.shape[0] > 1:
        out[1:], _ = signal.lfilter([1.0 - c], [1.0, -c], tau[:-1], zi=[c * v0])
    return out


def affine_recursion(tau, v0, c):
    tau = np.ascontiguousarray(tau, dtype=np.float64)
    if _accel.USE_NUMBA:
        return affine_recursion_nb(tau, float(v0), float(c))
    return affine_recursion_np(tau, float(v0), float(c))


# ---------------------------------------------------------------------------
# greedy extension of a packing
# ---------------------------------------------------------------------------

@njit(cache=True)
def _cell_of(p, lo, g, D, n):
    idx = 0
    for k in range(n):
        c = int((p[k] - lo) / g)
        if c < 0:
            c = 0
        elif c >= D:
            c = D - 1
        idx = idx * D + c
    return idx


@njit(cache=True)
def greedy_extend_nb(centers, candidates, s, r):
    n = centers.shape[1]
    g = 2.0 * s
    D = int(np.ceil(2.0 * r / g)) + 1
    lo = -r
    total = centers.shape[0] + candidates.shape[0]
    pts = np.empty((total, n), dtype=np.float64)
    head = -np.ones(D ** n, dtype=np.int64)
    nxt = -np.ones(total, dtype=np.int64)
    count = 0
    for i in range(centers.shape[0]):
        for k in range(n):
            pts[count, k] = centers[i, k]
        cell = _cell_of(centers[i], lo, g, D, n)
        nxt[count] = head[cell]
        head[cell] = count
        count += 1
    accepted = np.zeros(candidates.shape[0], dtype=np.bool_)
    min_sq = (2.0 * s) ** 2 * (1.0 - 1e-12)
    coords = np.empty(n, dtype=np.int64)
    n_off = 3 ** n
    for i in range(candidates.shape[0]):
        p = candidates[i]
        for k in range(n):
            c = int((p[k] - lo) / g)
            coords[k] = min(max(c, 0), D - 1)
        ok = True
        for o in range(n_off):
            rem = o
            idx = 0
            inside = True
            for k in range(n):
                d = rem % 3 - 1
                rem //= 3
                c = coords[k] + d
                if c < 0 or c >= D:
                    inside = False
                    break
                idx = idx * D + c
            if not inside:
                continue
            j = head[idx]
            while j >= 0:
                sq = 0.0
                for k in range(n):
                    diff = pts[j, k] - p[k]
                    sq += diff * diff
                if sq < min_sq:
                    ok = False
                    break
                j = nxt[j]
            if not ok:
                break
        if ok:
            accepted[i] = True
            for k in range(n):
                pts[count, k] = p[k]
            cell = _cell_of(p, lo, g, D, n)
            nxt[count] = head[cell]
            head[cell] = count
            count += 1
    return accepted


def greedy_extend_np(centers, candidates, s, r):
    g = 2.0 * s
    min_sq = (2.0 * s) ** 2 * (1.0 - 1e-12)
    grid = {}
    for p in centers:
        grid.setdefault(tuple(np.floor((p + r) / g).astype(int)), []).append(p)
    n = centers.shape[1] if centers.size else candidates.shape[1]
    offsets = np.array(np.meshgrid(*[[-1, 0, 1]] * n, indexing="ij")).reshape(n, -1).T
    accepted = np.zeros(len(candidates), dtype=bool)
    for i, p in enumerate(candidates):
        key = np.floor((p + r) / g).astype(int)
        near = [q for off in offsets for q in grid.get(tuple(key + off), ())]
        if near:
            d2 = np.sum((np.asarray(near) - p) ** 2, axis=1)
            if np.any(d2 < min_sq):
                continue
        accepted[i] = True
        grid.setdefault(tuple(key), []).append(p)
    return accepted


def greedy_extend(centers, candidates, s, r):
    """Scan ``candidates`` in order, accepting each one at distance >= 2s from
    every center accepted so far (initial ``centers`` included)."""
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    candidates = np.ascontiguousarray(candidates, dtype=np.float64)
    if candidates.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    if _accel.USE_NUMBA:
        return greedy_extend_nb(centers, candidates, float(s), float(r))
    return greedy_extend_np(centers, candidates, float(s), float(r))


# ---------------------------------------------------------------------------
# covering verification
# ---------------------------------------------------------------------------

@njit(cache=True)
def uncovered_count_nb(centers, points, s, r):
    n = centers.shape[1]
    g = s
    D = int(np.ceil(2.0 * (r + s) / g)) + 1
    lo = -(r + s)
    head = -np.ones(D ** n, dtype=np.int64)
    nxt = -np.ones(centers.shape[0], dtype=np.int64)
    for i in range(centers.shape[0]):
        cell = _cell_of(centers[i], lo, g, D, n)
        nxt[i] = head[cell]
        head[cell] = i
    s_sq = s * s
    coords = np.empty(n, dtype=np.int64)
    n_off = 3 ** n
    missing = 0
    for i in range(points.shape[0]):
        p = points[i]
        for k in range(n):
            c = int((p[k] - lo) / g)
            coords[k] = min(max(c, 0), D - 1)
        hit = False
        for o in range(n_off):
            rem = o
            idx = 0
            inside = True
            for k in range(n):
                d = rem % 3 - 1
                rem //= 3
                c = coords[k] + d
                if c < 0 or c >= D:
                    inside = False
                    break
                idx = idx * D + c
            if not inside:
                continue
            j = head[idx]
            while j >= 0:
                sq = 0.0
                for k in range(n):
                    diff = centers[j, k] - p[k]
                    sq += diff * diff
                if sq < s_sq:
                    hit = True
                    break
                j = nxt[j]
            if hit:
                break
        if not hit:
            missing += 1
    return missing


def uncovered_count_np(centers, points, s, r, chunk=1 << 20):
    tree = cKDTree(centers)
    missing = 0
    for a in range(0, len(points), chunk):
        d, _ = tree.query(points[a : a + chunk], k=1, distance_upper_bound=s)
        missing += int(np.count_nonzero(~(d < s)))
    return missing


def uncovered_count(centers, points, s, r):
    """Number of ``points`` not strictly inside any open ball ``B(center, s)``."""
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.shape[0] == 0:
        return 0
    if centers.shape[0] == 0:
        return points.shape[0]
    if _accel.USE_NUMBA:
        return int(uncovered_count_nb(centers, points, float(s), float(r)))
    return uncovered_count_np(centers, points, float(s), float(r))
