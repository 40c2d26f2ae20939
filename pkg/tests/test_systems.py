from fractions import Fraction

import numpy as np
import pytest

from ergolab.errors import ArgumentError
from ergolab.lamination import Chart
from ergolab.systems import GOLDEN, SystemSpec, orbit, step


def test_step_examples():
    r = SystemSpec("Rotation", alpha=Fraction(1, 3))
    x = Fraction(0)
    assert step(r, x) == Fraction(1, 3)
    assert step(r, step(r, step(r, x))) == 0
    p = SystemSpec("ProductDoublingRotation")
    assert step(p, (0.3, 0.9)) == pytest.approx((0.6, (0.9 + GOLDEN) % 1))
    c = SystemSpec("ContractingFiber", drive="identity")
    assert step(c, (0.3, 0.8)) == pytest.approx((0.6, 0.4 + 0.15))


def test_invalid_specs():
    for kw in ({"kind": "Foo"}, {"kind": "Rotation", "alpha": 1.0}, {"kind": "ContractingFiber", "rate": 1.0},
               {"kind": "NeutralCenterToy", "twist": 1.0}):
        with pytest.raises(ArgumentError):
            SystemSpec(**kw)


def test_rotation_rational_period():
    o = orbit(SystemSpec("Rotation", alpha=Fraction(1, 3)), None, 300, seed=4)
    vals, counts = np.unique(o.fiber, return_counts=True)
    assert vals.size == 3 and np.all(counts == 100)
    o = orbit(SystemSpec("Rotation", alpha=Fraction(2, 7)), Fraction(0), 700, seed=0)
    assert np.unique(o.fiber).size == 7


def test_rotation_discrepancy():
    x = np.sort(orbit(SystemSpec("Rotation"), None, 10**6, seed=0).fiber)
    n = x.size
    disc = max(np.max(np.arange(1, n + 1) / n - x), np.max(x - np.arange(n) / n))
    assert disc < 5e-3


def test_replay_is_deterministic():
    o = orbit(SystemSpec("ProductDoublingRotation"), None, 5000, seed=9)
    r = o.replay()
    assert np.array_equal(o.base, r.base) and np.array_equal(o.fiber, r.fiber)
    assert len(list(o)) == 5000 == len(o)


def test_orbit_matches_step_map():
    for kind in ("ProductDoublingRotation", "ConjugatedRotationCocycle", "NeutralCenterToy", "ContractingFiber"):
        spec = SystemSpec(kind)
        o = orbit(spec, (0.3125, 0.4), 20, seed=1)
        state = (0.3125, 0.4)
        for n in range(20):
            # doubling orbits continue x0's bits with fresh random ones, visible at scale 2^(n-53)
            assert o.base[n] == pytest.approx(state[0], abs=2.0 ** (n - 52))
            assert o.fiber[n] == pytest.approx(state[1], abs=1e-9)
            state = step(spec, state)


def test_fiber_inverse_roundtrip(rng):
    x, v = rng.random(100), rng.random(100)
    for kind in ("ProductDoublingRotation", "ConjugatedRotationCocycle", "NeutralCenterToy", "ContractingFiber"):
        spec = SystemSpec(kind)
        back = spec.fiber_inverse(x, spec.fiber_map(x, v))
        np.testing.assert_allclose(back, v, atol=1e-12)


def test_product_marginals_uniform():
    o = orbit(SystemSpec("ProductDoublingRotation"), None, 200_000, seed=2)
    for arr in (o.base, o.fiber):
        x = np.sort(arr)
        n = x.size
        ks = max(np.max(np.arange(1, n + 1) / n - x), np.max(x - np.arange(n) / n))
        assert ks < 5 / np.sqrt(n)


def test_contracting_fiber_collapses_onto_graph():
    spec = SystemSpec("ContractingFiber")
    o = orbit(spec, None, 10**5, seed=0, burn_in=100)
    idx = Chart.uniform(64).cell_index(o.base)
    spread = max(np.ptp(o.fiber[idx == i]) for i in range(64))
    assert spread < 1e-3
    np.testing.assert_allclose(o.fiber, spec.invariant_graph(o.base), atol=1e-12)


def test_identity_drive_does_not_collapse():
    # the plain drive tau(x) = x has no invariant graph over a non-invertible base
    o = orbit(SystemSpec("ContractingFiber", drive="identity"), None, 10**5, seed=0, burn_in=100)
    idx = Chart.uniform(64).cell_index(o.base)
    assert max(np.ptp(o.fiber[idx == i]) for i in range(64)) > 0.1


def test_contracting_lyapunov_exponent(rng):
    spec = SystemSpec("ContractingFiber", rate=0.25)
    x, v = rng.random(50), rng.random(50)
    h = 1e-6
    ratio = (spec.fiber_map(x, v + h) - spec.fiber_map(x, v)) / h
    np.testing.assert_allclose(np.log(ratio), np.log(0.25), atol=1e-6)


def test_exports(tmp_path):
    o = orbit(SystemSpec("ProductDoublingRotation"), None, 50, seed=1)
    o.to_csv(tmp_path / "o.csv")
    o.to_npy(tmp_path / "o.npy")
    arr = np.load(tmp_path / "o.npy")
    assert arr.shape == (50, 2)
    lines = (tmp_path / "o.csv").read_text().splitlines()
    assert lines[0] == "n,base,fiber" and len(lines) == 51
    assert float(lines[5].split(",")[2]) == o.fiber[4]


def test_bad_length():
    with pytest.raises(ArgumentError):
        orbit(SystemSpec("Rotation"), None, 0, seed=0)
