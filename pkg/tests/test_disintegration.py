import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergolab.disintegration import (EmpiricalConditional, disintegrate, ks_uniform, merge, normalize_unit_ball,
                                    overlap_consistency, proportionality)
from ergolab.errors import ArgumentError
from ergolab.lamination import Chart, PlaqueId
from ergolab.metric_core import LeafMetric, LeafModel
from ergolab.systems import SystemSpec, orbit
from fractions import Fraction

PID = PlaqueId(0, 0)
FLAT4 = LeafModel.interval(4.0)


def uniform_flat(n=400_000):
    return EmpiricalConditional.from_samples(PID, (np.arange(n) + 0.5) * 4.0 / n, FLAT4)


def test_rotation_third_three_atoms():
    o = orbit(SystemSpec("Rotation", alpha=Fraction(1, 3)), None, 300_000, seed=1)
    d = disintegrate(o, Chart.uniform(1))
    c = d[PID]
    assert c.points.size == 3
    np.testing.assert_allclose(c.probabilities(), 1 / 3, atol=1e-12)


def test_circle_normalization_is_probability():
    rng = np.random.default_rng(0)
    c = EmpiricalConditional.from_samples(PID, rng.random(5000), LeafModel.circle(1.0))
    assert c.factor == 1.0
    assert c.ball_mass(c.anchor, 1.0) == pytest.approx(1.0)


def test_flat_interval_normalization():
    c = uniform_flat()
    assert c.anchor == pytest.approx(2.0, abs=1e-5)
    assert c.factor == pytest.approx(2.0, rel=1e-5)
    again = normalize_unit_ball(c)
    assert again.factor == c.factor
    assert again.ball_mass(again.anchor, 1.0) == pytest.approx(1.0)


def test_normalization_ignores_sample_order(rng):
    v = rng.random(3000) * 4
    a = EmpiricalConditional.from_samples(PID, v, FLAT4)
    b = EmpiricalConditional.from_samples(PID, rng.permutation(v), FLAT4)
    assert a.factor == b.factor and a.anchor == b.anchor
    assert np.array_equal(a.points, b.points)


def test_proportionality_examples():
    rng = np.random.default_rng(1)
    circ = EmpiricalConditional.from_samples(PID, rng.random(10_000), LeafModel.circle(1.0))
    assert proportionality(circ, 0.3) == pytest.approx(1.0)
    atoms = EmpiricalConditional(PID, np.array([0.1, 0.4, 0.7]), np.ones(3), LeafModel.circle(1.0), anchor=0.1)
    assert proportionality(normalize_unit_ball(atoms), 0.4) == 1.0
    flat = uniform_flat()
    # mu_x([0, 1.5)) = 1.5 * (1/4) * 2
    assert proportionality(flat, 0.5) == pytest.approx(4 / 3, rel=1e-4)
    assert proportionality(flat, 1.5) == pytest.approx(1.0, rel=1e-4)


def test_proportionality_reciprocity():
    from dataclasses import replace

    flat = uniform_flat()
    x, y = flat.anchor, 0.5
    at_y = normalize_unit_ball(replace(flat, anchor=y))
    assert proportionality(flat, y) * proportionality(at_y, x) == pytest.approx(1.0, rel=1e-12)


def test_zero_mass_errors():
    c = EmpiricalConditional(PID, np.array([0.5]), np.ones(1), FLAT4, anchor=0.5)
    with pytest.raises(ArgumentError):
        normalize_unit_ball(EmpiricalConditional(PID, np.array([0.5]), np.ones(1), FLAT4, anchor=3.0))
    with pytest.raises(ArgumentError):
        proportionality(normalize_unit_ball(c), 3.5)


def test_mass_conservation_and_flags():
    o = orbit(SystemSpec("ProductDoublingRotation"), None, 20_000, seed=3)
    d = disintegrate(o, Chart.uniform(64))
    assert sum(c.raw_mass for c in d.values()) == d.binned == 20_000
    assert len(d.flagged) == 64
    assert not d.qualifying()


def test_skipped_states_counted():
    class Fake:
        base = np.array([0.1, 0.5, 1.5, np.nan])
        fiber = np.array([0.2, 0.3, 0.4, 0.5])
    d = disintegrate(Fake, Chart.uniform(2))
    assert d.skipped == 2 and d.binned == 2


def test_empty_intersection():
    class Fake:
        base = np.array([2.0, 3.0])
        fiber = np.array([0.1, 0.2])
    d = disintegrate(Fake, Chart.uniform(2))
    assert len(d) == 0 and d.diagnostics


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 16), st.integers(0, 10_000))
def test_refinement_merge_is_exact(K, seed):
    o = orbit(SystemSpec("ProductDoublingRotation"), None, 4000, seed=seed)
    coarse = disintegrate(o, Chart.uniform(K))
    fine = disintegrate(o, Chart.uniform(2 * K, chart_id=1))
    for pid, c in coarse.items():
        kids = [fine[PlaqueId(1, j)] for j in (2 * pid.cell, 2 * pid.cell + 1) if PlaqueId(1, j) in fine.conditionals]
        m = merge(kids, pid)
        assert np.array_equal(m.points, c.points)
        assert np.array_equal(m.weights, c.weights)
        assert m.anchor == c.anchor and m.factor == c.factor


def test_ks_uniform_on_isometric_skew():
    o = orbit(SystemSpec("ProductDoublingRotation"), None, 10**6, seed=4)
    d = disintegrate(o, Chart.uniform(16))
    assert max(ks_uniform(c) for c in d.values()) < 0.02


def test_overlap_consistency():
    o = orbit(SystemSpec("ProductDoublingRotation"), None, 10**6, seed=5)
    d2 = disintegrate(o, Chart.uniform(2))
    assert overlap_consistency(d2, d2).max_deviation == 0.0
    d4 = disintegrate(o, Chart.uniform(4, chart_id=1))
    assert overlap_consistency(d2, d4).max_deviation < 0.02
    a = disintegrate(orbit(SystemSpec("ProductDoublingRotation"), None, 1000, seed=1), Chart.uniform(2))
    b = disintegrate(orbit(SystemSpec("ProductDoublingRotation"), None, 1000, seed=2), Chart.uniform(2, chart_id=1))
    rep = overlap_consistency(a, b)
    assert len(rep.flagged) == 2 and rep.max_flagged_deviation > 0.05


def test_exports(tmp_path):
    o = orbit(SystemSpec("Rotation", alpha=Fraction(1, 3)), None, 3000, seed=1)
    d = disintegrate(o, Chart.uniform(1))
    d.to_csv(tmp_path / "c.csv")
    rows = (tmp_path / "c.csv").read_text().splitlines()
    assert rows[0] == "plaque_id,fiber_coord,weight" and len(rows) == 4
    assert sum(float(r.split(",")[2]) for r in rows[1:]) == pytest.approx(1.0)
    d.to_json(tmp_path / "s.json")
    rec = json.loads((tmp_path / "s.json").read_text())
    assert rec["binned"] == 3000 and rec["plaques"][0]["raw_mass"] == 3000


def test_histogram_export_for_diffuse_plaques(tmp_path):
    o = orbit(SystemSpec("Rotation"), None, 20_000, seed=1)
    d = disintegrate(o, Chart.uniform(1))
    d.to_csv(tmp_path / "c.csv", cells=128)
    rows = (tmp_path / "c.csv").read_text().splitlines()
    assert len(rows) == 129
