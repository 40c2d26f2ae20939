"""Flat ``section.key = value`` experiment configs."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict

from .errors import ArgumentError
from .systems import DRIVES, GOLDEN, KINDS, SQRT2_FRAC, SystemSpec

MIN_T = 1000


class ConfigError(ArgumentError):
    def __init__(self, msg, line=None, source="<config>"):
        self.line = line
        where = f"{source}:{line}: " if line else f"{source}: "
        super().__init__(where + msg)


def _alpha(text):
    t = text.strip().lower()
    if t in ("golden", "golden_mean"):
        return GOLDEN
    if t in ("sqrt2", "sqrt2-1"):
        return SQRT2_FRAC
    if "/" in t:
        return Fraction(t)
    return float(t)


def _int(text):
    v = float(text)
    if not v.is_integer():
        raise ValueError(f"{text!r} is not an integer")
    return int(v)


def _floats(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def _choice(options):
    def parse(text):
        t = text.strip()
        if t not in options:
            raise ValueError(f"{t!r} is not one of {', '.join(options)}")
        return t
    return parse


_SCHEMA = {
    "mode": (_choice(("dichotomy", "packing")), "dichotomy"),
    "system.kind": (_choice(KINDS), None),
    "system.alpha": (_alpha, None),
    "system.rate": (float, 0.5),
    "system.drive": (_choice(DRIVES), "graph"),
    "system.amplitude": (float, 1.0 / 128),
    "system.twist": (float, 0.3),
    "system.omega": (float, GOLDEN),
    "chart.cells": (_int, 64),
    "chart.overlap_cells": (_int, 0),
    "chart.offset": (float, 0.0),
    "orbit.T": (_int, None),
    "orbit.seed": (_int, None),
    "orbit.burn_in": (_int, 0),
    "orbit.x0": (str, "random"),
    "metric.rule": (_choice(("intrinsic", "sup", "pullback")), "intrinsic"),
    "metric.scale": (float, 1.0),
    "metric.N": (_int, 64),
    "ladder.k_min": (_int, 2),
    "ladder.k_max": (_int, 12),
    "ladder.eps": (_floats, ()),
    "thresholds.cv_max": (float, 0.1),
    "thresholds.theta": (float, 0.9),
    "thresholds.quorum": (float, 0.9),
    "thresholds.min_bin": (_int, 1000),
    "thresholds.eps_min": (float, 1e-3),
    "thresholds.max_atoms": (_int, 32),
    "thresholds.min_ball_samples": (_int, 400),
    "thresholds.anchors_per_plaque": (_int, 8),
    "packing.n": (_int, 2),
    "packing.r0": (float, 1.0),
    "packing.scale": (float, 1.0),
    "packing.side": (float, 4.0),
    "packing.s_min_exp": (_int, 8),
    "output.dir": (str, "out"),
    "output.formats": (str, "json,csv,txt"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    values: Dict[str, object]
    lines: Dict[str, int] = field(default_factory=dict, compare=False)
    source: str = "<config>"

    def __getitem__(self, key):
        return self.values[key]

    @property
    def mode(self) -> str:
        return self.values["mode"]

    def system_spec(self) -> SystemSpec:
        v = self.values
        return SystemSpec(v["system.kind"], alpha=v["system.alpha"], rate=v["system.rate"], drive=v["system.drive"],
                          amplitude=v["system.amplitude"], twist=v["system.twist"], omega=v["system.omega"])

    def x0(self):
        t = self.values["orbit.x0"].strip()
        if t == "random":
            return None
        parts = [p for p in t.split(",") if p.strip()]
        if len(parts) == 1:
            return _alpha(parts[0])
        return tuple(float(p) for p in parts)

    def eps_ladder(self):
        v = self.values
        if v["ladder.eps"]:
            return v["ladder.eps"]
        return tuple(2.0 ** -k for k in range(v["ladder.k_min"], v["ladder.k_max"] + 1))

    def thresholds(self):
        from .classifier import Thresholds

        v = self.values
        return Thresholds(cv_max=v["thresholds.cv_max"], theta=v["thresholds.theta"], quorum=v["thresholds.quorum"],
                          min_bin=v["thresholds.min_bin"], eps_min=v["thresholds.eps_min"],
                          max_atoms=v["thresholds.max_atoms"], min_ball_samples=v["thresholds.min_ball_samples"],
                          anchors_per_plaque=v["thresholds.anchors_per_plaque"])

    def canonical(self) -> str:
        """Sorted ``key = value`` text of the fully resolved config."""
        out = []
        for k in sorted(self.values):
            val = self.values[k]
            if isinstance(val, tuple):
                val = ",".join(repr(x) for x in val)
            elif isinstance(val, float):
                val = repr(val)
            out.append(f"{k} = {val}")
        return "\n".join(out) + "\n"

    def content_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def resolved(self) -> Dict[str, object]:
        return {k: (str(v) if isinstance(v, Fraction) else list(v) if isinstance(v, tuple) else v)
                for k, v in sorted(self.values.items())}


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    values, lines = {}, {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", no, source)
        key, val = (p.strip() for p in line.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}", no, source)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", no, source)
        try:
            values[key] = _SCHEMA[key][0](val)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{key}: {exc}", no, source) from None
        lines[key] = no
    for key, (_, default) in _SCHEMA.items():
        values.setdefault(key, default)
    cfg = ExperimentConfig(values, lines, source)
    _validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from None
    return parse_config(text, str(path))


def _validate(cfg: ExperimentConfig) -> None:
    v, ln, src = cfg.values, cfg.lines, cfg.source

    def fail(key, msg):
        raise ConfigError(f"{key}: {msg}", ln.get(key), src)

    if v["mode"] == "packing":
        if v["packing.n"] not in (1, 2, 3):
            fail("packing.n", "dimension must be 1, 2 or 3")
        for k in ("packing.r0", "packing.scale", "packing.side"):
            if not v[k] > 0:
                fail(k, "must be positive")
        if v["packing.side"] < 2 * v["packing.r0"] / v["packing.scale"]:
            fail("packing.side", "box too small for the ball of radius r0")
        if not 3 <= v["packing.s_min_exp"] <= 10:
            fail("packing.s_min_exp", "must lie in 3..10")
        return

    if v["system.kind"] is None:
        fail("system.kind", "missing (required)")
    if v["orbit.T"] is None:
        fail("orbit.T", "missing (required)")
    if v["orbit.T"] < MIN_T:
        fail("orbit.T", f"T = {v['orbit.T']} is below the minimum {MIN_T}")
    if v["orbit.seed"] is None:
        fail("orbit.seed", "missing (seeds are mandatory)")
    if v["orbit.burn_in"] < 0:
        fail("orbit.burn_in", "must be >= 0")
    if v["chart.cells"] < 1:
        fail("chart.cells", "must be >= 1")
    if v["chart.overlap_cells"] < 0:
        fail("chart.overlap_cells", "must be >= 0")
    if not v["metric.scale"] > 0 or not math.isfinite(v["metric.scale"]):
        fail("metric.scale", "must be positive")
    if v["metric.N"] < 0:
        fail("metric.N", "must be >= 0")
    if not v["ladder.eps"] and not 0 <= v["ladder.k_min"] < v["ladder.k_max"]:
        fail("ladder.k_max", "need 0 <= k_min < k_max")
    eps = cfg.eps_ladder()
    if any(e <= 0 for e in eps) or any(a <= b for a, b in zip(eps, eps[1:])):
        fail("ladder.eps", "ladder must be positive and strictly decreasing")
    try:
        cfg.system_spec()
    except ArgumentError as exc:
        key = next((k for k in ("system.alpha", "system.rate", "system.twist", "system.omega", "system.amplitude")
                    if k in ln), "system.kind")
        fail(key, str(exc))
    try:
        cfg.thresholds()
    except ArgumentError as exc:
        fail(next((k for k in ln if k.startswith("thresholds.")), "thresholds.theta"), str(exc))
    try:
        cfg.x0()
    except ValueError as exc:
        fail("orbit.x0", str(exc))
    kind, rule = v["system.kind"], v["metric.rule"]
    if rule == "sup" and kind == "Rotation":
        fail("metric.rule", "sup metric needs a fiber system")
    if rule == "pullback" and kind not in ("ConjugatedRotationCocycle", "NeutralCenterToy",
                                           "ProductDoublingRotation", "Rotation"):
        fail("metric.rule", f"no pullback metric known for {kind}")
    for fmt in v["output.formats"].split(","):
        if fmt.strip() not in ("json", "csv", "txt"):
            fail("output.formats", f"unknown format {fmt.strip()!r}")


def estimate_runtime(cfg: ExperimentConfig) -> float:
    """Rough wall-clock estimate in seconds."""
    if cfg.mode == "packing":
        return {1: 0.5, 2: 5.0, 3: 60.0}[cfg["packing.n"]]
    t = cfg["orbit.T"] * 4e-7
    if cfg["chart.overlap_cells"]:
        t *= 2
    if cfg["metric.rule"] == "sup":
        t += 20.0 * cfg["chart.cells"]
    return t
