"""Command-line runner: ``ergolab run <config>`` and ``ergolab verify <config>``.

Exit codes: 0 on completion, 1 on a malformed config, 2 on an Inconclusive
verdict under ``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import _accel
from .config import ConfigError, ExperimentConfig, estimate_runtime, load_config
from .errors import ArgumentError

log = logging.getLogger("ergolab")

EXIT_OK, EXIT_CONFIG, EXIT_INCONCLUSIVE = 0, 1, 2


def _clean(obj):
    # JSON-safe, deterministic: NaN/inf -> null, numpy scalars -> python
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(_clean(payload), indent=2, sort_keys=True, allow_nan=False) + "\n")


def _formats(cfg: ExperimentConfig):
    return {f.strip() for f in cfg["output.formats"].split(",")}


def _run_dichotomy(cfg: ExperimentConfig, out: Path) -> str:
    from .pipeline import run_dichotomy

    th = cfg.thresholds()
    res = run_dichotomy(cfg.system_spec(), cfg["orbit.T"], cfg["orbit.seed"], cells=cfg["chart.cells"],
                        overlap_cells=cfg["chart.overlap_cells"] or None, metric=cfg["metric.rule"],
                        scale=cfg["metric.scale"], N=cfg["metric.N"], eps=np.array(cfg.eps_ladder()),
                        x0=cfg.x0(), burn_in=cfg["orbit.burn_in"], thresholds=th,
                        chart_offset=cfg["chart.offset"])
    v = res.verdict
    fmts = _formats(cfg)
    record = v.to_record()
    record.update({
        "thresholds": th.to_record(),
        "metric": res.metric_description,
        "overlap": res.overlap.to_record() if res.overlap else None,
        "binned": res.disintegration.binned,
        "skipped": res.disintegration.skipped,
        "config": cfg.resolved(),
        "config_hash": cfg.content_hash(),
    })
    if "json" in fmts:
        _write_json(out / "verdict.json", record)
        _write_json(out / "plaques.json", {"plaques": res.disintegration.summary(),
                                           "config_hash": cfg.content_hash()})
    if "csv" in fmts:
        res.disintegration.to_csv(out / "conditionals.csv")
        with open(out / "ladder.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["anchor_id", "eps", "mu_ball", "lambda_ball", "ratio"])
            offset = 0
            for L in res.ladders:
                for row in L.rows(offset):
                    w.writerow([row[0]] + [repr(x) for x in row[1:]])
                offset += L.anchors.size
    if "txt" in fmts:
        lines = [
            f"system        {cfg['system.kind']}",
            f"metric        {res.metric_description}",
            f"orbit         T={cfg['orbit.T']} seed={cfg['orbit.seed']} burn_in={cfg['orbit.burn_in']}",
            f"plaques used  {v.plaques_used} (binned {res.disintegration.binned}, skipped {res.disintegration.skipped})",
            f"verdict       {v.verdict}",
        ]
        if v.delta_bar is not None:
            lines.append(f"delta_bar     {v.delta_bar:.6g}")
        if v.cv is not None and math.isfinite(v.cv):
            lines.append(f"cv            {v.cv:.4g}")
        if v.atoms:
            lines.append(f"atoms         {v.atom_count} over {len(v.atoms)} plaques")
        if res.overlap is not None:
            lines.append(f"overlap dev   {res.overlap.max_deviation:.4g} ({len(res.overlap.flagged)} pairs flagged)")
        lines.append(f"config hash   {cfg.content_hash()}")
        (out / "summary.txt").write_text("\n".join(lines) + "\n")
    return v.verdict


def _run_packing(cfg: ExperimentConfig, out: Path) -> str:
    from .metric_core import LeafMetric, LeafModel
    from .packing import certify_regularity, greedy_pack

    n, r0, c = cfg["packing.n"], cfg["packing.r0"], cfg["packing.scale"]
    metric = LeafMetric.scaled(LeafModel.box(n, cfg["packing.side"]), c)
    r_ladder = tuple(r0 * 2.0 ** -i for i in range(3))
    s_ladders = [tuple(r * 2.0 ** -j for j in range(3, cfg["packing.s_min_exp"] + 1)) for r in r_ladder]
    cert = certify_regularity(metric, r0=r0, r_ladder=r_ladder, s_ladders=s_ladders)
    fmts = _formats(cfg)
    rec = cert.to_record()
    rec.update({"metric": metric.describe(), "config": cfg.resolved(), "config_hash": cfg.content_hash()})
    if "json" in fmts:
        _write_json(out / "certificate.json", rec)
    if "csv" in fmts:
        greedy_pack(n, r0 / c, s_ladders[0][-1] / c).to_csv(out / "centers.csv")
    if "txt" in fmts:
        (out / "summary.txt").write_text(
            f"metric        {metric.describe()}\nverdict       {cert.verdict}\nC_hat         {cert.C_hat:.6g}\n"
            f"p_hat         {cert.p_hat:.6g}\nconfig hash   {cfg.content_hash()}\n")
    return cert.verdict


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.threads:
        _accel.set_threads(args.threads)
    out = Path(args.out or cfg["output.dir"])
    out.mkdir(parents=True, exist_ok=True)
    if cfg.mode == "packing":
        verdict = _run_packing(cfg, out)
        inconclusive = verdict == "inconclusive"
    else:
        verdict = _run_dichotomy(cfg, out)
        inconclusive = verdict == "Inconclusive"
    print(f"{verdict} -> {out}")
    if args.strict and inconclusive:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    print("OK")
    for k, v in cfg.resolved().items():
        print(f"  {k} = {v}")
    print(f"  estimated runtime ~ {estimate_runtime(cfg):.1f} s")
    print(f"  config hash {cfg.content_hash()}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ergolab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn, help_ in (("run", cmd_run, "run an experiment"), ("verify", cmd_verify, "validate a config")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config")
        sp.add_argument("--out", default=None, help="output directory (overrides output.dir)")
        sp.add_argument("--strict", action="store_true", help="exit 2 on an Inconclusive verdict")
        sp.add_argument("--threads", type=int, default=0, help="numba worker threads")
        sp.set_defaults(func=fn)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
