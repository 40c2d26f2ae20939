import hashlib
import json
import subprocess
import sys
from pathlib import Path

import pytest

from ergolab.cli import main
from ergolab.config import ConfigError, parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SMALL = """\
# small golden rotation
system.kind = Rotation
system.alpha = golden
orbit.T = 50000
orbit.seed = 11
"""


def write(tmp_path, text, name="exp.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def digest(folder):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(folder.iterdir())}


@pytest.mark.parametrize("cfg", sorted(CONFIGS.glob("*.cfg")), ids=lambda p: p.stem)
def test_shipped_configs_verify(cfg, capsys):
    assert main(["verify", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("OK") and "estimated runtime" in out


@pytest.mark.parametrize("text,line,fragment", [
    ("system.kind = Foo\norbit.T = 5000\norbit.seed = 1\n", 1, "system.kind"),
    ("system.kind = Rotation\norbit.seed = 1\norbit.T = 10\n", 3, "below the minimum"),
    ("system.kind = Rotation\norbit.T = 5000\n", None, "seeds are mandatory"),
    ("system.kind = Rotation\norbit.T = 5000\norbit.seed = 1\nbogus = 3\n", 4, "unknown key"),
    ("system.kind = Rotation\norbit.T = 5000\norbit.seed = 1\norbit.seed = 2\n", 4, "duplicate"),
    ("system.kind = Rotation\norbit.T = 5000\norbit.seed = 1\nthresholds.theta = 2\n", 4, "theta"),
    ("system.kind = Rotation\norbit.T = 5000\norbit.seed = 1\nladder.eps = 0.1, 0.2\n", 4, "decreasing"),
    ("system.kind = Rotation\norbit.T = 5000\norbit.seed = 1\nmetric.rule = sup\n", 4, "fiber"),
    ("system.kind = Rotation\norbit.T = 5000\norbit.seed = 1\njust text\n", 4, "key = value"),
])
def test_malformed_configs(tmp_path, capsys, text, line, fragment):
    p = write(tmp_path, text)
    assert main(["verify", str(p)]) == 1
    err = capsys.readouterr().err
    assert fragment in err
    if line is not None:
        assert f"{p}:{line}:" in err


def test_missing_file(tmp_path, capsys):
    assert main(["verify", str(tmp_path / "nope.cfg")]) == 1
    assert "cannot read" in capsys.readouterr().err


def test_config_hash_ignores_comments_and_order():
    a = parse_config(SMALL)
    b = parse_config("orbit.seed = 11\norbit.T = 50000\nsystem.alpha = golden\nsystem.kind = Rotation  # same\n")
    assert a.content_hash() == b.content_hash()
    assert a.content_hash() != parse_config(SMALL.replace("11", "12")).content_hash()


def test_parse_error_type():
    with pytest.raises(ConfigError):
        parse_config("mode = nonsense\n")


def test_run_writes_reports(tmp_path, capsys):
    cfg = write(tmp_path, SMALL)
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out)]) == 0
    assert capsys.readouterr().out.startswith("Hausdorff")
    assert {p.name for p in out.iterdir()} == {"verdict.json", "plaques.json", "conditionals.csv",
                                               "ladder.csv", "summary.txt"}
    rec = json.loads((out / "verdict.json").read_text())
    assert rec["verdict"] == "Hausdorff" and rec["config"]["orbit.seed"] == 11
    assert rec["thresholds"]["cv_max"] == 0.1
    assert (out / "ladder.csv").read_text().startswith("anchor_id,eps,mu_ball,lambda_ball,ratio\n")
    assert (out / "conditionals.csv").read_text().startswith("plaque_id,fiber_coord,weight\n")
    assert "verdict       Hausdorff" in (out / "summary.txt").read_text()


def test_runs_are_byte_identical(tmp_path):
    cfg = write(tmp_path, SMALL.replace("golden", "1/3"))
    assert main(["run", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["run", str(cfg), "--out", str(tmp_path / "b"), "--threads", "1"]) == 0
    assert digest(tmp_path / "a") == digest(tmp_path / "b")


def test_strict_exit_on_inconclusive(tmp_path):
    # a skew product with too few samples per plaque is inconclusive
    cfg = write(tmp_path, "system.kind = ProductDoublingRotation\norbit.T = 2000\norbit.seed = 1\n")
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert main(["run", str(cfg), "--out", str(tmp_path / "o"), "--strict"]) == 2
    assert json.loads((tmp_path / "o" / "verdict.json").read_text())["verdict"] == "Inconclusive"


def test_packing_mode(tmp_path):
    cfg = write(tmp_path, "mode = packing\npacking.n = 1\npacking.s_min_exp = 6\noutput.formats = json, csv\n")
    out = tmp_path / "p"
    assert main(["run", str(cfg), "--out", str(out)]) == 0
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["verdict"] == "certified"
    assert (out / "centers.csv").exists() and not (out / "summary.txt").exists()


def test_console_entry_point(tmp_path):
    cfg = write(tmp_path, SMALL)
    r = subprocess.run([sys.executable, "-m", "ergolab.cli", "verify", str(cfg)], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("OK")
