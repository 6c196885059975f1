"""Config parsing, artifact layout, determinism, exit codes."""

import hashlib
import json
import math

import pytest

from plaplab import build_grid_domain, Rectangle
from plaplab.cli import (
    ParseError,
    RunConfig,
    ValidationError,
    execute,
    main,
    parse_config,
)

from oracles import laplacian_min_eig

DISK_TOML = """
[domain]
shape = "disk"
center = [0.0, 0.0]
radius = 1.0
h = 0.0625
"""

SQUARE_TOML = """
[domain]
shape = "square"
h = 0.125
"""


def _summary(out_dir):
    with open(out_dir / "summary.json") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# parsing and validation
# ---------------------------------------------------------------------------

def test_parse_rejects_bad_toml():
    with pytest.raises(ParseError):
        parse_config("this is not toml [", "dist")


def test_parse_rejects_unknown_command():
    with pytest.raises(ValidationError, match="command"):
        parse_config(SQUARE_TOML, "fly")


def test_parse_requires_domain():
    with pytest.raises(ValidationError, match="domain"):
        parse_config('[solve]\np = 4.0\nq = 2.0\n', "solve")


@pytest.mark.parametrize("text,needle", [
    (SQUARE_TOML.replace('"square"', '"blob"'), "domain.shape"),
    (SQUARE_TOML.replace("0.125", "-0.125"), "domain.h"),
    (SQUARE_TOML + '[solve]\nq = 2.0\n', "solve.p"),
    (SQUARE_TOML + '[solve]\np = 1.5\nq = 2.0\n', "p >= 2"),
    (SQUARE_TOML + '[solve]\np = 4.0\nq = 0.5\n', "q >= 1"),
    (SQUARE_TOML + '[solve]\np = "four"\nq = 2.0\n', "solve.p: expected float"),
    (SQUARE_TOML + '[solve]\np = true\nq = 2.0\n', "solve.p"),
    (SQUARE_TOML + '[inflap]\nmode = "hexagonal"\n', "inflap.mode"),
])
def test_parse_diagnostics_name_the_key(text, needle):
    cmd = "inflap" if "inflap" in text else "solve"
    with pytest.raises(ValidationError, match=needle):
        parse_config(text, cmd)


@pytest.mark.parametrize("sweep,needle", [
    ('ladder = [4.0, 4.0]\nprofile = "constant_r"\nr = 2.0\n', "sweep.ladder"),
    ('ladder = [2.0, 4.0]\nprofile = "constant_r"\nr = 2.0\n', "sweep.ladder"),
    ('ladder = [4.0, 8.0]\nprofile = "constant_r"\n', "sweep.r"),
    ('ladder = [4.0, 8.0]\nprofile = "warp"\n', "sweep.profile"),
    ('ladder = [4.0, 8.0]\nprofile = "power"\nalpha = 1.0\n', "sweep.profile"),
    ('ladder = [4.0, 8.0]\nprofile = "constant_r"\nr = 0.5\n', "sweep.profile"),
])
def test_parse_ladder_and_profile_errors(sweep, needle):
    with pytest.raises(ValidationError, match=needle):
        parse_config(SQUARE_TOML + "[sweep]\n" + sweep, "sweep")


def test_parse_report_requires_csv():
    text = '[sweep]\nladder = [4.0, 8.0]\nprofile = "sqrt"\n'
    with pytest.raises(ValidationError, match="report.csv"):
        parse_config(text, "report")


def test_parse_defaults_and_overrides():
    cfg = parse_config(SQUARE_TOML + '[solve]\np = 4\nq = 2\n', "solve")
    assert cfg.out_dir == "plaplab_out"
    assert (cfg.p, cfg.q) == (4.0, 2.0)
    assert cfg.solver.grad_tol == 1e-6
    assert cfg.solver.multistart == 0
    cfg2 = parse_config(SQUARE_TOML + '[solve]\np = 4\nq = 2\n', "solve",
                        overrides={"solve.q": 8.0, "output.dir": "elsewhere"})
    assert cfg2.q == 8.0
    assert cfg2.out_dir == "elsewhere"
    embedded = parse_config('command = "dist"\n' + SQUARE_TOML)
    assert embedded.command == "dist"


# ---------------------------------------------------------------------------
# command execution and artifacts
# ---------------------------------------------------------------------------

def test_dist_artifacts(tmp_path):
    cfg = parse_config(SQUARE_TOML, "dist")
    cfg.out_dir = str(tmp_path)
    assert execute(cfg) == 0
    body = (tmp_path / "dist.csv").read_text()
    assert body.splitlines()[0] == "x,y,value"
    assert "0.5,0.5,0.5" in body
    summary = _summary(tmp_path)
    assert summary["inradius"] == pytest.approx(0.5)
    assert summary["volume"] == pytest.approx(
        summary["interior_nodes"] * 0.125 ** 2)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert set(manifest["files"]) == {"dist.csv", "summary.json"}
    digest = hashlib.sha256((tmp_path / "dist.csv").read_bytes()).hexdigest()
    assert manifest["files"]["dist.csv"] == digest


def test_ridge_artifacts(tmp_path):
    text = '[domain]\nshape = "rectangle"\nwidth = 1.5\nheight = 1.0\nh = 0.125\n'
    cfg = parse_config(text, "ridge")
    cfg.out_dir = str(tmp_path)
    assert execute(cfg) == 0
    summary = _summary(tmp_path)
    assert summary["max_in_ridge"] is True
    assert summary["ridge_nodes"] >= summary["max_set_nodes"] > 0
    header = (tmp_path / "ridge.csv").read_text().splitlines()[0]
    assert header == "x,y"


def test_solve_matches_oracle(tmp_path):
    cfg = parse_config(SQUARE_TOML + '[solve]\np = 2.0\nq = 2.0\n', "solve")
    cfg.out_dir = str(tmp_path)
    assert execute(cfg) == 0
    summary = _summary(tmp_path)
    dom = build_grid_domain(Rectangle(1.0, 1.0), 0.125)
    lam_ref, _ = laplacian_min_eig(dom)
    assert summary["lambda"] == pytest.approx(lam_ref, rel=1e-5)
    assert summary["converged"] is True
    assert (tmp_path / "u.csv").exists()


def test_inflap_runs_and_reports(tmp_path):
    cfg = parse_config(DISK_TOML, "inflap")
    cfg.out_dir = str(tmp_path)
    assert execute(cfg) == 0
    summary = _summary(tmp_path)
    assert summary["converged"] is True
    assert summary["mode"] == "gauss-seidel"
    assert summary["sweeps"] > 0
    assert math.isfinite(summary["residual"])


SWEEP_TOML = SQUARE_TOML.replace("0.125", "0.0625") + """
[sweep]
ladder = [4.0, 8.0, 16.0]
profile = "constant_r"
r = 2.0
limit_tol = 0.5
grad_tol = 1e-4
max_iters = 4000
"""


@pytest.fixture(scope="module")
def sweep_runs(tmp_path_factory):
    outs = []
    for name in ("a", "b"):
        out = tmp_path_factory.mktemp(name)
        cfg = parse_config(SWEEP_TOML, "sweep")
        cfg.out_dir = str(out)
        assert execute(cfg) == 0
        outs.append(out)
    return outs


def test_sweep_artifacts_and_determinism(sweep_runs):
    one, two = sweep_runs
    names = {"report.csv", "lambda_vs_p.dat", "gap_vs_p.dat", "summary.json",
             "u_final.csv"}
    manifest = json.loads((one / "manifest.json").read_text())
    assert set(manifest["files"]) == names
    for name in names:
        assert (one / name).read_bytes() == (two / name).read_bytes()
    assert (one / "manifest.json").read_bytes() == (two / "manifest.json").read_bytes()
    summary = _summary(one)
    assert summary["verdicts"]["limit"]["counted"] is True
    assert summary["verdicts"]["limit"]["status"] == "pass"
    assert "sup_norm" not in summary["verdicts"]


def test_report_reproduces_verdicts(sweep_runs, tmp_path):
    src = sweep_runs[0]
    text = SWEEP_TOML + f'[report]\ncsv = "{src / "report.csv"}"\n'
    cfg = parse_config(text, "report")
    cfg.out_dir = str(tmp_path)
    assert execute(cfg) == 0
    assert _summary(tmp_path)["verdicts"] == _summary(src)["verdicts"]


def test_report_can_fail_with_exit_2(sweep_runs, tmp_path):
    src = sweep_runs[0]
    text = SWEEP_TOML.replace("limit_tol = 0.5", "limit_tol = 1e-9")
    text += f'[report]\ncsv = "{src / "report.csv"}"\n'
    cfg = parse_config(text, "report")
    cfg.out_dir = str(tmp_path)
    assert execute(cfg) == 2
    assert _summary(tmp_path)["verdicts"]["limit"]["status"] == "fail"


def test_unwritable_out_dir_exits_1(capsys):
    cfg = parse_config(SQUARE_TOML, "dist")
    cfg.out_dir = "/proc/definitely/not/writable"
    assert execute(cfg) == 1
    assert "not writable" in capsys.readouterr().err


def test_solver_failure_exits_1(tmp_path, capsys):
    cfg = RunConfig(command="report", domain_spec=None, out_dir=str(tmp_path),
                    profile=None, report_csv=str(tmp_path / "missing.csv"))
    assert execute(cfg) == 1
    assert "error" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# the console entry point
# ---------------------------------------------------------------------------

def test_main_missing_config_exits_1(tmp_path, capsys):
    assert main(["dist", str(tmp_path / "nope.toml"), "--quiet"]) == 1
    assert "cannot read config" in capsys.readouterr().err


def test_main_invalid_config_exits_1(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text(SQUARE_TOML + '[solve]\np = 4.0\nq = 0.5\n')
    assert main(["solve", str(path), "--quiet"]) == 1
    assert "q >= 1 required" in capsys.readouterr().err


def test_main_out_flag_and_exponent_overrides(tmp_path):
    path = tmp_path / "solve.toml"
    path.write_text(SQUARE_TOML + '[solve]\np = 4.0\nq = 2.0\n')
    out = tmp_path / "run"
    assert main(["solve", str(path), "--out", str(out), "--p", "2",
                 "--q", "2", "--quiet"]) == 0
    summary = _summary(out)
    assert (summary["p"], summary["q"]) == (2.0, 2.0)


def test_main_env_out_fallback(tmp_path, monkeypatch):
    path = tmp_path / "dist.toml"
    path.write_text(SQUARE_TOML)
    env_out = tmp_path / "envout"
    monkeypatch.setenv("PLAPLAB_OUT", str(env_out))
    assert main(["dist", str(path), "--quiet"]) == 0
    assert (env_out / "dist.csv").exists()
    # an explicit config dir beats the environment
    other = tmp_path / "explicit"
    path.write_text(f'[output]\ndir = "{other}"\n' + SQUARE_TOML)
    assert main(["dist", str(path), "--quiet"]) == 0
    assert (other / "dist.csv").exists()


def test_main_mode_override(tmp_path):
    path = tmp_path / "inflap.toml"
    path.write_text(DISK_TOML)
    out = tmp_path / "run"
    assert main(["inflap", str(path), "--out", str(out), "--mode", "jacobi",
                 "--quiet"]) == 0
    assert _summary(out)["mode"] == "jacobi"


def test_main_prints_status_line(tmp_path, capsys):
    path = tmp_path / "dist.toml"
    path.write_text(SQUARE_TOML)
    out = tmp_path / "run"
    assert main(["dist", str(path), "--out", str(out)]) == 0
    assert "dist: exit 0" in capsys.readouterr().out
