"""Config-driven command line front end.

A run is described by a TOML file (domain, command parameters, output
directory) and launched as

    plaplab <command> config.toml [--out DIR] [--mode MODE] [--quiet]

Commands: dist, ridge, solve, inflap, sweep, report.  Flags only
override the output directory, sweep/relaxation mode, and solver
multistart count; everything else lives in the config so runs are
reproducible.  Artifacts (CSV tables, JSON summaries, two-column .dat
plot data) carry no timestamps, and a manifest.json lists every written
file with its SHA-256, so re-running a config yields byte-identical
outputs.

Exit status: 0 when every counted verdict passes (or the command has no
verdicts), 1 on configuration or solver failure, 2 when a counted
verdict fails.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .geometry import (
    Annulus,
    Disk,
    GridDomain,
    Polygon,
    Rectangle,
    ScalarField,
    build_grid_domain,
    distance_field,
    inradius,
    lr_norm,
    max_set,
    ridge_set,
)
from .extremals import SolverOptions, minimize_extremal
from .infinity_laplace import ObstacleProblem, inf_lap_residual, solve_inf_laplace
from .asymptotics import (
    QProfile,
    SweepOptions,
    SweepReport,
    Verdict,
    q0_limit_check,
    run_sweep,
    sup_norm_trend,
)

COMMANDS = ("dist", "ridge", "solve", "inflap", "sweep", "report")
OUT_ENV = "PLAPLAB_OUT"


class ParseError(ValueError):
    """Config text is not valid TOML."""


class ValidationError(ValueError):
    """Config parsed but a key is missing, mistyped, or out of range."""


@dataclass
class RunConfig:
    """A validated run: fully resolved parameters, ready to execute."""

    command: str
    domain_spec: Optional[dict]
    out_dir: str
    h: float = 0.0
    # solve
    p: float = 4.0
    q: float = 2.0
    solver: SolverOptions = field(default_factory=SolverOptions)
    # inflap
    eps_radius: Optional[float] = None
    inflap_tol: Optional[float] = None
    max_sweeps: int = 10 ** 6
    mode: str = "gauss-seidel"
    init: str = "supersolution"
    obstacle: str = "max_set"
    m_val: float = 1.0
    # sweep / report
    ladder: tuple = ()
    profile: Optional[QProfile] = None
    limit_tol: float = 0.2
    report_csv: Optional[str] = None


def _need(table, key, kind, path):
    if key not in table:
        raise ValidationError(f"{path}.{key}: missing required key")
    val = table[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind) or isinstance(val, bool):
        raise ValidationError(
            f"{path}.{key}: expected {kind.__name__}, got {type(val).__name__}")
    return val


def _get(table, key, kind, path, default):
    if key not in table:
        return default
    return _need(table, key, kind, path)


def _parse_domain(table) -> dict:
    shape = _need(table, "shape", str, "domain")
    h = _need(table, "h", float, "domain")
    if h <= 0:
        raise ValidationError(f"domain.h: must be positive, got {h}")
    spec = {"shape": shape, "h": h}
    if shape == "disk":
        spec["center"] = tuple(_get(table, "center", list, "domain", [0.0, 0.0]))
        spec["radius"] = _need(table, "radius", float, "domain")
    elif shape == "square":
        spec["side"] = _get(table, "side", float, "domain", 1.0)
    elif shape == "rectangle":
        spec["width"] = _need(table, "width", float, "domain")
        spec["height"] = _need(table, "height", float, "domain")
    elif shape == "annulus":
        spec["center"] = tuple(_get(table, "center", list, "domain", [0.0, 0.0]))
        spec["r_in"] = _need(table, "r_in", float, "domain")
        spec["r_out"] = _need(table, "r_out", float, "domain")
    elif shape == "polygon":
        verts = _need(table, "vertices", list, "domain")
        spec["vertices"] = [tuple(map(float, v)) for v in verts]
    else:
        raise ValidationError(f"domain.shape: unknown shape {shape!r}")
    return spec


def build_domain(spec: dict) -> GridDomain:
    shape = spec["shape"]
    if shape == "disk":
        geom = Disk(tuple(spec["center"]), spec["radius"])
    elif shape == "square":
        geom = Rectangle(spec["side"], spec["side"])
    elif shape == "rectangle":
        geom = Rectangle(spec["width"], spec["height"])
    elif shape == "annulus":
        geom = Annulus(spec["r_in"], spec["r_out"], tuple(spec["center"]))
    else:
        geom = Polygon(tuple(spec["vertices"]))
    return build_grid_domain(geom, spec["h"])


def _parse_profile(table, path) -> QProfile:
    kind = _need(table, "profile", str, path)
    try:
        if kind == "constant_r":
            return QProfile.constant(_need(table, "r", float, path))
        if kind == "proportional":
            return QProfile.proportional(_need(table, "big_q", float, path))
        if kind == "power":
            return QProfile.power(_need(table, "alpha", float, path))
        if kind == "sqrt":
            return QProfile.sqrt()
    except ValueError as exc:
        raise ValidationError(f"{path}.profile: {exc}") from exc
    raise ValidationError(f"{path}.profile: unknown profile {kind!r}")


def _parse_solver(table, path) -> SolverOptions:
    return SolverOptions(
        max_iters=_get(table, "max_iters", int, path, 20000),
        grad_tol=_get(table, "grad_tol", float, path, 1e-6),
        multistart=_get(table, "multistart", int, path, 0),
        seed=_get(table, "seed", int, path, 0))


def parse_config(text: str, command: str | None = None,
                 overrides: dict | None = None) -> RunConfig:
    """Validate config text into a RunConfig; diagnostics name the key.

    overrides maps dotted keys ("solve.p", "sweep.profile") onto values,
    applied after the TOML load so flag overrides share the validation
    path.
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"config is not valid TOML: {exc}") from exc
    for dotted, value in (overrides or {}).items():
        table, key = dotted.rsplit(".", 1)
        raw.setdefault(table, {})[key] = value

    command = command or raw.get("command")
    if command not in COMMANDS:
        raise ValidationError(
            f"command: expected one of {COMMANDS}, got {command!r}")

    out_dir = "plaplab_out"
    if "output" in raw:
        out_dir = _get(raw["output"], "dir", str, "output", out_dir)

    domain_spec = None
    if command != "report":
        if "domain" not in raw:
            raise ValidationError("domain: missing required table")
        domain_spec = _parse_domain(raw["domain"])

    cfg = RunConfig(command=command, domain_spec=domain_spec, out_dir=out_dir,
                    h=domain_spec["h"] if domain_spec else 0.0)

    if command == "solve":
        table = raw.get("solve", {})
        cfg.p = _need(table, "p", float, "solve")
        cfg.q = _need(table, "q", float, "solve")
        if cfg.p < 2:
            raise ValidationError(f"solve.p: p >= 2 required, got {cfg.p}")
        if cfg.q < 1:
            raise ValidationError(f"solve.q: q >= 1 required, got {cfg.q}")
        cfg.solver = _parse_solver(table, "solve")
    elif command == "inflap":
        table = raw.get("inflap", {})
        cfg.eps_radius = _get(table, "eps_radius", float, "inflap", None)
        cfg.inflap_tol = _get(table, "tol", float, "inflap", None)
        cfg.max_sweeps = _get(table, "max_sweeps", int, "inflap", 10 ** 6)
        cfg.mode = _get(table, "mode", str, "inflap", "gauss-seidel")
        cfg.init = _get(table, "init", str, "inflap", "supersolution")
        cfg.obstacle = _get(table, "obstacle", str, "inflap", "max_set")
        cfg.m_val = _get(table, "m_val", float, "inflap", 1.0)
        if cfg.mode not in ("gauss-seidel", "jacobi"):
            raise ValidationError(f"inflap.mode: unknown mode {cfg.mode!r}")
        if cfg.init not in ("supersolution", "zero"):
            raise ValidationError(f"inflap.init: unknown init {cfg.init!r}")
        if cfg.obstacle not in ("max_set", "none"):
            raise ValidationError(f"inflap.obstacle: unknown obstacle {cfg.obstacle!r}")
    elif command in ("sweep", "report"):
        table = raw.get("sweep", {})
        ladder = _need(table, "ladder", list, "sweep")
        cfg.ladder = tuple(float(p) for p in ladder)
        if any(b <= a for a, b in zip(cfg.ladder, cfg.ladder[1:])) or (
                cfg.ladder and cfg.ladder[0] <= 2):
            raise ValidationError(
                f"sweep.ladder: needs a strictly increasing ladder with "
                f"min > 2, got {list(cfg.ladder)}")
        cfg.profile = _parse_profile(table, "sweep")
        for p in cfg.ladder:
            if cfg.profile.q_of(p) < 1:
                raise ValidationError(
                    f"sweep.profile: q >= 1 required, got q={cfg.profile.q_of(p)} "
                    f"at p={p}")
        cfg.limit_tol = _get(table, "limit_tol", float, "sweep", 0.2)
        cfg.solver = _parse_solver(table, "sweep")
        if command == "report":
            cfg.report_csv = _need(raw.get("report", {}), "csv", str, "report")
    return cfg


# ---------------------------------------------------------------------------
# artifact writers
# ---------------------------------------------------------------------------

def _write_field_csv(path, field_data: ScalarField):
    dom = field_data.domain
    lines = ["x,y,value"]
    for i, j in np.argwhere(dom.defined):
        lines.append(f"{float(dom.xs[i])!r},{float(dom.ys[j])!r},"
                     f"{float(field_data.values[i, j])!r}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_points_csv(path, domain: GridDomain, mask: np.ndarray):
    lines = ["x,y"]
    for i, j in np.argwhere(mask):
        lines.append(f"{float(domain.xs[i])!r},{float(domain.ys[j])!r}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_dat(path, pairs):
    with open(path, "w", newline="\n") as fh:
        for x, y in pairs:
            fh.write(f"{float(x)!r} {float(y)!r}\n")


def _write_json(path, payload):
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(out_dir, names):
    entries = {}
    for name in sorted(names):
        digest = hashlib.sha256()
        with open(os.path.join(out_dir, name), "rb") as fh:
            digest.update(fh.read())
        entries[name] = digest.hexdigest()
    _write_json(os.path.join(out_dir, "manifest.json"), {"files": entries})


def _verdict_payload(verdicts: dict[str, tuple[Verdict, bool]]):
    return {name: {"status": v.status, "detail": v.detail, "counted": counted}
            for name, (v, counted) in verdicts.items()}


def _exit_from_verdicts(verdicts: dict[str, tuple[Verdict, bool]]) -> int:
    for v, counted in verdicts.values():
        if counted and v.status == "fail":
            return 2
    return 0


# ---------------------------------------------------------------------------
# command bodies
# ---------------------------------------------------------------------------

def _cmd_dist(cfg, out_dir):
    dom = build_domain(cfg.domain_spec)
    d = distance_field(dom)
    _write_field_csv(os.path.join(out_dir, "dist.csv"), d)
    _write_json(os.path.join(out_dir, "summary.json"), {
        "command": "dist", "h": cfg.h,
        "inradius": inradius(d), "volume": dom.volume,
        "interior_nodes": int(dom.interior.sum())})
    return ["dist.csv", "summary.json"], {}


def _cmd_ridge(cfg, out_dir):
    dom = build_domain(cfg.domain_spec)
    d = distance_field(dom)
    ridge = ridge_set(dom)
    peak = max_set(d)
    _write_points_csv(os.path.join(out_dir, "ridge.csv"), dom, ridge.mask)
    _write_points_csv(os.path.join(out_dir, "max_set.csv"), dom, peak.mask)
    _write_json(os.path.join(out_dir, "summary.json"), {
        "command": "ridge", "h": cfg.h,
        "ridge_nodes": int(ridge.mask.sum()),
        "max_set_nodes": int(peak.mask.sum()),
        "max_in_ridge": bool((peak.mask <= ridge.mask).all())})
    return ["ridge.csv", "max_set.csv", "summary.json"], {}


def _cmd_solve(cfg, out_dir):
    dom = build_domain(cfg.domain_spec)
    res = minimize_extremal(dom, cfg.p, cfg.q, cfg.solver)
    _write_field_csv(os.path.join(out_dir, "u.csv"), res.u)
    _write_json(os.path.join(out_dir, "summary.json"), {
        "command": "solve", "h": cfg.h, "p": cfg.p, "q": cfg.q,
        "lambda": res.lam if math.isfinite(res.lam) else None,
        "log_lambda": res.log_lam, "lambda_root": res.lam_root,
        "sup_norm": lr_norm(res.u, math.inf), "residual": res.residual,
        "iterations": res.iterations, "converged": res.converged,
        "clip_events": res.clip_events})
    return ["u.csv", "summary.json"], {}


def _cmd_inflap(cfg, out_dir):
    dom = build_domain(cfg.domain_spec)
    obstacle = max_set(distance_field(dom)) if cfg.obstacle == "max_set" else None
    prob = ObstacleProblem(dom, obstacle=obstacle, m_val=cfg.m_val)
    sol = solve_inf_laplace(
        prob, eps_radius=cfg.eps_radius, tol=cfg.inflap_tol,
        max_sweeps=cfg.max_sweeps, mode=cfg.mode, init=cfg.init)
    _write_field_csv(os.path.join(out_dir, "u.csv"), sol.u)
    _write_json(os.path.join(out_dir, "summary.json"), {
        "command": "inflap", "h": cfg.h, "mode": cfg.mode,
        "eps_radius": sol.eps_radius, "sweeps": sol.iterations,
        "sup_update": sol.sup_update, "converged": sol.converged,
        "policy_jumps": sol.policy_jumps,
        "residual": inf_lap_residual(sol.u, exclude=obstacle)})
    return ["u.csv", "summary.json"], {}


def _sweep_verdicts(report: SweepReport, cfg, domain) -> dict:
    """Regime-dispatched verdicts; counted ones decide the exit code."""
    profile = report.profile
    out: dict[str, tuple[Verdict, bool]] = {}
    if profile.kind == "custom":
        out["limit"] = (report.limit_verdict(cfg.limit_tol), False)
        out["shape_gap"] = (q0_limit_check(domain, report), True)
    else:
        out["limit"] = (report.limit_verdict(cfg.limit_tol), True)
        if profile.q_to_infinity:
            out["sup_norm"] = (sup_norm_trend(report), True)
    return out


def _cmd_sweep(cfg, out_dir):
    dom = build_domain(cfg.domain_spec)
    opts = SweepOptions(solver=cfg.solver, limit_tol=cfg.limit_tol)
    report = run_sweep(dom, cfg.ladder, cfg.profile, opts)
    report.to_csv(os.path.join(out_dir, "report.csv"))
    _write_dat(os.path.join(out_dir, "lambda_vs_p.dat"), report.lambda_series())
    _write_dat(os.path.join(out_dir, "gap_vs_p.dat"), report.gap_series())
    names = ["report.csv", "lambda_vs_p.dat", "gap_vs_p.dat", "summary.json"]
    if report.final_u is not None:
        _write_field_csv(os.path.join(out_dir, "u_final.csv"), report.final_u)
        names.append("u_final.csv")
    verdicts = _sweep_verdicts(report, cfg, dom)
    _write_json(os.path.join(out_dir, "summary.json"), {
        "command": "sweep", "h": cfg.h, "profile": cfg.profile.describe(),
        "ladder": list(cfg.ladder), "limit_tol": cfg.limit_tol,
        "predicted_limit": report.predicted,
        "failures": [{"p": p, "error": msg} for p, msg in report.failures],
        "verdicts": _verdict_payload(verdicts)})
    if report.failures:
        return names, verdicts, 1
    return names, verdicts


def _cmd_report(cfg, out_dir):
    report = SweepReport.from_csv(cfg.report_csv, cfg.profile)
    dom = None  # verdicts are pure functions of the table
    verdicts = _sweep_verdicts(report, cfg, dom)
    _write_json(os.path.join(out_dir, "summary.json"), {
        "command": "report", "source": os.path.basename(cfg.report_csv),
        "profile": cfg.profile.describe(), "limit_tol": cfg.limit_tol,
        "verdicts": _verdict_payload(verdicts)})
    return ["summary.json"], verdicts


def execute(cfg: RunConfig) -> int:
    """Run one validated config; returns the process exit status."""
    out_dir = cfg.out_dir
    try:
        os.makedirs(out_dir, exist_ok=True)
        probe = os.path.join(out_dir, ".write_probe")
        with open(probe, "w") as fh:
            fh.write("")
        os.remove(probe)
    except OSError as exc:
        print(f"error: output dir {out_dir!r} not writable: {exc}", file=sys.stderr)
        return 1

    body = {"dist": _cmd_dist, "ridge": _cmd_ridge, "solve": _cmd_solve,
            "inflap": _cmd_inflap, "sweep": _cmd_sweep, "report": _cmd_report}
    try:
        result = body[cfg.command](cfg, out_dir)
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    names, verdicts, *forced = result
    _write_manifest(out_dir, names)
    if forced:
        return forced[0]
    return _exit_from_verdicts(verdicts)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plaplab",
        description="Grid laboratory for p-Laplacian extremals and their limits.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("config", help="TOML config file")
    parser.add_argument("--out", help="output directory (overrides config and "
                        f"${OUT_ENV})")
    parser.add_argument("--mode", choices=("gauss-seidel", "jacobi"),
                        help="relaxation mode override")
    parser.add_argument("--multistart", type=int, help="solver multistart override")
    parser.add_argument("--p", type=float, help="exponent override for solve")
    parser.add_argument("--q", type=float, help="exponent override for solve")
    parser.add_argument("--profile", help="profile kind override for sweep")
    parser.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1
    overrides = {}
    if args.p is not None:
        overrides["solve.p"] = args.p
    if args.q is not None:
        overrides["solve.q"] = args.q
    if args.profile is not None:
        overrides["sweep.profile"] = args.profile
    try:
        cfg = parse_config(text, args.command, overrides)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.out:
        cfg.out_dir = args.out
    elif os.environ.get(OUT_ENV) and cfg.out_dir == "plaplab_out":
        cfg.out_dir = os.environ[OUT_ENV]
    if args.mode:
        cfg.mode = args.mode
    if args.multistart is not None:
        cfg.solver = dataclasses.replace(cfg.solver, multistart=args.multistart)

    status = execute(cfg)
    if not args.quiet:
        print(f"{cfg.command}: exit {status}, artifacts in {cfg.out_dir}")
    return status


if __name__ == "__main__":
    sys.exit(main())
