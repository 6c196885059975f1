"""Exponent-ladder sweeps and their large-p limit checks.

A sweep walks an increasing ladder of gradient exponents p with a paired
integrability exponent q(p), minimizing the Rayleigh quotient at each
rung (warm-started from the rung below) and recording lambda^(1/p), the
extremal's norms, two-sided sandwich bounds, and the gap to the
predicted limit profile.  Verdict helpers then ask whether the recorded
columns actually trend toward the prediction:

  * q(p) -> infinity: lambda^(1/p) -> 1/inradius and sup u -> 1;
  * q(p) = r fixed:   lambda^(1/p) -> 1/||d||_r with u -> d/||d||_r;
  * q(p)/p -> infinity (hyperdiffusive): the final extremal develops a
    plateau at height 1 and matches the midrange obstacle solution;
  * q(p) -> infinity with q(p)/p -> 0: u approaches d/||d||_inf.

Every verdict is a pure function of the report table, so a report read
back from CSV reproduces the same verdicts without re-solving.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .geometry import (
    GridDomain,
    PointSet,
    ScalarField,
    distance_field,
    inradius,
    lr_norm,
    max_set,
)
from .extremals import (
    ExtremalResult,
    SolverOptions,
    least_energy_from_extremal,
    minimize_extremal,
    sup_norm_extremal,
)
from .infinity_laplace import ObstacleProblem, min_eq_residual, solve_inf_laplace


class WrongRegime(ValueError):
    """Verdict requested for a profile outside its regime."""


class EmptyM(ValueError):
    """No node reaches the plateau threshold (p too small or tol_M = 0)."""


class SandwichViolation(RuntimeError):
    """A sweep row broke the two-sided lambda^(1/p) bounds."""


class BadLadder(ValueError):
    """Exponent ladders must be increasing with every p > 2."""


# ---------------------------------------------------------------------------
# exponent profiles
# ---------------------------------------------------------------------------

_Q_KINDS = ("constant_r", "proportional", "power", "custom")
_MU_KINDS = ("lambda_itself", "Lambda_power", "Theta_power")


@dataclass(frozen=True)
class QProfile:
    """The map p -> q(p) walked by a sweep.

    kinds: "constant_r" holds q at r; "proportional" uses q = big_q * p;
    "power" uses q = p**alpha with alpha > 1 (so q/p diverges);
    "custom" wraps an arbitrary callable, treated as a q -> infinity
    profile for limit prediction.  label names custom profiles in
    reports.
    """

    kind: str
    r: Optional[float] = None
    big_q: Optional[float] = None
    alpha: Optional[float] = None
    func: Optional[Callable[[float], float]] = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in _Q_KINDS:
            raise ValueError(f"unknown q-profile kind {self.kind!r}")
        if self.kind == "constant_r":
            if self.r is None or self.r < 1:
                raise ValueError(f"constant_r needs r >= 1, got {self.r}")
        elif self.kind == "proportional":
            if self.big_q is None or self.big_q <= 0:
                raise ValueError(f"proportional needs big_q > 0, got {self.big_q}")
        elif self.kind == "power":
            if self.alpha is None or self.alpha <= 1:
                raise ValueError(f"power needs alpha > 1, got {self.alpha}")
        elif self.func is None:
            raise ValueError("custom profile needs a callable func")

    def q_of(self, p: float) -> float:
        if self.kind == "constant_r":
            return float(self.r)
        if self.kind == "proportional":
            return float(self.big_q * p)
        if self.kind == "power":
            return float(p ** self.alpha)
        return float(self.func(p))

    @property
    def q_to_infinity(self) -> bool:
        return self.kind != "constant_r"

    def describe(self) -> str:
        if self.kind == "constant_r":
            return f"q={self.r:g}"
        if self.kind == "proportional":
            return f"q={self.big_q:g}*p"
        if self.kind == "power":
            return f"q=p^{self.alpha:g}"
        return self.label or "q=custom(p)"

    @staticmethod
    def constant(r: float) -> "QProfile":
        return QProfile(kind="constant_r", r=r)

    @staticmethod
    def proportional(big_q: float) -> "QProfile":
        return QProfile(kind="proportional", big_q=big_q)

    @staticmethod
    def power(alpha: float) -> "QProfile":
        return QProfile(kind="power", alpha=alpha)

    @staticmethod
    def sqrt() -> "QProfile":
        """q = sqrt(p): q diverges while q/p -> 0."""
        return QProfile(kind="custom", func=math.sqrt, label="q=sqrt(p)")


@dataclass(frozen=True)
class MuProfile:
    """Right-hand-side coefficient schedule mu_p for rescaled solutions.

    "lambda_itself" takes mu_p equal to the computed quotient (so the
    rescaled field is the extremal unchanged); "Lambda_power" uses
    mu_p = lam_cap**p; "Theta_power" uses mu_p = theta**q(p), whose
    rescaled sup norm approaches theta**-1 in hyperdiffusive ladders.
    """

    kind: str
    lam_cap: Optional[float] = None
    theta: Optional[float] = None

    def __post_init__(self):
        if self.kind not in _MU_KINDS:
            raise ValueError(f"unknown mu-profile kind {self.kind!r}")
        if self.kind == "Lambda_power" and (self.lam_cap is None or self.lam_cap <= 0):
            raise ValueError(f"Lambda_power needs lam_cap > 0, got {self.lam_cap}")
        if self.kind == "Theta_power" and (self.theta is None or self.theta <= 0):
            raise ValueError(f"Theta_power needs theta > 0, got {self.theta}")

    def log_mu(self, res: ExtremalResult) -> float:
        if self.kind == "lambda_itself":
            return res.log_lam
        if self.kind == "Lambda_power":
            return res.p * math.log(self.lam_cap)
        return res.q * math.log(self.theta)

    def predicted_factor(self, res: ExtremalResult) -> float:
        """Expected ||v||_inf / ||u||_inf with the computed quotient.

        The limit formulas replace lambda^(1/p) by its limit; here the
        computed value stands in, so "Lambda_power" reduces to an exact
        algebraic identity and "Theta_power" measures finite-p drift
        against theta**-1.
        """
        if self.kind == "lambda_itself":
            return 1.0
        if self.kind == "Theta_power":
            return 1.0 / self.theta
        q_ratio = res.q / res.p
        return math.exp(math.log(res.lam_root / self.lam_cap) / (q_ratio - 1.0))


def predicted_limit(profile: QProfile, dist: ScalarField) -> float:
    """Limit of lambda^(1/p) under the profile: 1/||d||_r or 1/inradius."""
    if profile.kind == "constant_r":
        return 1.0 / lr_norm(dist, profile.r)
    return 1.0 / inradius(dist)


# ---------------------------------------------------------------------------
# sweep reports
# ---------------------------------------------------------------------------

_CSV_COLUMNS = (
    "p", "q", "lam", "log_lam", "lam_root", "sup_norm", "q_norm",
    "lambda_sup", "sandwich_lo", "sandwich_hi", "predicted_limit",
    "limit_error", "gap_cone", "gap_r", "iterations", "residual",
    "clip_events", "converged",
)


@dataclass(frozen=True)
class SweepRow:
    """One ladder rung: exponents, observables, bounds, diagnostics.

    gap_cone is sup|u - d/||d||_inf|; gap_r is sup|u - d/||d||_r| for
    constant-q profiles and nan otherwise.  lambda_sup is the minimal
    gradient p-norm among unit-sup-norm fields, giving sandwich_lo.
    """

    p: float
    q: float
    lam: float
    log_lam: float
    lam_root: float
    sup_norm: float
    q_norm: float
    lambda_sup: float
    sandwich_lo: float
    sandwich_hi: float
    predicted_limit: float
    limit_error: float
    gap_cone: float
    gap_r: float
    iterations: int
    residual: float
    clip_events: int
    converged: bool

    def as_csv_values(self):
        out = []
        for name in _CSV_COLUMNS:
            v = getattr(self, name)
            if isinstance(v, bool):
                out.append(str(int(v)))
            elif isinstance(v, int):
                out.append(str(v))
            else:
                out.append(repr(float(v)))
        return out


@dataclass(frozen=True)
class Verdict:
    status: str  # "pass" | "fail" | "indeterminate"
    detail: str

    def __bool__(self):
        return self.status == "pass"


@dataclass
class SweepReport:
    """Ladder results plus the per-rung extremals for limit-shape checks.

    results holds one ExtremalResult per successful rung (same order as
    rows); it is not serialized, so a report read back from CSV carries
    rows and verdicts only.
    """

    profile: QProfile
    rows: list[SweepRow]
    volume: float
    predicted: float
    failures: list[tuple[float, str]] = field(default_factory=list)
    results: list[ExtremalResult] = field(default_factory=list)

    @property
    def final_result(self) -> Optional[ExtremalResult]:
        return self.results[-1] if self.results else None

    @property
    def final_u(self) -> Optional[ScalarField]:
        return self.final_result.u if self.final_result is not None else None

    def limit_verdict(self, limit_tol: float = 0.2) -> Verdict:
        errs = [row.limit_error for row in self.rows]
        return _trend_verdict(errs, limit_tol, "limit_error")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(_CSV_COLUMNS)
            for row in self.rows:
                writer.writerow(row.as_csv_values())

    @classmethod
    def from_csv(cls, path, profile: QProfile) -> "SweepReport":
        rows = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or tuple(reader.fieldnames) != _CSV_COLUMNS:
                raise ValueError(f"unexpected report columns in {path}")
            for rec in reader:
                rows.append(SweepRow(
                    p=float(rec["p"]), q=float(rec["q"]),
                    lam=float(rec["lam"]), log_lam=float(rec["log_lam"]),
                    lam_root=float(rec["lam_root"]),
                    sup_norm=float(rec["sup_norm"]), q_norm=float(rec["q_norm"]),
                    lambda_sup=float(rec["lambda_sup"]),
                    sandwich_lo=float(rec["sandwich_lo"]),
                    sandwich_hi=float(rec["sandwich_hi"]),
                    predicted_limit=float(rec["predicted_limit"]),
                    limit_error=float(rec["limit_error"]),
                    gap_cone=float(rec["gap_cone"]), gap_r=float(rec["gap_r"]),
                    iterations=int(rec["iterations"]),
                    residual=float(rec["residual"]),
                    clip_events=int(rec["clip_events"]),
                    converged=bool(int(rec["converged"])),
                ))
        predicted = rows[-1].predicted_limit if rows else math.nan
        return cls(profile=profile, rows=rows, volume=math.nan,
                   predicted=predicted)

    def lambda_series(self):
        return [(row.p, row.lam_root) for row in self.rows]

    def gap_series(self):
        return [(row.p, row.limit_error) for row in self.rows]


def _trend_verdict(errs: Sequence[float], final_tol: float, name: str) -> Verdict:
    if len(errs) < 3:
        return Verdict("indeterminate", f"need 3 rungs for a {name} trend, have {len(errs)}")
    tail = errs[-3:]
    nonincreasing = all(b <= a + 1e-12 for a, b in zip(tail, tail[1:]))
    final_ok = errs[-1] <= final_tol
    detail = (f"{name} tail {tail[0]:.6g} -> {tail[1]:.6g} -> {tail[2]:.6g}, "
              f"final tol {final_tol:g}")
    if nonincreasing and final_ok:
        return Verdict("pass", detail)
    why = []
    if not nonincreasing:
        why.append("tail not nonincreasing")
    if not final_ok:
        why.append(f"final {errs[-1]:.6g} > {final_tol:g}")
    return Verdict("fail", detail + "; " + ", ".join(why))


# ---------------------------------------------------------------------------
# the sweep driver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepOptions:
    """Ladder-level knobs; solver carries the per-rung descent options."""

    solver: SolverOptions = field(default_factory=SolverOptions)
    limit_tol: float = 0.2
    sandwich_slack: float = 0.05
    warm_start: bool = True
    check_sandwich: bool = True


def run_sweep(domain: GridDomain, p_ladder: Sequence[float],
              profile: QProfile, opts: SweepOptions | None = None) -> SweepReport:
    """Walk the ladder, one constrained minimization (and one sup-norm
    minimization, for the lower sandwich bound) per rung.

    Rungs failing inside the solver are recorded in report.failures and
    the sweep continues.  A row whose lambda^(1/p) escapes the sandwich
    bounds by more than sandwich_slack raises SandwichViolation: that
    means the minimizer is wrong, not merely unconverged.
    """
    opts = opts or SweepOptions()
    ladder = [float(p) for p in p_ladder]
    if not ladder or any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise BadLadder(f"ladder must be strictly increasing, got {ladder}")
    if ladder[0] <= 2:
        raise BadLadder(f"ladder exponents must exceed 2, got min {ladder[0]}")
    for p in ladder:
        if profile.q_of(p) < 1:
            raise BadLadder(f"profile gives q={profile.q_of(p)} < 1 at p={p}")

    d = distance_field(domain)
    predicted = predicted_limit(profile, d)
    d_inf = lr_norm(d, math.inf)
    cone = d.values / d_inf
    tent_r = d.values / lr_norm(d, profile.r) if profile.kind == "constant_r" else None
    volume = domain.volume
    log_vol = math.log(volume)

    rows: list[SweepRow] = []
    failures: list[tuple[float, str]] = []
    results: list[ExtremalResult] = []
    warm: Optional[ScalarField] = None
    warm_sup: Optional[ScalarField] = None
    for p in ladder:
        q = profile.q_of(p)
        try:
            res = minimize_extremal(domain, p, q, opts.solver, start=warm)
            sup_res = sup_norm_extremal(domain, p, opts.solver, start=warm_sup)
        except Exception as exc:
            failures.append((p, f"{type(exc).__name__}: {exc}"))
            continue
        if opts.warm_start:
            warm = res.u
            warm_sup = sup_res.u
        results.append(res)

        lam_root = res.lam_root
        if math.isfinite(res.lam):
            direct = res.lam ** (1.0 / p)
            if abs(direct - lam_root) > 1e-12 * lam_root:
                raise RuntimeError(
                    f"lambda root mismatch at p={p}: {direct} vs {lam_root}")
        sandwich_lo = sup_res.value * math.exp(-log_vol / q)
        sandwich_hi = math.exp(log_vol / p) / lr_norm(d, q)
        if opts.check_sandwich:
            slack = opts.sandwich_slack
            if not (sandwich_lo - slack <= lam_root <= sandwich_hi + slack):
                raise SandwichViolation(
                    f"p={p} q={q:g}: lambda^(1/p)={lam_root:.6g} outside "
                    f"[{sandwich_lo:.6g}, {sandwich_hi:.6g}] +/- {slack}")

        u_vals = res.u.values
        gap_cone = float(np.abs(u_vals - cone)[domain.defined].max())
        gap_r = (float(np.abs(u_vals - tent_r)[domain.defined].max())
                 if tent_r is not None else math.nan)
        rows.append(SweepRow(
            p=p, q=q, lam=res.lam, log_lam=res.log_lam, lam_root=lam_root,
            sup_norm=lr_norm(res.u, math.inf), q_norm=lr_norm(res.u, q),
            lambda_sup=sup_res.value, sandwich_lo=sandwich_lo,
            sandwich_hi=sandwich_hi, predicted_limit=predicted,
            limit_error=abs(lam_root - predicted), gap_cone=gap_cone,
            gap_r=gap_r, iterations=res.iterations, residual=res.residual,
            clip_events=res.clip_events, converged=res.converged))

    return SweepReport(profile=profile, rows=rows, volume=volume,
                       predicted=predicted, failures=failures,
                       results=results)


# ---------------------------------------------------------------------------
# verdicts and limit-shape comparisons
# ---------------------------------------------------------------------------

def sup_norm_trend(report: SweepReport, final_tol: float = 0.1) -> Verdict:
    """Does sup u approach 1?  Only meaningful when q(p) diverges."""
    if not report.profile.q_to_infinity:
        raise WrongRegime(
            "sup-norm limit 1 needs q(p) -> infinity; under constant q the "
            "extremal tends to d/||d||_r instead")
    errs = [abs(row.sup_norm - 1.0) for row in report.rows]
    return _trend_verdict(errs, final_tol, "sup_norm_error")


def q0_limit_check(domain: GridDomain, report: SweepReport) -> Verdict:
    """Does u approach d/||d||_inf?  Needs q -> infinity with q/p -> 0."""
    profile = report.profile
    if profile.kind != "custom":
        raise WrongRegime(
            f"sublinear check needs a custom q(p) with q/p -> 0, got "
            f"{profile.describe()}")
    ratios = [row.q / row.p for row in report.rows]
    qs = [row.q for row in report.rows]
    if len(ratios) >= 2 and (any(b <= a for a, b in zip(qs, qs[1:]))
                             or any(b >= a for a, b in zip(ratios, ratios[1:]))):
        raise WrongRegime(
            f"ladder does not realize q -> infinity with q/p -> 0: "
            f"q={qs}, q/p={ratios}")
    gaps = [row.gap_cone for row in report.rows]
    return _trend_verdict(gaps, math.inf, "gap_cone")


@dataclass
class HyperdiffusiveComparison:
    """Plateau set of the final extremal and its midrange benchmark."""

    m_set: PointSet
    sup_gap: float
    containment: bool
    cone_bound: bool
    u_ref: ScalarField


def hyperdiffusive_compare(domain: GridDomain, report: SweepReport,
                           u_final: ScalarField, tol_M: float = 0.02,
                           cone_slack: float | None = None) -> HyperdiffusiveComparison:
    """Extract the plateau M = {u >= 1 - tol_M} and benchmark u against
    the midrange solution pinned to 1 on M.

    containment asks M to sit inside the near-maximal set of the
    distance function; cone_bound asks u <= d/inradius + cone_slack
    everywhere (default slack 5h).
    """
    if report.profile.kind != "power":
        raise WrongRegime(
            f"plateau extraction needs q(p)/p -> infinity, got "
            f"{report.profile.describe()}")
    h = domain.h
    if cone_slack is None:
        cone_slack = 5.0 * h
    d = distance_field(domain)
    rin = inradius(d)
    mask = domain.interior & (u_final.values >= 1.0 - tol_M)
    if not mask.any():
        raise EmptyM(f"no node reaches 1 - tol_M = {1.0 - tol_M}")
    m_set = PointSet(domain, mask, tol=tol_M)
    near_max = max_set(d, tol=h + tol_M * rin)
    containment = bool((mask <= near_max.mask).all())
    sol = solve_inf_laplace(ObstacleProblem(domain, obstacle=m_set, m_val=1.0))
    sup_gap = float(np.abs(u_final.values - sol.u.values)[domain.defined].max())
    cone_bound = bool(
        (u_final.values <= d.values / rin + cone_slack)[domain.defined].all())
    return HyperdiffusiveComparison(
        m_set=m_set, sup_gap=sup_gap, containment=containment,
        cone_bound=cone_bound, u_ref=sol.u)


@dataclass
class ScalingCheck:
    v: ScalarField
    ratio: float
    factor: float
    ratio_err: float


def scaling_check(res: ExtremalResult, mu_profile: MuProfile) -> ScalingCheck:
    """Rescale the extremal to coefficient mu_p and compare sup norms.

    ratio is ||v||_inf / ||u||_inf for v = (lam/mu_p)^(1/(q-p)) u;
    factor is the profile's predicted value of that ratio; ratio_err is
    their absolute difference.
    """
    log_mu = mu_profile.log_mu(res)
    v = least_energy_from_extremal(res, log_mu=log_mu)
    ratio = lr_norm(v, math.inf) / lr_norm(res.u, math.inf)
    factor = mu_profile.predicted_factor(res)
    return ScalingCheck(v=v, ratio=ratio, factor=factor,
                        ratio_err=abs(ratio - factor))


def finite_Q_residual(u_final: ScalarField, big_q: float,
                      lam_cap: float) -> ScalarField:
    """Diagnostic field min(|grad u| - lam_cap * u^big_q, -Delta_inf u).

    The proportional-regime limit should drive this to zero away from
    the boundary; emitted for inspection, never asserted.
    """
    return min_eq_residual(u_final, lam_cap, big_q)
