"""Least Rayleigh quotients of the discrete p-Dirichlet energy.

The energy lives on lattice cells: each cell takes one gradient vector
(the two forward differences at its lower-left corner) and contributes
|grad|^p h^2.  The quotient

    R(u) = sum_cells |grad_h u|^p h^2  /  ||u||_q^p

is minimized over Dirichlet-zero nodal fields by projected gradient
descent: steepest descent step, clip negative undershoots to zero,
renormalize to ||u||_q = 1, accept via backtracking with an Armijo test.
A sup-norm variant minimizes ||grad_h u||_p subject to max u = 1.

All energies and norms are tracked through max-factored logarithms, so
exponents like p = 256 or q = p^2 stay finite; lambda^(1/p) is always
formed as exp(log lambda / p), never by rooting the raw number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .geometry import GridDomain, ScalarField, distance_field, lr_norm

_LOG_EPS = -745.0  # under this, exp underflows to 0.0


class ZeroField(ValueError):
    """The field vanishes identically where a norm was required."""


class NonPositive(RuntimeError):
    """Descent terminated with a nonpositive interior value."""


class EqualExponents(ValueError):
    """The rescaling map is undefined at q = p."""


# ---------------------------------------------------------------------------
# energy pieces
# ---------------------------------------------------------------------------

def _cell_gradients(values: np.ndarray, h: float):
    """Forward-difference gradient per lattice cell, shape (nx-1, ny-1)."""
    gx = (values[1:, :-1] - values[:-1, :-1]) / h
    gy = (values[:-1, 1:] - values[:-1, :-1]) / h
    return gx, gy


def _energy_parts(values: np.ndarray, h: float, p: float):
    """Return (log_energy, gmax, ehat, gx, gy, g2) in factored form.

    energy = gmax^p * ehat with ehat = sum (|g|/gmax)^p h^2, so
    log_energy = p log gmax + log ehat stays finite for any p.
    """
    gx, gy = _cell_gradients(values, h)
    g2 = gx * gx + gy * gy
    m2 = float(g2.max(initial=0.0))
    if m2 == 0.0:
        return -math.inf, 0.0, 0.0, gx, gy, g2
    with np.errstate(under="ignore"):
        ehat = float(np.sum(np.power(g2 / m2, p / 2.0))) * h * h
    gmax = math.sqrt(m2)
    return p * math.log(gmax) + math.log(ehat), gmax, ehat, gx, gy, g2


def log_discrete_energy(u: ScalarField, p: float) -> float:
    """log of the cell-based p-Dirichlet energy; -inf for flat fields."""
    if p < 1:
        raise ValueError(f"energy exponent must be >= 1, got {p}")
    return _energy_parts(u.values, u.domain.h, p)[0]


def discrete_energy(u: ScalarField, p: float) -> float:
    """Sum over cells of |grad_h u|^p h^2 for a Dirichlet-zero field."""
    log_e = log_discrete_energy(u, p)
    if log_e == -math.inf:
        return 0.0
    return math.exp(log_e) if log_e < 709.0 else math.inf


def _log_norm(values: np.ndarray, interior: np.ndarray, h: float, q: float):
    """log ||u||_q over interior nodes (q = inf gives log max|u|)."""
    vals = np.abs(values[interior])
    m = float(vals.max(initial=0.0))
    if m == 0.0:
        return -math.inf
    if math.isinf(q):
        return math.log(m)
    with np.errstate(under="ignore"):
        s = float(np.sum(np.power(vals / m, q))) * h * h
    return math.log(m) + math.log(s) / q


def rayleigh_quotient(u: ScalarField, p: float, q: float) -> float:
    """Energy divided by ||u||_q^p.  Raises ZeroField on the zero field."""
    return math.exp(log_rayleigh_quotient(u, p, q))


def log_rayleigh_quotient(u: ScalarField, p: float, q: float) -> float:
    if p < 1 or q < 1:
        raise ValueError(f"exponents must be >= 1, got p={p}, q={q}")
    log_n = _log_norm(u.values, u.domain.interior, u.domain.h, q)
    if log_n == -math.inf:
        raise ZeroField("Rayleigh quotient of the zero field")
    log_e = _energy_parts(u.values, u.domain.h, p)[0]
    return log_e - p * log_n


# ---------------------------------------------------------------------------
# solver configuration and results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolverOptions:
    """Knobs for the projected descent.

    grad_tol is relative: iteration stops once the quotient gradient has
    shrunk by that factor against its value at the starting field.
    initial_step None means the 1/(p * lambda_current) rule; the line
    search reuses (and may quadruple) the last accepted step, capped by
    that rule, to avoid re-halving from scratch every iteration.
    """

    max_iters: int = 20000
    grad_tol: float = 1e-6
    sufficient_decrease: float = 1e-4
    backtrack_factor: float = 0.5
    initial_step: Optional[float] = None
    max_backtracks: int = 60
    multistart: int = 0
    seed: int = 0


@dataclass
class ExtremalResult:
    """Minimizer of the (p, q) Rayleigh quotient with diagnostics.

    lam equals discrete_energy(u, p) for the returned normalized u
    (so it may print as inf for extreme p; log_lam and lam_root are the
    stable representations).  grad_norm is the final descent-gradient
    magnitude relative to the starting one.
    """

    p: float
    q: float
    lam: float
    log_lam: float
    lam_root: float
    u: ScalarField
    iterations: int
    grad_norm: float
    residual: float
    clip_events: int
    converged: bool
    start: str


@dataclass
class SupNormResult:
    """Minimal ||grad_h u||_p over fields with unit interior max."""

    p: float
    value: float
    log_value: float
    u: ScalarField
    iterations: int
    grad_norm: float
    converged: bool


# ---------------------------------------------------------------------------
# descent engine
# ---------------------------------------------------------------------------

def _norm_gradient(values, interior, h, q):
    """Gradient of ||u||_q at a q-normalized nonnegative field (no h^2 for inf)."""
    if math.isinf(q):
        masked = np.where(interior, values, -1.0)
        k = int(np.argmax(masked))  # first maximum = lowest lexicographic index
        b = np.zeros_like(values)
        b.flat[k] = 1.0
        return b
    with np.errstate(under="ignore"):
        b = np.power(np.abs(values), q - 1.0) * (h * h)
    if q == 1.0:
        b = np.where(values > 0, h * h, np.where(values < 0, -h * h, 0.0))
    else:
        b = np.sign(values) * b
    return np.where(interior, b, 0.0)


def _quotient_gradient_parts(values, interior, h, p, q, energy_cache):
    """Return (dir, log_scale) with grad R = p * exp(log_scale) * dir.

    dir = h*S - gmax^2*ehat*B where S assembles the cell fluxes and B is
    the norm gradient; log_scale = (p-2) log gmax keeps magnitudes tame.
    """
    log_e, gmax, ehat, gx, gy, g2 = energy_cache
    m2 = gmax * gmax
    with np.errstate(under="ignore", divide="ignore"):
        w = np.power(g2 / m2, (p - 2.0) / 2.0) if p != 2.0 else np.ones_like(g2)
    if p > 2.0:
        w = np.where(g2 == 0.0, 0.0, w)
    wx = w * gx
    wy = w * gy
    s = np.zeros_like(values)
    s[1:, :-1] += wx
    s[:-1, :-1] -= wx
    s[:-1, 1:] += wy
    s[:-1, :-1] -= wy
    b = _norm_gradient(values, interior, h, q)
    direction = np.where(interior, h * s - (m2 * ehat) * b, 0.0)
    return direction, (p - 2.0) * math.log(gmax)


def _normalize(values, interior, h, q):
    log_n = _log_norm(values, interior, h, q)
    if log_n == -math.inf:
        raise ZeroField("descent iterate collapsed to the zero field")
    return values * math.exp(-log_n)


def _descend(domain: GridDomain, p: float, q: float, start_values: np.ndarray,
             opts: SolverOptions):
    """Projected descent core shared by both extremal problems.

    Returns (values, log_lam, iterations, rel_grad, clip_events, converged).
    """
    h = domain.h
    interior = domain.interior
    u = _normalize(np.where(interior, start_values, 0.0), interior, h, q)
    cache = _energy_parts(u, h, p)
    if cache[0] == -math.inf:
        raise ZeroField("starting field has no gradient energy")
    log_e = cache[0]
    c_suff = opts.sufficient_decrease
    shrink = opts.backtrack_factor
    log_grad0 = None
    rel_grad = 1.0
    clip_events = 0
    tau_prev = None
    converged = False
    iters = 0

    for iters in range(1, opts.max_iters + 1):
        direction, log_scale = _quotient_gradient_parts(
            u, interior, h, p, q, cache)
        dir_sq = float(np.sum(direction * direction))
        if dir_sq == 0.0:
            converged = True
            break
        log_grad = math.log(p) + log_scale + 0.5 * math.log(dir_sq)
        if log_grad0 is None:
            log_grad0 = log_grad
        rel_grad = math.exp(min(log_grad - log_grad0, 700.0))
        if rel_grad <= opts.grad_tol:
            converged = True
            break

        # step cap from the 1/(p * lambda) rule, expressed on `direction`
        if opts.initial_step is not None:
            tau_cap = opts.initial_step
        else:
            log_cap = log_scale - log_e
            tau_cap = math.exp(log_cap) if log_cap < 700.0 else math.inf
        # a full capped step can move log lambda by at most ~p*dir_sq*
        # exp(2 log_scale - 2 log_e); once that predicted decrease dips
        # under the double-precision floor the quotient cannot improve,
        # which matters for warm starts whose reference gradient is tiny
        if math.isfinite(tau_cap):
            flat = tau_cap * p * dir_sq * math.exp(
                min(log_scale - log_e, 700.0))
            if flat <= 1e-13:
                converged = True
                break
        tau = tau_cap if tau_prev is None else min(tau_cap, 4.0 * tau_prev)

        accepted = False
        for _ in range(opts.max_backtracks):
            trial = u - tau * direction
            neg = (trial < 0.0) & interior
            nclip = int(neg.sum())
            if nclip:
                trial = np.where(neg, 0.0, trial)
            try:
                trial = _normalize(np.where(interior, trial, 0.0), interior, h, q)
            except ZeroField:
                tau *= shrink
                continue
            trial_cache = _energy_parts(trial, h, p)
            log_e_try = trial_cache[0]
            # Armijo in log form: R_new <= R * (1 - c * t * |grad R|^2 / R)
            decr = c_suff * tau * p * dir_sq * math.exp(
                min(log_scale - log_e, 700.0))
            if decr < 1.0 and log_e_try <= log_e + math.log1p(-decr):
                u = trial
                cache = trial_cache
                log_e = log_e_try
                clip_events += nclip
                tau_prev = tau
                accepted = True
                break
            tau *= shrink
        if not accepted:
            break  # numerical floor of the line search

    return u, log_e, iters, rel_grad, clip_events, converged


# ---------------------------------------------------------------------------
# public solvers
# ---------------------------------------------------------------------------

def _prepare_start(domain, q, start):
    if start is None:
        d = distance_field(domain)
        return d.values, "distance"
    if isinstance(start, ScalarField):
        return start.values, "warm"
    raise TypeError(f"start must be None or ScalarField, got {type(start)!r}")


def minimize_extremal(domain: GridDomain, p: float, q: float,
                      opts: SolverOptions | None = None,
                      start: ScalarField | None = None) -> ExtremalResult:
    """Minimize the (p, q) Rayleigh quotient over Dirichlet-zero fields.

    The default start is the distance field normalized in L^q; pass a
    previous extremal as ``start`` to warm-start ladder sweeps.  With
    opts.multistart > 0 and q > p, that many perturbed restarts are run
    and the best quotient wins (seeded, deterministic).

    Raises NonPositive if the final iterate is not strictly positive on
    the interior, and ZeroField/BadExponent style errors on bad input.
    The ``converged`` flag is False when grad_tol was not reached.
    """
    if p < 2:
        raise ValueError(f"descent needs p >= 2, got p={p}")
    if q < 1:
        raise ValueError(f"norm exponent must satisfy q >= 1, got q={q}")
    opts = opts or SolverOptions()
    start_values, start_kind = _prepare_start(domain, q, start)

    runs = [(start_values, start_kind)]
    if opts.multistart > 0 and q > p:
        rng = np.random.default_rng(opts.seed)
        base = distance_field(domain).values
        for _ in range(opts.multistart):
            noise = rng.uniform(0.25, 1.0, size=base.shape)
            runs.append((base * noise, "multistart"))

    best = None
    for values, kind in runs:
        out = _descend(domain, p, q, values, opts)
        if best is None or out[1] < best[0][1]:
            best = (out, kind)
    (u_vals, log_lam, iters, rel_grad, clips, converged), kind = best

    u_vals = _normalize(u_vals, domain.interior, domain.h, q)
    log_lam = _energy_parts(u_vals, domain.h, p)[0]
    u = ScalarField(domain, np.where(domain.defined, u_vals, 0.0))
    if not (u_vals[domain.interior] > 0.0).all():
        raise NonPositive(
            f"minimize_extremal(p={p}, q={q}) ended with a nonpositive "
            f"interior value (min={u_vals[domain.interior].min():.3e})")
    lam = math.exp(log_lam) if log_lam < 709.0 else math.inf
    res = ExtremalResult(
        p=p, q=q, lam=lam, log_lam=log_lam,
        lam_root=math.exp(log_lam / p), u=u, iterations=iters,
        grad_norm=rel_grad, residual=math.nan, clip_events=clips,
        converged=converged, start=kind)
    res.residual = pde_residual(u, lam, p, q, log_lam=log_lam)
    return res


def sup_norm_extremal(domain: GridDomain, p: float,
                      opts: SolverOptions | None = None,
                      start: ScalarField | None = None) -> SupNormResult:
    """Minimize ||grad_h u||_p over fields with unit interior maximum.

    The achieved minimum estimates the smallest gradient p-norm among
    fields of unit sup norm; its large-p limit is 1/inradius.  Ties in
    the maximum are broken at the lowest lexicographic node index.
    """
    if p < 2:
        raise ValueError(f"descent needs p >= 2, got p={p}")
    opts = opts or SolverOptions()
    start_values, _ = _prepare_start(domain, math.inf, start)
    u_vals, log_lam, iters, rel_grad, _clips, converged = _descend(
        domain, p, math.inf, start_values, opts)
    u_vals = _normalize(u_vals, domain.interior, domain.h, math.inf)
    log_lam = _energy_parts(u_vals, domain.h, p)[0]
    u = ScalarField(domain, np.where(domain.defined, u_vals, 0.0))
    return SupNormResult(
        p=p, value=math.exp(log_lam / p), log_value=log_lam / p, u=u,
        iterations=iters, grad_norm=rel_grad, converged=converged)


def least_energy_from_extremal(res: ExtremalResult, mu: float | None = None,
                               log_mu: float | None = None) -> ScalarField:
    """Rescale an extremal into the least-energy solution for coefficient mu.

    If -div(|grad u|^{p-2} grad u) = lam |u|^{q-2} u, then v = s*u with
    s = (lam/mu)^{1/(q-p)} satisfies the same equation with coefficient mu.
    Pass mu directly or its log (for coefficients outside double range).
    mu = lam returns u unchanged.  Raises EqualExponents at q = p.
    """
    if res.q == res.p:
        raise EqualExponents(f"rescaling is undefined at q = p = {res.p}")
    if log_mu is None:
        if mu is None or not mu > 0:
            raise ValueError(f"coefficient mu must be positive, got {mu}")
        log_mu = math.log(mu)
    s = math.exp((res.log_lam - log_mu) / (res.q - res.p))
    return ScalarField(res.u.domain, res.u.values * s)


# ---------------------------------------------------------------------------
# weak-form residual
# ---------------------------------------------------------------------------

def pde_residual(u: ScalarField, lam: float, p: float, q: float,
                 log_lam: float | None = None) -> float:
    """Weak residual of -div(|grad u|^{p-2} grad u) = lam |u|^{q-2} u.

    Tests against the hat function at every interior node and returns the
    largest |a(u, phi) - lam b(u, phi)|, normalized by ||grad_h phi||_p
    and by lam^((p-1)/p) so values are comparable across p.  Exact
    discrete critical points give 0.
    """
    if log_lam is None:
        if not lam > 0:
            raise ValueError(f"lam must be positive, got {lam}")
        log_lam = math.log(lam)
    domain = u.domain
    h = domain.h
    cache = _energy_parts(u.values, h, p)
    log_e, gmax = cache[0], cache[1]
    if log_e == -math.inf:
        raise ZeroField("residual of a flat field")
    direction_scale = (p - 2.0) * math.log(gmax)
    # a-side: (dE/du)/p = gmax^(p-2) * h * S
    log_e_unused, _, _, gx, gy, g2 = cache
    m2 = gmax * gmax
    with np.errstate(under="ignore"):
        w = np.power(g2 / m2, (p - 2.0) / 2.0) if p != 2.0 else np.ones_like(g2)
    if p > 2.0:
        w = np.where(g2 == 0.0, 0.0, w)
    wx = w * gx
    wy = w * gy
    s = np.zeros_like(u.values)
    s[1:, :-1] += wx
    s[:-1, :-1] -= wx
    s[:-1, 1:] += wy
    s[:-1, :-1] -= wy
    a_part = h * s  # times exp(direction_scale)

    vals = u.values
    with np.errstate(under="ignore"):
        babs = np.power(np.abs(vals), q - 1.0)
    if q == 1.0:
        b_part = np.where(vals > 0, 1.0, np.where(vals < 0, -1.0, 0.0)) * h * h
    else:
        b_part = np.sign(vals) * babs * h * h  # times exp(log_lam)

    big = max(direction_scale, log_lam)
    fa = math.exp(direction_scale - big)
    fb = math.exp(max(log_lam - big, _LOG_EPS))
    inner = np.where(domain.interior, fa * a_part - fb * b_part, 0.0)
    max_inner = float(np.abs(inner).max())
    if max_inner == 0.0:
        return 0.0
    # ||grad_h phi||_p for one interior hat: h^{(2-p)/p} * (2^{p/2} + 2)^{1/p}
    log_hat = ((2.0 - p) * math.log(h)
               + (p / 2.0) * math.log(2.0)
               + math.log1p(2.0 * 2.0 ** (-p / 2.0))) / p
    log_res = big + math.log(max_inner) - (p - 1.0) / p * log_lam - log_hat
    return math.exp(min(log_res, 700.0))
