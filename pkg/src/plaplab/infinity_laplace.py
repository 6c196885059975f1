"""Midrange fixed points: discrete infinity-Laplace obstacle problems.

The scheme replaces each free node value by the midrange

    u(x) <- ( max_{y in S(x)} u(y) + min_{y in S(x)} u(y) ) / 2

over the circular stencil S(x) of defined nodes within eps_radius
(default 3h), with boundary nodes and the obstacle set held fixed.  The
update is monotone and keeps values inside the data range, so sweeps
converge to the unique fixed point; a supersolution start descends
pointwise.

Plain sweeps relax slowly across large domains, so the solver can
periodically freeze the current argmax/argmin neighbor of every free
node and solve that linear "policy" system exactly; the jump is adopted
only when it reduces the midrange residual, which preserves correctness
while cutting sweep counts by orders of magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import Disk, GridDomain, PointSet, ScalarField, distance_field, inradius

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False


class NotADisk(ValueError):
    """cone_solution only exists on disk domains."""


class BadStencil(ValueError):
    """Stencil radius must reach at least one lattice neighbor."""


@dataclass
class ObstacleProblem:
    """Dirichlet data on the boundary ring plus a pinned plateau.

    boundary_value may be a scalar or a full-grid array (read on boundary
    nodes only).  obstacle is a PointSet of interior nodes forced to
    m_val; it may be None/empty, in which case the data alone drives the
    iteration.
    """

    domain: GridDomain
    obstacle: Optional[PointSet] = None
    m_val: float = 1.0
    boundary_value: Union[float, np.ndarray] = 0.0

    def fixed_values(self):
        """(fixed_mask, value_grid) for boundary plus obstacle nodes."""
        dom = self.domain
        vals = np.zeros((dom.nx, dom.ny))
        if np.isscalar(self.boundary_value):
            vals[dom.boundary] = float(self.boundary_value)
        else:
            bv = np.asarray(self.boundary_value, dtype=float)
            vals[dom.boundary] = bv[dom.boundary]
        fixed = dom.boundary.copy()
        if self.obstacle is not None and self.obstacle.mask.any():
            if not (self.obstacle.mask <= dom.interior).all():
                raise ValueError("obstacle nodes must be interior nodes")
            vals[self.obstacle.mask] = self.m_val
            fixed |= self.obstacle.mask
        return fixed, vals


@dataclass
class InfLapSolution:
    u: ScalarField
    iterations: int
    sup_update: float
    converged: bool
    policy_jumps: int
    eps_radius: float


# ---------------------------------------------------------------------------
# stencil machinery
# ---------------------------------------------------------------------------

def _stencil_offsets(h: float, eps_radius: float):
    reach = int(math.floor(eps_radius / h + 1e-9))
    if reach < 1:
        raise BadStencil(f"eps_radius {eps_radius} smaller than h {h}")
    r2 = (eps_radius / h) ** 2 + 1e-9
    offs = [(di, dj)
            for di in range(-reach, reach + 1)
            for dj in range(-reach, reach + 1)
            if (di or dj) and di * di + dj * dj <= r2]
    return offs


def _shift_view(arr, di, dj, fill):
    """arr shifted so out[i, j] = arr[i + di, j + dj], padded with fill."""
    out = np.full_like(arr, fill)
    nx, ny = arr.shape
    src_i = slice(max(di, 0), nx + min(di, 0))
    src_j = slice(max(dj, 0), ny + min(dj, 0))
    dst_i = slice(max(-di, 0), nx + min(-di, 0))
    dst_j = slice(max(-dj, 0), ny + min(-dj, 0))
    out[dst_i, dst_j] = arr[src_i, src_j]
    return out


def _midrange_apply(values, defined, free, offsets):
    """One Jacobi application of the midrange operator on free nodes."""
    hi = np.full_like(values, -np.inf)
    lo = np.full_like(values, np.inf)
    for di, dj in offsets:
        v = _shift_view(values, di, dj, 0.0)
        ok = _shift_view(defined, di, dj, False)
        np.maximum(hi, np.where(ok, v, -np.inf), out=hi)
        np.minimum(lo, np.where(ok, v, np.inf), out=lo)
    # exterior nodes hold (-inf, +inf) extremes; masked out by the where
    with np.errstate(invalid="ignore"):
        mid = 0.5 * (hi + lo)
    return np.where(free, mid, values)


def _neighbor_table(domain, free, offsets):
    """CSR neighbor lists (flat indices) for free nodes in lexicographic order."""
    nx, ny = domain.nx, domain.ny
    defined = domain.defined
    free_flat = np.flatnonzero(free.ravel())
    cols = []
    for di, dj in offsets:
        nbr = _shift_view(np.arange(nx * ny).reshape(nx, ny), di, dj, -1)
        ok = _shift_view(defined, di, dj, False)
        cols.append(np.where(ok, nbr, -1).ravel()[free_flat])
    cols = np.stack(cols, axis=1)  # (nfree, noffs), -1 where absent
    counts = (cols >= 0).sum(axis=1)
    ptr = np.zeros(len(free_flat) + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    flat_cols = cols[cols >= 0].astype(np.int64)
    return free_flat.astype(np.int64), ptr, flat_cols


if _HAVE_NUMBA:
    @njit(cache=True)
    def _gs_sweep_kernel(u, free_flat, ptr, cols):  # pragma: no cover - jit
        worst = 0.0
        for k in range(free_flat.size):
            lo = 1e300
            hi = -1e300
            for t in range(ptr[k], ptr[k + 1]):
                v = u[cols[t]]
                if v < lo:
                    lo = v
                if v > hi:
                    hi = v
            node = free_flat[k]
            new = 0.5 * (lo + hi)
            ch = new - u[node]
            if ch < 0.0:
                ch = -ch
            if ch > worst:
                worst = ch
            u[node] = new
        return worst


def _gs_sweep_python(u, free_flat, ptr, cols):
    worst = 0.0
    for k in range(free_flat.size):
        seg = u[cols[ptr[k]:ptr[k + 1]]]
        new = 0.5 * (seg.min() + seg.max())
        node = free_flat[k]
        worst = max(worst, abs(new - u[node]))
        u[node] = new
    return worst


def _segment_extreme_cols(vals, cols, ptr, take_max):
    """Neighbor column realizing the max (or min) of each CSR segment.

    Ties resolve to the first entry in stencil scan order, so the choice
    is deterministic.
    """
    starts = ptr[:-1]
    best = (np.maximum.reduceat(vals, starts) if take_max
            else np.minimum.reduceat(vals, starts))
    hit = vals == np.repeat(best, np.diff(ptr))
    pos = np.where(hit, np.arange(vals.size), vals.size)
    first = np.minimum.reduceat(pos, starts)
    return cols[first]


def _policy_jump(values, free_flat, ptr, cols, free_count):
    """Solve u = (u[argmax] + u[argmin])/2 exactly for the frozen policies."""
    flat = values.ravel()
    ordinal = -np.ones(flat.size, dtype=np.int64)
    ordinal[free_flat] = np.arange(free_count)
    seg_vals = flat[cols]
    arg_hi = _segment_extreme_cols(seg_vals, cols, ptr, take_max=True)
    arg_lo = _segment_extreme_cols(seg_vals, cols, ptr, take_max=False)

    rows_i = np.concatenate([np.arange(free_count)] * 2)
    nbrs = np.concatenate([arg_hi, arg_lo])
    ords = ordinal[nbrs]
    free_part = ords >= 0
    mat = sp.csr_matrix(
        (np.full(free_part.sum(), -0.5),
         (rows_i[free_part], ords[free_part])),
        shape=(free_count, free_count))
    mat = sp.eye(free_count, format="csr") + mat
    rhs = np.zeros(free_count)
    np.add.at(rhs, rows_i[~free_part], 0.5 * flat[nbrs[~free_part]])
    try:
        sol = spla.spsolve(mat.tocsc(), rhs)
    except Exception:
        return None
    if not np.isfinite(sol).all():
        return None
    out = flat.copy()
    out[free_flat] = sol
    return out.reshape(values.shape)


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def _supersolution_start(prob, fixed, fixed_vals, eps_radius):
    """Certified supersolution start: capped inflated cone, else data max."""
    dom = prob.domain
    data = fixed_vals[fixed]
    top = float(data.max(initial=0.0))
    scalar_zero = np.isscalar(prob.boundary_value) and prob.boundary_value == 0.0
    has_obstacle = prob.obstacle is not None and prob.obstacle.mask.any()
    if scalar_zero and has_obstacle and prob.m_val > 0:
        d = distance_field(dom)
        rin = inradius(d)
        cone = prob.m_val * np.minimum(1.0, (d.values + eps_radius) / rin)
        start = np.where(dom.interior, cone, 0.0)
    else:
        start = np.where(dom.interior, top, 0.0)
    start[fixed] = fixed_vals[fixed]
    return start


def solve_inf_laplace(prob: ObstacleProblem,
                      eps_radius: float | None = None,
                      tol: float | None = None,
                      max_sweeps: int = 10 ** 6,
                      mode: str = "gauss-seidel",
                      init: Union[str, ScalarField] = "supersolution",
                      accelerate: bool = True,
                      accel_every: int = 30) -> InfLapSolution:
    """Iterate the midrange update to its fixed point.

    mode "gauss-seidel" updates in place in lexicographic node order;
    "jacobi" updates all free nodes simultaneously (bitwise reproducible
    run to run).  init accepts "supersolution" (pointwise-decreasing
    start), "zero", or a warm-start field.  tol defaults to 1e-8 times
    the data range; iteration stops when one sweep moves no node more
    than tol.  accelerate enables the exact policy-jump step.
    """
    dom = prob.domain
    h = dom.h
    if eps_radius is None:
        eps_radius = 3.0 * h
    offsets = _stencil_offsets(h, eps_radius)
    fixed, fixed_vals = prob.fixed_values()
    free = dom.interior & ~fixed
    data = fixed_vals[fixed]
    lo_d, hi_d = (float(data.min()), float(data.max())) if data.size else (0.0, 0.0)
    if tol is None:
        tol = 1e-8 * (hi_d - lo_d)

    if isinstance(init, ScalarField):
        values = np.where(dom.defined, init.values, 0.0)
        values[fixed] = fixed_vals[fixed]
    elif init == "zero":
        values = np.where(fixed, fixed_vals, 0.0)
    elif init == "supersolution":
        values = _supersolution_start(prob, fixed, fixed_vals, eps_radius)
    else:
        raise ValueError(f"unknown init {init!r}")
    values = values.astype(float, copy=True)

    if not free.any():
        return InfLapSolution(
            u=ScalarField(dom, np.where(dom.defined, values, 0.0)),
            iterations=0, sup_update=0.0, converged=True,
            policy_jumps=0, eps_radius=eps_radius)

    use_gs = mode == "gauss-seidel"
    if mode not in ("gauss-seidel", "jacobi"):
        raise ValueError(f"unknown sweep mode {mode!r}")
    free_flat, ptr, cols = _neighbor_table(dom, free, offsets)
    defined = dom.defined

    sweep_gs = _gs_sweep_kernel if (_HAVE_NUMBA and use_gs) else _gs_sweep_python
    jumps = 0
    sup_update = math.inf
    converged = False
    sweeps_done = 0
    for sweep in range(1, int(max_sweeps) + 1):
        if use_gs:
            flat = values.ravel()
            sup_update = float(sweep_gs(flat, free_flat, ptr, cols))
        else:
            new = _midrange_apply(values, defined, free, offsets)
            sup_update = float(np.abs(new - values)[free].max())
            values = new
        sweeps_done = sweep
        if sup_update <= tol:
            converged = True
            break
        if accelerate and sweep % accel_every == 0:
            jumped = _policy_jump(values, free_flat, ptr, cols, free_flat.size)
            if jumped is not None:
                res_old = _midrange_residual(values, defined, free, offsets)
                res_new = _midrange_residual(jumped, defined, free, offsets)
                in_range = (jumped[free].min() >= lo_d - 1e-12
                            and jumped[free].max() <= max(hi_d, prob.m_val) + 1e-12)
                if res_new < res_old and in_range:
                    values = jumped
                    jumps += 1

    return InfLapSolution(
        u=ScalarField(dom, np.where(dom.defined, values, 0.0)),
        iterations=sweeps_done, sup_update=sup_update, converged=converged,
        policy_jumps=jumps, eps_radius=eps_radius)


def _midrange_residual(values, defined, free, offsets):
    new = _midrange_apply(values, defined, free, offsets)
    return float(np.abs(new - values)[free].max())


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def _centered_derivatives(values, h):
    ux = np.zeros_like(values)
    uy = np.zeros_like(values)
    uxx = np.zeros_like(values)
    uyy = np.zeros_like(values)
    uxy = np.zeros_like(values)
    ux[1:-1, :] = (values[2:, :] - values[:-2, :]) / (2 * h)
    uy[:, 1:-1] = (values[:, 2:] - values[:, :-2]) / (2 * h)
    uxx[1:-1, :] = (values[2:, :] - 2 * values[1:-1, :] + values[:-2, :]) / h**2
    uyy[:, 1:-1] = (values[:, 2:] - 2 * values[:, 1:-1] + values[:, :-2]) / h**2
    uxy[1:-1, 1:-1] = (values[2:, 2:] + values[:-2, :-2]
                       - values[2:, :-2] - values[:-2, 2:]) / (4 * h**2)
    return ux, uy, uxx, uyy, uxy


def _neg_inf_laplacian(values, h):
    ux, uy, uxx, uyy, uxy = _centered_derivatives(values, h)
    return -(ux * ux * uxx + 2.0 * ux * uy * uxy + uy * uy * uyy)


def _eligible_nodes(u: ScalarField, exclude: Optional[PointSet], margin_factor: float = 2.0):
    """Interior nodes at least margin_factor*h from the boundary and obstacle."""
    dom = u.domain
    margin = margin_factor * dom.h
    d = distance_field(dom).values
    ok = dom.interior & (d >= margin)
    if exclude is not None and exclude.mask.any():
        pts = np.argwhere(exclude.mask)
        II, JJ = np.meshgrid(np.arange(dom.nx), np.arange(dom.ny), indexing="ij")
        dist2 = np.full((dom.nx, dom.ny), np.inf)
        for i, j in pts:
            dist2 = np.minimum(dist2, (II - i) ** 2 + (JJ - j) ** 2)
        ok &= dist2 * dom.h ** 2 >= margin ** 2
    return ok


def inf_lap_residual(u: ScalarField, exclude: Optional[PointSet] = None) -> float:
    """Max |centered-difference -sum D_iu D_ju D_iju| away from data nodes.

    Only interior nodes at distance >= 2h from the boundary (and from the
    excluded obstacle set, when given) enter the max, since the centered
    stencil is meaningless next to pinned data.
    """
    dom = u.domain
    vals = np.where(dom.defined, u.values, 0.0)
    r = _neg_inf_laplacian(vals, dom.h)
    ok = _eligible_nodes(u, exclude)
    if not ok.any():
        return 0.0
    return float(np.abs(r[ok]).max())


def min_eq_residual(u: ScalarField, lam_inf: float, big_q: float) -> ScalarField:
    """Per-node min(|grad u| - lam_inf * u^big_q, -Delta_inf u), a diagnostic field.

    Nodes whose centered stencil touches undefined data carry 0.
    """
    dom = u.domain
    vals = np.where(dom.defined, u.values, 0.0)
    ux, uy, *_ = _centered_derivatives(vals, dom.h)
    gnorm = np.hypot(ux, uy)
    neg = _neg_inf_laplacian(vals, dom.h)
    with np.errstate(invalid="ignore"):
        power = np.where(vals > 0, np.power(np.abs(vals), big_q), 0.0)
    if big_q == 0.0:
        power = np.where(vals > 0, 1.0, 0.0)
    field = np.minimum(gnorm - lam_inf * power, neg)
    ok = _eligible_nodes(u, None, margin_factor=2.0)
    return ScalarField(dom, np.where(ok, field, 0.0))


def cone_solution(domain: GridDomain, center: tuple[float, float] | None = None) -> ScalarField:
    """Exact nodal cone 1 - |x - x0| / R on a disk domain."""
    if not isinstance(domain.shape, Disk):
        raise NotADisk(f"cone_solution needs a disk, got {type(domain.shape).__name__}")
    cx, cy = center if center is not None else domain.shape.center
    rr = np.hypot(domain.X - cx, domain.Y - cy)
    vals = 1.0 - rr / domain.shape.radius
    return ScalarField(domain, np.where(domain.defined, vals, 0.0))
