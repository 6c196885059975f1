"""Grid domains with exact distance-to-boundary fields.

A domain is a planar shape (disk, axis-aligned rectangle, simple polygon,
or annulus) rasterized onto the global lattice h*Z^2.  Nodes strictly
inside the shape are *interior*; nodes outside (or on the boundary curve)
that touch an interior node across one lattice edge are *boundary* nodes
and carry Dirichlet data.  Everything else is exterior and ignored.

Distance values at interior nodes are evaluated with closed-form
point-to-boundary formulas, never by marching, so the only discretization
error in the distance field is the forced zero at boundary nodes (each of
which lies within h of the true boundary).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np


class BadShape(ValueError):
    """Shape parameters do not describe a valid domain."""


class EmptyInterior(ValueError):
    """No lattice node falls strictly inside the shape at this h."""


class BadExponent(ValueError):
    """Norm exponent r must satisfy r >= 1."""


# ---------------------------------------------------------------------------
# shape specs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Disk:
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise BadShape(f"disk radius must be positive, got {self.radius}")

    def bbox(self):
        cx, cy = self.center
        r = self.radius
        return (cx - r, cy - r, cx + r, cy + r)

    def inside(self, X, Y):
        cx, cy = self.center
        return np.hypot(X - cx, Y - cy) < self.radius

    def boundary_distance(self, X, Y):
        cx, cy = self.center
        return self.radius - np.hypot(X - cx, Y - cy)


@dataclass(frozen=True)
class Rectangle:
    width: float = 1.0
    height: float = 1.0

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise BadShape(
                f"rectangle sides must be positive, got {self.width} x {self.height}"
            )

    def bbox(self):
        return (0.0, 0.0, self.width, self.height)

    def inside(self, X, Y):
        return (X > 0) & (X < self.width) & (Y > 0) & (Y < self.height)

    def boundary_distance(self, X, Y):
        return np.minimum(np.minimum(X, self.width - X),
                          np.minimum(Y, self.height - Y))


@dataclass(frozen=True)
class Annulus:
    r_in: float = 0.5
    r_out: float = 1.0
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not (0 < self.r_in < self.r_out):
            raise BadShape(
                f"annulus needs 0 < r_in < r_out, got {self.r_in}, {self.r_out}"
            )

    def bbox(self):
        cx, cy = self.center
        r = self.r_out
        return (cx - r, cy - r, cx + r, cy + r)

    def inside(self, X, Y):
        cx, cy = self.center
        rr = np.hypot(X - cx, Y - cy)
        return (rr > self.r_in) & (rr < self.r_out)

    def boundary_distance(self, X, Y):
        cx, cy = self.center
        rr = np.hypot(X - cx, Y - cy)
        return np.minimum(rr - self.r_in, self.r_out - rr)


@dataclass(frozen=True)
class Polygon:
    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3:
            raise BadShape(f"polygon needs at least 3 vertices, got {len(verts)}")
        vx, vy = self._edges()[:2]
        if np.any(np.hypot(np.diff(np.r_[vx, vx[0]]), np.diff(np.r_[vy, vy[0]])) == 0):
            raise BadShape("polygon has a zero-length edge")
        if abs(self._signed_area()) < 1e-14:
            raise BadShape("polygon has (near) zero area")
        if self._self_intersects():
            raise BadShape("polygon edges self-intersect")

    def _edges(self):
        v = np.asarray(self.vertices, dtype=float)
        vx, vy = v[:, 0], v[:, 1]
        wx, wy = np.roll(vx, -1), np.roll(vy, -1)
        return vx, vy, wx, wy

    def _signed_area(self):
        vx, vy, wx, wy = self._edges()
        return 0.5 * float(np.sum(vx * wy - wx * vy))

    def _self_intersects(self):
        vx, vy, wx, wy = self._edges()
        n = len(vx)

        def orient(ax, ay, bx, by, cx, cy):
            return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)

        for i in range(n):
            for j in range(i + 1, n):
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue  # shared endpoint: never a proper crossing
                o1 = orient(vx[i], vy[i], wx[i], wy[i], vx[j], vy[j])
                o2 = orient(vx[i], vy[i], wx[i], wy[i], wx[j], wy[j])
                o3 = orient(vx[j], vy[j], wx[j], wy[j], vx[i], vy[i])
                o4 = orient(vx[j], vy[j], wx[j], wy[j], wx[i], wy[i])
                if o1 * o2 < 0 and o3 * o4 < 0:
                    return True
        return False

    def bbox(self):
        v = np.asarray(self.vertices, dtype=float)
        return (v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max())

    def inside(self, X, Y):
        # even-odd rule, vectorized over nodes
        vx, vy, wx, wy = self._edges()
        Xf = X[..., None]
        Yf = Y[..., None]
        cond = (vy <= Yf) != (wy <= Yf)
        with np.errstate(divide="ignore", invalid="ignore"):
            xcross = vx + (Yf - vy) * (wx - vx) / np.where(wy == vy, 1.0, wy - vy)
        hits = cond & (Xf < xcross)
        return np.sum(hits, axis=-1) % 2 == 1

    def segment_distances(self, X, Y):
        """Distance and foot of perpendicular to every edge, per node.

        Returns (dist, footx, footy) with a trailing axis over edges.
        """
        vx, vy, wx, wy = self._edges()
        ex, ey = wx - vx, wy - vy
        Xf = X[..., None]
        Yf = Y[..., None]
        t = ((Xf - vx) * ex + (Yf - vy) * ey) / (ex * ex + ey * ey)
        t = np.clip(t, 0.0, 1.0)
        fx = vx + t * ex
        fy = vy + t * ey
        return np.hypot(Xf - fx, Yf - fy), fx, fy

    def boundary_distance(self, X, Y):
        d = self.segment_distances(X, Y)[0].min(axis=-1)
        sign = np.where(self.inside(X, Y), 1.0, -1.0)
        return sign * d


ShapeSpec = Union[Disk, Rectangle, Annulus, Polygon]


# ---------------------------------------------------------------------------
# grid domain
# ---------------------------------------------------------------------------

EXTERIOR, INTERIOR, BOUNDARY = 0, 1, 2


@dataclass(frozen=True)
class GridDomain:
    """A shape rasterized on the lattice h*Z^2.

    Node (i, j) sits at ((i0+i)*h, (j0+j)*h).  ``node_class`` holds the
    EXTERIOR / INTERIOR / BOUNDARY code per node; the lattice window always
    keeps a fully exterior ring of padding, so 4-neighborhoods of interior
    nodes never leave the array.
    """

    shape: ShapeSpec
    h: float
    i0: int
    j0: int
    nx: int
    ny: int
    node_class: np.ndarray = field(repr=False)

    @cached_property
    def xs(self):
        return (self.i0 + np.arange(self.nx)) * self.h

    @cached_property
    def ys(self):
        return (self.j0 + np.arange(self.ny)) * self.h

    @cached_property
    def X(self):
        return self.xs[:, None] + np.zeros((1, self.ny))

    @cached_property
    def Y(self):
        return np.zeros((self.nx, 1)) + self.ys[None, :]

    @cached_property
    def interior(self):
        return self.node_class == INTERIOR

    @cached_property
    def boundary(self):
        return self.node_class == BOUNDARY

    @cached_property
    def defined(self):
        return self.node_class != EXTERIOR

    @property
    def interior_count(self) -> int:
        return int(self.interior.sum())

    @property
    def volume(self) -> float:
        """Discrete area h^2 * (# interior nodes)."""
        return self.h * self.h * self.interior_count

    def zero_field(self) -> "ScalarField":
        return ScalarField(self, np.zeros((self.nx, self.ny)))


@dataclass
class ScalarField:
    """Nodal values on a grid domain; zero is stored at undefined nodes."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.domain.nx, self.domain.ny):
            raise ValueError(
                f"field shape {self.values.shape} does not match grid "
                f"({self.domain.nx}, {self.domain.ny})"
            )

    def copy(self) -> "ScalarField":
        return ScalarField(self.domain, self.values.copy())

    def finite_on_defined(self) -> bool:
        return bool(np.isfinite(self.values[self.domain.defined]).all())


@dataclass
class PointSet:
    """A set of interior nodes together with the tolerance that built it."""

    domain: GridDomain
    mask: np.ndarray
    tol: float

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    def indices(self) -> np.ndarray:
        return np.argwhere(self.mask)

    def points(self) -> np.ndarray:
        idx = self.indices()
        d = self.domain
        return np.column_stack(((d.i0 + idx[:, 0]) * d.h, (d.j0 + idx[:, 1]) * d.h))


def build_grid_domain(shape: ShapeSpec, h: float) -> GridDomain:
    """Rasterize a shape onto the lattice h*Z^2.

    Interior nodes are strictly inside the shape; boundary nodes are the
    non-interior nodes with an interior 4-neighbor (hence within h of the
    true boundary).  Raises EmptyInterior when the mesh is too coarse.
    """
    if not h > 0:
        raise BadShape(f"grid spacing must be positive, got {h}")
    xmin, ymin, xmax, ymax = shape.bbox()
    i0 = math.floor(xmin / h) - 1
    j0 = math.floor(ymin / h) - 1
    i1 = math.ceil(xmax / h) + 1
    j1 = math.ceil(ymax / h) + 1
    nx = i1 - i0 + 1
    ny = j1 - j0 + 1
    xs = (i0 + np.arange(nx)) * h
    ys = (j0 + np.arange(ny)) * h
    X = xs[:, None] + np.zeros((1, ny))
    Y = np.zeros((nx, 1)) + ys[None, :]

    interior = shape.inside(X, Y)
    if not interior.any():
        raise EmptyInterior(f"no interior node for {shape} at h={h}")

    near = np.zeros_like(interior)
    near[1:, :] |= interior[:-1, :]
    near[:-1, :] |= interior[1:, :]
    near[:, 1:] |= interior[:, :-1]
    near[:, :-1] |= interior[:, 1:]
    boundary = near & ~interior

    cls = np.zeros((nx, ny), dtype=np.int8)
    cls[interior] = INTERIOR
    cls[boundary] = BOUNDARY
    return GridDomain(shape=shape, h=h, i0=i0, j0=j0, nx=nx, ny=ny, node_class=cls)


# ---------------------------------------------------------------------------
# distance field and norms
# ---------------------------------------------------------------------------

def distance_field(domain: GridDomain) -> ScalarField:
    """Exact distance to the boundary at interior nodes, 0 at boundary nodes."""
    vals = np.zeros((domain.nx, domain.ny))
    inter = domain.interior
    d = domain.shape.boundary_distance(domain.X, domain.Y)
    vals[inter] = d[inter]
    return ScalarField(domain, vals)


def inradius(dist: ScalarField) -> float:
    """Largest nodal distance value = inradius up to O(h)."""
    return float(dist.values[dist.domain.interior].max())


def lr_norm(f: ScalarField, r: float) -> float:
    """L^r norm of f over interior nodes, h^2-weighted; r = inf gives the max.

    Computed in max-factored form max * (sum (|f|/max)^r h^2)^(1/r) so huge
    exponents neither overflow nor underflow.
    """
    if r < 1:
        raise BadExponent(f"norm exponent must be >= 1, got {r}")
    vals = np.abs(f.values[f.domain.interior])
    m = float(vals.max(initial=0.0))
    if m == 0.0:
        return 0.0
    if math.isinf(r):
        return m
    h2 = f.domain.h ** 2
    s = float(np.sum((vals / m) ** r)) * h2
    return m * s ** (1.0 / r)


def log_lr_norm(f: ScalarField, r: float) -> float:
    """log(lr_norm(f, r)); -inf for the zero field."""
    if r < 1:
        raise BadExponent(f"norm exponent must be >= 1, got {r}")
    vals = np.abs(f.values[f.domain.interior])
    m = float(vals.max(initial=0.0))
    if m == 0.0:
        return -math.inf
    if math.isinf(r):
        return math.log(m)
    h2 = f.domain.h ** 2
    s = float(np.sum((vals / m) ** r)) * h2
    return math.log(m) + math.log(s) / r


def max_set(dist: ScalarField, tol: float | None = None) -> PointSet:
    """Interior nodes whose distance value is within tol of the inradius."""
    if tol is None:
        tol = dist.domain.h
    rin = inradius(dist)
    mask = dist.domain.interior & (dist.values >= rin - tol)
    return PointSet(dist.domain, mask, tol)


# ---------------------------------------------------------------------------
# ridge set
# ---------------------------------------------------------------------------

def _nearest_candidates(domain: GridDomain):
    """Per-node candidate nearest boundary points as (distance, direction).

    Returns stacked arrays dists (nc, nx, ny) and unit directions
    ux, uy (nc, nx, ny).  Candidates are feet of perpendiculars on each
    boundary component/edge, evaluated from the closed-form geometry.
    """
    shape = domain.shape
    X, Y = domain.X, domain.Y
    if isinstance(shape, Disk):
        cx, cy = shape.center
        dx, dy = X - cx, Y - cy
        rr = np.hypot(dx, dy)
        safe = np.where(rr == 0, 1.0, rr)
        ux = np.where(rr == 0, 1.0, dx / safe)
        uy = np.where(rr == 0, 0.0, dy / safe)
        dists = np.stack([shape.radius - rr, shape.radius + rr])
        dirs_x = np.stack([ux, -ux])
        dirs_y = np.stack([uy, -uy])
    elif isinstance(shape, Rectangle):
        zeros = np.zeros_like(X)
        ones = np.ones_like(X)
        dists = np.stack([X, shape.width - X, Y, shape.height - Y])
        dirs_x = np.stack([-ones, ones, zeros, zeros])
        dirs_y = np.stack([zeros, zeros, -ones, ones])
    elif isinstance(shape, Annulus):
        cx, cy = shape.center
        dx, dy = X - cx, Y - cy
        rr = np.hypot(dx, dy)
        safe = np.where(rr == 0, 1.0, rr)
        ux, uy = dx / safe, dy / safe
        dists = np.stack([rr - shape.r_in, shape.r_out - rr])
        dirs_x = np.stack([-ux, ux])
        dirs_y = np.stack([-uy, uy])
    elif isinstance(shape, Polygon):
        dist, fx, fy = shape.segment_distances(X, Y)
        dist = np.moveaxis(dist, -1, 0)
        fx = np.moveaxis(fx, -1, 0)
        fy = np.moveaxis(fy, -1, 0)
        safe = np.where(dist == 0, 1.0, dist)
        dirs_x = (fx - X) / safe
        dirs_y = (fy - Y) / safe
        dists = dist
    else:
        raise BadShape(f"unsupported shape {type(shape).__name__}")
    return dists, dirs_x, dirs_y


def ridge_set(domain: GridDomain, angle_tol: float = 0.2,
              dist_slack: float | None = None) -> PointSet:
    """Interior nodes with two near-nearest boundary points in distinct directions.

    A node joins the ridge when two candidate nearest boundary points lie
    within dist_slack of the true minimum distance and subtend an angle of
    at least angle_tol radians at the node.  dist_slack defaults to 2h,
    which makes the set contain max_set(dist, h) on the standard shapes.
    """
    if dist_slack is None:
        dist_slack = 2.0 * domain.h
    dists, ux, uy = _nearest_candidates(domain)
    dmin = dists.min(axis=0)
    active = dists <= dmin + dist_slack
    cos_tol = math.cos(angle_tol)
    nc = dists.shape[0]
    mask = np.zeros((domain.nx, domain.ny), dtype=bool)
    for a in range(nc):
        for b in range(a + 1, nc):
            both = active[a] & active[b]
            dot = ux[a] * ux[b] + uy[a] * uy[b]
            mask |= both & (dot <= cos_tol)
    mask &= domain.interior
    return PointSet(domain, mask, dist_slack)
