"""Independent reference values for the test suite.

Everything here is computed by methods unrelated to the package's
solvers: sparse linear algebra for the p=2 eigenvalue, closed-form
integrals of the distance tent for norms of d, and special-function
zeros for the exact disk eigenvalue.  Tests freeze these as oracles.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.special import jn_zeros


def laplacian_min_eig(domain, max_iters=500, tol=1e-13):
    """Smallest Dirichlet eigenvalue of the 5-point Laplacian.

    Inverse power iteration with a factored sparse matrix; returns
    (eigenvalue, full-grid eigenvector normalized to unit discrete L2).
    """
    interior = domain.interior
    h = domain.h
    idx = -np.ones(interior.shape, dtype=np.int64)
    n = int(interior.sum())
    idx[interior] = np.arange(n)
    rows, cols, vals = [], [], []
    where = np.argwhere(interior)
    for i, j in where:
        k = idx[i, j]
        rows.append(k)
        cols.append(k)
        vals.append(4.0 / h ** 2)
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            kk = idx[i + di, j + dj]
            if kk >= 0:
                rows.append(k)
                cols.append(kk)
                vals.append(-1.0 / h ** 2)
    mat = sp.csc_matrix((vals, (rows, cols)), shape=(n, n))
    lu = spla.splu(mat)
    x = np.ones(n)
    x /= np.linalg.norm(x)
    lam = np.inf
    for _ in range(max_iters):
        y = lu.solve(x)
        y /= np.linalg.norm(y)
        new_lam = float(y @ (mat @ y))
        if abs(new_lam - lam) <= tol * abs(new_lam):
            lam = new_lam
            x = y
            break
        lam = new_lam
        x = y
    if x[np.argmax(np.abs(x))] < 0:
        x = -x
    vec = np.zeros(interior.shape)
    vec[interior] = x
    vec /= np.sqrt((vec[interior] ** 2).sum() * h ** 2)
    return lam, vec


def square_dist_integral(k, side=1.0):
    """Exact integral of d^k over a square of the given side.

    Level sets of d are concentric squares: the slice at height z has
    perimeter 4(side - 2z), so the integral is
    int_0^(side/2) z^k 4(side - 2z) dz = side^(k+2) 2^(1-k)/((k+1)(k+2)).
    """
    return side ** (k + 2) * 2.0 ** (1 - k) / ((k + 1) * (k + 2))


def rect_dist_integral(k, width, height):
    """Exact integral of d^k over a width x height rectangle.

    Slices at height z are rectangles of perimeter 2(w + l) - 8z for
    z below min(w, l)/2.
    """
    w, l = sorted((width, height))
    t = w / 2.0
    return (2.0 * (w + l) * t ** (k + 1) / (k + 1)
            - 8.0 * t ** (k + 2) / (k + 2))


def disk_dist_integral(k, radius=1.0):
    """Exact integral of (R - r)^k over a disk of radius R."""
    return 2.0 * np.pi * radius ** (k + 2) / ((k + 1) * (k + 2))


def square_dist_lr(r, side=1.0):
    """Exact L^r norm of the distance function on a square."""
    return square_dist_integral(r, side) ** (1.0 / r)


def disk_dist_lr(r, radius=1.0):
    """Exact L^r norm of the distance function on a disk."""
    return disk_dist_integral(r, radius) ** (1.0 / r)


def disk_laplace_eig(radius=1.0):
    """Exact first Dirichlet Laplace eigenvalue of a disk: (j_{0,1}/R)^2."""
    return float(jn_zeros(0, 1)[0] / radius) ** 2
