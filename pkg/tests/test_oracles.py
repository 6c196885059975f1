"""The oracles themselves must be right before anything is tested
against them: closed forms are re-derived symbolically and the sparse
eigenvalue is cross-checked against an unrelated eigensolver."""

import math

import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla
import sympy

from plaplab import Disk, Rectangle, build_grid_domain, distance_field

from oracles import (
    disk_dist_integral,
    disk_laplace_eig,
    laplacian_min_eig,
    rect_dist_integral,
    square_dist_integral,
    square_dist_lr,
)


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_square_integral_formula_symbolic(k):
    z, s = sympy.symbols("z s", positive=True)
    val = sympy.integrate(z ** k * 4 * (s - 2 * z), (z, 0, s / 2))
    expected = s ** (k + 2) * sympy.Rational(2) ** (1 - k) / ((k + 1) * (k + 2))
    assert sympy.simplify(val - expected) == 0
    assert math.isclose(float(val.subs(s, 1)), square_dist_integral(k),
                        rel_tol=1e-12)


@pytest.mark.parametrize("k", [1, 2, 4])
def test_disk_integral_formula_symbolic(k):
    r, R = sympy.symbols("r R", positive=True)
    val = sympy.integrate((R - r) ** k * 2 * sympy.pi * r, (r, 0, R))
    expected = 2 * sympy.pi * R ** (k + 2) / ((k + 1) * (k + 2))
    assert sympy.simplify(val - expected) == 0
    assert math.isclose(float(val.subs(R, 2)), disk_dist_integral(k, 2.0),
                        rel_tol=1e-12)


def test_rect_integral_formula_symbolic():
    z, w, l = sympy.symbols("z w l", positive=True)
    val = sympy.integrate(z * (2 * (w + l) - 8 * z), (z, 0, w / 2))
    got = rect_dist_integral(1, 0.4, 1.3)
    assert math.isclose(float(val.subs({w: sympy.Rational(2, 5),
                                        l: sympy.Rational(13, 10)})),
                        got, rel_tol=1e-12)
    # square specialization agrees
    assert math.isclose(rect_dist_integral(2, 1.0, 1.0),
                        square_dist_integral(2), rel_tol=1e-12)


@pytest.mark.parametrize("k", [1, 2])
def test_integral_formulas_match_fine_riemann_sum(k):
    dom = build_grid_domain(Rectangle(1.0, 1.0), 1.0 / 256)
    d = distance_field(dom)
    approx = float((d.values[dom.interior] ** k).sum()) * dom.h ** 2
    assert abs(approx - square_dist_integral(k)) < 5e-3
    dom2 = build_grid_domain(Disk((0.0, 0.0), 1.0), 1.0 / 256)
    d2 = distance_field(dom2)
    approx2 = float((d2.values[dom2.interior] ** k).sum()) * dom2.h ** 2
    assert abs(approx2 - disk_dist_integral(k)) < 2e-2


def test_norm_oracle_values():
    # the values the acceptance criteria quote
    assert math.isclose(square_dist_integral(1), 1.0 / 6.0, rel_tol=1e-15)
    assert math.isclose(square_dist_integral(2), 1.0 / 24.0, rel_tol=1e-15)
    assert math.isclose(1.0 / square_dist_lr(1), 6.0, rel_tol=1e-15)


def test_inverse_power_matches_independent_eigensolver(square16):
    lam, vec = laplacian_min_eig(square16)
    # rebuild the matrix independently and ask a Lanczos solver
    interior = square16.interior
    h = square16.h
    idx = -np.ones(interior.shape, dtype=np.int64)
    n = int(interior.sum())
    idx[interior] = np.arange(n)
    rows, cols, vals = [], [], []
    for i, j in np.argwhere(interior):
        k = idx[i, j]
        rows += [k]
        cols += [k]
        vals += [4.0 / h ** 2]
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            kk = idx[i + di, j + dj]
            if kk >= 0:
                rows += [k]
                cols += [kk]
                vals += [-1.0 / h ** 2]
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    ref = float(spla.eigsh(mat, k=1, which="SM",
                           return_eigenvectors=False)[0])
    assert abs(lam - ref) < 1e-9 * ref
    # discrete eigenvalue sits near the continuum value 2 pi^2
    assert abs(lam - 2.0 * math.pi ** 2) < 0.4
    # eigenvector is one-signed and L2-normalized
    assert vec[interior].min() > 0
    assert math.isclose(float((vec[interior] ** 2).sum()) * h ** 2, 1.0,
                        rel_tol=1e-12)


def test_disk_exact_eigenvalue_constant():
    assert math.isclose(disk_laplace_eig(), 5.783185962946785, rel_tol=1e-12)
    # scales like 1/R^2
    assert math.isclose(disk_laplace_eig(2.0), disk_laplace_eig() / 4.0,
                        rel_tol=1e-12)
