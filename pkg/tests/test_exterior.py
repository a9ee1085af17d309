"""Grid complex, exterior derivative, pairings, periods, harmonic representative."""

import math

import numpy as np
import pytest

from gms.errors import DegreeError, GridError, InvalidMetricError
from gms.exterior import (
    Cochain,
    build_torus,
    codifferential,
    constant_form,
    d,
    harmonic_rep,
    inner_product,
    periods,
    pointwise_norm,
)

H_BUILTIN = lambda t: np.sqrt(1.0 + np.cos(t) ** 2)


def random_cochain(grid, degree, rng, scale=1.0):
    return Cochain(grid, degree, scale * rng.standard_normal(grid.cochain_shape(degree)))


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def test_flat_torus_face_weights():
    grid, metric = build_torus(8, 8)
    assert np.allclose(metric.face_volumes, (2 * math.pi / 8) ** 2, rtol=0, atol=1e-15)
    assert grid.euler_characteristic() == 0


def test_builtin_metric_samples_at_known_angles():
    grid, metric = build_torus(64, 64, H_BUILTIN)
    # x-edge midpoints sit on vertex rows; row j=0 is theta2 = 0 where h = sqrt(2)
    assert metric.h_edge[0][:, 0] == pytest.approx(math.sqrt(2), abs=1e-14)
    # face centers sit half a cell away from 0
    expected = math.sqrt(1 + math.cos(grid.dx2 / 2) ** 2)
    assert metric.h_face[:, 0] == pytest.approx(expected, abs=1e-14)
    # even extension: h at theta2 and period2 - theta2 agree
    assert np.allclose(metric.h_face[:, 0], metric.h_face[:, -1])


def test_grid_size_precondition():
    with pytest.raises(GridError):
        build_torus(4, 3)


def test_non_positive_metric_rejected():
    with pytest.raises(InvalidMetricError):
        build_torus(8, 8, lambda t: np.cos(t))  # negative past pi/2


# ---------------------------------------------------------------------------
# exterior derivative
# ---------------------------------------------------------------------------

def test_d_of_constant_vertex_function_is_zero():
    grid, _ = build_torus(8, 8)
    u = Cochain(grid, 0, np.full((8, 8), 3.7))
    assert np.all(d(u).values == 0.0)


def test_dd_is_exactly_zero():
    # exact on every basis indicator (integer incidence arithmetic), which
    # makes the composite operator exactly zero as a linear map
    grid, _ = build_torus(8, 6)
    for i in range(8):
        for j in range(6):
            e = Cochain.zeros(grid, 0)
            e.values[i, j] = 1.0
            assert np.all(d(d(e)).values == 0.0)
    rng = np.random.default_rng(0)
    ints = Cochain(grid, 0, rng.integers(-1000, 1000, size=(8, 6)).astype(float))
    assert np.all(d(d(ints)).values == 0.0)
    u = random_cochain(grid, 0, rng)
    assert np.max(np.abs(d(d(u)).values)) < 1e-14


def test_d_matches_forward_differences():
    # independent oracle: explicit index loops with wraparound
    n = 16
    grid, _ = build_torus(n, n)
    vals = np.fromfunction(lambda i, j: np.sin(2 * np.pi * i / n), (n, n))
    du = d(Cochain(grid, 0, vals)).values
    for i in range(n):
        for j in range(n):
            assert du[0, i, j] == pytest.approx(
                vals[(i + 1) % n, j] - vals[i, j], abs=0
            )
            assert du[1, i, j] == pytest.approx(
                vals[i, (j + 1) % n] - vals[i, j], abs=0
            )


def test_d_rejects_top_degree():
    grid, _ = build_torus(8, 8)
    with pytest.raises(DegreeError):
        d(Cochain.zeros(grid, 2))


# ---------------------------------------------------------------------------
# pointwise norm
# ---------------------------------------------------------------------------

def test_pointwise_norm_zero_form():
    grid, metric = build_torus(8, 8, H_BUILTIN)
    assert np.all(pointwise_norm(Cochain.zeros(grid, 1), metric) == 0.0)


def test_pointwise_norm_constant_form_flat():
    grid, metric = build_torus(8, 12)
    s = 2.5
    a = constant_form(grid, kappa2=s)
    assert pointwise_norm(a, metric) == pytest.approx(s, abs=1e-14)


def test_pointwise_norm_scales_with_h():
    grid, metric = build_torus(8, 8, lambda t: np.sqrt(2.0) * np.ones_like(t))
    a = constant_form(grid, kappa1=0.6, kappa2=0.8)  # Euclidean norm 1
    assert pointwise_norm(a, metric) == pytest.approx(math.sqrt(2), abs=1e-14)


# ---------------------------------------------------------------------------
# inner product and codifferential
# ---------------------------------------------------------------------------

def test_inner_product_positive_definite():
    grid, metric = build_torus(8, 8, H_BUILTIN)
    rng = np.random.default_rng(1)
    for degree in (0, 1, 2):
        a = random_cochain(grid, degree, rng)
        assert inner_product(a, a, metric) > 0
        z = Cochain.zeros(grid, degree)
        assert inner_product(z, z, metric) == 0.0


def test_inner_product_orthogonal_coordinate_forms():
    grid, metric = build_torus(8, 8)
    a = constant_form(grid, kappa1=1.0)
    b = constant_form(grid, kappa2=1.0)
    assert inner_product(a, b, metric) == 0.0


def test_vertex_pairing_of_constants_approximates_volume():
    grid, metric = build_torus(32, 32, H_BUILTIN)
    one = Cochain(grid, 0, np.ones((32, 32)))
    assert inner_product(one, one, metric) == pytest.approx(
        metric.total_volume, rel=1e-9
    )


def test_inner_product_degree_mismatch():
    grid, metric = build_torus(8, 8)
    with pytest.raises(DegreeError):
        inner_product(Cochain.zeros(grid, 0), Cochain.zeros(grid, 1), metric)


@pytest.mark.parametrize("hs", [None, H_BUILTIN])
def test_adjointness_degree_one(hs):
    grid, metric = build_torus(8, 8, hs)
    rng = np.random.default_rng(2)
    for _ in range(5):
        u = random_cochain(grid, 0, rng)
        a = random_cochain(grid, 1, rng)
        lhs = inner_product(d(u), a, metric)
        rhs = inner_product(u, codifferential(a, metric), metric)
        assert lhs == pytest.approx(rhs, rel=1e-12)


@pytest.mark.parametrize("hs", [None, H_BUILTIN])
def test_adjointness_degree_two(hs):
    grid, metric = build_torus(8, 8, hs)
    rng = np.random.default_rng(3)
    for _ in range(5):
        a = random_cochain(grid, 1, rng)
        b = random_cochain(grid, 2, rng)
        lhs = inner_product(d(a), b, metric)
        rhs = inner_product(a, codifferential(b, metric), metric)
        assert lhs == pytest.approx(rhs, rel=1e-12)


# ---------------------------------------------------------------------------
# periods
# ---------------------------------------------------------------------------

def test_periods_zero_form():
    grid, _ = build_torus(8, 8)
    assert periods(Cochain.zeros(grid, 1)) == (0.0, 0.0)


def test_periods_constant_form():
    grid, _ = build_torus(8, 12)
    kappa = 0.37
    a = constant_form(grid, kappa2=kappa)
    p1, p2 = periods(a)
    assert p1 == 0.0
    assert p2 == pytest.approx(kappa, rel=1e-14)


def test_periods_of_exact_forms_vanish():
    grid, _ = build_torus(16, 16)
    rng = np.random.default_rng(4)
    for _ in range(10):
        u = random_cochain(grid, 0, rng)
        p1, p2 = periods(d(u))
        assert abs(p1) < 1e-12 and abs(p2) < 1e-12


def test_periods_unchanged_by_exact_shift():
    grid, _ = build_torus(12, 12)
    rng = np.random.default_rng(5)
    a = random_cochain(grid, 1, rng)
    u = random_cochain(grid, 0, rng)
    pa = periods(a)
    pb = periods(a + d(u))
    assert pb[0] == pytest.approx(pa[0], abs=1e-12)
    assert pb[1] == pytest.approx(pa[1], abs=1e-12)


# ---------------------------------------------------------------------------
# harmonic representative
# ---------------------------------------------------------------------------

def test_harmonic_rep_constant_form_is_fixed_point_flat():
    grid, metric = build_torus(8, 8)
    a = constant_form(grid, kappa1=0.2, kappa2=1.1)
    report = harmonic_rep(a, metric, tol=1e-12)
    assert report.iterations == 0
    assert np.all(report.representative.values == a.values)


def test_harmonic_rep_of_exact_form_is_zero():
    grid, metric = build_torus(12, 12, H_BUILTIN)
    rng = np.random.default_rng(6)
    u = random_cochain(grid, 0, rng)
    report = harmonic_rep(d(u), metric, tol=1e-12)
    assert np.max(np.abs(report.representative.values)) < 1e-10


def test_harmonic_rep_constant_form_curved_metric():
    # parallel forms stay harmonic under the conformal factor
    grid, metric = build_torus(16, 16, H_BUILTIN)
    a = constant_form(grid, kappa2=0.8)
    report = harmonic_rep(a, metric, tol=1e-12)
    assert np.max(np.abs(report.representative.values - a.values)) < 1e-10


def test_harmonic_rep_against_dense_solve():
    # independent oracle: assemble the weighted Laplacian densely and use lstsq
    n = 16
    grid, metric = build_torus(n, n, H_BUILTIN)
    rng = np.random.default_rng(7)
    a = constant_form(grid, kappa2=0.7) + d(random_cochain(grid, 0, rng))

    wx = grid.dx2 / grid.dx1
    wy = grid.dx1 / grid.dx2
    nv = n * n
    idx = lambda i, j: (i % n) * n + (j % n)
    D = np.zeros((2 * nv, nv))
    w_edge = np.zeros(2 * nv)
    rhs_edge = np.zeros(2 * nv)
    for i in range(n):
        for j in range(n):
            ex = idx(i, j)
            D[ex, idx(i + 1, j)] += 1.0
            D[ex, idx(i, j)] -= 1.0
            w_edge[ex] = wx
            rhs_edge[ex] = a.values[0, i, j]
            ey = nv + idx(i, j)
            D[ey, idx(i, j + 1)] += 1.0
            D[ey, idx(i, j)] -= 1.0
            w_edge[ey] = wy
            rhs_edge[ey] = a.values[1, i, j]
    A = D.T @ (w_edge[:, None] * D)
    b = -D.T @ (w_edge * rhs_edge)
    u_dense, *_ = np.linalg.lstsq(A, b, rcond=None)
    u_dense -= u_dense.mean()

    report = harmonic_rep(a, metric, tol=1e-12)
    assert report.residual_norm <= 1e-12
    u_cg = report.potential.values.reshape(-1)
    assert np.max(np.abs(u_cg - u_dense)) < 1e-9


def test_harmonic_rep_idempotent():
    grid, metric = build_torus(16, 16, H_BUILTIN)
    rng = np.random.default_rng(8)
    a = constant_form(grid, kappa2=0.5) + d(random_cochain(grid, 0, rng))
    first = harmonic_rep(a, metric, tol=1e-11)
    second = harmonic_rep(first.representative, metric, tol=1e-11)
    gap = np.max(np.abs(second.representative.values - first.representative.values))
    assert gap < 1e-9


def test_harmonic_rep_preserves_periods():
    grid, metric = build_torus(16, 16, H_BUILTIN)
    rng = np.random.default_rng(9)
    a = constant_form(grid, kappa1=0.3, kappa2=0.9) + d(random_cochain(grid, 0, rng))
    report = harmonic_rep(a, metric, tol=1e-12)
    pa, pb = periods(a), periods(report.representative)
    assert pb[0] == pytest.approx(pa[0], abs=1e-12)
    assert pb[1] == pytest.approx(pa[1], abs=1e-12)
