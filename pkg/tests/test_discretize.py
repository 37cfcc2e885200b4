"""Grids, diffusion stencils, eigenstructure, and the H1/H-1 norm pair."""

import numpy as np
import pytest

from shearscalar import BoundaryCondition, Grid, build_diffusion, h1y_seminorm, hminus1y_norm

D, N, P = BoundaryCondition.DIRICHLET, BoundaryCondition.NEUMANN, BoundaryCondition.PERIODIC


def test_grid_node_layout():
    g = Grid(n_y=10, bc=D)
    assert g.h == pytest.approx(1.0 / 11.0)
    assert g.nodes[0] == pytest.approx(g.h)
    g = Grid(n_y=10, bc=N)
    assert g.h == pytest.approx(0.1)
    assert g.nodes[0] == pytest.approx(0.05)
    g = Grid(n_y=10, bc=P)
    assert g.nodes[0] == 0.0
    assert g.nodes[-1] == pytest.approx(1.0 - g.h)


def test_grid_too_coarse_rejected():
    with pytest.raises(ValueError, match="too coarse"):
        Grid(n_y=7, bc=D)


def test_dirichlet_eigenvalues_closed_form():
    # discrete Dirichlet Laplacian: lambda_m = -(2/h^2)(1 - cos(m pi h))
    g = Grid(n_y=127, bc=D)
    op = build_diffusion(g)
    m = np.arange(1, g.n_y + 1)
    exact = -(2.0 / g.h**2) * (1.0 - np.cos(m * np.pi * g.h))
    assert np.allclose(np.sort(op.eigenvalues), np.sort(exact), rtol=1e-10)
    assert op.eigenvalues.max() == pytest.approx(-9.8691, abs=5e-4)
    assert np.all(op.eigenvalues < 0)


def test_periodic_eigenvalues_closed_form():
    g = Grid(n_y=64, bc=P)
    op = build_diffusion(g)
    m = np.arange(g.n_y)
    exact = -(2.0 / g.h**2) * (1.0 - np.cos(2.0 * np.pi * m * g.h))
    assert np.allclose(np.sort(op.eigenvalues), np.sort(exact), rtol=1e-10, atol=1e-8)


@pytest.mark.parametrize("bc", [N, P])
def test_conservative_bcs_have_one_zero_eigenvalue(bc):
    g = Grid(n_y=33, bc=bc)
    op = build_diffusion(g)
    w = np.sort(op.eigenvalues)
    assert abs(w[-1]) < 1e-8
    assert w[-2] < -1e-6
    # zero row sums (discrete conservation)
    assert np.allclose(op.apply(np.ones(g.n_y)), 0.0, atol=1e-10)


def test_operator_symmetry():
    for bc in (D, N, P):
        g = Grid(n_y=16, bc=bc)
        m = build_diffusion(g).dense()
        assert np.allclose(m, m.T)


def test_h1y_constant_is_zero_neumann():
    g = Grid(n_y=32, bc=N)
    assert h1y_seminorm(np.ones(32), g, 0.37) == 0.0


def test_h1y_sin_mode_value():
    g = Grid(n_y=255, bc=D)
    v = np.sin(np.pi * g.nodes)
    assert h1y_seminorm(v, g, 1.0) == pytest.approx(np.pi / np.sqrt(2.0), rel=1e-3)


def test_h1y_nu_scaling():
    g = Grid(n_y=64, bc=D)
    rng = np.random.default_rng(3)
    v = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    assert h1y_seminorm(v, g, 4e-3) == pytest.approx(2.0 * h1y_seminorm(v, g, 1e-3))


def test_hminus1y_sin_mode_value():
    g = Grid(n_y=255, bc=D)
    op = build_diffusion(g)
    v = np.sin(np.pi * g.nodes)
    assert hminus1y_norm(v, op, 1.0) == pytest.approx(1.0 / (np.pi * np.sqrt(2.0)), rel=1e-3)


def test_hminus1y_zero():
    g = Grid(n_y=32, bc=D)
    assert hminus1y_norm(np.zeros(32), build_diffusion(g), 1.0) == 0.0


def test_hminus1y_rejects_large_mean():
    g = Grid(n_y=32, bc=N)
    op = build_diffusion(g)
    with pytest.raises(ValueError, match="singular"):
        hminus1y_norm(np.ones(32), op, 1.0)


@pytest.mark.parametrize("bc", [D, N, P])
def test_duality_cauchy_schwarz(bc):
    # |<g, v>| <= hminus1y_norm(g) * h1y_seminorm(v)
    g = Grid(n_y=48, bc=bc)
    op = build_diffusion(g)
    rng = np.random.default_rng(11)
    nu = 0.07
    for _ in range(8):
        gv = rng.standard_normal(48) + 1j * rng.standard_normal(48)
        vv = rng.standard_normal(48) + 1j * rng.standard_normal(48)
        if bc is not D:
            gv -= gv.mean()
            vv -= vv.mean()
        lhs = abs(g.inner(gv, vv))
        rhs = hminus1y_norm(gv, op, nu) * h1y_seminorm(vv, g, nu)
        assert lhs <= rhs * (1 + 1e-10)


@pytest.mark.parametrize("bc", [D, N, P])
def test_exact_self_duality_through_solve(bc):
    # hminus1y_norm(nu * D v, nu) == h1y_seminorm(v, nu) exactly
    g = Grid(n_y=64, bc=bc)
    op = build_diffusion(g)
    rng = np.random.default_rng(5)
    nu = 2.3e-2
    v = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    lhs = hminus1y_norm(nu * op.apply(v), op, nu)
    rhs = h1y_seminorm(v, g, nu)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_norm_homogeneity():
    g = Grid(n_y=32, bc=D)
    op = build_diffusion(g)
    rng = np.random.default_rng(7)
    v = rng.standard_normal(32) + 1j * rng.standard_normal(32)
    for c in (0.0, -3.0, 2.5j):
        assert h1y_seminorm(c * v, g, 0.1) == pytest.approx(abs(c) * h1y_seminorm(v, g, 0.1))
        assert hminus1y_norm(c * v, op, 0.1) == pytest.approx(abs(c) * hminus1y_norm(v, op, 0.1))
        assert g.l2_norm(c * v) == pytest.approx(abs(c) * g.l2_norm(v))


def test_lowest_modes_match_full_decomposition():
    for bc in (D, N, P):
        g = Grid(n_y=40, bc=bc)
        op = build_diffusion(g)
        w8, v8 = op.lowest_modes(8)
        w_all = np.sort(build_diffusion(g).eigenvalues)[::-1][:8]
        assert np.allclose(w8, w_all, rtol=1e-10, atol=1e-8)
        # orthonormal in the h-weighted product
        gram = g.h * (v8.T @ v8)
        assert np.allclose(gram, np.eye(8), atol=1e-10)
