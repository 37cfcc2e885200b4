"""Exact Couette evolution, dense exponentials, heat rates."""

import numpy as np
import pytest
import scipy.linalg

from shearscalar import (
    BoundaryCondition,
    CouetteSpec,
    Grid,
    bump_profile_data,
    couette_exact,
    couette_exact_physical,
    couette_norm_exact,
    build_mode_operator,
    builtin_profile,
    expm_mode,
    heat_rate,
)
from shearscalar.oracle import respecify
from shearscalar.solver import ModeField, ModeOperator


def _spec(nu=1e-3, k=2 * np.pi, n=512, L=8.0, seed=0, full=False):
    return CouetteSpec(nu=nu, k=k, half_width=L,
                       phi_in=bump_profile_data(n, L, seed),
                       include_x_diffusion=full)


def test_identity_at_t0():
    spec = _spec()
    assert np.allclose(couette_exact(spec, 0.0), spec.spectrum(), rtol=1e-13)
    assert np.allclose(couette_exact_physical(spec, 0.0), spec.phi_in, atol=1e-12)


def test_hypoelliptic_multiplier_at_eta0():
    # k=1, eta=0, t = nu^(-1/3): multiplier exp(-1/3)
    nu = 1e-3
    spec = _spec(nu=nu, k=1.0)
    t = nu ** (-1.0 / 3.0)
    base = spec.spectrum(spec.phi_in * np.exp(-1j * spec.k * t * spec.nodes))
    out = couette_exact(spec, t)
    i0 = int(np.argmin(np.abs(spec.eta_grid)))
    assert out[i0] / base[i0] == pytest.approx(np.exp(-1.0 / 3.0), rel=1e-12)


def test_small_k_limit_is_pure_heat():
    nu, t = 1e-2, 3.0
    spec = _spec(nu=nu, k=1e-12)
    out = couette_exact(spec, t)
    expected = np.exp(-nu * t * spec.eta_grid**2) * spec.spectrum()
    assert np.allclose(out, expected, rtol=1e-8, atol=1e-14)


def test_full_equation_adds_x_diffusion_factor():
    nu, t = 1e-3, 2.0
    hypo, full = _spec(nu=nu), _spec(nu=nu, full=True)
    a = couette_exact(hypo, t)
    b = couette_exact(full, t)
    assert np.allclose(b, a * np.exp(-nu * hypo.k**2 * t), rtol=1e-13)


def test_semigroup_property():
    spec = _spec(nu=1e-3)
    t1, t2 = 2.0, 5.0
    direct = couette_exact(spec, t2)
    stepped = couette_exact(respecify(spec, t1), t2 - t1)
    denom = np.max(np.abs(direct))
    assert np.max(np.abs(direct - stepped)) / denom < 1e-10


def test_band_guard_raises():
    spec = _spec(nu=1e-6, n=128, L=4.0)
    with pytest.raises(ValueError, match="extend"):
        couette_exact(spec, 1e4)


def test_compact_support_invariant():
    assert _spec().support_check() == 0.0


def test_norm_exact_matches_physical_norm():
    spec = _spec()
    t = 4.0
    phys = couette_exact_physical(spec, t)
    direct = np.sqrt(spec.h * np.sum(np.abs(phys) ** 2))
    assert couette_norm_exact(spec, t) == pytest.approx(direct, rel=1e-12)


def test_expm_identity_and_diagonal():
    g = Grid(n_y=16, bc=BoundaryCondition.DIRICHLET)
    op = build_mode_operator(builtin_profile("couette"), g, 2 * np.pi, 1e-2)
    state = np.arange(16).astype(complex)
    assert np.allclose(expm_mode(op, state, 0.0), state, atol=1e-12)

    diag_op = ModeOperator(grid=g, k=2 * np.pi, nu=1e-2,
                           diag=np.linspace(-1, -0.1, 16).astype(complex),
                           off=np.zeros(15), corner=0.0, x_damping=0.0)
    out = expm_mode(diag_op, state, 2.0)
    assert np.allclose(out, np.exp(2.0 * diag_op.diag) * state, rtol=1e-12)


def test_expm_nilpotent_jordan_block():
    # e^{tJ} = I + tJ for the 2x2 Jordan block; embed in a padded operator
    j = np.zeros((2, 2), dtype=complex)
    j[0, 1] = 1.0
    out = scipy.linalg.expm(3.0 * j)
    assert np.allclose(out, np.eye(2) + 3.0 * j, atol=1e-14)


def test_expm_semigroup_squaring():
    g = Grid(n_y=48, bc=BoundaryCondition.DIRICHLET)
    op = build_mode_operator(builtin_profile("couette"), g, 2 * np.pi, 1e-2)
    t = 0.8
    half = scipy.linalg.expm(0.5 * t * op.dense())
    whole = scipy.linalg.expm(t * op.dense())
    assert np.max(np.abs(half @ half - whole)) < 1e-10


def test_expm_size_guard():
    g = Grid(n_y=512, bc=BoundaryCondition.DIRICHLET)
    op = build_mode_operator(builtin_profile("couette"), g, 2 * np.pi, 1e-2)
    with pytest.raises(ValueError, match="256"):
        expm_mode(op, np.zeros(512, dtype=complex), 1.0)


def test_heat_rate_values():
    assert heat_rate(BoundaryCondition.DIRICHLET, 1e-2) == pytest.approx(0.098696, rel=1e-4)
    assert heat_rate(BoundaryCondition.NEUMANN, 1e-2) == pytest.approx(0.098696, rel=1e-4)
    assert heat_rate(BoundaryCondition.PERIODIC, 1e-2) == pytest.approx(0.39478, rel=1e-4)
    with pytest.raises(ValueError):
        heat_rate(BoundaryCondition.DIRICHLET, -1.0)
