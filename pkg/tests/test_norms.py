"""Quotient norms, LP blocks, inequality ratios, and the Gevrey monitor."""

import numpy as np
import pytest

from shearscalar import (
    BoundaryCondition,
    Grid,
    SpaceTimeField,
    SyntheticField,
    Trajectory,
    builtin_profile,
    default_initial_data,
    evolve,
    fractional_poincare_check,
    gevrey_monitor,
    lp_decompose,
    q_norm_finite_difference,
    q_norm_x,
    verify_bracket_inequality,
    verify_interpolation_inequality,
    verify_prop_subelliptic,
    verify_sample_subelliptic,
)
from shearscalar.norms import (
    _sigma_grid,
    bump_family,
    calibrate_gevrey_d0,
    random_band_family,
    rescale_family,
)

D = BoundaryCondition.DIRICHLET


def _field_from_modes(mode_numbers, coeffs, n_t=5, n_y=24):
    """Synthetic SpaceTimeField: constant-in-time profiles with given weights."""
    grid = Grid(n_y=n_y, bc=D)
    profile = np.sin(np.pi * grid.nodes)
    snaps = np.zeros((n_t, len(mode_numbers), n_y), dtype=complex)
    for i, c in enumerate(coeffs):
        snaps[:, i, :] = c * profile
    times = np.linspace(0.0, 1.0, n_t)
    return SpaceTimeField(grid, np.asarray(mode_numbers), times, snaps)


def test_lp_partition_parseval_exact():
    rng = np.random.default_rng(0)
    modes = np.arange(1, 25)
    u = _field_from_modes(modes, rng.standard_normal(24) + 1j * rng.standard_normal(24))
    lp = lp_decompose(u)
    assert lp.total_norm == pytest.approx(u.l2_norm(), rel=1e-12)
    assert list(lp.block_indices) == [0, 1, 2, 3, 4]


def test_q_norm_single_mode_block0():
    u = _field_from_modes([1], [1.0])
    assert q_norm_x(u, 1.0 / 3.0) == pytest.approx(u.l2_norm(), rel=1e-12)


def test_q_norm_mode8_block3():
    u = _field_from_modes([8], [1.0])
    # 2^(3 * 1/3) = 2
    assert q_norm_x(u, 1.0 / 3.0) == pytest.approx(2.0 * u.l2_norm(), rel=1e-12)


def test_q_norm_homogeneity_and_monotonicity():
    rng = np.random.default_rng(1)
    modes = [1, 2, 3, 5, 9, 17]
    u = _field_from_modes(modes, rng.standard_normal(6) + 1j * rng.standard_normal(6))
    c = -2.7 + 0.4j
    scaled = _field_from_modes(modes, c * (rng2 := np.random.default_rng(1)).standard_normal(6)
                               + c * 1j * np.random.default_rng(1).standard_normal(6))
    # homogeneity via direct scaling of snapshots
    v = SpaceTimeField(u.grid, u.mode_numbers, u.times, c * u.snapshots)
    assert q_norm_x(v, 0.5) == pytest.approx(abs(c) * q_norm_x(u, 0.5), rel=1e-12)
    for s1, s2 in [(0.1, 0.3), (0.3, 0.7), (0.5, 1.0)]:
        assert q_norm_x(u, s1) <= q_norm_x(u, s2) * (1 + 1e-12)


def test_q_norm_log_convexity():
    rng = np.random.default_rng(2)
    modes = [1, 2, 4, 8, 16]
    # single-block field: equality in the interpolation bound
    single = _field_from_modes([8], [2.0])
    s1, s2, theta = 0.2, 0.8, 0.4
    s = theta * s1 + (1 - theta) * s2
    q = q_norm_x(single, s)
    bound = q_norm_x(single, s1) ** theta * q_norm_x(single, s2) ** (1 - theta)
    assert q <= bound * (1 + 1e-12)
    for _ in range(10):
        u = _field_from_modes(modes, rng.standard_normal(5) + 1j * rng.standard_normal(5))
        q = q_norm_x(u, s)
        bound = q_norm_x(u, s1) ** theta * q_norm_x(u, s2) ** (1 - theta)
        assert q <= 2.0 * bound


def test_fractional_poincare_single_block():
    u = _field_from_modes([1], [1.0])
    rep = fractional_poincare_check(u, 1.0 / 3.0, 0.2)
    assert rep.ratio_l2 == pytest.approx(1.0, rel=1e-12)
    assert rep.passed


def test_fractional_poincare_equal_blocks():
    # blocks j=0..4 with equal block norms: ratio sqrt(5) / 2^(4/3)
    u = _field_from_modes([1, 2, 4, 8, 16], [1.0] * 5)
    rep = fractional_poincare_check(u, 1.0 / 3.0, 0.2)
    assert rep.ratio_l2 == pytest.approx(np.sqrt(5.0) / 2.0 ** (4.0 / 3.0), rel=1e-12)
    assert rep.ratio_l2 == pytest.approx(0.8874, abs=2e-4)
    assert rep.passed


def test_fractional_poincare_random_fields_respect_bound():
    rng = np.random.default_rng(3)
    bound = (1.0 - 2.0 ** (-2.0 / 3.0)) ** -0.5
    for _ in range(20):
        m_max = int(rng.integers(2, 32))
        coeffs = rng.standard_normal(m_max) + 1j * rng.standard_normal(m_max)
        u = _field_from_modes(np.arange(1, m_max + 1), coeffs)
        rep = fractional_poincare_check(u, 1.0 / 3.0, 0.2)
        assert rep.ratio_l2 <= bound + 1e-9
        assert rep.passed


# ---------------------------------------------------------------------------
# finite-difference quotient norms on synthetic fields
# ---------------------------------------------------------------------------

def test_fd_norm_constant_in_x_vanishes():
    y = np.linspace(-4, 4, 64, endpoint=False)
    f = SyntheticField(np.ones((32, 1)) * np.exp(-y**2)[None, :], 4.0)
    assert q_norm_finite_difference(f, 1.0 / 3.0, "dx") == 0.0
    assert q_norm_finite_difference(f, 0.5, "ydx") == 0.0


def test_fd_norm_pure_mode_matches_formula():
    # f = cos(2 pi x) g(y): FD in x equals 2|sin(pi sigma^3)|/sigma * ||f||
    n_x, n_y = 64, 64
    x = np.arange(n_x) / n_x
    y = np.linspace(-4, 4, n_y, endpoint=False)
    g = np.exp(-(y**2))
    f = SyntheticField(np.cos(2 * np.pi * x)[:, None] * g[None, :], 4.0)
    sigmas = _sigma_grid(1.0, 48)
    expected = f.l2_norm() * np.max(2.0 * np.abs(np.sin(np.pi * sigmas**3)) / sigmas)
    got = q_norm_finite_difference(f, 1.0 / 3.0, "dx", sigma_max=1.0, n_sigma=48)
    assert got == pytest.approx(expected, rel=1e-12)


def test_fd_norm_q1y_approximates_h1y():
    # Q^1_{dy} of a smooth field is comparable to ||d_y f||
    n_x, n_y = 16, 256
    x = np.arange(n_x) / n_x
    y = np.linspace(-4, 4, n_y, endpoint=False)
    f = SyntheticField(np.cos(2 * np.pi * x)[:, None] * np.exp(-(y**2))[None, :], 4.0)
    q = q_norm_finite_difference(f, 1.0, "dy", sigma_max=1.0)
    assert q == pytest.approx(f.h1y_norm(), rel=0.05)


def test_fd_vs_lp_quotient_agreement():
    # the FD and block characterizations agree within a fixed two-sided factor
    rng = np.random.default_rng(4)
    grid = Grid(n_y=32, bc=D)
    prof = np.sin(np.pi * grid.nodes)
    ratios = []
    for _ in range(5):
        m_max = int(rng.integers(2, 12))
        coeffs = rng.standard_normal(m_max) + 1j * rng.standard_normal(m_max)
        u = _field_from_modes(np.arange(1, m_max + 1), coeffs, n_t=3, n_y=32)
        q_lp = q_norm_x(u, 1.0 / 3.0)

        # same field as a synthetic x-y slice (t plays no role: constant)
        n_x = 64
        x = np.arange(n_x) / n_x
        vals = np.zeros((n_x, 32))
        for m, c in zip(u.mode_numbers, coeffs):
            vals += np.real(c * np.exp(2j * np.pi * m * x))[:, None] * prof[None, :]
        f = SyntheticField(vals, 0.5)
        q_fd = q_norm_finite_difference(f, 1.0 / 3.0, "dx")
        # L2 conventions differ (torus slice vs trajectory factor-2); compare shapes
        ratios.append((q_fd / f.l2_norm()) / (q_lp / u.l2_norm()))
    # two-sided equivalence with a fixed constant across random fields
    ratios = np.array(ratios)
    assert np.all((0.2 < ratios) & (ratios < 5.0))
    assert ratios.max() / ratios.min() < 5.0


def test_fd_norm_rejects_unknown_direction():
    f = SyntheticField(np.ones((8, 8)), 1.0)
    with pytest.raises(ValueError):
        q_norm_finite_difference(f, 0.5, "dt")


# ---------------------------------------------------------------------------
# sample inequality families
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def calibration_family():
    return bump_family() + random_band_family(0)


@pytest.fixture(scope="module")
def independent_family():
    return rescale_family(tuple(2**j for j in range(8))) + random_band_family(1)


@pytest.mark.parametrize("check", [verify_sample_subelliptic, verify_bracket_inequality,
                                   verify_interpolation_inequality])
def test_inequality_families_bounded(check, calibration_family, independent_family):
    cal = check(calibration_family)
    assert cal.max_ratio > 0
    c_cal = 2.0 * cal.max_ratio
    ind = check(independent_family)
    assert 0 < ind.max_ratio <= c_cal
    # ratio spread bounded while member norms vary widely
    v = ind.valid_ratios
    assert v.max() / v.min() < 10.0


def test_inequality_family_norm_spread(independent_family):
    norms = np.array([f.l2_norm() * (1 + q_norm_finite_difference(f, 0.5, "ydx"))
                      for f in independent_family])
    assert norms.max() / norms.min() > 1e3


def test_x_independent_member_skipped():
    y = np.linspace(-4, 4, 64, endpoint=False)
    f = SyntheticField(np.ones((16, 1)) * np.exp(-(y**2))[None, :], 4.0, label="const_x")
    stats = verify_sample_subelliptic([f])
    assert stats.ratios == [None]
    assert "skipped" in stats.notes[0]


# ---------------------------------------------------------------------------
# trajectory-based subelliptic ratio and Gevrey monitor
# ---------------------------------------------------------------------------

def _couette_window_run(nu, n_y=192, m_max=4):
    grid = Grid(n_y=n_y, bc=D)
    data = default_initial_data(grid, m_max, seed=0)
    prof = builtin_profile("couette")
    t_win = nu ** (-1.0 / 3.0)
    dt = min(0.25 / (2 * np.pi * m_max), t_win / 400.0)
    n_samp = 160
    return evolve(data, prof, nu, t_win, dt,
                  sample_every=max(1, int(np.ceil(t_win / dt / n_samp))),
                  record_snapshots=True)


def test_prop_subelliptic_ratio_heat_case():
    # b == 0, single mode: both sides computable, ratio finite and positive
    from shearscalar.profiles import zero_profile

    grid = Grid(n_y=64, bc=D)
    amp = np.sin(np.pi * grid.nodes).astype(complex)[None, :]
    from shearscalar import ModeField

    field = ModeField(grid, np.array([1]), amp)
    nu = 1e-2
    traj = evolve(field, zero_profile(), nu, 5.0, 0.01, sample_every=25,
                  record_snapshots=True)
    u = SpaceTimeField.from_trajectory(traj)
    ratio = verify_prop_subelliptic(u, flatness=0, nu=nu)
    assert 0 < ratio < 100


def test_prop_subelliptic_rejects_zero_field():
    grid = Grid(n_y=32, bc=D)
    u = SpaceTimeField(grid, np.array([1]), np.linspace(0, 1, 4),
                       np.zeros((4, 1, 32), dtype=complex))
    with pytest.raises(ValueError, match="zero right-hand side"):
        verify_prop_subelliptic(u, flatness=0, nu=1e-3)


def test_prop_subelliptic_ratio_stable_in_nu():
    ratios = []
    for nu in (1e-3, 1e-4):
        traj = _couette_window_run(nu)
        u = SpaceTimeField.from_trajectory(traj)
        ratios.append(verify_prop_subelliptic(u, flatness=0, nu=nu))
    assert max(ratios) / min(ratios) < 5.0


def test_gevrey_monitor_d0_zero_is_energy_decay():
    traj = _couette_window_run(1e-3, n_y=96)
    rep = gevrey_monitor(traj, 1e-3, 0, 1.6, 0.0)
    assert rep.passed
    assert rep.amplification[0] == pytest.approx(1.0, rel=1e-12)
    assert np.all(rep.amplification <= 1.0 + 1e-12)


def test_gevrey_monitor_analytic_couette_modes():
    # synthetic per-mode norms following exp(-nu k^2 t^3 / 3): the monitor's
    # sup must match the closed-form per-mode maximum of
    # d0 nu^(1/3) k^(1/p) t - nu k^2 t^3/3 when that is attained on the grid
    nu, p, d0 = 1e-4, 1.6, 0.3
    modes = np.arange(1, 5)
    k = 2 * np.pi * modes
    t = np.linspace(0.0, 5.0 * nu ** (-1.0 / 3.0), 2001)
    rho0 = np.array([1.0, 0.5, 0.25, 0.125])
    rho0 /= np.sqrt(2 * np.sum(rho0**2))
    norms = rho0[None, :] * np.exp(-nu * k[None, :] ** 2 * t[:, None] ** 3 / 3.0)
    grid = Grid(n_y=16, bc=D)
    traj = Trajectory(
        sample_times=t,
        l2_norms=np.sqrt(2 * np.sum(norms**2, axis=1)),
        per_mode_norms=norms,
        h1y_history=np.zeros_like(t),
        mode_numbers=modes,
        grid=grid,
        nu=nu,
    )
    rep = gevrey_monitor(traj, nu, 0, p, d0, bound=np.inf)
    exponents = (d0 * nu ** (1.0 / 3.0) * k[None, :] ** (1.0 / p) * t[:, None]
                 - nu * k[None, :] ** 2 * t[:, None] ** 3 / 3.0)
    expected = np.sqrt(2 * np.sum(np.exp(2 * exponents) * rho0[None, :] ** 2, axis=1))
    expected /= np.sqrt(2 * np.sum(rho0**2))
    assert np.allclose(rep.amplification, expected, rtol=1e-10)
    # closed form for the per-mode sup: (2/3) d0^(3/2) k^(3/(2p) - 1)
    sup_bound = np.sqrt(np.sum(2 * np.exp((4.0 / 3.0) * d0**1.5 * k ** (3.0 / (2 * p) - 1.0))
                               * rho0**2) / (2 * np.sum(rho0**2)))
    assert rep.sup <= sup_bound * (1 + 1e-9)


def test_gevrey_calibration_and_failure_path():
    traj = _couette_window_run(1e-3, n_y=96)
    d0 = calibrate_gevrey_d0(traj, 1e-3, 0, 1.6, bound=10.0)
    assert d0 > 0
    ok = gevrey_monitor(traj, 1e-3, 0, 1.6, d0, bound=10.0)
    assert ok.passed
    bad = gevrey_monitor(traj, 1e-3, 0, 1.6, 20.0 * d0, bound=10.0)
    assert not bad.passed
    assert "d0 too large" in bad.reason


def test_gevrey_below_threshold_warns():
    traj = _couette_window_run(1e-3, n_y=96)
    with pytest.warns(UserWarning, match="threshold"):
        gevrey_monitor(traj, 1e-3, 0, 1.2, 0.1)
