"""Viscosity sweeps, decay-time measurement, and power-law exponent fits.

A sweep runs the solver over a log-spaced list of viscosities with a fixed
seeded datum, measures for each run

* the e-fold time (first crossing of ||f|| below e^-1 ||f_in||), and
* the asymptotic tail rate, fit on a late window of the norm history,

and fits log(timescale) against -log(nu) to estimate the decay exponent.

The exponent fit uses the tail timescale 1/tail_rate rather than the e-fold
time.  For profiles with critical points, generic initial data puts most of
its mass where the shear is monotone; that mass dies on the fast monotone
timescale and drags the e-fold crossing with it, so only the late-time rate
exposes the critical-point physics.  The e-fold time is still recorded for
every run (it is the right object for the crossover check, where the initial
plateau matters).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .discretize import BoundaryCondition, Grid
from .oracle import bump_profile_data
from .profiles import ShearProfile, builtin_profile, predicted_exponent
from .solver import ModeField, Trajectory, default_initial_data, dt_max, evolve

__all__ = [
    "EfoldResult",
    "SweepRecord",
    "ExponentFit",
    "ResolutionPolicy",
    "measure_efold",
    "measure_tail_rate",
    "run_sweep",
    "fit_exponent",
    "extended_box_run",
    "crossover_check",
    "CrossoverReport",
]

STATUS_OK = "ok"
STATUS_INCOMPLETE = "incomplete"
STATUS_ANOMALOUS = "anomalous"

# log-norm window (in e-folds below the initial norm) for the sweep tail fit;
# deep enough that the monotone-bulk transient has died out
TAIL_WINDOW_EFOLDS = (6.0, 10.0)
SWEEP_DEPTH = 11.0


@dataclass(frozen=True)
class EfoldResult:
    tau: float
    status: str


def measure_efold(traj: Trajectory) -> EfoldResult:
    """First time ||f(t)|| <= e^-1 ||f_in||, interpolated linearly in log-norm."""
    ln = _log_history(traj)
    below = np.where(ln <= -1.0)[0]
    if len(below) == 0 or traj.initial_norm == 0.0:
        return EfoldResult(tau=float(traj.sample_times[-1]), status=STATUS_INCOMPLETE)
    i = int(below[0])
    if i == 0:
        return EfoldResult(tau=float(traj.sample_times[0]), status=STATUS_OK)
    t0, t1 = traj.sample_times[i - 1], traj.sample_times[i]
    l0, l1 = ln[i - 1], ln[i]
    return EfoldResult(tau=float(t0 + (t1 - t0) * (-1.0 - l0) / (l1 - l0)), status=STATUS_OK)


def _log_history(traj: Trajectory) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.maximum(traj.l2_norms, 1e-300) / max(traj.initial_norm, 1e-300))


def measure_tail_rate(
    traj: Trajectory,
    window_efolds: tuple[float, float] = (1.0, 4.0),
    min_samples: int = 10,
) -> tuple[float, str]:
    """Least-squares slope of -log ||f(t)|| between two log-norm depths.

    The default window (1 to 4 e-folds below the initial norm) measures the
    rate right after the first crossing; sweeps use a deeper window.
    Returns (rate, status); status is "incomplete" when the window holds fewer
    than ``min_samples`` samples and "anomalous" for a nonpositive slope.
    """
    lo, hi = window_efolds
    ln = _log_history(traj)
    mask = (ln <= -lo) & (ln >= -hi)
    if int(mask.sum()) < min_samples:
        return 0.0, STATUS_INCOMPLETE
    t = traj.sample_times[mask]
    a = np.vstack([t, np.ones_like(t)]).T
    slope, _ = np.linalg.lstsq(a, -ln[mask], rcond=None)[0]
    if slope <= 0.0:
        return float(slope), STATUS_ANOMALOUS
    return float(slope), STATUS_OK


@dataclass(frozen=True)
class ResolutionPolicy:
    """nu-dependent grid, step and horizon choices for sweep runs."""

    n_y_floor: int = 256
    n_y_cap: int = 2048
    n_y_factor: int = 32
    dt_advective_safety: float = 0.25
    dt_horizon_fraction: float = 0.02 / 1000.0  # dt <= this * nu^-alpha
    t_end_multiplier: float = 16.0
    m_max: int = 4
    seed: int = 0

    def n_y(self, nu: float) -> int:
        return min(self.n_y_cap, max(self.n_y_floor, self.n_y_factor * math.ceil(nu**-0.25)))

    def dt(self, nu: float, alpha: float, profile: ShearProfile) -> float:
        cap = dt_max(profile, self.m_max, self.dt_advective_safety)
        return min(cap, self.dt_horizon_fraction * nu**-alpha)

    def t_end(self, nu: float, alpha: float) -> float:
        return self.t_end_multiplier * nu**-alpha


@dataclass
class SweepRecord:
    profile: str
    bc: str
    nu: float
    n_y: int
    m_max: int
    dt: float
    tau_efold: float
    tail_rate: float
    fit_t_lo: float
    fit_t_hi: float
    status: str

    @property
    def tail_time(self) -> float:
        """The fitted decay timescale 1/tail_rate."""
        return 1.0 / self.tail_rate if self.tail_rate > 0 else float("nan")


def _run_sweep_point(
    profile: ShearProfile,
    bc: BoundaryCondition,
    nu: float,
    alpha: float,
    policy: ResolutionPolicy,
    n_y: int | None = None,
    dt: float | None = None,
) -> SweepRecord:
    n_y = policy.n_y(nu) if n_y is None else n_y
    dt = policy.dt(nu, alpha, profile) if dt is None else dt
    grid = Grid(n_y=n_y, bc=bc)
    data = default_initial_data(grid, policy.m_max, policy.seed)
    t_end = policy.t_end(nu, alpha)
    sample_every = max(1, int(np.ceil(t_end / dt / 800.0)))
    traj = evolve(
        data, profile, nu, t_end, dt,
        sample_every=sample_every,
        stop_below=math.exp(-SWEEP_DEPTH),
    )
    ef = measure_efold(traj)
    rate, rate_status = measure_tail_rate(traj, TAIL_WINDOW_EFOLDS, min_samples=10)
    ln = _log_history(traj)
    t_lo = _crossing_time(traj.sample_times, ln, -TAIL_WINDOW_EFOLDS[0])
    t_hi = _crossing_time(traj.sample_times, ln, -TAIL_WINDOW_EFOLDS[1])
    status = STATUS_OK
    if ef.status != STATUS_OK or rate_status != STATUS_OK:
        status = rate_status if rate_status != STATUS_OK else ef.status
    return SweepRecord(
        profile=profile.name,
        bc=bc.value,
        nu=nu,
        n_y=n_y,
        m_max=policy.m_max,
        dt=dt,
        tau_efold=ef.tau,
        tail_rate=rate,
        fit_t_lo=t_lo,
        fit_t_hi=t_hi,
        status=status,
    )


def _crossing_time(times: np.ndarray, ln: np.ndarray, level: float) -> float:
    below = np.where(ln <= level)[0]
    if len(below) == 0:
        return float(times[-1])
    i = int(below[0])
    if i == 0:
        return float(times[0])
    t0, t1, l0, l1 = times[i - 1], times[i], ln[i - 1], ln[i]
    return float(t0 + (t1 - t0) * (level - l0) / (l1 - l0))


def run_sweep(
    profile_name: str,
    bc: BoundaryCondition | str,
    nu_list,
    policy: ResolutionPolicy | None = None,
    threads: int = 1,
    grid_independence_gate: bool = True,
    gate_tolerance: float = 0.01,
) -> tuple[list[SweepRecord], dict]:
    """One record per viscosity, sorted by nu; deterministic given the seed.

    When ``grid_independence_gate`` is set, the smallest viscosity is rerun
    with doubled n_y and halved dt and the relative change of the tail
    timescale is reported (and checked against ``gate_tolerance``).
    Per-point failures are recorded in the record status; the sweep continues.
    """
    nu_list = sorted(float(nu) for nu in nu_list)
    if len(nu_list) == 0:
        raise ValueError("nu_list must not be empty")
    policy = policy or ResolutionPolicy()
    bc = BoundaryCondition.parse(bc) if isinstance(bc, str) else bc
    profile = builtin_profile(profile_name)
    alpha = predicted_exponent(profile.flatness)

    def job(nu):
        try:
            return _run_sweep_point(profile, bc, nu, alpha, policy)
        except Exception as exc:  # recorded, sweep continues
            return SweepRecord(profile.name, bc.value, nu, policy.n_y(nu), policy.m_max,
                               0.0, 0.0, 0.0, 0.0, 0.0, f"failed: {exc}")

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(job, nu_list))
    else:
        records = [job(nu) for nu in nu_list]
    records.sort(key=lambda r: r.nu)

    meta = {"gate": None}
    if grid_independence_gate:
        nu0 = nu_list[0]
        base = next(r for r in records if r.nu == nu0)
        fine = _run_sweep_point(
            profile, bc, nu0, alpha, policy,
            n_y=min(2 * base.n_y, 4096),
            dt=base.dt / 2.0,
        )
        if base.tail_rate > 0 and fine.tail_rate > 0:
            delta = abs(1.0 / fine.tail_rate - 1.0 / base.tail_rate) * base.tail_rate
        else:
            delta = float("nan")
        meta["gate"] = {
            "nu": nu0,
            "tau_coarse": base.tail_time,
            "tau_fine": fine.tail_time,
            "relative_change": delta,
            "passed": bool(delta < gate_tolerance),
        }
    return records, meta


@dataclass
class ExponentFit:
    log_nu: np.ndarray
    log_tau: np.ndarray
    slope: float
    intercept: float
    residual: float
    ci_halfwidth: float
    n_points: int

    def to_dict(self, profile: str, bc: str, flatness: int) -> dict:
        return {
            "profile": profile,
            "bc": bc,
            "N": flatness,
            "alpha_hat": self.slope,
            "alpha_predicted": predicted_exponent(flatness),
            "ci_halfwidth": self.ci_halfwidth,
            "residual": self.residual,
            "n_points": self.n_points,
        }


def fit_exponent(records: list[SweepRecord], use: str = "tail_time") -> ExponentFit:
    """OLS of log(timescale) against -log(nu) over the ok records.

    ``use`` selects the fitted timescale: "tail_time" (default, 1/tail_rate)
    or "tau_efold".
    """
    ok = [r for r in records if r.status == STATUS_OK]
    if len(ok) < 4:
        raise ValueError(f"need at least 4 ok records to fit, got {len(ok)}")
    tau = np.array([r.tail_time if use == "tail_time" else r.tau_efold for r in ok])
    nu = np.array([r.nu for r in ok])
    if np.any(tau <= 0) or np.any(~np.isfinite(tau)):
        raise ValueError("nonpositive timescale among ok records")
    x = -np.log(nu)
    y = np.log(tau)
    a = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(a, y, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    n = len(x)
    resid = y - a @ coef
    rss = float(np.sum(resid**2))
    if n > 2:
        se = math.sqrt(rss / (n - 2) / float(np.sum((x - x.mean()) ** 2)))
    else:
        se = 0.0
    return ExponentFit(
        log_nu=np.log(nu),
        log_tau=y,
        slope=slope,
        intercept=intercept,
        residual=math.sqrt(rss / n),
        ci_halfwidth=2.0 * se,
        n_points=n,
    )


@dataclass
class CrossoverReport:
    nu: float
    t_star: float
    r_early: float
    r_late: float
    r_heat_early: float | None
    r_heat_late: float | None
    passed: bool


def extended_box_run(
    profile: ShearProfile,
    nu: float,
    t_end: float,
    n_ext: int = 1024,
    half_width: float = 8.0,
    seed: int = 0,
    mode: int = 1,
    dt: float | None = None,
    record_snapshots: bool = False,
    sample_target: int = 800,
) -> Trajectory:
    """Single-mode run on the periodic extended box with compact bump data."""
    grid = Grid(n_y=n_ext, bc=BoundaryCondition.PERIODIC,
                y_lo=-half_width, y_hi=half_width)
    phi = bump_profile_data(n_ext, half_width, seed)
    data = ModeField(grid, np.array([mode]), phi[None, :].copy())
    if dt is None:
        b_max = float(np.max(np.abs(profile(grid.nodes))))
        dt = 0.25 / (2.0 * np.pi * mode * b_max) if b_max > 0 else t_end / 1000.0
    sample_every = max(1, int(np.ceil(t_end / dt / sample_target)))
    return evolve(data, profile, nu, t_end, dt, sample_every=sample_every,
                  record_snapshots=record_snapshots)


def _ratio_at(traj: Trajectory, t: float) -> float:
    ln = _log_history(traj)
    return float(np.exp(np.interp(t, traj.sample_times, ln)))


def crossover_check(
    nu: float,
    early: float = 0.1,
    late: float = 3.0,
    n_ext: int = 1024,
    half_width: float = 8.0,
    seed: int = 0,
    with_heat_comparison: bool = False,
) -> CrossoverReport:
    """Plateau-then-collapse property of the Couette norm on the extended box.

    Runs the solver with compact bump data and reports
    r(t) = ||f(t)|| / ||f_in|| at t = early * t* and t = late * t* with
    t* = nu^(-1/3); passes when the norm is still above 0.9 at the early time
    and below 0.05 at the late one.  With ``with_heat_comparison``, the same
    ratios are reported for a paired b == 0 run, where no plateau contrast
    exists.
    """
    from .profiles import zero_profile

    t_star = nu ** (-1.0 / 3.0)
    traj = extended_box_run(builtin_profile("couette"), nu, late * t_star * 1.02,
                            n_ext=n_ext, half_width=half_width, seed=seed)
    r_early = _ratio_at(traj, early * t_star)
    r_late = _ratio_at(traj, late * t_star)

    r_heat_early = r_heat_late = None
    if with_heat_comparison:
        heat = extended_box_run(zero_profile(), nu, late * t_star * 1.02,
                                n_ext=n_ext, half_width=half_width, seed=seed,
                                dt=late * t_star * 1.02 / 2000.0)
        r_heat_early = _ratio_at(heat, early * t_star)
        r_heat_late = _ratio_at(heat, late * t_star)
    return CrossoverReport(
        nu=nu,
        t_star=t_star,
        r_early=r_early,
        r_late=r_late,
        r_heat_early=r_heat_early,
        r_heat_late=r_heat_late,
        passed=bool(r_early >= 0.9 and r_late <= 0.05),
    )
