"""Besov-type quotient norms and numerical verification of the inequality suite.

Two kinds of fields are measured here:

* :class:`SpaceTimeField` -- a solver trajectory with snapshots on a uniform
  time grid, measured through sharp Littlewood-Paley blocks in x.  On a
  discrete mode set the sharp dyadic partition is exact, so the block
  characterization sup_j 2^{js} ||block_j u|| serves as the quotient norm.
* :class:`SyntheticField` -- closed-form test fields on a torus-times-line
  grid, measured through the finite-difference definition of the quotient
  norms (shifts along d_x, y d_x, d_y).  These drive the sample-inequality
  checks.

Inequality checks are calibration-based: the asserted constant is 2x the
maximal ratio over a frozen seed-0 family, then independent families must stay
below it while their individual norms range over several orders of magnitude.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import logsumexp

from .discretize import Grid, build_diffusion, h1y_seminorm, hminus1y_norm
from .solver import Trajectory

__all__ = [
    "SpaceTimeField",
    "LPDecomposition",
    "lp_decompose",
    "q_norm_x",
    "fractional_poincare_check",
    "SyntheticField",
    "q_norm_finite_difference",
    "RatioStatistics",
    "verify_sample_subelliptic",
    "verify_bracket_inequality",
    "verify_interpolation_inequality",
    "verify_prop_subelliptic",
    "gevrey_monitor",
    "GevreyReport",
    "bump_family",
    "rescale_family",
    "random_band_family",
]


# ---------------------------------------------------------------------------
# space-time fields from solver trajectories
# ---------------------------------------------------------------------------

@dataclass
class SpaceTimeField:
    """Mode amplitudes u_m(y, t) sampled on a uniform time grid over (0, T)."""

    grid: Grid
    mode_numbers: np.ndarray
    times: np.ndarray
    snapshots: np.ndarray  # complex, shape (n_t, n_modes, n_y)

    def __post_init__(self):
        dt = np.diff(self.times)
        if len(dt) < 1 or not np.allclose(dt, dt[0], rtol=1e-8, atol=0.0):
            raise ValueError("snapshots must be sampled on a uniform time grid")

    @classmethod
    def from_trajectory(cls, traj: Trajectory) -> "SpaceTimeField":
        if traj.snapshots is None:
            raise ValueError("trajectory was run without record_snapshots")
        return cls(traj.grid, traj.mode_numbers, traj.sample_times, traj.snapshots)

    @property
    def t_window(self) -> float:
        return float(self.times[-1])

    @property
    def time_weights(self) -> np.ndarray:
        dt = self.times[1] - self.times[0]
        w = np.full(len(self.times), dt)
        w[0] = w[-1] = dt / 2.0  # trapezoid
        return w

    def mode_energies(self) -> np.ndarray:
        """E_m = 2 * int_0^T ||u_m(t)||^2_{L2_y} dt, per stored mode."""
        e = self.grid.h * np.sum(np.abs(self.snapshots) ** 2, axis=2)  # (n_t, n_modes)
        return 2.0 * (self.time_weights @ e)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.mode_energies())))


@dataclass
class LPDecomposition:
    """Sharp dyadic blocks over x-modes: block j holds 2^j <= m < 2^(j+1)."""

    block_indices: np.ndarray
    block_norms: np.ndarray

    @property
    def total_norm(self) -> float:
        return float(np.sqrt(np.sum(self.block_norms**2)))


def _dyadic_block(m: np.ndarray) -> np.ndarray:
    return np.floor(np.log2(m)).astype(int)


def lp_decompose(u: SpaceTimeField) -> LPDecomposition:
    """Partition the stored modes into dyadic blocks; Parseval is exact."""
    energies = u.mode_energies()
    blocks = _dyadic_block(u.mode_numbers)
    idx = np.unique(blocks)
    norms = np.array([np.sqrt(np.sum(energies[blocks == j])) for j in idx])
    return LPDecomposition(block_indices=idx, block_norms=norms)


def q_norm_x(u: SpaceTimeField, s: float) -> float:
    """sup_j 2^{js} ||block_j u||_{L2(Omega x (0,T))} for 0 < s <= 1."""
    if not 0.0 < s <= 1.0:
        raise ValueError("s must lie in (0, 1]")
    lp = lp_decompose(u)
    if len(lp.block_norms) == 0:
        warnings.warn("empty mode set: quotient norm is 0", stacklevel=2)
        return 0.0
    return float(np.max(2.0 ** (lp.block_indices * s) * lp.block_norms))


@dataclass
class PoincareReport:
    ratio_l2: float
    bound_l2: float
    ratio_hs: float
    bound_hs: float

    @property
    def passed(self) -> bool:
        return self.ratio_l2 <= self.bound_l2 and self.ratio_hs <= self.bound_hs


def fractional_poincare_check(u: SpaceTimeField, s: float, s_prime: float,
                              tol: float = 1e-9) -> PoincareReport:
    """Check ||u|| <= C(s) * q_norm_x(u, s) with the sharp-block constant.

    Since the x-mean mode is never stored, u equals its own mean-free part and
    the geometric-sum bound C(s) = (1 - 2^(-2s))^(-1/2) holds exactly for
    sharp blocks.  The second part bounds the x-Sobolev norm of order
    s' < s by the same quotient norm with constant 2^{s'} (1 - 2^(-2(s-s')))^(-1/2),
    measuring |d_x|^{s'} by the mode index.
    """
    if not 0.0 < s_prime < s < 1.0:
        raise ValueError("need 0 < s' < s < 1")
    q = q_norm_x(u, s)
    if q == 0.0:
        return PoincareReport(0.0, 1.0, 0.0, 1.0)
    bound_l2 = (1.0 - 2.0 ** (-2.0 * s)) ** -0.5 + tol
    ratio_l2 = u.l2_norm() / q

    energies = u.mode_energies()
    hs = np.sqrt(np.sum(np.abs(u.mode_numbers.astype(float)) ** (2 * s_prime) * energies))
    bound_hs = 2.0**s_prime * (1.0 - 2.0 ** (-2.0 * (s - s_prime))) ** -0.5 + tol
    return PoincareReport(ratio_l2, bound_l2, hs / q, bound_hs)


# ---------------------------------------------------------------------------
# synthetic fields on the torus-times-line grid
# ---------------------------------------------------------------------------

@dataclass
class SyntheticField:
    """Real field on x in the unit torus (n_x points) times y in (-L, L)."""

    values: np.ndarray  # real, shape (n_x, n_y)
    half_width: float
    label: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("values must be 2-d (n_x, n_y)")

    @property
    def n_x(self) -> int:
        return self.values.shape[0]

    @property
    def n_y(self) -> int:
        return self.values.shape[1]

    @property
    def h_y(self) -> float:
        return 2.0 * self.half_width / self.n_y

    @property
    def y(self) -> np.ndarray:
        return -self.half_width + self.h_y * np.arange(self.n_y)

    @property
    def weight(self) -> float:
        return self.h_y / self.n_x

    def l2_norm(self) -> float:
        return float(np.sqrt(self.weight * np.sum(self.values**2)))

    def x_spectrum(self) -> np.ndarray:
        """FFT over the x axis; cached on first use."""
        if not hasattr(self, "_fx"):
            self._fx = np.fft.fft(self.values, axis=0)
        return self._fx

    def h1y_norm(self) -> float:
        """|| d_y f ||_{L2}, spectral derivative on the y box."""
        eta = 2.0 * np.pi * np.fft.fftfreq(self.n_y, d=self.h_y)
        fy = np.fft.fft(self.values, axis=1)
        return float(np.sqrt(self.weight * np.sum(np.abs(eta * fy) ** 2) / self.n_y))

    def shear_dx_hminus1y_norm(self) -> float:
        """|| y d_x f ||_{L2_x Hdot^{-1}_y} with the zero y-frequency dropped.

        The y-mean of y d_x f vanishes for the families used here (even-in-y
        envelopes); dropping the zero mode is the box regularization of the
        line integral.
        """
        m = np.fft.fftfreq(self.n_x, d=1.0 / self.n_x)
        g = np.fft.ifft(2j * np.pi * m[:, None] * self.x_spectrum(), axis=0)
        g = g * self.y[None, :]
        eta = 2.0 * np.pi * np.fft.fftfreq(self.n_y, d=self.h_y)
        g_hat = np.fft.fft(g, axis=1)
        mean_frac = np.sqrt(np.sum(np.abs(g_hat[:, 0]) ** 2) / max(np.sum(np.abs(g_hat) ** 2), 1e-300))
        if mean_frac > 1e-6:
            warnings.warn(
                f"y-mean of y*d_x f carries {mean_frac:.1e} of the spectrum; "
                "H^-1 norm drops it", stacklevel=2)
        with np.errstate(divide="ignore"):
            inv = np.where(eta != 0.0, 1.0 / np.abs(eta) ** 2, 0.0)
        return float(np.sqrt(self.weight * np.sum(np.abs(g_hat) ** 2 * inv[None, :]) / self.n_y))


def _sigma_grid(sigma_max: float, count: int = 48) -> np.ndarray:
    return np.geomspace(sigma_max / 2.0**12, sigma_max, count)


def q_norm_finite_difference(
    f: SyntheticField,
    s: float,
    direction: str,
    sigma_max: float = 1.0,
    n_sigma: int = 48,
) -> float:
    """Finite-difference quotient norm sup_sigma sigma^-1 ||exp(sigma^(1/s) X) f - f||.

    direction "dx": shift x by sigma^(1/s) (trigonometric interpolation);
    direction "ydx": shift x by sigma^(1/s) * y per row;
    direction "dy": shift y by whole grid cells (index roll), sigma on the
    log grid induced by integer offsets.
    """
    w = f.weight
    if direction == "dx":
        fx = f.x_spectrum()
        e_m = np.sum(np.abs(fx) ** 2, axis=1) * w / f.n_x  # per-mode energy
        m = np.fft.fftfreq(f.n_x, d=1.0 / f.n_x)
        best = 0.0
        for sigma in _sigma_grid(sigma_max, n_sigma):
            delta = sigma ** (1.0 / s)
            fd2 = np.sum(np.abs(np.exp(2j * np.pi * m * delta) - 1.0) ** 2 * e_m)
            best = max(best, np.sqrt(fd2) / sigma)
        return float(best)
    if direction == "ydx":
        fx = f.x_spectrum()
        e_my = np.abs(fx) ** 2 * w / f.n_x  # (n_x, n_y) per-mode, per-row energy
        m = np.fft.fftfreq(f.n_x, d=1.0 / f.n_x)
        y = f.y
        best = 0.0
        for sigma in _sigma_grid(sigma_max, n_sigma):
            delta = sigma ** (1.0 / s)
            phase = np.exp(2j * np.pi * np.outer(m, delta * y))
            fd2 = np.sum(np.abs(phase - 1.0) ** 2 * e_my)
            best = max(best, np.sqrt(fd2) / sigma)
        return float(best)
    if direction == "dy":
        # integer shifts on a log-spaced ladder
        edge = np.sum(f.values[:, [0, -1]] ** 2) / max(np.sum(f.values**2), 1e-300)
        if edge > 1e-8:
            warnings.warn("support touches the y truncation boundary", stacklevel=2)
        max_shift = max(1, int((sigma_max ** (1.0 / s)) / f.h_y))
        shifts = np.unique(np.geomspace(1, max_shift, n_sigma).astype(int))
        best = 0.0
        for p in shifts:
            sigma = (p * f.h_y) ** s
            fd2 = w * np.sum((np.roll(f.values, -p, axis=1) - f.values) ** 2)
            best = max(best, np.sqrt(fd2) / sigma)
        return float(best)
    raise ValueError(f"unknown direction {direction!r}; expected dx, ydx, or dy")


# ---------------------------------------------------------------------------
# inequality verification
# ---------------------------------------------------------------------------

@dataclass
class RatioStatistics:
    """Per-member LHS/RHS ratios of one inequality over one family."""

    name: str
    labels: list[str]
    ratios: list[float | None]  # None when the member was skipped
    notes: list[str]

    @property
    def valid_ratios(self) -> np.ndarray:
        return np.array([r for r in self.ratios if r is not None])

    @property
    def max_ratio(self) -> float:
        v = self.valid_ratios
        return float(v.max()) if v.size else 0.0

    @property
    def min_ratio(self) -> float:
        v = self.valid_ratios
        return float(v.min()) if v.size else 0.0

    def to_dict(self) -> dict:
        return {
            "family": self.name,
            "members": self.labels,
            "ratios": [r if r is None else float(r) for r in self.ratios],
            "max": self.max_ratio,
            "notes": self.notes,
        }


@dataclass(frozen=True)
class _NormCache:
    q13_dx: float
    q1_dy: float
    q12_ydx: float
    h1y: float
    ydx_hm1: float
    l2: float


def _member_norms(f: SyntheticField) -> _NormCache:
    return _NormCache(
        q13_dx=q_norm_finite_difference(f, 1.0 / 3.0, "dx"),
        q1_dy=q_norm_finite_difference(f, 1.0, "dy", sigma_max=f.half_width / 4.0),
        q12_ydx=q_norm_finite_difference(f, 0.5, "ydx"),
        h1y=f.h1y_norm(),
        ydx_hm1=f.shear_dx_hminus1y_norm(),
        l2=f.l2_norm(),
    )


def _ratio_family(name, family, lhs_fn, rhs_fn) -> RatioStatistics:
    labels, ratios, notes = [], [], []
    for f in family:
        cache = _member_norms(f)
        labels.append(f.label)
        rhs = rhs_fn(cache)
        lhs = lhs_fn(cache)
        if rhs <= 0.0 or not np.isfinite(rhs):
            ratios.append(None)
            notes.append(f"{f.label}: skipped (vanishing right-hand side)")
            continue
        ratios.append(lhs / rhs)
        notes.append("")
    return RatioStatistics(name=name, labels=labels, ratios=ratios, notes=notes)


def verify_sample_subelliptic(family: Sequence[SyntheticField]) -> RatioStatistics:
    """Q^{1/3}_{dx} f  vs  ||f||_{H1_y}^{2/3} ||y dx f||_{H-1_y}^{1/3}."""
    return _ratio_family(
        "sample_subelliptic",
        family,
        lambda c: c.q13_dx,
        lambda c: c.h1y ** (2.0 / 3.0) * c.ydx_hm1 ** (1.0 / 3.0),
    )


def verify_bracket_inequality(family: Sequence[SyntheticField]) -> RatioStatistics:
    """Q^{1/3}_{dx} f  vs  Q^1_{dy} f^{1/3} * Q^{1/2}_{y dx} f^{2/3}."""
    return _ratio_family(
        "bracket_inequality",
        family,
        lambda c: c.q13_dx,
        lambda c: c.q1_dy ** (1.0 / 3.0) * c.q12_ydx ** (2.0 / 3.0),
    )


def verify_interpolation_inequality(family: Sequence[SyntheticField]) -> RatioStatistics:
    """Q^{1/2}_{y dx} f  vs  ||f||_{H1_y}^{1/2} ||y dx f||_{H-1_y}^{1/2}."""
    return _ratio_family(
        "interpolation_inequality",
        family,
        lambda c: c.q12_ydx,
        lambda c: c.h1y**0.5 * c.ydx_hm1**0.5,
    )


def verify_prop_subelliptic(u: SpaceTimeField, flatness: int, nu: float) -> float:
    """LHS/RHS of the trajectory subelliptic estimate on the window (0, T).

    LHS = nu^alpha (||f||^2 + q_norm_x(f, 1/(N+3))^2), RHS = nu ||f||^2_{L2 H1}
    + nu^-1 ||X0 f||^2_{L2 H-1}, where X0 f is evaluated through the equation
    as nu * D f per mode and slice, and the H-1 composition runs over (k, t)
    with Parseval weights.
    """
    alpha = (flatness + 1) / (flatness + 3)
    s = 1.0 / (flatness + 3)
    lhs = nu**alpha * (u.l2_norm() ** 2 + q_norm_x(u, s) ** 2)

    op = build_diffusion(u.grid)
    w_t = u.time_weights
    rhs = 0.0
    for it in range(len(u.times)):
        for im in range(len(u.mode_numbers)):
            a = u.snapshots[it, im]
            gy = h1y_seminorm(a, u.grid, nu)  # nu^(1/2)||d_y f||
            x0 = nu * op.apply(a)
            gm = hminus1y_norm(x0, op, nu)  # nu^(-1/2)||X0 f||_{H-1}
            rhs += 2.0 * w_t[it] * (gy**2 + gm**2)
    if rhs <= 0.0:
        raise ValueError("zero right-hand side: trajectory carries no data")
    return float(lhs / rhs)


# ---------------------------------------------------------------------------
# Gevrey smoothing monitor
# ---------------------------------------------------------------------------

@dataclass
class GevreyReport:
    times: np.ndarray
    amplification: np.ndarray
    d0: float
    p: float
    passed: bool
    reason: str = ""

    @property
    def sup(self) -> float:
        return float(np.max(self.amplification))


def gevrey_monitor(
    traj: Trajectory,
    nu: float,
    flatness: int,
    p: float,
    d0: float,
    bound: float = 10.0,
) -> GevreyReport:
    """Weighted-norm amplification A(t) = ||exp(d0 nu^a |dx|^{1/p} t) f|| / ||f_in||.

    The weight uses |k| = 2 pi m per stored mode.  Evaluated through
    log-sum-exp, so an oversized d0 shows up as an unbounded curve (reported
    as a failure) rather than floating-point overflow.
    """
    if p <= (flatness + 3) / 2.0:
        warnings.warn(
            f"p = {p} is at or below the smoothing threshold {(flatness + 3) / 2}",
            stacklevel=2,
        )
    if d0 < 0.0:
        raise ValueError("d0 must be nonnegative")
    alpha = (flatness + 1) / (flatness + 3)
    k = 2.0 * np.pi * traj.mode_numbers.astype(float)
    t = traj.sample_times
    norms = traj.per_mode_norms  # (n_t, n_modes)
    log_weights = 2.0 * d0 * nu**alpha * np.abs(k) ** (1.0 / p) * t[:, None]
    with np.errstate(divide="ignore"):
        log_terms = log_weights + 2.0 * np.log(np.where(norms > 0, norms, 1e-300))
    # conjugate modes double both the weighted sum and ||f_in||^2 = 2 sum rho^2
    log_a = 0.5 * (np.log(2.0) + logsumexp(log_terms, axis=1)) - np.log(traj.initial_norm)
    with np.errstate(over="ignore"):
        amp = np.exp(log_a)  # inf is a legitimate "unbounded" verdict
    sup = float(np.max(amp))
    passed = bool(np.isfinite(sup) and sup <= bound)
    reason = "" if passed else f"sup A = {sup:.3g} exceeds {bound:g} (d0 too large)"
    return GevreyReport(times=t.copy(), amplification=amp, d0=d0, p=p, passed=passed, reason=reason)


def calibrate_gevrey_d0(
    traj: Trajectory,
    nu: float,
    flatness: int,
    p: float,
    bound: float = 10.0,
    iterations: int = 40,
) -> float:
    """Largest d0 (by bisection) keeping the amplification within ``bound``."""
    lo, hi = 0.0, 1.0
    while gevrey_monitor(traj, nu, flatness, p, hi, bound).passed and hi < 1e6:
        lo, hi = hi, hi * 2.0
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if gevrey_monitor(traj, nu, flatness, p, mid, bound).passed:
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# test families
# ---------------------------------------------------------------------------

def _bump(y: np.ndarray, a: float) -> np.ndarray:
    out = np.zeros_like(y)
    inside = np.abs(y) < a
    out[inside] = np.exp(-1.0 / (1.0 - (y[inside] / a) ** 2))
    return out


def bump_family(n_x: int = 256, n_y: int = 256, half_width: float = 4.0,
                modes: Iterable[int] = (1, 2, 4, 8)) -> list[SyntheticField]:
    """cos(2 pi m x) times a fixed even bump, for a few single modes m."""
    members = []
    for m in modes:
        x = np.arange(n_x) / n_x
        vals = np.cos(2.0 * np.pi * m * x)[:, None] * _bump(
            np.linspace(-half_width, half_width, n_y, endpoint=False), half_width / 4.0
        )[None, :]
        members.append(SyntheticField(vals, half_width, label=f"bump_m{m}"))
    return members


def rescale_family(lambdas: Iterable[int] = tuple(2**j for j in range(11)),
                   n_y: int = 256, half_width: float = 4.0) -> list[SyntheticField]:
    """Anisotropic rescalings f(lambda x, y) of the base bump member.

    This is the family along which the sample inequalities are optimized, so
    its ratios probe the inequalities where they are close to saturated.
    """
    lambdas = tuple(lambdas)
    n_x = 4 * max(lambdas)
    x = np.arange(n_x) / n_x
    yprof = _bump(np.linspace(-half_width, half_width, n_y, endpoint=False), half_width / 4.0)
    return [
        SyntheticField(np.cos(2.0 * np.pi * lam * x)[:, None] * yprof[None, :],
                       half_width, label=f"rescale_{lam}")
        for lam in lambdas
    ]


def random_band_family(seed: int, count: int = 6, n_x: int = 256, n_y: int = 256,
                       half_width: float = 4.0, m_band: int = 8) -> list[SyntheticField]:
    """Seeded random band-limited members with even-in-y bump envelopes."""
    rng = np.random.default_rng(seed)
    x = np.arange(n_x) / n_x
    ygrid = np.linspace(-half_width, half_width, n_y, endpoint=False)
    members = []
    for i in range(count):
        vals = np.zeros((n_x, n_y))
        width = half_width / 4.0 * float(rng.uniform(0.5, 1.0))
        env = _bump(ygrid, width)
        for m in range(1, m_band + 1):
            c = rng.standard_normal() + 1j * rng.standard_normal()
            wiggle = np.cos(np.pi * rng.integers(0, 4) * ygrid / half_width)
            vals += np.real(c * np.exp(2j * np.pi * m * x))[:, None] * (env * wiggle)[None, :]
        scale = 10.0 ** rng.uniform(-2, 2)
        members.append(SyntheticField(scale * vals, half_width, label=f"rand{seed}_{i}"))
    return members
