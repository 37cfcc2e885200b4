"""Independent reference solutions used to validate the time stepper.

Three oracles, none of which share code with the Crank-Nicolson path:

* the exact Fourier-space solution of the Couette problem b(y) = y on a large
  periodic box (the classical sheared-heat-kernel formula),
* dense matrix exponentials of small mode operators,
* separable heat-decay rates for b == 0.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .discretize import BoundaryCondition
from .solver import ModeOperator

__all__ = [
    "CouetteSpec",
    "couette_exact",
    "couette_exact_physical",
    "couette_norm_exact",
    "respecify",
    "bump_profile_data",
    "expm_mode",
    "heat_rate",
]

EXPM_MAX_N = 256


@dataclass(frozen=True)
class CouetteSpec:
    """Initial data and parameters for the exact Couette evolution.

    The y-spectrum lives on the uniform frequency grid of a periodic box
    (-half_width, half_width) with n_ext points.  The physical initial data
    must be compactly supported well inside the box (|y| < half_width/4) so
    that box truncation is negligible.
    """

    nu: float
    k: float
    half_width: float
    phi_in: np.ndarray  # physical initial mode profile on the box nodes
    include_x_diffusion: bool = False

    def __post_init__(self):
        if self.nu <= 0.0:
            raise ValueError("nu must be positive")
        if self.phi_in.ndim != 1:
            raise ValueError("phi_in must be a 1-d complex array")

    @property
    def n_ext(self) -> int:
        return len(self.phi_in)

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.n_ext

    @property
    def nodes(self) -> np.ndarray:
        return -self.half_width + self.h * np.arange(self.n_ext)

    @property
    def eta_grid(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n_ext, d=self.h)

    def spectrum(self, phi: np.ndarray | None = None) -> np.ndarray:
        """Semi-discrete Fourier transform h * sum phi_j e^{-i eta y_j}."""
        phi = self.phi_in if phi is None else phi
        phase = np.exp(-1j * self.eta_grid * self.nodes[0])
        return self.h * np.fft.fft(phi) * phase

    def support_check(self) -> float:
        """Fraction of L2 mass outside |y| < half_width/4."""
        outside = np.abs(self.nodes) >= self.half_width / 4.0
        total = np.sum(np.abs(self.phi_in) ** 2)
        return float(np.sum(np.abs(self.phi_in[outside]) ** 2) / total) if total else 0.0


def bump_profile_data(n_ext: int, half_width: float, seed: int = 0) -> np.ndarray:
    """Smooth compactly supported seeded data on the extended box.

    A C-infinity bump of half-width ``half_width/4`` modulated by a seeded
    band-limited trigonometric polynomial, normalized to unit box L2 norm.
    """
    h = 2.0 * half_width / n_ext
    y = -half_width + h * np.arange(n_ext)
    a = half_width / 4.0
    phi = np.zeros(n_ext, dtype=np.complex128)
    inside = np.abs(y) < a
    phi[inside] = np.exp(-1.0 / (1.0 - (y[inside] / a) ** 2))
    rng = np.random.default_rng(seed)
    coeff = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    mod = np.zeros(n_ext, dtype=np.complex128)
    for p, c in enumerate(coeff, start=1):
        mod += c * np.exp(1j * np.pi * p * y / a)
    phi *= mod
    return phi / np.sqrt(h * np.sum(np.abs(phi) ** 2))


def _check_band(spec: CouetteSpec, t: float, alias_tol: float = 1e-10) -> None:
    """Reject shifts that would alias meaningful spectral mass past Nyquist.

    The shift by k t rolls the spectrum; whatever initial content lies within
    ``drift`` of the band edge wraps around.  Error out when that tail carries
    more than ``alias_tol`` of the total energy.
    """
    eta_nyquist = np.pi / spec.h
    drift = abs(spec.k) * t
    if drift >= eta_nyquist:
        raise ValueError(
            f"sheared frequency shift {drift:.1f} exceeds the stored band "
            f"{eta_nyquist:.1f}: extend the eta grid (more points or smaller box)"
        )
    s2 = np.abs(spec.spectrum()) ** 2
    total = float(np.sum(s2))
    if total == 0.0:
        return
    tail = float(np.sum(s2[np.abs(spec.eta_grid) >= eta_nyquist - drift]))
    if tail > alias_tol * total:
        raise ValueError(
            f"shift by {drift:.1f} would alias {tail / total:.2e} of the spectral "
            f"energy past the band edge {eta_nyquist:.1f}: extend the eta grid"
        )


def couette_exact(spec: CouetteSpec, t: float) -> np.ndarray:
    """Spectrum of the exact Couette solution at time t.

    Implements the sheared-diffusion multiplier
    exp(-nu t (eta^2 + eta k t + k^2 t^2 / 3)) acting on the shifted initial
    spectrum evaluated at eta + k t.  The shift is realized by modulating the
    physical data with e^{-i k t y} before transforming, which is exact
    trigonometric interpolation on the box.
    """
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    _check_band(spec, t)
    eta = spec.eta_grid
    shifted = spec.spectrum(spec.phi_in * np.exp(-1j * spec.k * t * spec.nodes))
    mult = np.exp(-spec.nu * t * (eta**2 + eta * spec.k * t + spec.k**2 * t**2 / 3.0))
    if spec.include_x_diffusion:
        mult = mult * np.exp(-spec.nu * spec.k**2 * t)
    return mult * shifted


def couette_exact_physical(spec: CouetteSpec, t: float) -> np.ndarray:
    """Exact solution sampled on the box nodes at time t."""
    f_hat = couette_exact(spec, t)
    phase = np.exp(1j * spec.eta_grid * spec.nodes[0])
    return np.fft.ifft(f_hat * phase) / spec.h


def couette_norm_exact(spec: CouetteSpec, t: float) -> float:
    """L2_y norm of the exact solution (Parseval over the eta grid)."""
    f_hat = couette_exact(spec, t)
    d_eta = 2.0 * np.pi / (2.0 * spec.half_width)
    return float(np.sqrt(np.sum(np.abs(f_hat) ** 2) * d_eta / (2.0 * np.pi)))


def respecify(spec: CouetteSpec, t: float) -> CouetteSpec:
    """New spec whose initial data is the solution at time t (semigroup test)."""
    return replace(spec, phi_in=couette_exact_physical(spec, t))


def expm_mode(op: ModeOperator, state: np.ndarray, t: float) -> np.ndarray:
    """exp(t L_k) state via dense Pade/scaling-squaring; guarded to n_y <= 256.

    Dense linear algebra only: entirely independent of the tridiagonal
    Crank-Nicolson path it validates.
    """
    n = op.grid.n_y
    if n > EXPM_MAX_N:
        raise ValueError(f"expm_mode limited to n_y <= {EXPM_MAX_N}, got {n}")
    return scipy.linalg.expm(t * op.dense()) @ np.asarray(state, dtype=np.complex128)


def heat_rate(bc: BoundaryCondition, nu: float) -> float:
    """Slowest y-decay rate of the b == 0 equation (x-mean excluded in x only).

    dirichlet: nu pi^2 (mode sin(pi y)); neumann: nu pi^2 for the first
    nonconstant mode cos(pi y); periodic: nu (2 pi)^2 for e^{2 pi i y}.
    """
    if nu <= 0.0:
        raise ValueError("nu must be positive")
    if bc is BoundaryCondition.PERIODIC:
        return nu * (2.0 * np.pi) ** 2
    return nu * np.pi**2
