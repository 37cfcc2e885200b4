"""Shear profiles b(y) with closed-form derivatives and critical-point structure.

A profile describes the velocity field u = (b(y), 0) on the channel y in [0, 1].
Critical points of b (zeros of b') control how strongly the shear mixes: at a
critical point y0 where b', ..., b^(n) vanish but b^(n+1) does not, the profile
is "flat of order n".  The largest such order over all critical points, called
``flatness`` here, sets the predicted enhanced-dissipation timescale
nu^(-(flatness+1)/(flatness+3)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "ShearProfile",
    "builtin_profile",
    "numeric_vanishing_order",
    "predicted_exponent",
    "zero_profile",
    "BUILTIN_NAMES",
]

BUILTIN_NAMES = ("couette", "poiseuille", "kolmogorov", "flat:N")


@dataclass(frozen=True)
class ShearProfile:
    """Analytic shear profile with exact derivatives.

    ``derivs[j-1]`` evaluates the j-th derivative of b; derivatives are stored
    up to order ``flatness + 2`` so the declared vanishing orders can always be
    cross-checked numerically.  Instances are immutable and safe to share
    across threads.
    """

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    derivs: tuple[Callable[[np.ndarray], np.ndarray], ...]
    critical_points: tuple[float, ...] = ()
    orders: tuple[int, ...] = ()
    y_periodic_compatible: bool = False
    b_max: float = field(default=0.0)

    def __post_init__(self):
        if len(self.critical_points) != len(self.orders):
            raise ValueError("critical_points and orders must pair up")
        if len(self.derivs) < self.flatness + 2:
            raise ValueError(
                f"profile {self.name!r} needs derivatives up to order "
                f"{self.flatness + 2}, got {len(self.derivs)}"
            )
        if self.b_max == 0.0:
            # sup |b| over [0,1], used for time-step limits
            y = np.linspace(0.0, 1.0, 4097)
            object.__setattr__(self, "b_max", float(np.max(np.abs(self.func(y)))))

    @property
    def flatness(self) -> int:
        """Maximal vanishing order over critical points (0 if none)."""
        return max(self.orders) if self.orders else 0

    def __call__(self, y):
        return self.func(np.asarray(y, dtype=float))

    def deriv(self, j: int, y):
        """Evaluate the j-th derivative of b, 1 <= j <= flatness + 2."""
        if not 1 <= j <= len(self.derivs):
            raise ValueError(f"derivative order {j} not stored for {self.name!r}")
        return self.derivs[j - 1](np.asarray(y, dtype=float))


def _poly_profile(name, coeffs_from_order, critical_points, orders, max_deriv):
    """Helper: build a profile whose derivatives are given callables."""
    return ShearProfile(
        name=name,
        func=coeffs_from_order[0],
        derivs=tuple(coeffs_from_order[1 : max_deriv + 1]),
        critical_points=critical_points,
        orders=orders,
    )


def _make_couette() -> ShearProfile:
    # b(y) = y; monotone, no critical points
    fns = [lambda y: y, lambda y: np.ones_like(y), lambda y: np.zeros_like(y)]
    return _poly_profile("couette", fns, (), (), 2)


def _make_poiseuille() -> ShearProfile:
    # b(y) = y(1-y); single critical point at 1/2, b'' = -2 there
    fns = [
        lambda y: y * (1.0 - y),
        lambda y: 1.0 - 2.0 * y,
        lambda y: np.full_like(y, -2.0),
        lambda y: np.zeros_like(y),
    ]
    return _poly_profile("poiseuille", fns, (0.5,), (1,), 3)


def _make_kolmogorov() -> ShearProfile:
    # b(y) = sin(2 pi y); critical points 1/4 and 3/4, both order 1
    def d(j):
        return lambda y, j=j: (2.0 * math.pi) ** j * np.sin(2.0 * math.pi * y + j * math.pi / 2.0)

    return ShearProfile(
        name="kolmogorov",
        func=lambda y: np.sin(2.0 * math.pi * y),
        derivs=(d(1), d(2), d(3)),
        critical_points=(0.25, 0.75),
        orders=(1, 1),
        y_periodic_compatible=True,
    )


def _make_flat(n: int) -> ShearProfile:
    # b(y) = (y-1/2)^(n+1)/(n+1), so b'(y) = (y-1/2)^n exactly.
    # j-th derivative: n!/(n+1-j)! (y-1/2)^(n+1-j) for j <= n+1, 0 beyond.
    if n < 1:
        raise ValueError("flat:N requires N >= 1")

    def d(j):
        if j > n + 1:
            return lambda y: np.zeros_like(y)
        c = math.factorial(n) / math.factorial(n + 1 - j)
        return lambda y, c=c, p=n + 1 - j: c * (y - 0.5) ** p

    return ShearProfile(
        name=f"flat:{n}",
        func=lambda y: (y - 0.5) ** (n + 1) / (n + 1),
        derivs=tuple(d(j) for j in range(1, n + 3)),
        critical_points=(0.5,),
        orders=(n,),
    )


def zero_profile() -> ShearProfile:
    """The trivial profile b == 0 (pure heat equation per x-mode).

    Used as a calibration reference; it has no declared critical points even
    though b' vanishes identically, so vanishing-order queries on it are
    meaningless and will report saturation.
    """
    z = lambda y: np.zeros_like(y)  # noqa: E731
    return ShearProfile(name="zero", func=z, derivs=(z, z), b_max=0.0)


def builtin_profile(name: str) -> ShearProfile:
    """Look up a builtin profile by name; flat profiles are spelled "flat:N"."""
    if name == "couette":
        return _make_couette()
    if name == "poiseuille":
        return _make_poiseuille()
    if name == "kolmogorov":
        return _make_kolmogorov()
    if name.startswith("flat:"):
        try:
            n = int(name.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"malformed flat profile name {name!r}, expected flat:N") from None
        return _make_flat(n)
    raise ValueError(f"unknown profile {name!r}; known profiles: {', '.join(BUILTIN_NAMES)}")


def numeric_vanishing_order(profile: ShearProfile, y0: float, tol: float) -> int:
    """Smallest k >= 0 with |b^(k+1)(y0)| > tol, capped at flatness + 2.

    Cross-checks a profile's declared vanishing order against its stored
    derivatives.
    """
    if not 0.0 < y0 < 1.0:
        raise ValueError(f"y0 = {y0} must lie in (0, 1)")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    cap = profile.flatness + 2
    for k in range(cap):
        if abs(float(profile.deriv(k + 1, y0))) > tol:
            return k
    raise ValueError(
        f"vanishing order at y0={y0} exceeds supported maximum {cap} for {profile.name!r}"
    )


def predicted_exponent(flatness: int) -> float:
    """Predicted timescale exponent alpha = (N+1)/(N+3) for flatness N."""
    if flatness < 0:
        raise ValueError("flatness must be a non-negative integer")
    return (flatness + 1) / (flatness + 3)
