"""Wall-normal grids, boundary conditions, and the second-derivative operator.

Three boundary conditions are supported on an interval (y_lo, y_hi):

* dirichlet -- interior nodes y_j = y_lo + j*h, j = 1..n, h = L/(n+1); the
  boundary values are identically zero and live on ghost nodes.
* neumann   -- cell centers y_j = y_lo + (j-1/2)*h, h = L/n, with mirror
  ghost cells (zero-flux walls).
* periodic  -- nodes y_j = y_lo + (j-1)*h, h = L/n, cyclic stencil.

All discrete L2 inner products use the uniform quadrature weight h, which
keeps Parseval identities in the diffusion eigenbasis exact.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

__all__ = [
    "BoundaryCondition",
    "Grid",
    "DiffusionOperator",
    "build_diffusion",
    "h1y_seminorm",
    "hminus1y_norm",
]

MIN_POINTS = 8


class BoundaryCondition(enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"
    PERIODIC = "periodic"

    @classmethod
    def parse(cls, text: str) -> "BoundaryCondition":
        try:
            return cls(text.lower())
        except ValueError:
            raise ValueError(
                f"unknown boundary condition {text!r}; expected one of "
                f"{[c.value for c in cls]}"
            ) from None


@dataclass(frozen=True)
class Grid:
    """Uniform y-grid for one of the three boundary conditions."""

    n_y: int
    bc: BoundaryCondition
    y_lo: float = 0.0
    y_hi: float = 1.0

    def __post_init__(self):
        if self.n_y < MIN_POINTS:
            raise ValueError(f"grid too coarse: n_y = {self.n_y} < {MIN_POINTS}")
        if self.y_hi <= self.y_lo:
            raise ValueError("y_hi must exceed y_lo")

    @property
    def length(self) -> float:
        return self.y_hi - self.y_lo

    @property
    def h(self) -> float:
        if self.bc is BoundaryCondition.DIRICHLET:
            return self.length / (self.n_y + 1)
        return self.length / self.n_y

    @cached_property
    def nodes(self) -> np.ndarray:
        j = np.arange(self.n_y)
        if self.bc is BoundaryCondition.DIRICHLET:
            return self.y_lo + self.h * (j + 1)
        if self.bc is BoundaryCondition.NEUMANN:
            return self.y_lo + self.h * (j + 0.5)
        return self.y_lo + self.h * j

    def l2_norm(self, v: np.ndarray) -> float:
        """Discrete L2_y norm with quadrature weight h."""
        return float(np.sqrt(self.h * np.sum(np.abs(v) ** 2, axis=-1)))

    def inner(self, u: np.ndarray, v: np.ndarray) -> complex:
        return complex(self.h * np.sum(np.conj(u) * v))


@dataclass
class DiffusionOperator:
    """Symmetric (cyclic) tridiagonal approximation of d^2/dy^2.

    ``main_diag`` and ``off_diag`` define the matrix; ``corner`` is the wrap
    entry, nonzero only for periodic grids.  The eigendecomposition is
    computed on first use and cached; eigenvectors are orthonormal in the
    h-weighted inner product.
    """

    grid: Grid
    main_diag: np.ndarray
    off_diag: np.ndarray
    corner: float
    _eig: tuple | None = field(default=None, repr=False)

    def apply(self, v: np.ndarray) -> np.ndarray:
        out = self.main_diag * v
        out[..., :-1] += self.off_diag * v[..., 1:]
        out[..., 1:] += self.off_diag * v[..., :-1]
        if self.corner != 0.0:
            out[..., 0] += self.corner * v[..., -1]
            out[..., -1] += self.corner * v[..., 0]
        return out

    def dense(self) -> np.ndarray:
        n = self.grid.n_y
        m = np.diag(self.main_diag) + np.diag(self.off_diag, 1) + np.diag(self.off_diag, -1)
        if self.corner != 0.0:
            m[0, -1] = m[-1, 0] = self.corner
        return m

    def eigensystem(self):
        """(eigenvalues ascending, eigenvectors) orthonormal w.r.t. weight h."""
        if self._eig is None:
            if self.corner == 0.0:
                w, v = scipy.linalg.eigh_tridiagonal(self.main_diag, self.off_diag)
            else:
                w, v = scipy.linalg.eigh(self.dense())
            self._eig = (w, v / np.sqrt(self.grid.h))
        return self._eig

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eigensystem()[0]

    def lowest_modes(self, count: int):
        """The ``count`` eigenpairs closest to zero (slowest diffusion modes)."""
        n = self.grid.n_y
        if count > n:
            raise ValueError("requested more modes than grid points")
        if self._eig is not None:
            w, v = self._eig
            return w[n - count:][::-1], v[:, n - count:][:, ::-1]
        if self.corner == 0.0:
            w, v = scipy.linalg.eigh_tridiagonal(
                self.main_diag, self.off_diag, select="i", select_range=(n - count, n - 1)
            )
        else:
            w, v = scipy.linalg.eigh(self.dense(), subset_by_index=(n - count, n - 1))
        return w[::-1], v[:, ::-1] / np.sqrt(self.grid.h)


def build_diffusion(grid: Grid) -> DiffusionOperator:
    """Second-order stencil for d^2/dy^2 honoring the grid's boundary condition."""
    n, h = grid.n_y, grid.h
    inv_h2 = 1.0 / h**2
    main = np.full(n, -2.0 * inv_h2)
    off = np.full(n - 1, inv_h2)
    corner = 0.0
    if grid.bc is BoundaryCondition.NEUMANN:
        # mirror ghost: first/last rows become (-1, 1)/h^2
        main[0] = main[-1] = -inv_h2
    elif grid.bc is BoundaryCondition.PERIODIC:
        corner = inv_h2
    return DiffusionOperator(grid=grid, main_diag=main, off_diag=off, corner=corner)


def _edge_differences(v: np.ndarray, grid: Grid) -> np.ndarray:
    """Finite differences over grid edges, including boundary closure."""
    if grid.bc is BoundaryCondition.DIRICHLET:
        # ghost value 0 on both walls
        return np.diff(v, prepend=0.0, append=0.0)
    if grid.bc is BoundaryCondition.NEUMANN:
        return np.diff(v)
    return np.diff(v, append=v[..., :1])  # cyclic wrap


def h1y_seminorm(v: np.ndarray, grid: Grid, nu: float) -> float:
    """nu^(1/2) * || d_y v ||_{L2}, discretized over grid edges.

    Exactly dual to :func:`hminus1y_norm` through the diffusion operator:
    the edge sum equals -h <D v, v> for every boundary condition.
    """
    d = _edge_differences(np.asarray(v), grid)
    return float(np.sqrt(nu * np.sum(np.abs(d) ** 2) / grid.h))


def hminus1y_norm(
    g: np.ndarray,
    op: DiffusionOperator,
    nu: float,
    mean_tol: float = 1e-8,
) -> float:
    """nu^(-1/2) * H^{-1}_y norm of g: solve D w = g, return plain |d_y w|.

    Evaluated in the diffusion eigenbasis as nu^(-1/2) * sqrt(sum |g_m|^2 /
    |lambda_m|) over nonzero eigenvalues.  For neumann/periodic grids the
    operator is singular on constants; g is projected onto mean zero first,
    and a removed mean exceeding ``mean_tol * ||g||`` raises, since the
    upstream fields this norm is applied to are mean-free analytically.
    """
    g = np.asarray(g)
    grid = op.grid
    w, v = op.eigensystem()
    coeff = grid.h * (v.conj().T @ g)
    if grid.bc is not BoundaryCondition.DIRICHLET:
        # eigenvalue closest to zero is the constant mode
        izero = int(np.argmax(w))
        removed = np.abs(coeff[izero])
        total = np.sqrt(np.sum(np.abs(coeff) ** 2))
        if total > 0 and removed > mean_tol * total:
            raise ValueError(
                f"singular solve: grid mean of g is {removed:.3e} "
                f"(> {mean_tol:.0e} * ||g||); project the mean before calling"
            )
        coeff[izero] = 0.0
        lam = np.where(np.arange(len(w)) == izero, 1.0, w)
    else:
        lam = w
    return float(np.sqrt(np.sum(np.abs(coeff) ** 2 / np.abs(lam)) / nu))
