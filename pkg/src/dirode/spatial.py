"""Implicit update formulas from exact solutions of nodal ODEs in space.

Freezing the time derivative turns one implicit step of the diffusion (or
advection-diffusion) equation into a two-point boundary value problem on
[x_i - dx, x_i + dx] whose exact solution couples each node to its neighbors
through exponential weights.  Collecting the per-node relations gives a
strictly diagonally dominant tridiagonal system solved with the Thomas
algorithm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field, impose_dirichlet


class SingularSystemError(ValueError):
    """Raised when elimination hits a zero pivot."""


@dataclass
class TridiagonalSystem:
    """sub/sup have length n-1, diag and rhs length n."""

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        self.sub = np.asarray(self.sub, dtype=np.float64)
        self.diag = np.asarray(self.diag, dtype=np.float64)
        self.sup = np.asarray(self.sup, dtype=np.float64)
        self.rhs = np.asarray(self.rhs, dtype=np.float64)
        n = self.diag.shape[0]
        if n < 1:
            raise ValueError("system must have at least one row")
        if self.rhs.shape != (n,) or self.sub.shape != (max(n - 1, 0),) or self.sup.shape != (max(n - 1, 0),):
            raise ValueError("inconsistent tridiagonal band lengths")

    @property
    def size(self) -> int:
        return self.diag.shape[0]

    def dense(self) -> np.ndarray:
        n = self.size
        m = np.zeros((n, n))
        m[np.arange(n), np.arange(n)] = self.diag
        if n > 1:
            m[np.arange(1, n), np.arange(n - 1)] = self.sub
            m[np.arange(n - 1), np.arange(1, n)] = self.sup
        return m


def tdma_solve(system: TridiagonalSystem) -> np.ndarray:
    """Thomas forward elimination / back substitution."""
    n = system.size
    c = np.empty(n - 1) if n > 1 else np.empty(0)
    d = np.empty(n)
    beta = system.diag[0]
    if beta == 0.0:
        raise SingularSystemError("zero pivot at row 0")
    d[0] = system.rhs[0] / beta
    for i in range(1, n):
        c[i - 1] = system.sup[i - 1] / beta
        beta = system.diag[i] - system.sub[i - 1] * c[i - 1]
        if beta == 0.0:
            raise SingularSystemError(f"zero pivot at row {i}")
        d[i] = (system.rhs[i] - system.sub[i - 1] * d[i - 1]) / beta
    x = d
    for i in range(n - 2, -1, -1):
        x[i] -= c[i] * x[i + 1]
    return x


def dense_solve(system: TridiagonalSystem) -> np.ndarray:
    """Reference solve through a dense factorization; oracle for tdma_solve."""
    return np.linalg.solve(system.dense(), system.rhs)


@dataclass(frozen=True)
class SpatialStencil:
    """Neighbor weights and affine term of u_i = k1 u_{i-1} + k2 u_{i+1} + k3."""

    k1: float
    k2: float
    k3: float
    lam1: float
    lam2: float

    def row(self):
        """Coefficients of -k1 u_{i-1} + u_i - k2 u_{i+1} = k3."""
        return -self.k1, 1.0, -self.k2, self.k3


def spatial_advection_diffusion_stencil(speed: float, diffusivity: float, dt: float,
                                        dx: float, u_n: float, source: float = 0.0) -> SpatialStencil:
    """Exact-BVP neighbor weights for one implicit advection-diffusion step.

    The node ODE u'' - C u' - A u = B with A = 1/(D dt), C = c/D has
    characteristic roots lam_{1,2} = (C +- sqrt(C^2 + 4A))/2.  Exponentials are
    combined so nothing overflows when dt is tiny (A huge).
    """
    if not (diffusivity > 0 and dt > 0 and dx > 0):
        raise ValueError("diffusivity, dt and dx must be positive")
    a = 1.0 / (diffusivity * dt)
    c_over_d = speed / diffusivity
    root = np.sqrt(c_over_d ** 2 + 4.0 * a)
    lam1 = 0.5 * (c_over_d + root)
    lam2 = 0.5 * (c_over_d - root)
    # k1 = e^{lam2 dx} / (1 + e^{-root dx}), k2 = e^{-lam1 dx} / (1 + e^{-root dx});
    # both exponents are <= 0 because root >= |C|
    damp = 1.0 + np.exp(-root * dx)
    k1 = np.exp(lam2 * dx) / damp
    k2 = np.exp(-lam1 * dx) / damp
    b_over_a = -u_n - source * dt
    k3 = -b_over_a * (1.0 - k1 - k2)
    return SpatialStencil(float(k1), float(k2), float(k3), float(lam1), float(lam2))


def spatial_diffusion_stencil(diffusivity: float, dt: float, dx: float,
                              u_n: float, source: float = 0.0) -> SpatialStencil:
    """Pure-diffusion specialization; symmetric weights k1 = k2."""
    return spatial_advection_diffusion_stencil(0.0, diffusivity, dt, dx, u_n, source)


def assemble_implicit_system(grid, values, bc, diffusivity, speed, source_vals, dt) -> TridiagonalSystem:
    """Per-node stencils plus identity rows for the Dirichlet faces.

    The weights k1, k2 are node-independent; only the affine term k3 carries
    the nodal state, so assembly is a single vectorized pass.
    """
    nx = grid.nx
    st = spatial_advection_diffusion_stencil(speed, diffusivity, dt, grid.dx, 0.0, 0.0)
    sub = np.zeros(nx - 1)
    diag = np.ones(nx)
    sup = np.zeros(nx - 1)
    rhs = np.zeros(nx)
    rhs[0] = bc.left if bc is not None else values[0]
    rhs[-1] = bc.right if bc is not None else values[-1]
    sub[:-1] = -st.k1
    sup[1:] = -st.k2
    rhs[1:-1] = (values[1:-1] + source_vals * dt) * (1.0 - st.k1 - st.k2)
    return TridiagonalSystem(sub, diag, sup, rhs)


def spatial_step_1d(field: Field, diffusivity: float, speed: float, f, dt: float,
                    t_n: float = 0.0) -> Field:
    """One implicit time step of the 1D advection-diffusion operator."""
    grid = field.grid
    if grid.ndim != 1:
        raise ValueError("spatial_step_1d expects a 1D field")
    work = field.values.copy()
    impose_dirichlet(work, field.bc)
    if f is None:
        source_vals = np.zeros(grid.nx - 2)
    else:
        x = grid.coords()[1:-1]
        source_vals = np.broadcast_to(np.asarray(f(x, t_n, work[1:-1]), dtype=np.float64),
                                      x.shape).copy()
    system = assemble_implicit_system(grid, work, field.bc, diffusivity, speed, source_vals, dt)
    out = tdma_solve(system)
    impose_dirichlet(out, field.bc)
    return field.with_values(out)
