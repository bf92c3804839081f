"""Configured benchmark problems and their reference solutions.

Covers the viscous Burgers benchmark with its heat-kernel quadrature solution,
2D particle propagation under divergence-free (optionally noisy) winds with a
rational nonlinear diffusion law, a constant-coefficient transport oracle for
splitting-order ladders, and the paired nonlinear-diffusion implicit
comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.special import roots_legendre

from .characteristics import VelocityField, advect_step
from .grid import (DirichletBC1D, DirichletBC2D, Field, Grid1D, Grid2D,
                   build_grid_1d, build_grid_2d, impose_dirichlet, sample_function)
from .sadm import sadm_field_step
from .spatial import TridiagonalSystem, spatial_step_1d, tdma_solve
from .splitting import StepOperator, lie_step, strang_step
from .temporal import SchemeConfig, predictor_corrector_step

BURGERS_SCHEMES = ("classic-implicit", "spatial-ode", "temporal-p0",
                   "temporal-p1", "temporal-p1-loop")

PARTICLE_SCHEMES = ("sadm-k3", "temporal-p0", "temporal-p2-loop-ref")


@dataclass(frozen=True)
class BurgersProblem:
    """u_t + u u_x = nu u_xx on [-1, 1], u(x,0) = -sin(pi x), zero ends."""

    viscosity: float = 0.005

    def __post_init__(self):
        if not self.viscosity > 0:
            raise ValueError("viscosity must be positive")

    def grid(self, nx: int) -> Grid1D:
        return build_grid_1d(2.0, nx, origin=-1.0)

    def initial_field(self, nx: int) -> Field:
        return sample_function(self.grid(nx), lambda x: -np.sin(np.pi * x),
                               DirichletBC1D(0.0, 0.0))


def _eta_rule(t: float, nu: float, points: int):
    """Composite Gauss-Legendre rule over the truncated convolution window.

    Panel edges cluster quadratically around the origin so the heat-kernel
    core stays resolved even when it is orders of magnitude narrower than the
    window.
    """
    halfwidth = max(20.0 * math.sqrt(nu * t), 10.0)
    per_panel = 50
    panels = max(points // per_panel, 2)
    base_x, base_w = roots_legendre(per_panel)
    s = np.linspace(-1.0, 1.0, panels + 1)
    edges = halfwidth * s * np.abs(s)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    nodes = (mid[:, None] + half[:, None] * base_x[None, :]).ravel()
    weights = (half[:, None] * base_w[None, :]).ravel()
    return nodes, weights


def burgers_analytic(x, t: float, nu: float, points: int = 100000):
    """Heat-kernel quadrature solution of the Burgers benchmark.

    u = -int sin(pi(x-eta)) f(x-eta) K deta / int f(x-eta) K deta with the
    Gaussian kernel K = e^{-eta^2/(4 nu t)} and f(y) = e^{-cos(pi y)/(2 pi nu)},
    the integrating factor of the sine initial profile.  Both integrals share
    one exponent; its maximum is subtracted before exponentiating, which
    leaves the ratio unchanged and avoids overflow at small viscosity.
    """
    if not t > 0:
        raise ValueError("the quadrature solution needs t > 0")
    if not nu > 0:
        raise ValueError("viscosity must be positive")
    x_arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    nodes, weights = _eta_rule(t, nu, points)
    out = np.empty_like(x_arr)
    chunk = max(1, int(4e6 / nodes.size))
    for start in range(0, x_arr.size, chunk):
        xs = x_arr[start:start + chunk, None]
        shifted = np.pi * (xs - nodes[None, :])
        exponent = (-np.cos(shifted) / (2.0 * np.pi * nu)
                    - nodes[None, :] ** 2 / (4.0 * nu * t))
        shift = np.max(exponent, axis=1, keepdims=True)
        kernel = np.exp(exponent - shift)
        denom = kernel @ weights
        numer = (np.sin(shifted) * kernel) @ weights
        if not np.all(np.isfinite(denom)) or np.any(denom <= 0):
            raise FloatingPointError("quadrature underflow guard tripped in the denominator")
        out[start:start + chunk] = -numer / denom
    return out if np.ndim(x) else float(out[0])


@lru_cache(maxsize=8)
def _analytic_table_cached(nx: int, dt: float, steps: int, nu: float, points: int):
    grid = build_grid_1d(2.0, nx, origin=-1.0)
    xs = grid.coords()
    table = np.empty((steps, nx))
    for n in range(1, steps + 1):
        table[n - 1] = burgers_analytic(xs, n * dt, nu, points)
    return table


def burgers_analytic_table(nx: int, dt: float, steps: int, nu: float,
                           points: int = 100000) -> np.ndarray:
    """Analytic nodal values at t = dt..steps*dt, cached per (nx, dt) pair."""
    return _analytic_table_cached(nx, float(dt), steps, float(nu), points)


def burgers_averaged_error(numeric: np.ndarray, analytic: np.ndarray) -> float:
    """Mean squared node error over the recorded steps."""
    numeric = np.asarray(numeric)
    analytic = np.asarray(analytic)
    if numeric.shape != analytic.shape:
        raise ValueError(f"history shapes differ: {numeric.shape} vs {analytic.shape}")
    return float(np.sum((analytic - numeric) ** 2) / numeric.size)


def classic_implicit_step(field: Field, diffusivity: float, dt: float) -> Field:
    """Backward-time, centered-space diffusion step solved with the Thomas pass."""
    grid = field.grid
    lam = diffusivity * dt / grid.dx ** 2
    n = grid.nx
    work = field.values.copy()
    impose_dirichlet(work, field.bc)
    sub = np.zeros(n - 1)
    diag = np.ones(n)
    sup = np.zeros(n - 1)
    rhs = work.copy()
    sub[:-1] = -lam
    sup[1:] = -lam
    diag[1:-1] = 1.0 + 2.0 * lam
    if field.bc is not None:
        rhs[0] = field.bc.left
        rhs[-1] = field.bc.right
    out = tdma_solve(TridiagonalSystem(sub, diag, sup, rhs))
    impose_dirichlet(out, field.bc)
    return field.with_values(out)


def _burgers_diffusion_step(field: Field, scheme: str, nu: float, dt: float,
                            corrector_cap: int) -> Field:
    if scheme == "classic-implicit":
        return classic_implicit_step(field, nu, dt)
    if scheme == "spatial-ode":
        return spatial_step_1d(field, nu, 0.0, None, dt)
    if scheme == "temporal-p0":
        return predictor_corrector_step(field, nu, None, SchemeConfig(order=0), dt)
    if scheme == "temporal-p1":
        return predictor_corrector_step(field, nu, None,
                                        SchemeConfig(order=1, corrector_cap=0), dt)
    if scheme == "temporal-p1-loop":
        cfg = SchemeConfig(order=1, corrector_cap=corrector_cap, tol=1e-12)
        return predictor_corrector_step(field, nu, None, cfg, dt)
    raise ValueError(f"unknown Burgers scheme {scheme!r}; pick one of {BURGERS_SCHEMES}")


def run_burgers(scheme: str, nx: int, dt: float, nu: float = 0.005, steps: int = 10,
                corrector_cap: int = 20, analytic_points: int = 100000):
    """Single-step splitting: self-advection by characteristics, then diffusion.

    Returns (history, ebar) with history[n] the nodal values after step n+1.
    """
    problem = BurgersProblem(nu)
    field = problem.initial_field(nx)
    vel = VelocityField(vx=lambda x, t, u: u)
    history = np.empty((steps, nx))
    for n in range(steps):
        field = advect_step(field, vel, dt, method="linear")
        field = _burgers_diffusion_step(field, scheme, nu, dt, corrector_cap)
        history[n] = field.values
    table = burgers_analytic_table(nx, dt, steps, nu, analytic_points)
    return history, burgers_averaged_error(history, table)


@dataclass
class WindField2D:
    """Divergence-free trigonometric wind with optional per-step noise draws.

    The x-component depends only on y and vice versa, so the analytic
    divergence vanishes for every draw.  ``noise`` is the amplitude switch
    (0 smooth, 1 noisy); draws are standard normal, refreshed each step unless
    ``redraw`` is off.
    """

    noise: float = 0.0
    seed: int = 0
    redraw: bool = True

    def draws(self, step: int) -> np.ndarray:
        key = step if self.redraw else 0
        rng = np.random.default_rng((int(self.seed), int(key)))
        return rng.standard_normal(4)

    def components(self, step: int):
        r_y1, r_y2, r_x1, r_x2 = self.draws(step)
        k = self.noise

        def vx(x, y, t, u):
            return 1.5 * (1.0 + k * r_y1) * np.sin(y) + (1.0 + k * r_y2) * np.cos(y)

        def vy(x, y, t, u):
            return 1.5 * (1.0 + k * r_x1) * np.sin(x) + (1.0 + k * r_x2) * np.cos(x)

        return vx, vy


DEFAULT_SEGMENTS = (
    ((0.25, 0.5), (0.75, 0.5)),
    ((0.5, 0.25), (0.5, 0.75)),
    ((0.3, 0.3), (0.7, 0.7)),
)


@dataclass(frozen=True)
class ParticleProblem:
    """Rational-diffusion transport of thin line sources on [0, 2*pi]^2."""

    d0: float = 0.001
    beta: float = 10.0
    growth: float = 0.01
    concentration: float = 0.01
    thickness: float = 0.02
    segments: tuple = DEFAULT_SEGMENTS

    def diffusion(self, u):
        return self.d0 / (1.0 + self.beta * u)

    def diffusion_slope(self, u):
        return -self.d0 * self.beta / (1.0 + self.beta * u) ** 2

    def grid(self, n: int = 200) -> Grid2D:
        return build_grid_2d(2.0 * np.pi, 2.0 * np.pi, n, n)

    def initial_field(self, grid: Grid2D) -> Field:
        X, Y = grid.meshgrid()
        fx = X / grid.length_x
        fy = Y / grid.length_y
        mask = np.zeros_like(X, dtype=bool)
        for (ax, ay), (bx, by) in self.segments:
            mask |= _segment_distance(fx, fy, ax, ay, bx, by) <= self.thickness / 2.0
        values = np.where(mask, self.concentration, 0.0)
        fld = Field(grid, values, DirichletBC2D())
        impose_dirichlet(fld.values, fld.bc)
        return fld


def _segment_distance(px, py, ax, ay, bx, by):
    dx, dy = bx - ax, by - ay
    denom = dx * dx + dy * dy
    t = np.clip(((px - ax) * dx + (py - ay) * dy) / denom, 0.0, 1.0)
    return np.hypot(px - (ax + t * dx), py - (ay + t * dy))


def _particle_diffusion_step(field: Field, problem: ParticleProblem, scheme: str,
                             dt: float, refine: int) -> Field:
    source = None
    if problem.growth != 0.0:
        s = problem.growth
        source = lambda x, y, t, u: s * u  # noqa: E731
    if scheme == "sadm-k3":
        return sadm_field_step(field, problem.d0, problem.beta, source, dt, terms=3)
    if scheme == "temporal-p0":
        return predictor_corrector_step(field, problem.diffusion, source,
                                        SchemeConfig(order=0), dt)
    if scheme == "temporal-p2-loop-ref":
        cfg = SchemeConfig(order=2, corrector_cap=200, tol=1e-12)
        sub = dt / refine
        out = field
        for _ in range(refine):
            out = predictor_corrector_step(out, problem.diffusion, source, cfg, sub)
        return out
    raise ValueError(f"unknown particle scheme {scheme!r}; pick one of {PARTICLE_SCHEMES}")


def run_particles_2d(problem: ParticleProblem, noise: float, scheme: str, steps: int,
                     seed: int, dt: float = 0.01, grid_n: int = 200,
                     refine: int = 50, snapshot_every: int = 0,
                     redraw: bool = True):
    """Strang-split evolution with induced-advection velocity corrections.

    Returns (final_field, max_history, snapshots); snapshots are (step, values)
    pairs taken every ``snapshot_every`` steps when requested.
    """
    grid = problem.grid(grid_n)
    field = problem.initial_field(grid)
    wind = WindField2D(noise=noise, seed=seed, redraw=redraw)
    law = (problem.diffusion, problem.diffusion_slope)
    max_history = np.empty(steps)
    snapshots: List[Tuple[int, np.ndarray]] = []
    for n in range(steps):
        vx, vy = wind.components(n)
        vel = VelocityField(vx=vx, vy=vy, diffusion_law=law)
        field = advect_step(field, vel, 0.5 * dt, method="linear")
        field = _particle_diffusion_step(field, problem, scheme, dt, refine)
        field = advect_step(field, vel, 0.5 * dt, method="linear")
        max_history[n] = float(np.max(np.abs(field.values)))
        if snapshot_every and (n + 1) % snapshot_every == 0:
            snapshots.append((n + 1, field.values.copy()))
    return field, max_history, snapshots


def linear_ade_exact(speed: float, diffusivity: float, mode: int, x, t: float):
    """Translating-decaying sine mode of the constant-coefficient equation."""
    return np.exp(-diffusivity * mode ** 2 * np.pi ** 2 * t) * np.sin(mode * np.pi * (x - speed * t))


def _substep_count(diffusivity: float, dt: float, dx: float, lam_target: float = 1.0) -> int:
    return max(1, math.ceil(diffusivity * dt / dx ** 2 / lam_target))


def splitting_order_run(composer: str, steps: int, t_end: float, nx: int,
                        speed: float, diffusivity: float, mode: int = 1) -> float:
    """March the sine-mode transport problem and return the windowed max error.

    Advection displacements are node-aligned so the remap is exact, and the
    diffusion sub-flow is sub-stepped to a converged order-2 corrector, which
    isolates the composition error.  The error window excludes the strip the
    inflow face influences within t_end.
    """
    grid = build_grid_1d(2.0, nx)
    dt = t_end / steps
    xs = grid.coords()
    field = Field(grid, linear_ade_exact(speed, diffusivity, mode, xs, 0.0),
                  DirichletBC1D(0.0, 0.0))
    vel = VelocityField(vx=lambda x, t, u: speed)
    cfg = SchemeConfig(order=2, corrector_cap=500, tol=1e-13)

    def advect(fld, duration):
        return advect_step(fld, vel, duration, method="linear")

    def diffuse(fld, duration):
        m = _substep_count(diffusivity, duration, grid.dx)
        out = fld
        for _ in range(m):
            out = predictor_corrector_step(out, diffusivity, None, cfg, duration / m)
        return out

    adv = StepOperator("advect", "advection", advect)
    diff = StepOperator("diffuse", "diffusion", diffuse)
    t = 0.0
    for _ in range(steps):
        t_next = t + dt
        field = field.with_bc(DirichletBC1D(
            float(linear_ade_exact(speed, diffusivity, mode, xs[0], t_next)),
            float(linear_ade_exact(speed, diffusivity, mode, xs[-1], t_next))))
        if composer == "lie":
            field = lie_step(adv, diff, field, dt)
        elif composer == "strang":
            field = strang_step(adv, diff, field, dt)
        else:
            raise ValueError(f"unknown composer {composer!r}")
        t = t_next
    exact = linear_ade_exact(speed, diffusivity, mode, xs, t_end)
    window = xs >= speed * t_end + 0.55
    window &= xs <= xs[-1] - 0.1
    return float(np.max(np.abs(field.values[window] - exact[window])))


def splitting_order_ladder(composer: str, rungs: int = 4, base_steps: int = 8,
                           t_end: float = 0.5, nx: int = 1025, speed: float = 1.0,
                           diffusivity: float = 0.02, mode: int = 1):
    """Errors on a halving dt ladder plus the observed orders between rungs."""
    if rungs < 3:
        raise ValueError("need at least 3 rungs for an order estimate")
    errors = []
    for r in range(rungs):
        errors.append(splitting_order_run(composer, base_steps * 2 ** r, t_end,
                                          nx, speed, diffusivity, mode))
    errors = np.array(errors)
    orders = np.log2(errors[:-1] / errors[1:])
    return errors, orders


def full_implicit_nonlinear_step(field: Field, dbar: Callable, dbar_du: Callable,
                                 dt: float) -> Field:
    """Linearized single-system implicit step for u_t = (dbar(u) u_x)_x.

    The squared-gradient term is linearized about the previous step; the
    resulting rows are solved in one Thomas pass.
    """
    grid = field.grid
    dx = grid.dx
    work = field.values.copy()
    impose_dirichlet(work, field.bc)
    n = grid.nx
    grad = np.gradient(work, dx)[1:-1]
    lam = dt * np.asarray(dbar(work[1:-1])) / dx ** 2
    slope = np.asarray(dbar_du(work[1:-1]))
    eta = dt / dx * grad * slope
    sub = np.zeros(n - 1)
    diag = np.ones(n)
    sup = np.zeros(n - 1)
    rhs = np.zeros(n)
    rhs[0] = field.bc.left if field.bc is not None else work[0]
    rhs[-1] = field.bc.right if field.bc is not None else work[-1]
    sub[:-1] = -eta + lam
    diag[1:-1] = -1.0 - 2.0 * lam
    sup[1:] = eta + lam
    rhs[1:-1] = -work[1:-1] + grad ** 2 * slope * dt
    out = tdma_solve(TridiagonalSystem(sub, diag, sup, rhs))
    impose_dirichlet(out, field.bc)
    return field.with_values(out)


def split_nonlinear_step(field: Field, dbar: Callable, dbar_du: Callable,
                         dt: float) -> Field:
    """Induced-advection splitting: characteristics, then frozen-coefficient
    implicit diffusion with the per-node coefficient."""
    vel = VelocityField(vx=lambda x, t, u: np.zeros_like(u), diffusion_law=(dbar, dbar_du))
    moved = advect_step(field, vel, dt, method="linear")
    grid = field.grid
    work = moved.values
    n = grid.nx
    lam = dt * np.asarray(dbar(work[1:-1])) / grid.dx ** 2
    sub = np.zeros(n - 1)
    diag = np.ones(n)
    sup = np.zeros(n - 1)
    rhs = work.copy()
    sub[:-1] = -lam
    sup[1:] = -lam
    diag[1:-1] = 1.0 + 2.0 * lam
    if field.bc is not None:
        rhs[0] = field.bc.left
        rhs[-1] = field.bc.right
    out = tdma_solve(TridiagonalSystem(sub, diag, sup, rhs))
    impose_dirichlet(out, field.bc)
    return moved.with_values(out)


def compare_nonlinear_implicit(dbar: Callable, dbar_du: Callable, grid: Grid1D,
                               dt: float, steps: int, initial: Field):
    """Paired histories of the two implicit treatments plus their divergence."""
    a = initial.copy()
    b = initial.copy()
    hist_a = np.empty((steps, grid.nx))
    hist_b = np.empty((steps, grid.nx))
    gap = np.empty(steps)
    for n in range(steps):
        a = full_implicit_nonlinear_step(a, dbar, dbar_du, dt)
        b = split_nonlinear_step(b, dbar, dbar_du, dt)
        hist_a[n] = a.values
        hist_b[n] = b.values
        gap[n] = float(np.max(np.abs(a.values - b.values)))
    return hist_a, hist_b, gap
