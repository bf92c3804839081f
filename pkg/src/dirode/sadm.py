"""Segmented Adomian decomposition for nonlinear nodal ODEs on one time segment.

For du/dtau = N(u) with u(0) = u0 the solution is expanded as
u = u0 + u1(tau) + u2(tau) + ... where u_{k+1} integrates the k-th Adomian
polynomial of N.  Restarting the expansion on every segment keeps each series
short; terms are ordinary polynomials in the segment-local time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .grid import Field, geometric_factor, impose_dirichlet, neighbor_weighted_sum

log = logging.getLogger(__name__)

MAX_TERMS = 3


@dataclass
class TauPolynomial:
    """Polynomial in segment-local time, ascending coefficients."""

    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=np.float64))

    def __call__(self, tau):
        out = np.zeros_like(np.asarray(tau, dtype=np.float64) * self.coeffs[0])
        for c in self.coeffs[::-1]:
            out = out * tau + c
        return out

    def integrate(self) -> "TauPolynomial":
        """Antiderivative vanishing at tau = 0."""
        c = self.coeffs / np.arange(1, len(self.coeffs) + 1)
        return TauPolynomial(np.concatenate([[0.0], c]))

    def scale(self, factor: float) -> "TauPolynomial":
        return TauPolynomial(self.coeffs * factor)

    def add(self, other: "TauPolynomial") -> "TauPolynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        c = np.zeros(n)
        c[: len(self.coeffs)] += self.coeffs
        c[: len(other.coeffs)] += other.coeffs
        return TauPolynomial(c)

    def mul(self, other: "TauPolynomial") -> "TauPolynomial":
        return TauPolynomial(np.convolve(self.coeffs, other.coeffs))


@dataclass
class TauSeries:
    """Accumulated decomposition terms u_0 .. u_K over one segment."""

    terms: list
    dt: float

    def __call__(self, tau):
        total = self.terms[0](tau)
        for term in self.terms[1:]:
            total = total + term(tau)
        return total

    def end_value(self):
        return self(self.dt)


@dataclass
class NonlinearODESpec:
    """N(u) and its first three derivatives at a scalar point."""

    n: Callable
    n1: Callable
    n2: Optional[Callable] = None
    n3: Optional[Callable] = None


def adomian_expand(spec: NonlinearODESpec, u0: float, terms: int, dt: float) -> TauSeries:
    """Decomposition terms for du/dtau = N(u), u(0) = u0, up to u_terms.

    Uses the closed polynomial recurrences
        A0 = N(u0),            u1 = A0 tau,
        A1 = u1 N'(u0),        u2 = int A1,
        A2 = u2 N'(u0) + u1^2 N''(u0) / 2,
        A3 = u3 N'(u0) + u1 u2 N''(u0) + u1^3 N'''(u0) / 6.
    """
    if not 0 <= terms <= MAX_TERMS:
        raise ValueError(f"term count must be in [0, {MAX_TERMS}]")
    series = [TauPolynomial([float(u0)])]
    if terms == 0:
        return TauSeries(series, dt)
    n0 = float(spec.n(u0))
    u1 = TauPolynomial([0.0, n0])
    series.append(u1)
    if terms >= 2:
        d1 = float(spec.n1(u0))
        a1 = u1.scale(d1)
        u2 = a1.integrate()
        series.append(u2)
        if terms >= 3:
            if spec.n2 is None:
                raise ValueError("third term needs the second derivative of N")
            d2 = float(spec.n2(u0))
            a2 = u2.scale(d1).add(u1.mul(u1).scale(d2 / 2.0))
            u3 = a2.integrate()
            series.append(u3)
    return TauSeries(series, dt)


def _rational_diffusion_spec(d0: float, beta: float, a: float, b: float, c: float) -> NonlinearODESpec:
    """N(u) = d0 (a u + b) / (1 + beta u) + c with derivative chain closed by hand."""

    def n(u):
        return d0 * (a * u + b) / (1.0 + beta * u) + c

    def n1(u):
        return d0 * (a - beta * b) / (1.0 + beta * u) ** 2

    def n2(u):
        return -2.0 * d0 * beta * (a - beta * b) / (1.0 + beta * u) ** 3

    def n3(u):
        return 6.0 * d0 * beta ** 2 * (a - beta * b) / (1.0 + beta * u) ** 4

    return NonlinearODESpec(n, n1, n2, n3)


def sadm_nonlinear_diffusion_step(u_c: float, u_left: float, u_right: float,
                                  d0: float, beta: float, source: float,
                                  dx: float, dt: float, terms: int = 3) -> float:
    """One segment of the rational-diffusion node ODE.

    Solves du/dtau = D(u)(A u + B) + C with D(u) = d0/(1 + beta u),
    A = -2/dx^2, B = (u_left + u_right)/dx^2, C = source, summing the
    decomposition at tau = dt.
    """
    if 1.0 + beta * u_c == 0.0:
        raise ZeroDivisionError("diffusion law is singular at the segment start (1 + beta*u = 0)")
    a = -2.0 / dx ** 2
    b = (u_left + u_right) / dx ** 2
    spec = _rational_diffusion_spec(d0, beta, a, b, source)
    series = adomian_expand(spec, u_c, terms, dt)
    return float(series.end_value())


def _series_end_values(u0, n0, n1, n2, dt, terms):
    """Vectorized sum u0 + u1(dt) + ... + u_terms(dt) for state-independent N coefficients."""
    total = u0 + n0 * dt
    if terms >= 2:
        total = total + n0 * n1 * dt ** 2 / 2.0
    if terms >= 3:
        total = total + (n0 * n1 ** 2 + n0 ** 2 * n2) * dt ** 3 / 6.0
    return total


def sadm_field_step(field: Field, d0: float, beta: float, f, dt: float,
                    terms: int = 3, t_n: float = 0.0) -> Field:
    """Nonlinear-diffusion segment applied at every interior node.

    Neighbors and the source are frozen at the segment start; in 2D the
    neighbor forcing carries the usual 1/dx^2 and 1/dy^2 weights.
    """
    if not 1 <= terms <= MAX_TERMS:
        raise ValueError(f"term count must be in [1, {MAX_TERMS}]")
    grid = field.grid
    inner = (slice(1, -1),) if grid.ndim == 1 else (slice(1, -1), slice(1, -1))
    work = field.values.copy()
    impose_dirichlet(work, field.bc)
    u0 = work[inner]
    if np.any(1.0 + beta * u0 == 0.0):
        bad = np.argwhere(1.0 + beta * work == 0.0)[0]
        raise ZeroDivisionError(f"diffusion law singular at node {tuple(int(v) for v in bad)}")

    a = -2.0 * geometric_factor(grid)
    b = neighbor_weighted_sum(grid, work)
    if f is None:
        c = np.zeros_like(u0)
    elif grid.ndim == 1:
        x = grid.coords()[1:-1]
        c = np.broadcast_to(np.asarray(f(x, t_n, u0), dtype=np.float64), u0.shape).copy()
    else:
        X, Y = grid.meshgrid()
        c = np.broadcast_to(np.asarray(f(X[inner], Y[inner], t_n, u0), dtype=np.float64),
                            u0.shape).copy()

    denom = 1.0 + beta * u0
    n0 = d0 * (a * u0 + b) / denom + c
    n1 = d0 * (a - beta * b) / denom ** 2
    n2 = -2.0 * d0 * beta * (a - beta * b) / denom ** 3
    new_inner = _series_end_values(u0, n0, n1, n2, dt, terms)

    if not np.all(np.isfinite(new_inner)):
        bad = np.argwhere(~np.isfinite(new_inner))[0]
        raise FloatingPointError(f"non-finite segment value at interior node {tuple(int(v) for v in bad)}")
    scale = np.max(np.abs(u0)) + 1e-300
    if terms >= 3:
        tail = np.max(np.abs((n0 * n1 ** 2 + n0 ** 2 * n2) * dt ** 3 / 6.0))
        if tail >= scale:
            log.warning("decomposition tail %.3e is not small against the state %.3e; "
                        "segment dt=%.3e may be too large", tail, scale, dt)

    out = work.copy()
    out[inner] = new_inner
    impose_dirichlet(out, field.bc)
    return field.with_values(out)
