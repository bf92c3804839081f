"""Closed-form update formulas built on exact solutions of nodal ODEs in time.

The diffusion stencil at one node, with the neighbor sum modeled as a degree-P
polynomial U(tau) = sum_p a_p tau^p, is the linear ODE

    du/dtau = D * U(tau) - 2*abar*u + s,      abar = D * (1/dx^2 [+ 1/dy^2]),

whose exact solution gives an unconditionally stable explicit update for any
step size.  A predictor-corrector pass fits the polynomial from intermediate
samples of the evolving field and can be iterated to a self-consistent state.
Companion updates cover the wave-form advection node ODE and the upwind
advection-diffusion switching scheme.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field, geometric_factor, impose_dirichlet, neighbor_weighted_sum

MAX_ORDER = 8

SAMPLING_FAMILIES = ("uniform", "chebyshev")


@dataclass(frozen=True)
class SchemeConfig:
    """Polynomial order, sampling family and corrector loop controls."""

    order: int = 0
    family: str = "uniform"
    corrector_cap: int = 20
    tol: float = 1e-10

    def __post_init__(self):
        if not 0 <= self.order <= MAX_ORDER:
            raise ValueError(f"order must be in [0, {MAX_ORDER}], got {self.order}")
        if self.family not in SAMPLING_FAMILIES:
            raise ValueError(f"unknown sampling family {self.family!r}")
        if self.corrector_cap < 0:
            raise ValueError("corrector_cap must be >= 0")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass
class NeighborPolynomial:
    """U(tau) = sum_p coeffs[p] * tau^p over one segment of length dt."""

    coeffs: np.ndarray
    dt: float

    def __post_init__(self):
        self.coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=np.float64))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, tau):
        out = np.zeros_like(np.asarray(tau, dtype=np.float64) * self.coeffs[0])
        for c in self.coeffs[::-1]:
            out = out * tau + c
        return out


@dataclass
class DiffusionUpdateParams:
    """Frozen per-node data for one diffusion segment.

    rate: abar = D * (1/dx^2 [+ 1/dy^2]); source: s evaluated at segment start;
    center: the nodal value at tau = 0.
    """

    rate: float
    source: float
    center: float


def sampling_nodes(order: int, dt: float, family: str = "uniform") -> np.ndarray:
    """Sample times T_0 = 0 < T_1 < ... < T_order = dt for the polynomial fit."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if order == 0:
        return np.array([0.0])
    if family == "uniform":
        return dt * np.arange(order + 1) / order
    if family == "chebyshev":
        k = np.arange(order + 1)
        return 0.5 * dt * (1.0 - np.cos(k * np.pi / order))
    raise ValueError(f"unknown sampling family {family!r}")


def normalized_inverse_vandermonde(order: int, family: str = "uniform") -> np.ndarray:
    """Inverse of the sample-time Vandermonde matrix in normalized time.

    With T_k = dt * theta_k the coefficient solve factors as
    a_p = Mbar[p, :] @ U / dt^p where Mbar depends only on theta.
    """
    theta = sampling_nodes(order, 1.0, family) if order > 0 else np.array([0.0])
    m = np.vander(theta, increasing=True)
    return np.linalg.inv(m)


def solve_polynomial_coeffs(times, values) -> NeighborPolynomial:
    """Fit U(tau) = sum a_p tau^p through the samples (times[k], values[k]).

    times must start at 0; the last entry sets the segment length.
    """
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if times.ndim != 1 or times.shape[0] != values.shape[0]:
        raise ValueError("times and values must be matching 1D samples")
    if times[0] != 0.0:
        raise ValueError("first sample time must be 0")
    if np.unique(times).size != times.size:
        raise ValueError("duplicate sample times make the coefficient system singular")
    if times.size == 1:
        return NeighborPolynomial(values[:1].copy(), 0.0)
    dt = times[-1]
    theta = times / dt
    m = np.vander(theta, increasing=True)
    scaled = np.linalg.solve(m, values)
    coeffs = scaled / dt ** np.arange(times.size)
    return NeighborPolynomial(coeffs, dt)


def _particular_terms(coeffs: np.ndarray, two_a, taus_col):
    """Particular solution sum of the segment ODE and its tau=0 value.

    Returns (part(tau) summed over p, part(0)); both carry the a_p/2 factor
    but not the D/abar prefactor.  Factorial/power ratios are built by the
    recurrence c_{q+1} = -c_q (p - q) / (2 abar) to avoid overflow.
    """
    porder = coeffs.shape[0] - 1
    if porder > MAX_ORDER:
        raise ValueError(f"polynomial order {porder} exceeds cap {MAX_ORDER}")
    part = 0.0
    part0 = 0.0
    for p in range(porder + 1):
        half_ap = coeffs[p] / 2.0
        cq = np.ones(np.shape(two_a))
        s_p = 0.0
        for q in range(p + 1):
            s_p = s_p + cq * taus_col ** (p - q)
            if q < p:
                cq = -cq * (p - q) / two_a
        part = part + half_ap * s_p
        part0 = part0 + half_ap * cq
    return part, part0


def closed_form_values(u_n, s, coeffs, a_bar, diffusivity, taus):
    """u(tau) for du/dtau = D*U(tau) - 2*abar*u + s with u(0) = u_n.

    Vectorized over nodes: u_n, s, a_bar, diffusivity and coeffs[p] broadcast
    together; taus may be a scalar or a 1D array (stacked on a leading axis).
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    u_n = np.asarray(u_n, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    a_bar = np.asarray(a_bar, dtype=np.float64)
    if np.any(a_bar <= 0):
        raise ValueError("a_bar must be positive (degenerate diffusion is handled upstream)")
    scalar_tau = np.ndim(taus) == 0
    taus_arr = np.atleast_1d(np.asarray(taus, dtype=np.float64))
    if np.any(taus_arr < 0):
        raise ValueError("tau must be non-negative")

    node_shape = np.broadcast_shapes(u_n.shape, s.shape, a_bar.shape, coeffs.shape[1:])
    taus_col = taus_arr.reshape((-1,) + (1,) * len(node_shape))
    two_a = 2.0 * a_bar
    pref = diffusivity / a_bar

    part, part0 = _particular_terms(coeffs, two_a, taus_col)
    decay_coeff = u_n - s / two_a - pref * part0
    out = decay_coeff * np.exp(-two_a * taus_col) + pref * part + s / two_a
    return out[0] if scalar_tau else out


def closed_form_update(params: DiffusionUpdateParams, poly: NeighborPolynomial,
                       diffusivity: float, tau: float) -> float:
    """Exact segment solution of the diffusion node ODE evaluated at tau."""
    return float(closed_form_values(params.center, params.source, poly.coeffs,
                                    params.rate, diffusivity, tau))


def asymptotic_limit(params: DiffusionUpdateParams, poly: NeighborPolynomial,
                     diffusivity: float, order: int) -> float:
    """Fixed point the update reaches as dt grows without bound (pure diffusion).

    Order 0 relaxes to the start-of-segment neighbor average; any higher order
    relaxes to the end-of-segment one.
    """
    if params.source != 0.0:
        raise ValueError("asymptotic limit is defined for the source-free segment")
    pref = diffusivity / params.rate
    if order == 0:
        return float(pref * poly.coeffs[0] / 2.0)
    return float(pref * poly(poly.dt) / 2.0)


def _eval_source(f, grid, t_n, values):
    """Source values on interior nodes, frozen at segment start."""
    if f is None:
        return np.zeros([n - 2 for n in values.shape])
    if grid.ndim == 1:
        x = grid.coords()[1:-1]
        return np.broadcast_to(np.asarray(f(x, t_n, values[1:-1]), dtype=np.float64),
                               x.shape).copy()
    X, Y = grid.meshgrid()
    inner = (slice(1, -1), slice(1, -1))
    out = np.asarray(f(X[inner], Y[inner], t_n, values[inner]), dtype=np.float64)
    return np.broadcast_to(out, X[inner].shape).copy()


def _node_rate(diffusivity, grid, values):
    """(D, abar) per interior node; a callable diffusivity is frozen at u^n."""
    geom = geometric_factor(grid)
    if callable(diffusivity):
        inner = values[1:-1] if grid.ndim == 1 else values[1:-1, 1:-1]
        d_arr = np.asarray(diffusivity(inner), dtype=np.float64)
        d_arr = np.broadcast_to(d_arr, inner.shape).copy()
    else:
        d_arr = np.asarray(float(diffusivity))
    if np.any(d_arr <= 0):
        raise ValueError("diffusivity must be positive on every node")
    return d_arr, d_arr * geom


def predictor_corrector_step(field: Field, diffusivity, f, config: SchemeConfig,
                             dt: float, t_n: float = 0.0) -> Field:
    """Advance the diffusion operator by one segment of length dt.

    Stage 1 predicts the field at the intermediate sample times with the
    order-0 update, stage 2 fits the neighbor polynomial per node, stage 3
    re-evaluates and refits until the end-of-segment values settle below
    config.tol (or the iteration cap is reached).  Dirichlet faces are
    re-imposed after every sweep; boundary nodes are never integrated.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    grid = field.grid
    inner = (slice(1, -1),) if grid.ndim == 1 else (slice(1, -1), slice(1, -1))
    work = field.values.copy()
    impose_dirichlet(work, field.bc)

    u0 = work[inner].copy()
    s = _eval_source(f, grid, t_n, work)
    d_arr, a_bar = _node_rate(diffusivity, grid, work)
    porder = config.order
    taus = sampling_nodes(porder, dt, config.family) if porder > 0 else np.array([0.0, dt])

    a0 = neighbor_weighted_sum(grid, work)
    if porder == 0:
        end = closed_form_values(u0, s, a0[None], a_bar, d_arr, dt)
        out = work.copy()
        out[inner] = end
        impose_dirichlet(out, field.bc)
        return field.with_values(out)

    # stage 1: order-0 prediction of the full field at each interior sample time
    pred = closed_form_values(u0, s, a0[None], a_bar, d_arr, taus[1:])
    samples = np.empty((porder + 1,) + a0.shape)
    samples[0] = a0
    frame = work.copy()
    for k in range(porder):
        frame[inner] = pred[k]
        impose_dirichlet(frame, field.bc)
        _check_finite(frame, iteration=0)
        samples[k + 1] = neighbor_weighted_sum(grid, frame)

    mbar = normalized_inverse_vandermonde(porder, config.family)
    dt_scale = dt ** np.arange(porder + 1)
    coeffs = _fit_coeffs(mbar, dt_scale, samples)

    # the segment solution is linear in (u0, s, a_p); freeze the offset and the
    # per-coefficient response once so corrector sweeps stay cheap
    zero_poly = np.zeros((1,) + a0.shape)
    offset = closed_form_values(u0, s, zero_poly, a_bar, d_arr, taus[1:])
    unit = np.eye(porder + 1)
    response = np.stack([
        closed_form_values(np.zeros_like(u0), np.zeros_like(u0),
                           np.broadcast_to(unit[p].reshape((-1,) + (1,) * a0.ndim),
                                           (porder + 1,) + a0.shape),
                           a_bar, d_arr, taus[1:])
        for p in range(porder + 1)
    ], axis=1)  # (ntau, P+1, *interior)

    def eval_samples(c):
        return offset + np.einsum("kp...,p...->k...", response, c)

    vals = eval_samples(coeffs)
    u_end = vals[-1]
    for iteration in range(1, config.corrector_cap + 1):
        for k in range(porder):
            frame[inner] = vals[k]
            impose_dirichlet(frame, field.bc)
            _check_finite(frame, iteration)
            samples[k + 1] = neighbor_weighted_sum(grid, frame)
        coeffs = _fit_coeffs(mbar, dt_scale, samples)
        vals = eval_samples(coeffs)
        u_new = vals[-1]
        delta = float(np.max(np.abs(u_new - u_end)))
        u_end = u_new
        if delta < config.tol:
            break

    out = work.copy()
    out[inner] = u_end
    impose_dirichlet(out, field.bc)
    return field.with_values(out)


def _fit_coeffs(mbar, dt_scale, samples):
    flat = samples.reshape(samples.shape[0], -1)
    scaled = mbar @ flat
    coeffs = scaled / dt_scale[:, None]
    return coeffs.reshape(samples.shape)


def _check_finite(frame, iteration):
    if np.all(np.isfinite(frame)):
        return
    bad = np.argwhere(~np.isfinite(frame))[0]
    raise FloatingPointError(
        f"non-finite value at node {tuple(int(b) for b in bad)} during corrector iteration {iteration}")


def wave_advection_update(u_c: float, u_left: float, u_right: float, speed: float,
                          dx: float, dt: float, literal_neighbor_term: bool = False) -> float:
    """One step of the oscillatory node update for pure constant-speed advection.

    Solves d2u/dtau2 = -A u + B with A = 2 c^2/dx^2 and the slope initial
    condition -c (u_right - u_left)/(2 dx).  The derived neighbor term carries
    the c^2 factor; ``literal_neighbor_term`` drops it for comparison runs.
    """
    if speed == 0.0:
        return float(u_c)
    if not (dx > 0 and dt > 0):
        raise ValueError("dx and dt must be positive")
    a = 2.0 * speed ** 2 / dx ** 2
    scale = 1.0 if literal_neighbor_term else speed ** 2
    b = scale * (u_left + u_right) / dx ** 2
    slope0 = -speed * (u_right - u_left) / (2.0 * dx)
    theta = dt * np.sqrt(a)
    return float((u_c - b / a) * np.cos(theta) + slope0 * np.sin(theta) / np.sqrt(a) + b / a)


def nonsplit_switching_update(u_c: float, u_left: float, u_right: float, speed: float,
                              diffusivity: float, dx: float, dt: float) -> float:
    """Upwind-switched exact update for the combined advection-diffusion node ODE.

    The first-derivative term is discretized backward for speed > 0 and forward
    for speed < 0, keeping the decay rate negative for any step size.
    """
    if not diffusivity > 0:
        raise ValueError("diffusivity must be positive")
    diff_part = diffusivity * (u_left + u_right) / dx ** 2
    if speed >= 0:
        a = -2.0 * diffusivity / dx ** 2 - speed / dx
        b = diff_part + speed * u_left / dx
    else:
        a = -2.0 * diffusivity / dx ** 2 + speed / dx
        b = diff_part - speed * u_right / dx
    ratio = b / a
    return float(-ratio + (ratio + u_c) * np.exp(a * dt))


def zeroth_order_stability_check(diffusion_law, u_left: float, u_right: float, dx: float):
    """Stationary point of the order-0 diffusion node ODE and its stability.

    Returns (u_star, stable) with u_star the neighbor average; the point is
    stable exactly when the diffusion law is positive there.
    """
    a = -2.0 / dx ** 2
    b = (u_left + u_right) / dx ** 2
    u_star = -b / a
    slope = a * float(diffusion_law(u_star))
    return float(u_star), bool(slope < 0)
