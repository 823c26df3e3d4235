"""
Null mean curvature flow of cone cross sections.

The flow moves every point of the cross section along the null generator
with speed ``-theta/2``; in terms of the conformal factor,

    d omega / dt = -omega * H2 / 4.

Internally the integrator evolves the metric density ``w = omega**2``, which
obeys

    dw/dt = Lap(ln w) - 2 h(sqrt(w)),

as spherical-harmonic coefficients (nonlinear terms evaluated on a 3/2-padded
grid). The area is the ``l = 0`` coefficient of ``w`` up to a constant, so any
Runge-Kutta scheme integrates the area exactly like the scalar ODE it obeys.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import (
    DE_SITTER,
    ConformalFactor,
    LightconeModel,
    area,
    scalar_curvature,
    spacetime_mean_curvature,
)
from .sphere import ScalarField, integrate

__all__ = [
    "FlowConfig",
    "FlowState",
    "FlowSeries",
    "RescaledState",
    "IntegratorError",
    "OUTCOMES",
    "rhs",
    "step",
    "run",
    "predict_tmax",
    "closed_form_area",
    "area_law_check",
    "rescaled_time_closed_form",
    "rescale_volume_preserving",
    "volume_preserving_residual",
    "metric_equation_residual",
    "roundness",
    "record_state",
]

log = logging.getLogger(__name__)

FOUR_PI = 4.0 * np.pi
SQRT_4PI = np.sqrt(FOUR_PI)
OUTCOMES = ("ShrinksToTip", "ConvergesToMOTS", "ExpandsToInfinity", "Running")

# real-axis stability limit of classical RK4
RK4_STABILITY = 2.78

# IMEX-RK (4,4,3) of Ascher, Ruuth & Spiteri: implicit / explicit tableaux
_ARS_AI = np.array([
    [0, 0, 0, 0, 0],
    [0, 1 / 2, 0, 0, 0],
    [0, 1 / 6, 1 / 2, 0, 0],
    [0, -1 / 2, 1 / 2, 1 / 2, 0],
    [0, 3 / 2, -3 / 2, 1 / 2, 1 / 2],
])
_ARS_AE = np.array([
    [0, 0, 0, 0, 0],
    [1 / 2, 0, 0, 0, 0],
    [11 / 18, 1 / 18, 0, 0, 0],
    [5 / 6, -5 / 6, 1 / 2, 0, 0],
    [1 / 4, 7 / 4, 3 / 4, -7 / 4, 0],
])


class IntegratorError(RuntimeError):
    """Numerical failure that is not a physical extinction."""


class _StepRejected(Exception):
    pass


@dataclass
class FlowConfig:
    model: LightconeModel = DE_SITTER
    dt_init: float = 1e-2
    scheme: str = "RK4"
    cfl_safety: float = 0.8
    t_end: float = 1.0
    stop_area_floor: float = 1e-4 * FOUR_PI
    roundness_tol: float = 1e-4
    h2_tol: float = 1e-4
    record_every: int = 10
    padding: float = 1.5
    max_rel_change: float = 0.05

    def __post_init__(self):
        if self.scheme not in ("RK4", "IMEX"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        for name in ("dt_init", "stop_area_floor", "roundness_tol", "h2_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass(frozen=True)
class FlowState:
    t: float
    omega: ConformalFactor = field(repr=False)
    area: float
    R_min: float
    R_max: float
    H2_min: float
    H2_max: float
    t_tilde: float
    t_hat: float
    area0: float
    dt: float = 0.0

    @property
    def roundness(self):
        return self.R_max - self.R_min


@dataclass
class FlowSeries:
    states: list
    model: LightconeModel
    outcome: str = "Running"
    t_max_observed: float | None = None
    certificates: dict = field(default_factory=dict)

    @property
    def area0(self):
        return self.states[0].area

    @property
    def final(self):
        return self.states[-1]

    def column(self, name):
        return np.array([getattr(s, name) for s in self.states])


def roundness(omega: ConformalFactor) -> float:
    """Oscillation ``max R - min R`` of the scalar curvature."""
    R = scalar_curvature(omega)
    return R.max() - R.min()


def rhs(omega: ConformalFactor, model=DE_SITTER) -> ScalarField:
    """Nodal velocity of the conformal factor, ``-omega * H2 / 4``."""
    H2 = spacetime_mean_curvature(omega, model)
    return -0.25 * omega.omega * H2


def predict_tmax(area0, model=DE_SITTER):
    """Closed-form extinction time, or ``None`` if the flow is eternal (or unknown)."""
    if not area0 > 0:
        raise ValueError("area0 must be positive")
    if model.kind == "DeSitter":
        if area0 < FOUR_PI:
            return 0.5 * math.log(FOUR_PI / (FOUR_PI - area0))
        return None
    if model.kind == "AntiDeSitter":
        return 0.5 * math.log((FOUR_PI + area0) / FOUR_PI)
    if model.kind == "Minkowski":
        return area0 / (2.0 * FOUR_PI)
    return None


def closed_form_area(area0, t, model=DE_SITTER):
    t = np.asarray(t, dtype=float)
    if model.kind == "DeSitter":
        return FOUR_PI + np.exp(2.0 * t) * (area0 - FOUR_PI)
    if model.kind == "AntiDeSitter":
        return (FOUR_PI + area0) * np.exp(-2.0 * t) - FOUR_PI
    if model.kind == "Minkowski":
        return area0 - 2.0 * FOUR_PI * t
    return None


def rescaled_time_closed_form(area0, t):
    """Volume-preserving time ``int_0^t |S_0| / |S_s| ds`` on the de Sitter cone."""
    t = np.asarray(t, dtype=float)
    k = area0 - FOUR_PI
    # ln(area0 / (4 pi + e^{2t} k)) without cancellation for large t
    return (area0 / FOUR_PI) * (t + 0.5 * (np.log(area0) - np.log(FOUR_PI + np.exp(2.0 * t) * k)))


class _SpectralFlow:
    """Right-hand side and steppers in coefficient space."""

    def __init__(self, grid, model, padding=1.5):
        self.grid = grid
        self.model = model
        self.pgrid = grid.padded(padding) if padding > 1 else grid
        l = grid.degrees
        self.lap = np.where(grid.coefficient_mask, -l * (l + 1.0), 0.0)
        self.lmax = grid.lmax

    def area(self, c):
        return float(c[0, 0].real) * SQRT_4PI

    def nodal(self, c):
        w = self.pgrid.synthesize(c)
        if not np.all(np.isfinite(w)) or w.min() <= 0:
            raise _StepRejected
        return w

    def rhs(self, c, w=None):
        if w is None:
            w = self.nodal(c)
        out = self.lap * self.pgrid.analyze(np.log(w))
        kind = self.model.kind
        if kind == "DeSitter":
            out = out + 2.0 * c
            out[0, 0] -= 2.0 * SQRT_4PI
        elif kind == "AntiDeSitter":
            out = out - 2.0 * c
            out[0, 0] -= 2.0 * SQRT_4PI
        elif kind == "Minkowski":
            out[0, 0] -= 2.0 * SQRT_4PI
        else:
            r = np.sqrt(w)
            self.model.check_bracket(r.min(), r.max())
            out = out + self.pgrid.analyze(-2.0 * self.model.h_of(r))
        return out

    # time steps ---------------------------------------------------------

    def choose_dt(self, c, config, remaining):
        w = self.nodal(c)
        k1 = self.rhs(c, w)
        dwdt = self.pgrid.synthesize(k1)
        wmin = float(w.min())
        rate = float(np.max(np.abs(dwdt) / w))
        dt = min(config.dt_init, remaining)
        if rate > 0:
            dt = min(dt, config.cfl_safety * config.max_rel_change / rate)
        if config.scheme == "RK4":
            dt = min(dt, config.cfl_safety * RK4_STABILITY * wmin / (self.lmax * (self.lmax + 1.0)))
        return dt, wmin, k1

    def rk4(self, c, tt, dt, area0, k1):
        a1 = area0 / self.area(c)
        c2 = c + 0.5 * dt * k1
        k2 = self.rhs(c2)
        a2 = area0 / self.area(c2)
        c3 = c + 0.5 * dt * k2
        k3 = self.rhs(c3)
        a3 = area0 / self.area(c3)
        c4 = c + dt * k3
        k4 = self.rhs(c4)
        a4 = area0 / self.area(c4)
        c_new = c + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        tt_new = tt + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        return c_new, tt_new

    def imex(self, c, tt, dt, area0, wmin, k1):
        alpha = 1.0 / wmin
        implicit = alpha * self.lap
        stages, N, I, A = [], [], [], []
        for i in range(5):
            y = c.copy()
            for j in range(i):
                y = y + dt * (_ARS_AE[i, j] * N[j] + _ARS_AI[i, j] * I[j])
            if _ARS_AI[i, i] != 0:
                y = y / (1.0 - dt * _ARS_AI[i, i] * implicit)
            stages.append(y)
            full = k1 if i == 0 else self.rhs(y)
            I.append(implicit * y)
            N.append(full - I[-1])
            A.append(area0 / self.area(y))
        tt_new = tt + dt * sum(_ARS_AE[4, j] * A[j] for j in range(4))
        # stiffly accurate: the last stage is the solution; t_tilde uses the
        # explicit weights, which sum to one
        return stages[-1], tt_new


def _initial_coefficients(omega, sf):
    w = omega.u.map(lambda v: np.exp(2.0 * v))
    # resample onto the padded grid before projecting, so the projection of
    # the non-band-limited density is not aliased by the coarse grid
    coeffs = omega.u.coefficients()
    wp = np.exp(2.0 * sf.pgrid.synthesize(coeffs)) if sf.pgrid is not sf.grid else w.values
    return sf.pgrid.analyze(wp)


def record_state(c, t, t_tilde, area0, sf, dt=0.0):
    w = sf.grid.synthesize(c)
    if w.min() <= 0:
        raise IntegratorError("metric density became non-positive at a grid node")
    omega = ConformalFactor(sf.grid.field(0.5 * np.log(w)))
    R = scalar_curvature(omega)
    H2 = spacetime_mean_curvature(omega, sf.model, R=R)
    return FlowState(
        t=t,
        omega=omega,
        area=area(omega),
        R_min=R.min(),
        R_max=R.max(),
        H2_min=H2.min(),
        H2_max=H2.max(),
        t_tilde=t_tilde,
        t_hat=float(-0.5 * np.expm1(-2.0 * t)),
        area0=area0,
        dt=dt,
    )


def _advance(sf, c, tt, config, area0, remaining):
    """One accepted step; halves dt on rejection."""
    dt, wmin, k1 = sf.choose_dt(c, config, remaining)
    for _ in range(30):
        try:
            if config.scheme == "RK4":
                c_new, tt_new = sf.rk4(c, tt, dt, area0, k1)
            else:
                c_new, tt_new = sf.imex(c, tt, dt, area0, wmin, k1)
            sf.nodal(c_new)
            return c_new, tt_new, dt
        except _StepRejected:
            dt *= 0.5
    raise _StepRejected


def step(state: FlowState, config: FlowConfig) -> FlowState:
    """Advance a recorded state by one adaptive step."""
    sf = _SpectralFlow(state.omega.grid, config.model, config.padding)
    c = _initial_coefficients(state.omega, sf)
    remaining = max(config.t_end - state.t, 0.0) or config.dt_init
    try:
        c_new, tt_new, dt = _advance(sf, c, state.t_tilde, config, state.area0, remaining)
    except _StepRejected:
        raise IntegratorError(
            f"step failed at t={state.t:.6g} (area {state.area:.3e}): singularity candidate"
        ) from None
    return record_state(c_new, state.t + dt, tt_new, state.area0, sf, dt)


def run(omega0: ConformalFactor, config: FlowConfig, target_area=None) -> FlowSeries:
    """Integrate from ``omega0`` until ``t_end`` or extinction.

    If ``target_area`` is given the initial data are rescaled by a constant so
    that their area equals it exactly.
    """
    if target_area is not None:
        omega0 = omega0.scaled(math.sqrt(target_area / area(omega0)))
    model = config.model
    sf = _SpectralFlow(omega0.grid, model, config.padding)
    c = _initial_coefficients(omega0, sf)
    if target_area is not None:
        c = c * (target_area / sf.area(c))
    area0 = sf.area(c)
    t, tt, n = 0.0, 0.0, 0
    states = [record_state(c, t, tt, area0, sf)]
    series = FlowSeries(states, model)
    expanded = False
    extinct = False
    while t < config.t_end * (1 - 1e-14):
        try:
            c, tt, dt = _advance(sf, c, tt, config, area0, config.t_end - t)
        except _StepRejected:
            raise IntegratorError(
                f"integrator failed at t={t:.6g} with area {sf.area(c):.3e} "
                f"above the extinction floor"
            ) from None
        t += dt
        n += 1
        A = sf.area(c)
        if not np.isfinite(A):
            raise IntegratorError(f"non-finite area at t={t:.6g}")
        if A > 100.0 * FOUR_PI:
            expanded = True
        if A < config.stop_area_floor:
            extinct = True
        if extinct or n % config.record_every == 0 or t >= config.t_end * (1 - 1e-14):
            states.append(record_state(c, t, tt, area0, sf, dt))
        if extinct:
            break

    final = states[-1]
    if extinct:
        t_pred = predict_tmax(area0, model)
        series.t_max_observed = final.t
        series.certificates["t_max_predicted"] = t_pred
        if t_pred is not None and abs(final.t - t_pred) > 0.02 * t_pred:
            raise IntegratorError(
                f"area fell below the floor at t={final.t:.6g} but the "
                f"closed-form extinction time is {t_pred:.6g}"
            )
        series.outcome = "ShrinksToTip"
    elif expanded:
        series.outcome = "ExpandsToInfinity"
        series.certificates["final_roundness"] = final.roundness
    elif (
        final.roundness < config.roundness_tol
        and max(abs(final.H2_min), abs(final.H2_max)) < config.h2_tol
    ):
        series.outcome = "ConvergesToMOTS"
    series.certificates.update(
        final_area=final.area,
        final_roundness=final.roundness,
        final_H2_abs_max=max(abs(final.H2_min), abs(final.H2_max)),
        steps=n,
    )
    log.debug("run finished: %s after %d steps (t=%.6g)", series.outcome, n, final.t)
    return series


def area_law_check(series: FlowSeries, t_limit=None):
    """Max relative deviation of recorded areas from the closed-form area law."""
    if len(series.states) < 2:
        raise ValueError("need at least two recorded states")
    area0 = series.area0
    if t_limit is None:
        tmax = predict_tmax(area0, series.model)
        t_limit = np.inf if tmax is None else 0.9 * tmax
    t = series.column("t")
    keep = t <= t_limit
    closed = closed_form_area(area0, t[keep], series.model)
    if closed is None:
        raise ValueError(f"no closed-form area law for model {series.model.kind}")
    return float(np.max(np.abs(series.column("area")[keep] - closed) / np.abs(closed)))


@dataclass(frozen=True)
class RescaledState:
    t: float
    t_tilde_closed: float
    t_tilde_numeric: float
    scale: float
    omega: ConformalFactor = field(repr=False)
    area: float


def rescale_volume_preserving(series: FlowSeries):
    """Rescale a de Sitter run to volume-preserving Ricci flow.

    Each metric is multiplied by ``c(t) = |S_0| / |S_t|``; the clock is
    returned both from the closed form and as integrated during the run.
    """
    if series.model.kind != "DeSitter":
        raise ValueError("volume-preserving rescaling is defined for the de Sitter cone")
    area0 = series.area0
    out = []
    for s in series.states:
        scale = area0 / s.area
        omega = s.omega.scaled(math.sqrt(scale))
        out.append(
            RescaledState(
                t=s.t,
                t_tilde_closed=float(rescaled_time_closed_form(area0, s.t)),
                t_tilde_numeric=s.t_tilde,
                scale=scale,
                omega=omega,
                area=area(omega),
            )
        )
    return out


def _fd_weights(x, x0):
    """Weights of the derivative at ``x0`` of the interpolant through nodes ``x``."""
    x = np.asarray(x, dtype=float) - x0
    scale = np.max(np.abs(x))
    V = np.vander(x / scale, increasing=True).T
    rhs = np.zeros(len(x))
    rhs[1] = 1.0
    return np.linalg.solve(V, rhs) / scale


def _time_derivatives(times, fields, width=5):
    """Derivative at every interior record from a centred ``width``-point stencil."""
    half = width // 2
    out = []
    for i in range(half, len(times) - half):
        wts = _fd_weights(times[i - half : i + half + 1], times[i])
        out.append((i, sum(c * f for c, f in zip(wts, fields[i - half : i + half + 1]))))
    return out


def volume_preserving_residual(rescaled):
    """Max nodal residual of ``dg/dt~ = -(R~ - mean R~) g`` by finite differences in ``t~``."""
    times = [s.t_tilde_closed for s in rescaled]
    dens = [np.exp(2.0 * s.omega.u.values) for s in rescaled]
    worst = 0.0
    for i, dwdt in _time_derivatives(times, dens):
        om = rescaled[i].omega
        R = scalar_curvature(om)
        mean_R = integrate(R * om.grid.field(dens[i])) / integrate(om.grid.field(dens[i]))
        worst = max(worst, float(np.max(np.abs(dwdt + (R.values - mean_R) * dens[i]))))
    return worst


def metric_equation_residual(series: FlowSeries):
    """Max nodal residual of ``d(omega^2)/dt = -H2 omega^2 / 2`` along a run."""
    st = series.states
    dens = [np.exp(2.0 * s.omega.u.values) for s in st]
    worst = 0.0
    for i, dwdt in _time_derivatives([s.t for s in st], dens):
        H2 = spacetime_mean_curvature(st[i].omega, series.model)
        worst = max(worst, float(np.max(np.abs(dwdt + 0.5 * H2.values * dens[i]))))
    return worst


def with_model(config: FlowConfig, model) -> FlowConfig:
    return replace(config, model=model)
