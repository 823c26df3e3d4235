"""
Closed-form solutions and symmetries.

* constant-H2 (STCMC) cross sections ``omega = b / (sqrt(1+|a|^2) - a.x)``;
* round spheres moving under the flow on the de Sitter cone;
* ancient 2d Ricci flows (shrinking spheres, King-Rosenau) and the map
  that turns them into ancient solutions of the null flow;
* the action of the restricted Lorentz group on cone cross sections.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate as spi

from .geometry import DE_SITTER, ConformalFactor, scalar_curvature, spacetime_mean_curvature
from .sphere import SphericalGrid

__all__ = [
    "StcmcParams",
    "LorentzBoost",
    "AncientSolution",
    "ExtinctionError",
    "stcmc_factor",
    "sphere_solution",
    "sphere_extinction_time",
    "ricci_time",
    "ricci_scale",
    "ancient_profile",
    "ancient_profile_log",
    "nmcf_from_ancient",
    "ancient_area",
    "mobius_transform",
    "ancient_flow_residual",
    "ricci_flow_residual",
]


class ExtinctionError(ValueError):
    """Requested time lies at or beyond the extinction time of a solution."""


@dataclass(frozen=True)
class StcmcParams:
    b: float
    a: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError("area radius b must be positive")
        object.__setattr__(self, "a", tuple(float(x) for x in self.a))
        if len(self.a) != 3:
            raise ValueError("a must be a 3-vector")

    def to_dict(self):
        return {"b": self.b, "a": list(self.a)}


@dataclass(frozen=True)
class LorentzBoost:
    direction: tuple = (1.0, 0.0, 0.0)
    rapidity: float = 0.0

    def __post_init__(self):
        n = np.asarray(self.direction, dtype=float)
        if n.shape != (3,) or not np.isclose(np.linalg.norm(n), 1.0, atol=1e-12):
            raise ValueError("boost direction must be a unit 3-vector")
        object.__setattr__(self, "direction", tuple(float(x) for x in n))

    @classmethod
    def along(cls, vector, rapidity):
        v = np.asarray(vector, dtype=float)
        return cls(tuple(v / np.linalg.norm(v)), float(rapidity))

    def to_dict(self):
        return {"direction": list(self.direction), "rapidity": self.rapidity}


@dataclass(frozen=True)
class AncientSolution:
    """Ancient null flow obtained from an ancient 2d Ricci flow.

    ``t_hat_offset`` is the shift of Ricci time: at physical time ``t`` the
    Ricci profile is evaluated at ``t_hat(t) - t_hat_offset``. Its value decides
    whether the area at ``t = 0`` is below, at, or above ``4 pi``
    (``t_hat_offset`` <, =, > 1/2).
    """

    kind: str
    t_hat_offset: float
    boost: LorentzBoost | None = None

    def __post_init__(self):
        if self.kind not in ("ShrinkingSphere", "KingRosenau"):
            raise ValueError(f"unknown ancient solution {self.kind!r}")
        if not self.t_hat_offset > 0:
            raise ValueError("t_hat_offset must be positive")

    def extinction_time(self):
        """Physical extinction time, or ``None`` if the solution is eternal."""
        if self.t_hat_offset < 0.5:
            return -0.5 * np.log(1.0 - 2.0 * self.t_hat_offset)
        return None

    def to_dict(self):
        d = {"kind": self.kind, "t_hat_offset": self.t_hat_offset}
        if self.boost is not None:
            d["boost"] = self.boost.to_dict()
        return d


def stcmc_factor(p: StcmcParams, grid=None) -> ConformalFactor:
    grid = grid or SphericalGrid()
    a = np.asarray(p.a)
    denom = np.sqrt(1.0 + a @ a) - grid.unit_vectors @ a
    return ConformalFactor(grid.field(np.log(p.b) - np.log(denom)))


def sphere_solution(b0, t):
    """Area radius at time ``t`` of the round sphere that starts at radius ``b0``."""
    if not b0 > 0:
        raise ValueError("b0 must be positive")
    rad = 1.0 + np.exp(2.0 * np.asarray(t, dtype=float)) * (b0 * b0 - 1.0)
    if np.any(rad <= 0):
        raise ExtinctionError("time at or past the extinction time of the sphere")
    return np.sqrt(rad)


def sphere_extinction_time(b0):
    if b0 >= 1:
        return None
    return 0.5 * np.log(1.0 / (1.0 - b0 * b0))


def ricci_scale(t):
    """Metric scaling ``C(t) = exp(-2t)`` that maps the null flow to 2d Ricci flow."""
    return np.exp(-2.0 * np.asarray(t, dtype=float))


def ricci_time(t):
    """Ricci-flow time ``int_0^t C(s) ds = (1 - exp(-2t)) / 2``."""
    return -0.5 * np.expm1(-2.0 * np.asarray(t, dtype=float))


def ancient_profile_log(kind, t_hat, theta):
    """``ln`` of the Ricci-flow conformal factor at colatitude ``theta``."""
    t_hat = float(t_hat)
    if t_hat >= 0:
        raise ExtinctionError("ancient profiles are defined for t_hat < 0 only")
    tau = -t_hat
    theta = np.asarray(theta, dtype=float)
    if kind == "ShrinkingSphere":
        return np.full(theta.shape, 0.5 * np.log(2.0 * tau))
    if kind == "KingRosenau":
        # 2 sinh(tau) and (cosh(tau) - 1)/2 = sinh(tau/2)^2, overflow-safe
        log_num = np.log(-np.expm1(-2.0 * tau)) + tau
        log_k = 2.0 * (np.log(-np.expm1(-tau)) + 0.5 * tau - np.log(2.0))
        s2 = np.sin(theta) ** 2
        log_den = np.logaddexp(0.0, log_k + np.log(np.where(s2 > 0, s2, np.finfo(float).tiny)))
        return 0.5 * (log_num - log_den)
    raise ValueError(f"unknown ancient solution {kind!r}")


def ancient_profile(kind, t_hat, grid=None) -> ConformalFactor:
    """Ricci-flow profile (shrinking sphere or King-Rosenau) on ``grid``."""
    grid = grid or SphericalGrid()
    th, _ = grid.mesh
    return ConformalFactor(grid.field(ancient_profile_log(kind, t_hat, th)))


def _ancient_argument(sol, t):
    s = float(ricci_time(t)) - sol.t_hat_offset
    if s >= 0:
        raise ExtinctionError(
            f"t={t} reaches the extinction time of the ancient solution"
        )
    return s


def nmcf_from_ancient(sol: AncientSolution, t, grid=None) -> ConformalFactor:
    """Ancient null-flow solution at physical time ``t``.

    ``omega(t) = exp(t) * omega_hat(t_hat(t) - t_hat_offset)``, followed by the
    optional boost.
    """
    grid = grid or SphericalGrid()
    s = _ancient_argument(sol, t)
    th, _ = grid.mesh
    omega = ConformalFactor(grid.field(t + ancient_profile_log(sol.kind, s, th)))
    if sol.boost is not None:
        omega = mobius_transform(omega, sol.boost)
    return omega


def ancient_area(sol: AncientSolution, t):
    """Area of an ancient solution by 1-d adaptive quadrature in ``ln(1 - cos theta)``.

    Independent of any grid, so it stays accurate at very negative times where
    the King-Rosenau profile concentrates near the poles. Boosts are
    isometries of the cone and leave the area unchanged.
    """
    s = _ancient_argument(sol, t)
    tau = -s
    if sol.kind == "ShrinkingSphere":
        return float(np.exp(2.0 * t) * 8.0 * np.pi * tau)
    log_k = 2.0 * (np.log(-np.expm1(-tau)) + 0.5 * tau - np.log(2.0))

    # area = 2 sinh(tau) * 4 pi * int_0^1 dy / (1 + k y (2 - y)),  y = 1 - |cos theta|.
    # With q = ln(k y) the integral is exp(-log_k) * J and the integrand of J
    # tends to 1 / (2 - exp(q - log_k)) once exp(-q) is negligible.
    def integrand(q):
        eq = np.exp(q)
        return eq / (1.0 + eq * (2.0 - np.exp(q - log_k)))

    q_cut = 50.0
    q_lo = min(-60.0, log_k - 60.0)
    q_hi = min(log_k, q_cut)
    J = 0.0
    for a, b in ((q_lo, min(0.0, q_hi)), (min(0.0, q_hi), q_hi)):
        if b > a:
            J += spi.quad(integrand, a, b, epsabs=0.0, epsrel=1e-13, limit=200)[0]
    if log_k > q_cut:
        y0 = np.exp(q_cut - log_k)
        J += 0.5 * (np.log(2.0 - y0) + log_k - q_cut)
    # ln(2 sinh tau) - log_k, with the tau terms cancelled analytically
    log_prefactor = (
        2.0 * t + np.log(-np.expm1(-2.0 * tau)) - 2.0 * np.log(-np.expm1(-tau)) + 2.0 * np.log(2.0)
    )
    integral = 4.0 * np.pi * J
    return float(np.exp(log_prefactor + np.log(integral)))


def mobius_transform(omega: ConformalFactor, boost: LorentzBoost) -> ConformalFactor:
    """Push a cross section forward by a Lorentz boost of the cone.

    Cone points ``omega(x) (1, x)`` are mapped by the boost and renormalized,
    ``L(1, x) = lambda(x) (1, phi(x))``; the new factor is
    ``omega'(phi(x)) = lambda(x) omega(x)``. Values at the grid nodes ``y`` are
    obtained by pulling back with the inverse boost and interpolating ``ln omega``
    spectrally.
    """
    grid = omega.grid
    s = boost.rapidity
    if s == 0.0:
        return omega
    n = np.asarray(boost.direction)
    y = grid.unit_vectors
    ny = y @ n
    mu = np.cosh(s) - np.sinh(s) * ny
    x = (y + ((np.cosh(s) - 1.0) * ny - np.sinh(s))[..., None] * n) / mu[..., None]
    x /= np.linalg.norm(x, axis=-1, keepdims=True)
    theta = np.arccos(np.clip(x[..., 2], -1.0, 1.0))
    phi = np.arctan2(x[..., 1], x[..., 0])
    u_at_x = grid.evaluate(omega.u.coefficients(), theta, phi)
    return ConformalFactor(grid.field(u_at_x - np.log(mu)))


def _time_derivative(fun, t, step):
    """Fourth-order centred difference of an array-valued function."""
    return (-fun(t + 2 * step) + 8 * fun(t + step) - 8 * fun(t - step) + fun(t - 2 * step)) / (
        12.0 * step
    )


def ancient_flow_residual(sol: AncientSolution, t, grid=None, step=1e-3):
    """Max nodal residual of ``d(omega^2)/dt = -H2 omega^2 / 2`` for an ancient solution."""
    grid = grid or SphericalGrid()

    def w(s):
        return np.exp(2.0 * nmcf_from_ancient(sol, s, grid).u.values)

    omega = nmcf_from_ancient(sol, t, grid)
    H2 = spacetime_mean_curvature(omega, DE_SITTER)
    res = _time_derivative(w, t, step) + 0.5 * H2.values * w(t)
    return float(np.max(np.abs(res)))


def ricci_flow_residual(kind, t_hat, grid=None, step=1e-3):
    """Max nodal residual of ``d(omega^2)/dt_hat = -R omega^2`` for a Ricci profile."""
    grid = grid or SphericalGrid()
    th, _ = grid.mesh

    def w(s):
        return np.exp(2.0 * ancient_profile_log(kind, s, th))

    R = scalar_curvature(ancient_profile(kind, t_hat, grid))
    res = _time_derivative(w, t_hat, step) + R.values * w(t_hat)
    return float(np.max(np.abs(res)))
