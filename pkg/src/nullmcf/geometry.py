"""
Geometry of conformally round cross sections of a shear-free lightcone.

A cross section is encoded by its conformal factor ``omega > 0`` on the unit
sphere; its induced metric is ``omega**2 dOmega**2``. The lightcone model fixes
the Gauss equation that relates the spacetime mean curvature ``H2`` to the
scalar curvature ``R`` of the cross section.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .sphere import ScalarField, SphericalGrid, integrate, laplacian

__all__ = [
    "ConformalFactor",
    "LightconeModel",
    "CrossSectionReport",
    "BracketError",
    "MINKOWSKI",
    "DE_SITTER",
    "ANTI_DE_SITTER",
    "scalar_curvature",
    "area",
    "spacetime_mean_curvature",
    "null_expansions",
    "gauss_bonnet_defect",
    "classify_causal",
    "cross_section_report",
]

MOTS_TOL = 1e-6


class BracketError(ValueError):
    """The conformal factor left the radial interval on which ``h`` is valid."""


@dataclass(frozen=True, eq=False)
class ConformalFactor:
    """Positive conformal factor stored as ``u = ln(omega)``."""

    u: ScalarField

    @classmethod
    def from_omega(cls, omega):
        if isinstance(omega, ScalarField):
            if omega.min() <= 0:
                raise ValueError("conformal factor must be positive")
            return cls(omega.map(np.log))
        raise TypeError("expected a ScalarField")

    @classmethod
    def constant(cls, b, grid=None):
        grid = grid or SphericalGrid()
        return cls(grid.constant(np.log(b)))

    @property
    def grid(self):
        return self.u.grid

    @property
    def omega(self):
        return self.u.map(np.exp)

    def scaled(self, factor):
        """Multiply ``omega`` by a positive constant."""
        return ConformalFactor(self.u + np.log(factor))


@dataclass(frozen=True)
class LightconeModel:
    """Choice of ambient class-S spacetime ``-h dt^2 + dr^2/h + r^2 dOmega^2``.

    For the three named models the Gauss equation is applied with its exact
    constant; ``ClassS`` evaluates ``h`` pointwise and requires the conformal
    factor to stay inside ``bracket``.
    """

    kind: str = "DeSitter"
    h: Callable | None = field(default=None, compare=False)
    bracket: tuple = (0.0, np.inf)
    horizon: float | None = None
    name: str | None = None

    KINDS = ("Minkowski", "DeSitter", "AntiDeSitter", "ClassS")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown lightcone model {self.kind!r}")
        if self.kind == "ClassS" and self.h is None:
            raise ValueError("ClassS model needs a function h")

    @property
    def gauss_shift(self):
        """Constant ``k`` with ``H2 = 2R - k`` for the named models."""
        return {"Minkowski": 0.0, "DeSitter": 4.0, "AntiDeSitter": -4.0}.get(self.kind)

    def h_of(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "Minkowski":
            return np.ones_like(r)
        if self.kind == "DeSitter":
            return 1.0 - r * r
        if self.kind == "AntiDeSitter":
            return 1.0 + r * r
        return np.asarray(self.h(r), dtype=float)

    @property
    def K(self):
        """``1/h'(r_i)`` at the horizon, where one exists."""
        if self.kind == "DeSitter":
            return -0.5
        if self.kind == "ClassS" and self.horizon is not None:
            eps = 1e-6 * max(1.0, abs(self.horizon))
            r = self.horizon
            dh = (self.h_of(r + eps) - self.h_of(r - eps)) / (2 * eps)
            return float(1.0 / dh)
        return None

    def check_bracket(self, omega_min, omega_max):
        if self.kind != "ClassS":
            return
        lo, hi = self.bracket
        if not (lo < omega_min and omega_max < hi):
            raise BracketError(
                f"conformal factor range [{omega_min:g}, {omega_max:g}] "
                f"leaves the bracket ({lo:g}, {hi:g})"
            )

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "ClassS":
            d.update(name=self.name, bracket=list(self.bracket), horizon=self.horizon)
        return d


MINKOWSKI = LightconeModel("Minkowski")
DE_SITTER = LightconeModel("DeSitter", horizon=1.0)
ANTI_DE_SITTER = LightconeModel("AntiDeSitter")


def scalar_curvature(omega: ConformalFactor) -> ScalarField:
    """Scalar curvature of ``omega**2 dOmega**2``: ``(2 - 2 Lap ln omega) / omega**2``."""
    u = omega.u
    return (2.0 - 2.0 * laplacian(u)) * u.map(lambda v: np.exp(-2.0 * v))


def area(omega: ConformalFactor) -> float:
    return integrate(omega.u.map(lambda v: np.exp(2.0 * v)))


def spacetime_mean_curvature(omega, model=DE_SITTER, R=None):
    """Nodewise ``H2`` from the Gauss equation of ``model``."""
    if R is None:
        R = scalar_curvature(omega)
    k = model.gauss_shift
    if k is not None:
        return 2.0 * R - k
    w = omega.omega
    model.check_bracket(w.min(), w.max())
    return 2.0 * R - 4.0 * (1.0 - w.map(model.h_of)) / (w * w)


def null_expansions(omega, model=DE_SITTER, H2=None):
    """Return ``(theta_bar, theta)`` with ``theta_bar = 2/omega`` and ``H2 = theta_bar*theta``."""
    if H2 is None:
        H2 = spacetime_mean_curvature(omega, model)
    w = omega.omega
    return 2.0 / w, 0.5 * w * H2


def gauss_bonnet_defect(omega: ConformalFactor) -> float:
    """``integral R dmu - 8 pi``; vanishes for every sphere."""
    R = scalar_curvature(omega)
    return integrate(R * omega.u.map(lambda v: np.exp(2.0 * v))) - 8.0 * np.pi


def classify_causal(H2, tol=MOTS_TOL):
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo, hi = H2.min(), H2.max()
    if max(abs(lo), abs(hi)) <= tol:
        return "MOTS-candidate"
    if hi < -tol:
        return "trapped"
    if lo > tol:
        return "outer-untrapped"
    return "mixed"


@dataclass(frozen=True)
class CrossSectionReport:
    area: float
    R: ScalarField = field(repr=False)
    H2: ScalarField = field(repr=False)
    theta: ScalarField = field(repr=False)
    theta_bar: ScalarField = field(repr=False)
    gauss_bonnet_defect: float
    causal_class: str

    def summary(self):
        return {
            "area": self.area,
            "R_min": self.R.min(),
            "R_max": self.R.max(),
            "H2_min": self.H2.min(),
            "H2_max": self.H2.max(),
            "gauss_bonnet_defect": self.gauss_bonnet_defect,
            "causal_class": self.causal_class,
        }

    def to_json(self, **kw):
        return json.dumps(self.summary(), **kw)


def cross_section_report(omega, model=DE_SITTER, tol=MOTS_TOL):
    R = scalar_curvature(omega)
    H2 = spacetime_mean_curvature(omega, model, R=R)
    theta_bar, theta = null_expansions(omega, model, H2=H2)
    dmu = omega.u.map(lambda v: np.exp(2.0 * v))
    return CrossSectionReport(
        area=integrate(dmu),
        R=R,
        H2=H2,
        theta=theta,
        theta_bar=theta_bar,
        gauss_bonnet_defect=integrate(R * dmu) - 8.0 * np.pi,
        causal_class=classify_causal(H2, tol),
    )
