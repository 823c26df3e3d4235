"""
Class-S spacetimes ``-h dt^2 + dr^2/h + r^2 dOmega^2`` and their double-null
(Kruskal-Szekeres type) extensions across non-degenerate Killing horizons.

Around a horizon ``r_i`` the extension is built from a strictly increasing
``f`` with ``f / f' = K h``, ``K = 1/h'(r_i)``, ``f(r_i) = 0``. Writing
``f(r) = (r - r_i) exp(g(r))`` turns this into

    g' = 1/(K h) - 1/(r - r_i),      g(r_i) = 0,

whose right-hand side is regular at ``r_i``; ``g`` is tabulated by panelwise
Gauss-Legendre quadrature. The normalization ``f'(r_i) = 1`` fixes the free
multiplicative constant. The extended metric is

    F(rho) (du dv + dv du) + rho^2 dOmega^2,   F = 2K / f',   u v = f(rho).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq, minimize_scalar

__all__ = [
    "DegenerateHorizonError",
    "ChartDomainError",
    "ClassSModel",
    "KruskalChart",
    "LeafData",
    "find_horizons",
    "solve_f",
    "metric_components",
    "embed_cross_section",
    "background_leaf",
    "pseudosphere_embed",
    "pseudosphere_pullback",
    "static_metric",
    "riemann_identity_residual",
    "riemann_tensor",
    "PATCHES",
    "ETA",
    "write_chart_csv",
]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_SCAN_INF = 1.0e4


class DegenerateHorizonError(ValueError):
    """``h`` has a zero with vanishing derivative."""


class ChartDomainError(ValueError):
    """Query outside the domain of a Kruskal chart."""


def _derivative(h, r, step):
    """Fourth-order central difference."""
    return (
        -h(r + 2 * step) + 8 * h(r + step) - 8 * h(r - step) + h(r - 2 * step)
    ) / (12.0 * step)


def _scan_points(bracket, n):
    lo, hi = bracket
    if np.isfinite(hi):
        return np.linspace(lo, hi, n + 2)[1:-1]
    start = lo if lo > 0 else 1e-3
    return np.geomspace(start, _SCAN_INF, n + 1)[1:]


def find_horizons(h, bracket=(0.0, np.inf), n_scan=4000, deriv_tol=1e-8):
    """Simple zeros ``r_i`` of ``h`` inside ``bracket`` with ``K_i = 1/h'(r_i)``.

    Zeros are located by a sign-change scan and polished with Brent's method.
    A zero at which ``h'`` vanishes, or a touching zero without sign change,
    raises :class:`DegenerateHorizonError`.
    """
    lo, hi = bracket
    if not lo < hi:
        raise ValueError("empty bracket")
    h = _vectorize(h)
    r = _scan_points(bracket, n_scan)
    vals = h(r)
    if not np.all(np.isfinite(vals)):
        raise ValueError("h is not finite on the bracket")
    scale = max(np.max(np.abs(vals[np.isfinite(vals)])), 1.0)
    roots = []
    for k in range(len(r) - 1):
        a, b = r[k], r[k + 1]
        if vals[k] == 0.0:
            roots.append(a)
        elif vals[k] * vals[k + 1] < 0:
            roots.append(brentq(h, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500, disp=False))
    # touching zeros: local minima of |h| that nearly vanish without a sign change
    absv = np.abs(vals)
    for k in range(1, len(r) - 1):
        if absv[k] <= absv[k - 1] and absv[k] <= absv[k + 1] and absv[k] < 1e-3 * scale:
            if any(r[k - 1] <= x <= r[k + 1] for x in roots):
                continue
            res = minimize_scalar(
                lambda x: abs(float(h(x))), bounds=(r[k - 1], r[k + 1]), method="bounded",
                options={"xatol": 1e-14},
            )
            if res.fun < 1e-12 * scale:
                raise DegenerateHorizonError(f"degenerate zero of h near r = {res.x:.12g}")
    out = []
    for x in roots:
        step = 1e-4 * max(1.0, abs(x))
        dh = float(_derivative(h, x, step))
        if abs(dh) < deriv_tol * scale:
            raise DegenerateHorizonError(f"h'(r) vanishes at the zero r = {x:.12g}")
        out.append((float(x), 1.0 / dh))
    return out


def _vectorize(h):
    def wrapped(r):
        return np.asarray(h(np.asarray(r, dtype=float)), dtype=float)
    return wrapped


@dataclass(frozen=True)
class ClassSModel:
    """Static spherically symmetric spacetime given by ``h``."""

    h: Callable = field(compare=False)
    bracket: tuple = (0.0, np.inf)
    name: str = "class-S"
    horizons: tuple = field(init=False)
    K: tuple = field(init=False)

    def __post_init__(self):
        found = find_horizons(self.h, self.bracket)
        object.__setattr__(self, "horizons", tuple(r for r, _ in found))
        object.__setattr__(self, "K", tuple(k for _, k in found))

    def h_of(self, r):
        return np.asarray(self.h(np.asarray(r, dtype=float)), dtype=float)

    def lightcone_model(self, horizon_index=None):
        """Conformal-geometry model for cross sections of this spacetime."""
        from .geometry import LightconeModel

        horizon = None if horizon_index is None else self.horizons[horizon_index]
        return LightconeModel("ClassS", h=self.h, bracket=self.bracket, horizon=horizon, name=self.name)


class LeafData(NamedTuple):
    gamma: float
    chi_bar: float
    chi: float
    zeta: float


def background_leaf(model, r):
    """Coefficients of ``dOmega^2`` for the leaf ``S_r``: metric, both null second
    fundamental forms, and the torsion (which vanishes)."""
    r = float(r)
    if not r > 0:
        raise ValueError("r must be positive")
    hr = float(model.h_of(r))
    return LeafData(r * r, r, r * hr, 0.0)


@dataclass(frozen=True, eq=False)
class KruskalChart:
    """Tabulated solution ``f`` of ``f/f' = K h`` around one horizon."""

    h: Callable = field(repr=False)
    r_i: float
    K: float
    domain: tuple
    c: float = 1.0
    n_panels: int = 400
    # neighbouring horizons (infinite when there is none)
    interval: tuple | None = None
    _breaks: np.ndarray = field(init=False, repr=False)
    _g_breaks: np.ndarray = field(init=False, repr=False)
    _table: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("lightcone constant c must be positive")
        a, b = self.domain
        if not a < self.r_i < b:
            raise ValueError("domain must contain the horizon")
        n = self.n_panels // 2
        breaks = np.concatenate([np.linspace(a, self.r_i, n + 1), np.linspace(self.r_i, b, n + 1)[1:]])
        object.__setattr__(self, "_breaks", breaks)
        # cumulative integral of g' from r_i outward
        lo, hi = breaks[:-1], breaks[1:]
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
        panel = (self._gprime(nodes) * _GL_W[None, :]).sum(axis=1) * half
        k0 = n  # index of r_i in breaks
        g = np.zeros_like(breaks)
        g[k0 + 1 :] = np.cumsum(panel[k0:])
        g[:k0] = -np.cumsum(panel[:k0][::-1])[::-1]
        object.__setattr__(self, "_g_breaks", g)
        rt = np.linspace(a, b, 4001)
        ft = self.f(rt)
        if not np.all(np.diff(ft) > 0):
            raise ValueError("tabulated f is not strictly increasing")
        object.__setattr__(self, "_table", (rt, ft, PchipInterpolator(ft, rt)))

    def _gprime_raw(self, r):
        d = r - self.r_i
        return 1.0 / (self.K * np.asarray(self.h(r), dtype=float)) - 1.0 / d

    def _gprime(self, r):
        # the two terms cancel near r_i; there use the cubic through four
        # samples at distance delta and 2 delta, where cancellation is mild
        r = np.asarray(r, dtype=float)
        d = r - self.r_i
        delta = 1e-3 * min(self.r_i - self.domain[0], self.domain[1] - self.r_i)
        near = np.abs(d) < delta
        out = np.empty_like(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            out[~near] = self._gprime_raw(r[~near])
        if np.any(near):
            xs = np.array([-2.0, -1.0, 1.0, 2.0]) * delta
            ys = self._gprime_raw(self.r_i + xs)
            dn = d[near]
            acc = np.zeros_like(dn)
            for k in range(4):
                basis = np.ones_like(dn)
                for j in range(4):
                    if j != k:
                        basis *= (dn - xs[j]) / (xs[k] - xs[j])
                acc += ys[k] * basis
            out[near] = acc
        return out

    def _check(self, r):
        a, b = self.domain
        if np.any(r < a) or np.any(r > b):
            raise ChartDomainError(f"r outside chart domain [{a:g}, {b:g}]")

    def g(self, r):
        r = np.asarray(r, dtype=float)
        self._check(r)
        flat = r.ravel()
        k = np.clip(np.searchsorted(self._breaks, flat) - 1, 0, len(self._breaks) - 2)
        # integrate from the nearer panel endpoint
        left, right = self._breaks[k], self._breaks[k + 1]
        use_right = (right - flat) < (flat - left)
        start = np.where(use_right, right, left)
        g0 = np.where(use_right, self._g_breaks[k + 1], self._g_breaks[k])
        mid, half = 0.5 * (start + flat), 0.5 * (flat - start)
        nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
        vals = self._gprime(nodes)
        out = g0 + (vals * _GL_W[None, :]).sum(axis=1) * half
        return out.reshape(r.shape)

    def f(self, r):
        r = np.asarray(r, dtype=float)
        return (r - self.r_i) * np.exp(self.g(r))

    def fprime(self, r):
        r = np.asarray(r, dtype=float)
        d = r - self.r_i
        slope = d * self._gprime(r)
        return np.exp(self.g(r)) * (1.0 + slope)

    def F(self, r):
        return 2.0 * self.K / self.fprime(r)

    @property
    def f_range(self):
        rt, ft, _ = self._table
        return ft[0], ft[-1]

    def finv(self, y, iterations=6):
        """Inverse of ``f``: monotone-spline guess refined by bracketed Newton."""
        y = np.asarray(y, dtype=float)
        lo, hi = self.f_range
        if np.any(y < lo) or np.any(y > hi):
            raise ChartDomainError("value outside the range of f on the chart")
        rt, ft, spline = self._table
        flat = y.ravel()
        k = np.clip(np.searchsorted(ft, flat) - 1, 0, len(ft) - 2)
        a, b = rt[k], rt[k + 1]
        r = np.clip(spline(flat), a, b)
        for _ in range(iterations):
            r = np.clip(r - (self.f(r) - flat) / self.fprime(r), a, b)
        return r.reshape(y.shape)

    def ode_residual(self, n=2001, edge=0.01):
        """``max |f/f' - K h| / max(1, |K h|)`` on a tabulation.

        ``f'`` is taken by centred differences; at each point the step is picked
        from a geometric ladder where consecutive estimates agree best. The
        outer ``edge`` fraction of the chart is left out so every point admits
        a stencil wide enough to keep roundoff below the tolerance.
        """
        a, b = self.domain
        lo, hi = self.interval or (-np.inf, np.inf)
        pad = edge * (b - a)
        r = np.linspace(a + pad, b - pad, n)
        scale = np.minimum(np.minimum(r - lo, hi - r), b - a)
        ladder = 10.0 ** -np.arange(1.5, 5.75, 0.25)
        est = np.full((len(ladder), r.size), np.nan)
        for k, frac in enumerate(ladder):
            step = frac * scale
            ok = (r - 2 * step >= a) & (r + 2 * step <= b)
            est[k, ok] = _derivative(self.f, r[ok], step[ok])
        diff = np.abs(np.diff(est, axis=0))
        diff = np.where(np.isnan(diff), np.inf, diff)
        best = np.argmin(diff, axis=0) + 1
        fp = est[best, np.arange(r.size)]
        kh = self.K * np.asarray(self.h(r))
        return float(np.max(np.abs(self.f(r) / fp - kh) / np.maximum(1.0, np.abs(kh))))

    def table(self, n=201):
        a, b = self.domain
        r = np.linspace(a, b, n)
        return r, self.f(r), self.fprime(r), self.F(r)


def _chart_interval(model, i):
    hs = model.horizons
    lo = hs[i - 1] if i > 0 else model.bracket[0]
    hi = hs[i + 1] if i + 1 < len(hs) else model.bracket[1]
    return lo, hi


def solve_f(model: ClassSModel, i=0, margin=0.01, c=1.0, n_panels=400):
    """Kruskal chart around horizon ``i`` of ``model``.

    The chart covers ``(r_{i-1}, r_{i+1})`` shrunk by ``margin`` times the
    distance to each neighbouring horizon (or bracket end); an unbounded right
    end is cut at ``20 r_i``.
    """
    if not 0 <= i < len(model.horizons):
        raise IndexError(f"model has {len(model.horizons)} horizon(s)")
    r_i, K = model.horizons[i], model.K[i]
    lo, hi = _chart_interval(model, i)
    a = lo + margin * (r_i - lo)
    b = hi - margin * (hi - r_i) if np.isfinite(hi) else 20.0 * r_i
    return KruskalChart(
        _vectorize(model.h), r_i, K, (a, b), c=c, n_panels=n_panels,
        interval=(
            model.horizons[i - 1] if i > 0 else -np.inf,
            model.horizons[i + 1] if i + 1 < len(model.horizons) else np.inf,
        ),
    )


def metric_components(chart: KruskalChart, u, v):
    """``(F(rho), rho)`` at double-null coordinates ``(u, v)``."""
    rho = chart.finv(np.asarray(u, dtype=float) * np.asarray(v, dtype=float))
    return chart.F(rho), rho


def embed_cross_section(chart: KruskalChart, omega):
    """Nodewise ``(u, v)`` of the cross section ``rho = omega`` on the cone ``v = c``."""
    w = omega.omega.values
    try:
        u = chart.f(w) / chart.c
    except ChartDomainError as exc:
        raise ChartDomainError("conformal factor leaves the chart domain") from exc
    return u, np.full_like(u, chart.c)


# curvature check by finite differences -----------------------------------


def _kruskal_metric(chart, x):
    u, v, th, _ = x
    F, rho = metric_components(chart, u, v)
    g = np.zeros((4, 4))
    g[0, 1] = g[1, 0] = F
    g[2, 2] = rho * rho
    g[3, 3] = (rho * np.sin(th)) ** 2
    return g


def _central(fun, x, c, step):
    """Fourth-order centred derivative of ``fun`` along coordinate ``c``."""
    e = np.zeros(4)
    e[c] = step
    return (-fun(x + 2 * e) + 8 * fun(x + e) - 8 * fun(x - e) + fun(x - 2 * e)) / (12 * step)


def _christoffel(metric, x, step):
    dg = np.array([_central(metric, x, c, step) for c in range(4)])
    ginv = np.linalg.inv(metric(x))
    # Gamma^a_{bc} = 1/2 g^{ad} (d_b g_dc + d_c g_db - d_d g_bc)
    t = dg.transpose(1, 0, 2) + dg.transpose(1, 2, 0) - dg
    return 0.5 * np.einsum("ad,dbc->abc", ginv, t)


def riemann_tensor(metric, x, step=5e-4):
    """Fully covariant ``R_{abcd}`` at ``x``, sign such that a unit sphere has
    ``R_{abab} = g_aa g_bb``."""
    x = np.asarray(x, dtype=float)
    G = _christoffel(metric, x, step)
    dG = np.array([_central(lambda y: _christoffel(metric, y, step), x, c, step) for c in range(4)])
    # R^a_{bcd} = d_c G^a_{db} - d_d G^a_{cb} + G^a_{ce} G^e_{db} - G^a_{de} G^e_{cb}
    Rup = (
        np.einsum("cadb->abcd", dG)
        - np.einsum("dacb->abcd", dG)
        + np.einsum("ace,edb->abcd", G, G)
        - np.einsum("ade,ecb->abcd", G, G)
    )
    return np.einsum("ae,ebcd->abcd", metric(x), Rup)


def riemann_identity_residual(chart, points, curvature=1.0, step=5e-4):
    """Max over ``points`` of ``|R_abcd - k (g_ac g_bd - g_ad g_bc)|``."""
    worst = 0.0
    metric = lambda x: _kruskal_metric(chart, x)
    for x in points:
        g = metric(np.asarray(x, dtype=float))
        R = riemann_tensor(metric, x, step)
        target = curvature * (np.einsum("ac,bd->abcd", g, g) - np.einsum("ad,bc->abcd", g, g))
        worst = max(worst, float(np.max(np.abs(R - target))))
    return worst


# de Sitter as the pseudosphere -------------------------------------------

PATCHES = ("static+", "static-", "cosmological+", "cosmological-")
ETA = np.diag([-1.0, 1.0, 1.0, 1.0, 1.0])


def pseudosphere_embed(patch, t, r, x):
    """Point of the unit pseudosphere in five-dimensional Minkowski space."""
    if patch not in PATCHES:
        raise ValueError(f"unknown patch {patch!r}")
    x = np.asarray(x, dtype=float)
    sign = 1.0 if patch.endswith("+") else -1.0
    if patch.startswith("static"):
        if not 0 < r < 1:
            raise ValueError("static patches need 0 < r < 1")
        s = np.sqrt(1.0 - r * r)
        head = (sign * s * np.sinh(t), sign * s * np.cosh(t))
    else:
        if not r > 1:
            raise ValueError("cosmological patches need r > 1")
        s = np.sqrt(r * r - 1.0)
        head = (sign * s * np.cosh(t), sign * s * np.sinh(t))
    return np.concatenate([head, r * x])


def _unit(theta, phi):
    return np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])


def pseudosphere_pullback(patch, t, r, theta, phi, step=1e-5):
    """Pullback of the ambient metric to coordinates ``(t, r, theta, phi)``."""
    y = np.array([t, r, theta, phi], dtype=float)

    def emb(z):
        return pseudosphere_embed(patch, z[0], z[1], _unit(z[2], z[3]))

    J = np.empty((5, 4))
    for k in range(4):
        e = np.zeros(4)
        e[k] = step
        J[:, k] = (emb(y + e) - emb(y - e)) / (2 * step)
    return J.T @ ETA @ J


def static_metric(h, r, theta):
    hr = float(h(r))
    return np.diag([-hr, 1.0 / hr, r * r, (r * np.sin(theta)) ** 2])


def write_chart_csv(chart, path, n=201):
    r, f, fp, F = chart.table(n)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "f", "fprime", "F"])
        for row in zip(r, f, fp, F):
            w.writerow([repr(float(v)) for v in row])
