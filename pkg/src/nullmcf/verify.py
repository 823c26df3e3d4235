"""
Named verification suites.

Each suite returns a list of :class:`Check` records holding the measured
value, the tolerance it is held to, and the verdict. The suites are sized to
run in well under a minute each at the default resolution.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import exact, flow, geometry, kruskal
from .sphere import SphericalGrid, synthesize_random

__all__ = ["Check", "SUITES", "run_suite"]

FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float
    passed: bool

    @classmethod
    def below(cls, name, value, tol):
        value = float(value)
        return cls(name, value, tol, bool(np.isfinite(value) and value < tol))

    @classmethod
    def holds(cls, name, ok):
        return cls(name, 1.0 if ok else 0.0, 1.0, bool(ok))

    def line(self):
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict}  {self.name}: {self.value:.3e} (tol {self.tol:.1e})"

    def to_dict(self):
        return asdict(self)


def _random_factor(seed, grid, amplitude=0.3, lmax_pert=8):
    return geometry.ConformalFactor(synthesize_random(seed, lmax_pert, amplitude, grid))


def suite_geometry(grid=None):
    grid = grid or SphericalGrid()
    checks = []
    defects = [abs(geometry.gauss_bonnet_defect(_random_factor(s, grid))) for s in range(20)]
    checks.append(Check.below("Gauss-Bonnet defect, 20 random factors", max(defects), 1e-8))
    worst = 0.0
    for seed in range(5):
        om = _random_factor(seed, grid)
        H2 = geometry.spacetime_mean_curvature(om)
        tb, th = geometry.null_expansions(om, H2=H2)
        worst = max(worst, np.max(np.abs((tb * th).values - H2.values) / np.maximum(1, np.abs(H2.values))))
    checks.append(Check.below("H2 = theta_bar * theta", worst, 1e-12))
    worst = 0.0
    for p in stcmc_grid():
        worst = max(worst, flow.roundness(exact.stcmc_factor(p, grid)))
    checks.append(Check.below("STCMC roundness over (b, a) grid", worst, 1e-8))
    om = _random_factor(3, grid)
    R = geometry.scalar_curvature(om)
    H2 = geometry.spacetime_mean_curvature(om)
    checks.append(Check.below("codimension-3 identity H2 + 4 = 2R", np.max(np.abs(H2.values + 4 - 2 * R.values)), 1e-12))
    return checks


def stcmc_grid():
    """(b, a) samples; |a| reaches 2 for every b >= 1."""
    dirs = [(1, 0, 0), (0, 0, 1), (1, 1, 1)]
    out = []
    for b in (1.0, 1.5, 2.0):
        for n in dirs:
            for mag in (0.0, 1.0, 2.0):
                a = mag * np.asarray(n, float) / np.linalg.norm(n)
                out.append(exact.StcmcParams(b, tuple(a)))
    for n in dirs:
        for mag in (0.5, 1.0):
            a = mag * np.asarray(n, float) / np.linalg.norm(n)
            out.append(exact.StcmcParams(0.5, tuple(a)))
    return out


def suite_area_law(grid=None):
    grid = grid or SphericalGrid()
    checks = []
    om = _random_factor(7, grid, amplitude=0.1)
    cases = [
        (geometry.DE_SITTER, 2 * np.pi, 0.1),
        (geometry.DE_SITTER, FOUR_PI, 0.1),
        (geometry.DE_SITTER, 8 * np.pi, 0.3),
        (geometry.ANTI_DE_SITTER, FOUR_PI, 0.1),
        (geometry.MINKOWSKI, FOUR_PI, 0.1),
    ]
    for model, a0, t_end in cases:
        s = flow.run(om, flow.FlowConfig(model=model, t_end=t_end, record_every=25), target_area=a0)
        checks.append(Check.below(f"area law, {model.kind}, A0 = {a0 / np.pi:g} pi", flow.area_law_check(s), 1e-6))
    checks.append(Check.below("T_max, de Sitter, A0 = 2 pi", abs(flow.predict_tmax(2 * np.pi) - 0.5 * np.log(2)), 1e-15))
    checks.append(Check.holds("T_max, de Sitter, A0 = 4 pi is eternal", flow.predict_tmax(FOUR_PI) is None))
    checks.append(
        Check.below("T_max, AdS, A0 = 4 pi", abs(flow.predict_tmax(FOUR_PI, geometry.ANTI_DE_SITTER) - 0.5 * np.log(2)), 1e-15)
    )
    return checks


def suite_rescaling(grid=None):
    grid = grid or SphericalGrid()
    checks = []
    # smooth data so the recorded steps resolve the time dependence
    om = _random_factor(7, grid, amplitude=0.1, lmax_pert=4)
    s = flow.run(om, flow.FlowConfig(t_end=0.2, record_every=1), target_area=8 * np.pi)
    tt_num = s.column("t_tilde")[1:]
    tt_cf = flow.rescaled_time_closed_form(s.area0, s.column("t")[1:])
    checks.append(Check.below("t_tilde closed form vs quadrature", np.max(np.abs(tt_num - tt_cf) / tt_cf), 1e-8))
    resc = flow.rescale_volume_preserving(s)
    areas = np.array([r.area for r in resc])
    checks.append(Check.below("rescaled area constant", np.max(np.abs(areas / s.area0 - 1)), 1e-8))
    checks.append(Check.below("volume-preserving Ricci flow residual", flow.volume_preserving_residual(resc), 1e-5))
    checks.append(Check.below("metric equation residual", flow.metric_equation_residual(s), 1e-5))
    t_inf = flow.rescaled_time_closed_form(8 * np.pi, np.array([10.0, 40.0]))
    checks.append(Check.below("t_tilde Cauchy tail beyond t = 10, A0 = 8 pi", abs(t_inf[1] - t_inf[0]), 1e-6))
    return checks


ANCIENT_CASES = [
    (kind, t0) for kind in ("ShrinkingSphere", "KingRosenau") for t0 in (0.125, 0.5, 2.0)
]


def suite_ancient(grid=None):
    grid = grid or SphericalGrid()
    checks = []
    for kind, t0 in ANCIENT_CASES:
        sol = exact.AncientSolution(kind, t0)
        res = max(exact.ancient_flow_residual(sol, t, grid) for t in (-0.5, -0.25, 0.0))
        checks.append(Check.below(f"flow residual, {kind}, t_hat0 = {t0}", res, 1e-6))
        checks.append(
            Check.below(f"area -> 4 pi at t = -20, {kind}, t_hat0 = {t0}", abs(exact.ancient_area(sol, -20.0) / FOUR_PI - 1), 1e-6)
        )
        if kind == "ShrinkingSphere":
            err = max(
                np.max(np.abs(exact.nmcf_from_ancient(sol, t, grid).omega.values - exact.sphere_solution(np.sqrt(2 * t0), t)))
                for t in (-1.0, -0.5, 0.0)
            )
            checks.append(Check.below(f"sphere solution match, t_hat0 = {t0}", err, 1e-9))
    res = max(exact.ricci_flow_residual("KingRosenau", th, grid) for th in (-2.0, -1.0, -0.1))
    checks.append(Check.below("King-Rosenau Ricci flow residual", res, 1e-7))
    return checks


def suite_kruskal(h_expr=None, seed=0):
    checks = []
    if h_expr is not None:
        h = parse_h(h_expr)
        try:
            model = kruskal.ClassSModel(h)
        except kruskal.DegenerateHorizonError:
            return [Check.holds(f"degenerate horizon rejected for h = {h_expr}", True)]
        for i in range(len(model.horizons)):
            chart = kruskal.solve_f(model, i)
            checks.append(Check.below(f"ODE residual, horizon r = {model.horizons[i]:.6g}", chart.ode_residual(), 1e-9))
        if not model.horizons:
            checks.append(Check.holds(f"no horizons for h = {h_expr}", True))
        return checks

    ds = kruskal.ClassSModel(lambda r: 1 - r * r)
    chart = kruskal.solve_f(ds)
    r = np.linspace(*chart.domain, 2001)
    checks.append(Check.below("de Sitter f vs 2(r-1)/(r+1)", np.max(np.abs(chart.f(r) - 2 * (r - 1) / (r + 1))), 1e-9))
    checks.append(Check.below("de Sitter ODE residual", chart.ode_residual(), 1e-9))
    checks.append(Check.below("inverse f", np.max(np.abs(chart.finv(chart.f(r)) - r)), 1e-10))
    checks.append(Check.below("Riemann identity, 20 chart points", kruskal.riemann_identity_residual(chart, riemann_points(chart, 20, seed)), 1e-6))
    rn = kruskal.ClassSModel(lambda r: 1 - 2 / r + 0.36 / r**2)
    for i in range(2):
        checks.append(Check.below(f"two-horizon model, chart {i} ODE residual", kruskal.solve_f(rn, i).ode_residual(), 1e-9))
    try:
        kruskal.ClassSModel(lambda r: (1 - r) ** 2, (0.0, 2.0))
        ok = False
    except kruskal.DegenerateHorizonError:
        ok = True
    checks.append(Check.holds("degenerate horizon rejected", ok))
    eta_err, pull_err = pseudosphere_errors(50, seed)
    checks.append(Check.below("pseudosphere eta(p, p) = 1", eta_err, 1e-12))
    checks.append(Check.below("pseudosphere metric pullback", pull_err, 1e-6))
    return checks


def riemann_points(chart, n, seed=0):
    rng = np.random.default_rng(seed)
    pts = []
    a, b = chart.domain
    for _ in range(n):
        rho = rng.uniform(a + 0.25 * (chart.r_i - a), min(b, 3.0 * chart.r_i))
        u = rng.uniform(0.3, 2.0) * rng.choice([-1.0, 1.0])
        v = float(chart.f(rho)) / u
        pts.append(np.array([u, v, rng.uniform(0.3, np.pi - 0.3), rng.uniform(0, 2 * np.pi)]))
    return pts


def pseudosphere_errors(n, seed=0):
    rng = np.random.default_rng(seed)
    h = lambda r: 1 - r * r
    eta_err = pull_err = 0.0
    for patch in kruskal.PATCHES:
        for _ in range(n):
            t = rng.uniform(-1.5, 1.5)
            r = rng.uniform(0.05, 0.95) if patch.startswith("static") else rng.uniform(1.05, 3.0)
            th, ph = rng.uniform(0.2, np.pi - 0.2), rng.uniform(0, 2 * np.pi)
            x = np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
            p = kruskal.pseudosphere_embed(patch, t, r, x)
            eta_err = max(eta_err, abs(p @ kruskal.ETA @ p - 1.0))
            g = kruskal.pseudosphere_pullback(patch, t, r, th, ph)
            pull_err = max(pull_err, float(np.max(np.abs(g - kruskal.static_metric(h, r, th)))))
    return eta_err, pull_err


_H_NAMESPACE = {
    name: getattr(np, name)
    for name in ("sqrt", "exp", "log", "sin", "cos", "tanh", "cosh", "sinh", "abs", "pi")
}


def parse_h(expr):
    """Turn an expression in ``r`` (e.g. ``"1 - 2/r + 0.36/r**2"``) into a function."""
    code = compile(expr, "<h>", "eval")
    for name in code.co_names:
        if name not in _H_NAMESPACE and name != "r":
            raise ValueError(f"h may only use r and {sorted(_H_NAMESPACE)}; got {name!r}")

    def h(r):
        return eval(code, {"__builtins__": {}}, {**_H_NAMESPACE, "r": r})

    return h


SUITES = {
    "area-law": suite_area_law,
    "rescaling": suite_rescaling,
    "ancient": suite_ancient,
    "kruskal": suite_kruskal,
    "geometry": suite_geometry,
}


def run_suite(name, **kw):
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return SUITES[name](**kw)
