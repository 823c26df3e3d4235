"""Kruskal-type charts across horizons of static spacetimes.

For a static metric -h dt^2 + dr^2 / h + r^2 dOmega^2 the double-null chart
around a horizon r_i is built from a strictly increasing f with
f / f' = K h, K = 1 / h'(r_i). For de Sitter (h = 1 - r^2) the result is a
multiple of (r - 1) / (r + 1) and the metric has constant curvature 1, which
is checked here by finite differences. A two-horizon profile gets one chart
per horizon, and the de Sitter patches are embedded in the pseudosphere.

    python3 demos/kruskal_charts.py
"""

import numpy as np

from nullmcf import kruskal
from nullmcf.verify import pseudosphere_errors, riemann_points

ds = kruskal.ClassSModel(lambda r: 1 - r * r, name="de Sitter")
chart = kruskal.solve_f(ds)
r = np.linspace(*chart.domain, 2001)
print(f"de Sitter horizon r = {ds.horizons[0]:.12f}, K = {ds.K[0]:.12f}")
print(f"  max |f - 2(r-1)/(r+1)| = {np.max(np.abs(chart.f(r) - 2 * (r - 1) / (r + 1))):.2e}")
print(f"  ODE residual = {chart.ode_residual():.2e}")
pts = riemann_points(chart, 20)
print(f"  constant-curvature identity at 20 points: {kruskal.riemann_identity_residual(chart, pts):.2e}")

rn = kruskal.ClassSModel(lambda r: 1 - 2 / r + 0.36 / r**2, name="two horizons")
for i, (r_i, K) in enumerate(zip(rn.horizons, rn.K)):
    c = kruskal.solve_f(rn, i)
    print(f"horizon {i}: r = {r_i:.6f}, K = {K:+.6f}, chart {c.domain[0]:.4f}..{c.domain[1]:.4f}, residual {c.ode_residual():.2e}")

eta, pull = pseudosphere_errors(50)
print(f"pseudosphere: max |eta(p,p) - 1| = {eta:.1e}, metric pullback error {pull:.1e}")

try:
    kruskal.ClassSModel(lambda r: (1 - r) ** 2, (0.0, 2.0))
except kruskal.DegenerateHorizonError as exc:
    print(f"degenerate horizon rejected: {exc}")
