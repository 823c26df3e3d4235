import csv

import numpy as np
import pytest
from numpy.testing import assert_allclose

from nullmcf import kruskal
from nullmcf.geometry import DE_SITTER, MINKOWSKI, ConformalFactor, scalar_curvature, spacetime_mean_curvature
from nullmcf.kruskal import (
    ETA,
    PATCHES,
    ChartDomainError,
    ClassSModel,
    DegenerateHorizonError,
    background_leaf,
    embed_cross_section,
    find_horizons,
    metric_components,
    pseudosphere_embed,
    pseudosphere_pullback,
    riemann_identity_residual,
    solve_f,
    static_metric,
)
from nullmcf.sphere import SphericalGrid, synthesize_random
from nullmcf.verify import riemann_points


def h_ds(r):
    return 1 - r * r


def h_rn(r):
    return 1 - 2 / r + 0.36 / r**2


@pytest.fixture(scope="module")
def ds_chart():
    return solve_f(ClassSModel(h_ds))


def test_find_horizons_de_sitter():
    (r1, K), = find_horizons(h_ds, (0.0, 2.0))
    assert_allclose(r1, 1.0, rtol=1e-14)
    assert_allclose(K, -0.5, rtol=1e-8)


def test_find_horizons_two_horizons():
    found = find_horizons(h_rn)
    assert_allclose([r for r, _ in found], [0.2, 1.8], rtol=1e-12)
    # K = 1/h'(r_i) = r^3 / (2 r - 0.72)
    assert_allclose([k for _, k in found], [0.008 / (0.4 - 0.72), 5.832 / (3.6 - 0.72)], rtol=1e-7)


def test_no_horizons():
    assert find_horizons(lambda r: 1 + r * r) == []
    assert ClassSModel(lambda r: 1 + r * r).horizons == ()


def test_degenerate_horizon_rejected():
    with pytest.raises(DegenerateHorizonError):
        find_horizons(lambda r: (1 - r) ** 2, (0.0, 2.0))
    with pytest.raises(DegenerateHorizonError):
        ClassSModel(lambda r: (1 - r) ** 3 * (r + 1), (0.0, 3.0))


def test_de_sitter_chart_matches_oracle(ds_chart):
    r = np.linspace(*ds_chart.domain, 1001)
    assert_allclose(ds_chart.f(r), 2 * (r - 1) / (r + 1), atol=1e-9)
    assert_allclose(ds_chart.F(r), -((r + 1) ** 2) / 4, rtol=1e-8)
    assert ds_chart.ode_residual() < 1e-9
    assert abs(float(ds_chart.f(1.0))) < 1e-15
    assert_allclose(ds_chart.fprime(1.0), 1.0, rtol=1e-10)
    assert np.all(np.diff(ds_chart.f(r)) > 0)


def test_de_sitter_range_is_bounded(ds_chart):
    lo, hi = ds_chart.f_range
    assert -2 < lo < hi < 2


def test_inverse(ds_chart):
    r = np.linspace(*ds_chart.domain, 777)
    assert_allclose(ds_chart.finv(ds_chart.f(r)), r, atol=1e-10)


def test_out_of_domain(ds_chart):
    with pytest.raises(ChartDomainError):
        ds_chart.f(25.0)
    with pytest.raises(ChartDomainError):
        metric_components(ds_chart, 10.0, 10.0)


@pytest.mark.parametrize("i", [0, 1])
def test_two_horizon_charts(i):
    model = ClassSModel(h_rn)
    chart = solve_f(model, i)
    assert chart.ode_residual() < 1e-9
    assert abs(float(chart.f(model.horizons[i]))) < 1e-14
    lo, hi = chart.domain
    assert lo > (model.horizons[i - 1] if i else 0.0)
    if i == 0:
        assert hi < model.horizons[1]
    with pytest.raises(IndexError):
        solve_f(model, 2)


def test_metric_components_on_horizon(ds_chart):
    F, rho = metric_components(ds_chart, 0.0, 0.7)
    assert_allclose(rho, 1.0, atol=1e-12)
    assert np.isfinite(F) and F < 0


def test_F_smooth_across_horizon(ds_chart):
    r = 1 + np.linspace(-1e-3, 1e-3, 41)
    F = ds_chart.F(r)
    assert np.all(np.isfinite(F))
    second = np.diff(F, 2)
    assert np.max(np.abs(second)) < 1e-6


def test_riemann_identity(ds_chart):
    assert riemann_identity_residual(ds_chart, riemann_points(ds_chart, 20, seed=1)) < 1e-6


def test_embed_cross_sections(ds_chart):
    grid = SphericalGrid(16)
    u, v = embed_cross_section(ds_chart, ConformalFactor.constant(1.0, grid))
    assert_allclose(u, 0.0, atol=1e-15)
    assert_allclose(v, 1.0)
    u, _ = embed_cross_section(ds_chart, ConformalFactor.constant(1.5, grid))
    assert_allclose(u, 2 * 0.5 / 2.5, rtol=1e-9)
    # a section straddling the horizon has u of both signs, continuous in omega
    om = ConformalFactor.from_omega(grid.field(1 + 0.3 * grid.unit_vectors[..., 2]))
    u, _ = embed_cross_section(ds_chart, om)
    assert u.min() < 0 < u.max()
    with pytest.raises(ChartDomainError):
        embed_cross_section(ds_chart, ConformalFactor.constant(30.0, grid))


def test_background_leaf_examples():
    assert background_leaf(ClassSModel(h_ds), 1.0) == (1.0, 1.0, 0.0, 0.0)
    assert background_leaf(ClassSModel(lambda r: np.ones_like(r)), 2.0) == (4.0, 2.0, 2.0, 0.0)


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_background_leaf_matches_geometry(r):
    grid = SphericalGrid(16)
    for model, h in ((DE_SITTER, h_ds), (MINKOWSKI, lambda x: np.ones_like(x))):
        leaf = background_leaf(ClassSModel(h), r)
        # H2 = theta_bar * theta = (2 chi_bar / r^2)(2 chi / r^2)
        H2_leaf = (2 * leaf.chi_bar / leaf.gamma) * (2 * leaf.chi / leaf.gamma)
        H2 = spacetime_mean_curvature(ConformalFactor.constant(r, grid), model)
        assert_allclose(H2.values, H2_leaf, atol=1e-12)


def test_codimension_three_identity_on_embedded_data(ds_chart):
    grid = SphericalGrid(32)
    om = ConformalFactor(synthesize_random(4, 4, 0.1, grid))
    embed_cross_section(ds_chart, om)
    H2 = spacetime_mean_curvature(om, DE_SITTER)
    assert_allclose(H2.values + 4, 2 * scalar_curvature(om).values, atol=1e-12)


@pytest.mark.parametrize("patch", PATCHES)
def test_pseudosphere(patch):
    rng = np.random.default_rng(3)
    static = patch.startswith("static")
    for _ in range(10):
        t = rng.uniform(-1, 1)
        r = rng.uniform(0.05, 0.95) if static else rng.uniform(1.05, 3)
        th, ph = rng.uniform(0.3, 2.8), rng.uniform(0, 6)
        x = np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
        p = pseudosphere_embed(patch, t, r, x)
        assert abs(p @ ETA @ p - 1) < 1e-12
        assert_allclose(pseudosphere_pullback(patch, t, r, th, ph), static_metric(h_ds, r, th), atol=1e-6)


def test_pseudosphere_limits_and_errors():
    x = np.array([0.0, 0.6, 0.8])
    assert_allclose(pseudosphere_embed("static+", 0.4, 1 - 1e-12, x), np.r_[0, 0, x], atol=1e-5)
    with pytest.raises(ValueError):
        pseudosphere_embed("static+", 0.0, 1.5, x)
    with pytest.raises(ValueError):
        pseudosphere_embed("cosmological-", 0.0, 0.5, x)
    with pytest.raises(ValueError):
        pseudosphere_embed("elsewhere", 0.0, 0.5, x)


def test_chart_csv(tmp_path, ds_chart):
    path = tmp_path / "chart.csv"
    kruskal.write_chart_csv(ds_chart, path, n=11)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["r", "f", "fprime", "F"]
    assert len(rows) == 12
    r, f = float(rows[5][0]), float(rows[5][1])
    assert_allclose(f, 2 * (r - 1) / (r + 1), atol=1e-9)
