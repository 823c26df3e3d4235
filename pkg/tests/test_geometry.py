import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from nullmcf.exact import StcmcParams, stcmc_factor
from nullmcf.geometry import (
    ANTI_DE_SITTER,
    DE_SITTER,
    MINKOWSKI,
    BracketError,
    ConformalFactor,
    LightconeModel,
    area,
    classify_causal,
    cross_section_report,
    gauss_bonnet_defect,
    null_expansions,
    scalar_curvature,
    spacetime_mean_curvature,
)
from nullmcf.sphere import SphericalGrid, synthesize_random


@pytest.fixture(scope="module")
def grid():
    return SphericalGrid(64)


def const(b, grid):
    return ConformalFactor.constant(b, grid)


def test_conformal_factor_log_storage(grid):
    om = const(2.5, grid)
    assert_allclose(om.u.values, np.log(2.5))
    assert_allclose(om.omega.values, 2.5)
    assert_allclose(om.scaled(2.0).omega.values, 5.0)
    assert_allclose(ConformalFactor.from_omega(grid.constant(3.0)).u.values, np.log(3.0))
    with pytest.raises(ValueError):
        ConformalFactor.from_omega(grid.constant(-1.0))


@pytest.mark.parametrize("b", [0.5, 1.0, 3.0])
def test_scalar_curvature_of_constants(grid, b):
    # spectral Laplacian roundoff on a constant is ~1e-10 (see test_sphere)
    assert_allclose(scalar_curvature(const(b, grid)).values, 2 / b**2, rtol=1e-9)


def test_scalar_curvature_stcmc(grid):
    R = scalar_curvature(stcmc_factor(StcmcParams(2.0, (0.3, 0, 0)), grid))
    assert_allclose(R.values, 0.5, atol=1e-9)


def test_area_examples(grid):
    assert_allclose(area(const(3.0, grid)), 36 * np.pi, rtol=1e-14)
    assert_allclose(area(const(1.0, grid)), 4 * np.pi, rtol=1e-14)
    for a in [(0.2, -0.5, 0.1), (0, 0, 1.3)]:
        assert_allclose(area(stcmc_factor(StcmcParams(1.5, a), grid)), 9 * np.pi, rtol=1e-9)


def test_mean_curvature_models(grid):
    assert np.max(np.abs(spacetime_mean_curvature(const(1.0, grid), DE_SITTER).values)) < 1e-12
    assert_allclose(spacetime_mean_curvature(const(2.0, grid), DE_SITTER).values, -3.0, rtol=1e-9)
    assert_allclose(spacetime_mean_curvature(const(2.0, grid), MINKOWSKI).values, 1.0, rtol=1e-9)
    assert_allclose(spacetime_mean_curvature(const(2.0, grid), ANTI_DE_SITTER).values, 5.0, rtol=1e-9)


def test_class_s_with_de_sitter_profile_matches(grid):
    model = LightconeModel("ClassS", h=lambda r: 1 - r * r)
    om = ConformalFactor(synthesize_random(4, 8, 0.3, grid))
    assert_allclose(
        spacetime_mean_curvature(om, model).values,
        spacetime_mean_curvature(om, DE_SITTER).values,
        atol=1e-12,
    )


def test_class_s_bracket_violation(grid):
    model = LightconeModel("ClassS", h=lambda r: 1 - r * r, bracket=(0.0, 1.5))
    with pytest.raises(BracketError):
        spacetime_mean_curvature(const(2.0, grid), model)


def test_model_validation():
    with pytest.raises(ValueError):
        LightconeModel("Schwarzschild")
    with pytest.raises(ValueError):
        LightconeModel("ClassS")
    assert DE_SITTER.K == -0.5
    assert DE_SITTER.to_dict() == {"kind": "DeSitter"}


def test_null_expansions(grid):
    tb, th = null_expansions(const(1.0, grid), DE_SITTER)
    assert_allclose(tb.values, 2.0)
    assert np.max(np.abs(th.values)) < 1e-12
    b = 1.7
    tb, th = null_expansions(const(b, grid), DE_SITTER)
    assert_allclose(tb.values, 2 / b, rtol=1e-14)
    assert_allclose(th.values, 2 / b - 2 * b, rtol=1e-9)
    tb, th = null_expansions(const(b, grid), MINKOWSKI)
    assert_allclose(th.values, 2 / b, rtol=1e-9)


def test_expansion_product_is_mean_curvature(grid):
    om = ConformalFactor(synthesize_random(11, 8, 0.3, grid))
    H2 = spacetime_mean_curvature(om, DE_SITTER)
    tb, th = null_expansions(om, DE_SITTER)
    assert_allclose((tb * th).values, H2.values, rtol=1e-12, atol=1e-12)


def test_gauss_bonnet(grid):
    assert abs(gauss_bonnet_defect(const(1.0, grid))) < 1e-12
    for seed in range(5):
        om = ConformalFactor(synthesize_random(seed, 8, 0.3, grid))
        assert abs(gauss_bonnet_defect(om)) < 1e-8
    assert abs(gauss_bonnet_defect(stcmc_factor(StcmcParams(0.7, (1.0, 0.5, 0)), grid))) < 1e-8


def test_classify_causal(grid):
    assert classify_causal(grid.constant(-3.0)) == "trapped"
    assert classify_causal(grid.constant(0.0)) == "MOTS-candidate"
    assert classify_causal(grid.constant(2.0)) == "outer-untrapped"
    th, _ = grid.mesh
    assert classify_causal(grid.field(np.cos(th))) == "mixed"
    with pytest.raises(ValueError):
        classify_causal(grid.constant(0.0), tol=0.0)


def test_cross_section_report(grid):
    rep = cross_section_report(const(2.0, grid))
    s = rep.summary()
    assert s["causal_class"] == "trapped"
    assert_allclose(s["area"], 16 * np.pi, rtol=1e-14)
    assert abs(s["gauss_bonnet_defect"]) < 1e-12
    assert json.loads(rep.to_json())["causal_class"] == "trapped"


def test_codimension3_identity(grid):
    om = ConformalFactor(synthesize_random(9, 8, 0.3, grid))
    R = scalar_curvature(om)
    H2 = spacetime_mean_curvature(om, DE_SITTER)
    assert_allclose(H2.values + 4.0, 2.0 * R.values, atol=1e-12)
