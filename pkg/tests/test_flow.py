import numpy as np
import pytest
from numpy.testing import assert_allclose

from nullmcf.exact import StcmcParams, sphere_extinction_time, sphere_solution, stcmc_factor
from nullmcf.flow import (
    FlowConfig,
    IntegratorError,
    area_law_check,
    closed_form_area,
    metric_equation_residual,
    predict_tmax,
    record_state,
    rescale_volume_preserving,
    rescaled_time_closed_form,
    rhs,
    roundness,
    run,
    step,
)
from nullmcf.geometry import ANTI_DE_SITTER, DE_SITTER, MINKOWSKI, ConformalFactor
from nullmcf.sphere import SphericalGrid, synthesize_random

FOUR_PI = 4 * np.pi


@pytest.fixture(scope="module")
def grid():
    return SphericalGrid(32)


def noisy(grid, seed=7, amplitude=0.1, lmax_pert=4):
    return ConformalFactor(synthesize_random(seed, lmax_pert, amplitude, grid))


def initial_state(omega, model=DE_SITTER):
    return run(omega, FlowConfig(model=model, t_end=1e-12)).states[0]


@pytest.mark.parametrize("b", [0.5, 1.0, 2.0, 3.0])
def test_rhs_round_spheres(grid, b):
    om = ConformalFactor.constant(b, grid)
    assert_allclose(rhs(om).values, (b * b - 1) / b, atol=1e-9)
    assert_allclose(rhs(om, MINKOWSKI).values, -1 / b, atol=1e-9)
    assert_allclose(rhs(om, ANTI_DE_SITTER).values, -(b * b + 1) / b, atol=1e-9)


def test_rhs_matches_sphere_solution_derivative():
    b0, e = 1.7, 1e-6
    deriv = (sphere_solution(b0, e) - sphere_solution(b0, -e)) / (2 * e)
    assert_allclose(deriv, (b0 * b0 - 1) / b0, rtol=1e-8)


def test_step_stationary_mots(grid):
    s0 = initial_state(ConformalFactor.constant(1.0, grid))
    s1 = step(s0, FlowConfig(dt_init=0.01))
    assert s1.t > 0
    assert_allclose(s1.omega.omega.values, 1.0, atol=1e-12)


def test_step_direction(grid):
    cfg = FlowConfig(dt_init=1e-3)
    big = step(initial_state(ConformalFactor.constant(2.0, grid)), cfg)
    small = step(initial_state(ConformalFactor.constant(0.5, grid)), cfg)
    assert np.all(big.omega.omega.values > 2.0)
    assert np.all(small.omega.omega.values < 0.5)
    assert_allclose(big.omega.omega.values, sphere_solution(2.0, big.t), rtol=1e-10)


def test_predict_tmax_examples():
    assert_allclose(predict_tmax(2 * np.pi), 0.5 * np.log(2), rtol=1e-15)
    assert predict_tmax(FOUR_PI) is None
    assert predict_tmax(8 * np.pi) is None
    assert_allclose(predict_tmax(FOUR_PI, ANTI_DE_SITTER), 0.5 * np.log(2), rtol=1e-15)
    assert_allclose(predict_tmax(FOUR_PI, MINKOWSKI), 0.5)
    assert_allclose(predict_tmax(FOUR_PI * 0.25), sphere_extinction_time(0.5), rtol=1e-14)
    with pytest.raises(ValueError):
        predict_tmax(0.0)


def test_closed_form_area_examples():
    assert_allclose(closed_form_area(FOUR_PI, 3.0), FOUR_PI)
    assert_allclose(closed_form_area(8 * np.pi, 1.0), FOUR_PI + FOUR_PI * np.e**2)
    assert_allclose(closed_form_area(FOUR_PI, 0.25, MINKOWSKI), 2 * np.pi)
    T = predict_tmax(FOUR_PI, ANTI_DE_SITTER)
    assert abs(closed_form_area(FOUR_PI, T, ANTI_DE_SITTER)) < 1e-13


def test_config_validation():
    with pytest.raises(ValueError):
        FlowConfig(scheme="Euler")
    with pytest.raises(ValueError):
        FlowConfig(dt_init=0)
    with pytest.raises(ValueError):
        FlowConfig(cfl_safety=1.5)
    with pytest.raises(ValueError):
        FlowConfig(record_every=0)


@pytest.mark.parametrize("a0", [2 * np.pi, FOUR_PI, 8 * np.pi])
def test_area_law_short_runs(grid, a0):
    s = run(noisy(grid), FlowConfig(t_end=0.2, record_every=5), target_area=a0)
    assert_allclose(s.area0, a0, rtol=1e-14)
    assert area_law_check(s) < 1e-8
    # the sign of |S_t| - 4 pi never changes along a run
    sign = np.sign(s.column("area") - FOUR_PI) if a0 != FOUR_PI else None
    if sign is not None:
        assert np.all(sign == sign[0])


def test_area_law_minkowski(grid):
    s = run(noisy(grid), FlowConfig(model=MINKOWSKI, t_end=0.25, record_every=5), target_area=FOUR_PI)
    assert_allclose(s.final.t, 0.25)
    assert_allclose(s.final.area, 2 * np.pi, rtol=1e-8)


def test_shrinking_sphere_extinction(grid):
    cfg = FlowConfig(scheme="IMEX", t_end=1.0, record_every=50)
    s = run(ConformalFactor.constant(0.5, grid), cfg)
    T = 0.5 * np.log(4 / 3)
    assert s.outcome == "ShrinksToTip"
    assert abs(s.t_max_observed - T) < 0.02 * T
    assert_allclose(s.certificates["t_max_predicted"], T)


def test_ads_always_extinguishes(grid):
    cfg = FlowConfig(model=ANTI_DE_SITTER, scheme="IMEX", t_end=2.0, record_every=50)
    s = run(noisy(grid), cfg, target_area=8 * np.pi)
    assert s.outcome == "ShrinksToTip"


def test_area_floor_without_closed_form_time_is_an_error(grid):
    # a floor far above zero is reached long before the closed-form extinction time
    cfg = FlowConfig(t_end=1.0, stop_area_floor=2.0, scheme="IMEX")
    with pytest.raises(IntegratorError):
        run(ConformalFactor.constant(0.5, grid), cfg)


def test_avoidance_barrier(grid):
    # omega0 below a shrinking round sphere stays below it
    b0 = 0.9
    om = ConformalFactor(synthesize_random(3, 4, 0.05, grid)).scaled(1.0)
    om = om.scaled(0.95 * b0 / om.omega.max())
    s = run(om, FlowConfig(t_end=0.3, record_every=5))
    for st in s.states:
        assert st.omega.omega.max() <= sphere_solution(b0, st.t) * (1 + 1e-10)


def test_stcmc_flow_stays_stcmc(grid):
    # STCMC data with b != 1 move along the family with b(t) = sphere_solution
    p = StcmcParams(1.2, (0.3, 0.0, 0.0))
    s = run(stcmc_factor(p, grid), FlowConfig(t_end=0.3, record_every=5))
    for st in s.states:
        assert roundness(st.omega) < 1e-7
        assert_allclose(st.area, FOUR_PI * sphere_solution(1.2, st.t) ** 2, rtol=1e-9)


def test_metric_equation_holds(grid):
    s = run(noisy(grid), FlowConfig(t_end=0.1, dt_init=2e-3, record_every=1), target_area=8 * np.pi)
    assert metric_equation_residual(s) < 1e-5


def test_rescaling_trivial_case(grid):
    s = run(noisy(grid), FlowConfig(t_end=0.1, record_every=5), target_area=FOUR_PI)
    resc = rescale_volume_preserving(s)
    for r, st in zip(resc, s.states):
        assert_allclose(r.scale, 1.0, rtol=1e-12)
        assert_allclose(r.t_tilde_closed, st.t, rtol=1e-12, atol=1e-15)
        assert_allclose(r.t_tilde_numeric, st.t, rtol=1e-12, atol=1e-15)


def test_rescaled_time_limits():
    # shrinking case: t_tilde diverges as t -> T
    T = predict_tmax(2 * np.pi)
    tt = rescaled_time_closed_form(2 * np.pi, T * (1 - np.array([1e-2, 1e-4, 1e-8])))
    assert np.all(np.diff(tt) > 0) and tt[-1] > 4
    # expanding case: t_tilde saturates
    tt = rescaled_time_closed_form(8 * np.pi, np.array([5.0, 10.0, 50.0]))
    limit = 2 * 0.5 * (np.log(8 * np.pi) - np.log(FOUR_PI))
    assert_allclose(tt[-1], limit, rtol=1e-12)
    assert abs(tt[1] - tt[0]) < 1e-4


def test_rescaling_requires_de_sitter(grid):
    s = run(noisy(grid), FlowConfig(model=MINKOWSKI, t_end=0.05), target_area=FOUR_PI)
    with pytest.raises(ValueError):
        rescale_volume_preserving(s)


def test_roundness_examples(grid):
    assert roundness(ConformalFactor.constant(1.3, grid)) < 1e-9
    small = roundness(noisy(grid, amplitude=0.01))
    big = roundness(noisy(grid, amplitude=0.05))
    assert 0 < small < big


def test_recorded_clocks(grid):
    s = run(noisy(grid), FlowConfig(t_end=0.2, record_every=3), target_area=2 * np.pi)
    t = s.column("t")
    assert_allclose(s.column("t_hat"), 0.5 * (1 - np.exp(-2 * t)), rtol=1e-14)
    assert np.all(np.diff(s.column("t_tilde")) > 0)
    assert np.all(np.diff(t) > 0)
