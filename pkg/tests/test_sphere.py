import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from nullmcf.sphere import (
    GridMismatchError,
    ScalarField,
    SphericalGrid,
    gauss_legendre,
    integrate,
    laplacian,
    random_coefficient_bound,
    read_snapshot,
    synthesize_random,
    write_snapshot,
)


@pytest.fixture(scope="module")
def grid():
    return SphericalGrid(64)


def test_grid_defaults(grid):
    assert (grid.nlat, grid.nlon, grid.lmax) == (64, 128, 63)
    assert grid.shape == (64, 128)
    assert np.all((grid.colatitudes > 0) & (grid.colatitudes < np.pi))
    assert_allclose(np.diff(grid.longitudes), 2 * np.pi / 128, rtol=1e-13)


def test_weights_sum_to_sphere_area(grid):
    assert grid.quad_weights.min() > 0
    assert_allclose(grid.quad_weights.sum(), 4 * np.pi, rtol=1e-12)


def test_gauss_legendre_weights_exact():
    x, w = gauss_legendre(64)
    assert_allclose(w.sum(), 2.0, rtol=1e-15)
    # integrates x^126 exactly
    assert_allclose(np.sum(w * x**126), 2.0 / 127, rtol=1e-13)


def test_grid_validation():
    with pytest.raises(ValueError):
        SphericalGrid(8, 10)
    with pytest.raises(ValueError):
        SphericalGrid(8, 16, 9)


def test_integrate_examples(grid):
    th, _ = grid.mesh
    assert_allclose(integrate(grid.constant(1.0)), 4 * np.pi, rtol=1e-14)
    assert abs(integrate(grid.field(np.cos(th)))) < 1e-14
    assert_allclose(integrate(grid.field(np.cos(th) ** 2)), 4 * np.pi / 3, rtol=1e-14)


def test_integrate_rejects_other_grid(grid):
    f = SphericalGrid(16).constant(1.0)
    with pytest.raises(GridMismatchError):
        integrate(f, grid)
    with pytest.raises(GridMismatchError):
        f + grid.constant(1.0)


def test_laplacian_examples(grid):
    th, _ = grid.mesh
    # roundoff in the l ~ 60 coefficients is amplified by l(l+1) ~ 4000
    assert np.max(np.abs(laplacian(grid.constant(3.0)).values)) < 1e-9
    assert_allclose(laplacian(grid.field(np.cos(th))).values, -2 * np.cos(th), atol=1e-9)
    p2 = (3 * np.cos(th) ** 2 - 1) / 2
    assert np.max(np.abs(laplacian(grid.field(p2)).values + 6 * p2)) < 1e-10


def test_laplacian_sectoral_harmonic(grid):
    th, ph = grid.mesh
    f = np.sin(th) ** 3 * np.cos(3 * ph)
    assert_allclose(laplacian(grid.field(f)).values, -12 * f, atol=1e-10)


def test_transform_roundtrip(grid):
    f = synthesize_random(3, 20, 1.0, grid)
    c = grid.analyze(f.values)
    assert_allclose(grid.synthesize(c), f.values, atol=1e-12)


def test_evaluate_matches_nodes(grid):
    f = synthesize_random(5, 10, 0.5, grid)
    th, ph = grid.mesh
    vals = grid.evaluate(f.coefficients(), th[::7, ::9], ph[::7, ::9])
    assert_allclose(vals, f.values[::7, ::9], atol=1e-12)


def test_random_zero_amplitude(grid):
    assert np.all(synthesize_random(1, 4, 0.0, grid).values == 0.0)


def test_random_deterministic(grid):
    a = synthesize_random(7, 4, 0.1, grid)
    b = synthesize_random(7, 4, 0.1, grid)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, synthesize_random(8, 4, 0.1, grid).values)


def test_random_bound_and_mean(grid):
    f = synthesize_random(7, 4, 0.1, grid)
    assert np.max(np.abs(f.values)) <= random_coefficient_bound(4, 0.1)
    assert abs(integrate(f)) < 1e-14
    c = f.coefficients()
    assert np.max(np.abs(c)) <= 0.1 + 1e-12
    assert np.max(np.abs(c[5:])) < 1e-12


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), lmax=st.integers(1, 12), amp=st.floats(0.0, 2.0))
def test_random_bound_property(seed, lmax, amp):
    g = SphericalGrid(16)
    f = synthesize_random(seed, lmax, amp, g)
    assert np.max(np.abs(f.values)) <= random_coefficient_bound(lmax, amp) + 1e-12


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_laplacian_integrates_to_zero(seed):
    g = SphericalGrid(32)
    f = synthesize_random(seed, 10, 1.0, g)
    assert abs(integrate(laplacian(f))) < 1e-11


def test_scalar_field_is_read_only_and_finite(grid):
    f = grid.constant(1.0)
    with pytest.raises(ValueError):
        f.values[0, 0] = 2.0
    with pytest.raises(ValueError):
        ScalarField(grid, np.full(grid.shape, np.nan))
    with pytest.raises(ValueError):
        ScalarField(grid, np.zeros(10))


def test_scalar_field_arithmetic(grid):
    f = grid.constant(2.0)
    g = (1.0 + f * 3.0 - f / 2.0) / f
    assert_allclose(g.values, 3.0)
    assert_allclose((-f).min(), -2.0)
    assert_allclose((1.0 / f).max(), 0.5)
    assert_allclose((4.0 - f).values, 2.0)


@pytest.mark.parametrize("binary", [False, True])
def test_snapshot_roundtrip(tmp_path, grid, binary):
    f = synthesize_random(2, 6, 0.3, grid)
    path = tmp_path / "snap.dat"
    write_snapshot(path, f, binary=binary)
    g = read_snapshot(path, binary=binary)
    assert g.grid == grid
    assert np.array_equal(g.values, f.values)


def test_snapshot_size_mismatch(tmp_path):
    path = tmp_path / "bad.dat"
    path.write_text("4 8 3\n1.0\n2.0\n")
    with pytest.raises(ValueError):
        read_snapshot(path)
