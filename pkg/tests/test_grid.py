import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from gfdeconv import (
    Grid,
    GriddedFunction,
    ValidationError,
    convolve,
    forward_ft,
    inverse_ft,
    quadrature,
    spectral_derivative,
)


def normal_pdf(x, mean=0.0, var=1.0):
    return np.exp(-0.5 * (x - mean) ** 2 / var) / math.sqrt(2 * math.pi * var)


@pytest.fixture
def grid():
    return Grid()


# --- Grid type -----------------------------------------------------------


@pytest.mark.parametrize("points", [4, 6, 100, 1000, 0])
def test_grid_rejects_bad_point_counts(points):
    with pytest.raises(ValidationError):
        Grid(1, 20.0, points)


@pytest.mark.parametrize("kw", [dict(dim=3), dict(half_width=0.0), dict(half_width=-1.0), dict(half_width=math.inf)])
def test_grid_rejects_bad_parameters(kw):
    with pytest.raises(ValidationError):
        Grid(**kw)


def test_grid_defaults():
    assert Grid.default(1) == Grid(1, 20.0, 1024)
    assert Grid.default(2) == Grid(2, 10.0, 256)


@pytest.mark.parametrize("L,N", [(20.0, 1024), (3.7, 64), (1e3, 8), (2**16 / 3840, 2**17)])
def test_spacing_times_points(L, N):
    g = Grid(1, L, N)
    assert abs(g.spacing * g.points - 2 * L) <= math.ulp(2 * L)
    x = g.nodes
    assert x[0] == -L
    assert x[g.points // 2] == 0.0


def test_dual_grid(grid):
    d = grid.dual()
    assert d.spacing == pytest.approx(2 * math.pi / (grid.points * grid.spacing), rel=1e-15)
    assert d.nodes[0] == pytest.approx(-math.pi / grid.spacing, rel=1e-15)
    assert d.nodes[-1] < math.pi / grid.spacing
    dd = d.dual()
    assert dd.points == grid.points and dd.half_width == pytest.approx(grid.half_width, rel=1e-14)


def test_mesh_2d_ij_indexing():
    g = Grid(2, 1.0, 8)
    x1, x2 = g.mesh()
    assert np.all(x1[:, 0] == g.nodes) and np.all(x2[0, :] == g.nodes)
    assert g.points_array().shape == (64, 2)


# --- forward / inverse ---------------------------------------------------


def test_forward_gaussian(grid):
    f = GriddedFunction(grid, normal_pdf(grid.nodes))
    F = forward_ft(f)
    s = F.grid.nodes
    band = np.abs(s) <= 10
    assert np.abs(F.values - np.exp(-s**2 / 2))[band].max() < 1e-10


def test_forward_zero(grid):
    assert np.all(forward_ft(GriddedFunction.zeros(grid)).values == 0)


def test_forward_laplace():
    # kink at the origin: N=2048 keeps the aliasing floor below the tolerance
    g = Grid(1, 20.0, 2048)
    F = forward_ft(GriddedFunction(g, 0.5 * np.exp(-np.abs(g.nodes))))
    s = F.grid.nodes
    band = np.abs(s) <= 10
    assert np.abs(F.values - 1 / (1 + s**2))[band].max() < 1e-4


def test_forward_matches_direct_sum():
    g = Grid(1, 3.0, 16)
    rng = np.random.default_rng(0)
    f = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    direct = np.array([np.sum(f * np.exp(1j * g.nodes * s)) * g.spacing for s in g.dual().nodes])
    assert np.abs(forward_ft(GriddedFunction(g, f)).values - direct).max() < 1e-12


def test_forward_matches_direct_sum_2d():
    g = Grid(2, 2.0, 8)
    rng = np.random.default_rng(1)
    f = rng.standard_normal(g.shape)
    x1, x2 = g.mesh()
    s1, s2 = g.dual().mesh()
    direct = np.array([
        np.sum(f * np.exp(1j * (x1 * a + x2 * b))) * g.spacing**2 for a, b in zip(s1.ravel(), s2.ravel())
    ]).reshape(g.shape)
    assert np.abs(forward_ft(GriddedFunction(g, f)).values - direct).max() < 1e-12


def test_round_trip(grid):
    f = GriddedFunction(grid, normal_pdf(grid.nodes))
    assert np.abs(inverse_ft(forward_ft(f)).values - f.values).max() < 1e-12


def test_inverse_of_one_is_grid_dirac(grid):
    F = GriddedFunction(grid.dual(), np.ones(grid.size))
    out = inverse_ft(F)
    expect = np.zeros(grid.size)
    expect[grid.points // 2] = 1 / grid.spacing
    assert out.grid.half_width == pytest.approx(grid.half_width)
    assert np.abs(out.values - expect).max() < 1e-9


def test_inverse_gaussian(grid):
    s = grid.dual().nodes
    out = inverse_ft(GriddedFunction(grid.dual(), np.exp(-s**2 / 2)))
    assert np.abs(out.values - normal_pdf(out.grid.nodes)).max() < 1e-10


# --- convolution ----------------------------------------------------------


def test_convolve_gaussians(grid):
    f = GriddedFunction(grid, normal_pdf(grid.nodes))
    out = convolve(f, f)
    assert np.abs(out.values - normal_pdf(grid.nodes, var=2.0)).max() < 1e-8
    assert abs(quadrature(out) - 1) < 1e-6


def test_convolve_with_grid_dirac(grid):
    f = GriddedFunction(grid, normal_pdf(grid.nodes, 1.0, 0.5))
    dirac = np.zeros(grid.size)
    dirac[grid.points // 2] = 1 / grid.spacing
    out = convolve(f, GriddedFunction(grid, dirac))
    assert np.abs(out.values - f.values).max() < 1e-12


def test_convolve_uniforms_triangle():
    # spacing 0.08 puts +-1 on nodes, where the uniform density takes its midpoint value
    g = Grid(1, 1024 / 25, 1024)
    x = g.nodes
    r = np.abs(x)
    u = np.where(r < 1, 0.5, np.where(np.isclose(r, 1.0, atol=1e-12), 0.25, 0.0))
    out = convolve(GriddedFunction(g, u), GriddedFunction(g, u))
    tri = np.clip(2 - np.abs(x), 0, None) / 4
    assert np.abs(out.values - tri).max() < 1e-6
    assert abs(quadrature(out) - 1) < 1e-6


def test_convolve_grid_mismatch():
    a = GriddedFunction.zeros(Grid(1, 20.0, 1024))
    b = GriddedFunction.zeros(Grid(1, 10.0, 1024))
    with pytest.raises(ValidationError):
        convolve(a, b)


def test_convolve_warns_on_wide_input(grid):
    wide = GriddedFunction(grid, np.exp(-np.abs(grid.nodes) / 10))
    with pytest.warns(RuntimeWarning, match="aliased"):
        convolve(wide, wide)
    narrow = GriddedFunction(grid, normal_pdf(grid.nodes))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        convolve(narrow, narrow)


# --- derivative and quadrature ------------------------------------------------


def test_derivative_gaussian():
    # Stated tolerance kept as given. Second-order central differences have
    # error dx^2/6 * max|g'''| ~ 3.7e-4 here, so this is expected to fail.
    g = Grid(1, 20.48, 1024)  # spacing 0.04
    s = g.nodes
    d = spectral_derivative(GriddedFunction(g, np.exp(-s**2 / 2)))
    assert np.abs(d.values - (-s * np.exp(-s**2 / 2))).max() < 1e-4


def test_derivative_gaussian_second_order_rate():
    errs = []
    for n in (1024, 2048, 4096):
        g = Grid(1, 20.48, n)
        s = g.nodes
        d = spectral_derivative(GriddedFunction(g, np.exp(-s**2 / 2)))
        err = np.abs(d.values - (-s * np.exp(-s**2 / 2))).max()
        third = np.abs((3 * s - s**3) * np.exp(-s**2 / 2)).max()
        assert err <= g.spacing**2 / 6 * third * 1.01
        errs.append(err)
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.02)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.02)


def test_derivative_constant(grid):
    d = spectral_derivative(GriddedFunction(grid, np.full(grid.size, 2.5 - 1j)))
    assert np.abs(d.values).max() < 1e-12


def test_derivative_cos(grid):
    s = grid.nodes
    d = spectral_derivative(GriddedFunction(grid, np.cos(s)))
    # central differences: dx^2/6 inside, one-sided second-order ends: dx^2/3
    assert np.abs(d.values + np.sin(s)).max() < grid.spacing**2 / 2


def test_derivative_2d_axis():
    g = Grid(2, 5.0, 128)
    x1, x2 = g.mesh()
    f = GriddedFunction(g, np.exp(-(x1**2 + 2 * x2**2) / 2))
    d1 = spectral_derivative(f, 0).values
    d2 = spectral_derivative(f, 1).values
    assert np.abs(d1 + x1 * f.values).max() < 2 * g.spacing**2
    assert np.abs(d2 + 2 * x2 * f.values).max() < 4 * g.spacing**2
    with pytest.raises(ValidationError):
        spectral_derivative(f, 2)


def test_derivative_axis_out_of_range(grid):
    with pytest.raises(ValidationError):
        spectral_derivative(GriddedFunction.zeros(grid), 1)


def test_quadrature_normal(grid):
    assert abs(quadrature(GriddedFunction(grid, normal_pdf(grid.nodes))) - 1) < 1e-10


def test_quadrature_odd(grid):
    x = grid.nodes
    assert abs(quadrature(GriddedFunction(grid, x**3 * np.exp(-x**2)))) < 1e-12


def test_quadrature_abs_exponential():
    # trapezoid error at the kink is dx^2/6; N=2^15 gives 2.4e-7
    g = Grid(1, 20.0, 2**15)
    val = quadrature(GriddedFunction(g, np.exp(-np.abs(g.nodes))))
    assert abs(val - 2 * (1 - math.exp(-20))) < 1e-6


def test_quadrature_2d():
    g = Grid.default(2)
    x1, x2 = g.mesh()
    f = normal_pdf(x1) * normal_pdf(x2, 0.5, 2.0)
    assert abs(quadrature(GriddedFunction(g, f)) - 1) < 1e-10


# --- GriddedFunction -----------------------------------------------------


def test_values_shape_and_readonly(grid):
    f = GriddedFunction(grid, np.zeros(grid.size))
    assert f.values.shape == grid.shape
    with pytest.raises(ValueError):
        f.values[0] = 1
    with pytest.raises(ValidationError):
        GriddedFunction(grid, np.zeros(grid.size - 1))


def test_arithmetic(grid):
    a = GriddedFunction(grid, np.arange(grid.size))
    b = GriddedFunction(grid, np.ones(grid.size))
    assert np.all(((a + b) - 1).values == a.values)
    assert np.all((2 * a / 2).values == a.values)
    assert np.all((-a).conj().values == -a.values)
    with pytest.raises(ValidationError):
        a + GriddedFunction.zeros(Grid(1, 1.0, 1024))


@pytest.mark.parametrize("g", [Grid(1, 3.0, 16), Grid(2, 2.0, 8)])
def test_csv_round_trip(g, tmp_path):
    rng = np.random.default_rng(5)
    f = GriddedFunction(g, rng.standard_normal(g.size) + 1j * rng.standard_normal(g.size))
    path = tmp_path / "f.csv"
    text = f.to_csv(path)
    header = text.splitlines()[0]
    assert header == ("node,re,im" if g.dim == 1 else "node1,node2,re,im")
    back = GriddedFunction.from_csv(path)
    assert back.grid == g
    assert np.array_equal(back.values, f.values)
    assert np.array_equal(GriddedFunction.from_csv(text).values, f.values)


# --- properties ------------------------------------------------------------

coef = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)
small_grids = st.sampled_from([Grid(1, 8.0, 64), Grid(1, 20.0, 256), Grid(2, 6.0, 32)])


def _bumps(g, seed):
    rng = np.random.default_rng(seed)
    out = np.zeros(g.shape, dtype=complex)
    for _ in range(3):
        c = rng.uniform(-2, 2, g.dim)
        w = rng.uniform(0.5, 1.5)
        amp = rng.standard_normal() + 1j * rng.standard_normal()
        r2 = sum((m - ck) ** 2 for m, ck in zip(g.mesh(), c))
        out += amp * np.exp(-0.5 * r2 / w**2)
    return GriddedFunction(g, out)


@given(small_grids, coef, coef, st.integers(0, 10**6))
def test_linearity(g, a, b, seed):
    f, h = _bumps(g, seed), _bumps(g, seed + 1)
    comb = f * a + h * b
    for op in (forward_ft, inverse_ft):
        lhs = op(comb).values
        rhs = a * op(f).values + b * op(h).values
        assert np.abs(lhs - rhs).max() <= 1e-10 * (1 + np.abs(rhs).max())
    q = quadrature(comb)
    assert abs(q - (a * quadrature(f) + b * quadrature(h))) <= 1e-10 * (1 + abs(q))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        lhs = convolve(comb, f).values
        rhs = a * convolve(f, f).values + b * convolve(h, f).values
    assert np.abs(lhs - rhs).max() <= 1e-10 * (1 + np.abs(rhs).max())


@given(small_grids, st.integers(0, 10**6))
def test_round_trip_relative(g, seed):
    f = _bumps(g, seed)
    back = inverse_ft(forward_ft(f)).values
    assert np.abs(back - f.values).max() <= 1e-10 * np.abs(f.values).max()


@given(small_grids, st.integers(0, 10**6))
def test_parseval(g, seed):
    f = _bumps(g, seed)
    F = forward_ft(f)
    lhs = quadrature(f * f.conj()).real
    rhs = quadrature(F * F.conj()).real / (2 * math.pi) ** g.dim
    assert abs(lhs - rhs) <= 1e-6 * lhs


@given(st.floats(0.5, 2.0), st.floats(0.5, 2.0), st.floats(-2, 2))
def test_exchange_formula(sd1, sd2, shift):
    g = Grid()
    f = GriddedFunction(g, normal_pdf(g.nodes, shift, sd1**2))
    h = GriddedFunction(g, 0.5 * special.erfc((np.abs(g.nodes) - 3) / sd2) / 6)  # smoothed box
    lhs = forward_ft(convolve(f, h)).values
    rhs = forward_ft(f).values * forward_ft(h).values
    assert np.abs(lhs - rhs).max() < 1e-8
