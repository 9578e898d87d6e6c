import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from gfdeconv import Grid, GriddedFunction, ValidationError, forward_ft
from gfdeconv.gf import (
    FT_WIENER_DERIVATIVE,
    WIENER_DERIVATIVE,
    Atom,
    CovarianceFunctional,
    GeneralizedFunction,
    PolyBound,
    StepDistribution,
    apply_functional,
    check_conds_integral,
    check_uniform_bound,
    clip_to_bound,
    convolve_gf,
    custom_test_function,
    default_test_set,
    density_functional,
    empirical_measure,
    ft_generalized,
    gaussian_test_function,
    hermite_function,
    hermite_functions,
    hermite_test_set,
    sample_process,
    weak_distance,
    wiener_covariance,
    wiener_gram,
)

GRID = Grid()


def normal_pdf(x, mean=0.0, var=1.0):
    return np.exp(-0.5 * (x - mean) ** 2 / var) / math.sqrt(2 * math.pi * var)


def reg(values, grid=GRID):
    return GeneralizedFunction(GriddedFunction(grid, values))


def hermite_oracle(k, x, sigma=1.0, order=0):
    """Dilated orthonormal Hermite function via scipy physicists' polynomials."""
    u = np.asarray(x, dtype=float) / sigma
    norm = 1.0 / math.sqrt(2.0**k * math.factorial(k) * math.sqrt(math.pi))
    H = lambda j: special.eval_hermite(j, u) if j >= 0 else 0.0 * u
    e = np.exp(-u * u / 2)
    if order == 0:
        v = H(k)
    elif order == 1:
        v = 2 * k * H(k - 1) - u * H(k)
    else:
        v = 4 * k * (k - 1) * H(k - 2) - 4 * k * u * H(k - 1) + (u * u - 1) * H(k)
    return norm * v * e * sigma ** -(0.5 + order)


# --- Atom / GeneralizedFunction types ------------------------------------------


def test_atom_validation():
    with pytest.raises(ValidationError):
        Atom(math.inf)
    with pytest.raises(ValidationError):
        Atom(0.0, complex(math.nan, 0))
    with pytest.raises(ValidationError):
        Atom(0.0, 1.0, 3)
    with pytest.raises(ValidationError):
        Atom((0.0, 0.0), 1.0, (2, 1))
    assert Atom((0.0, 1.0), 1.0, (1, 1)).order == (1, 1)


def test_generalized_function_invariants():
    with pytest.raises(ValidationError):
        GeneralizedFunction()
    with pytest.raises(ValidationError):
        GeneralizedFunction(GriddedFunction.zeros(GRID), (Atom(25.0),))
    with pytest.raises(ValidationError):
        GeneralizedFunction(GriddedFunction.zeros(GRID), (Atom((0.0, 0.0)),))


def test_json_round_trip(tmp_path):
    b = GeneralizedFunction(GriddedFunction(GRID, normal_pdf(GRID.nodes) * (1 + 0.5j)),
                            (Atom(0.3, 0.2 - 0.1j, 1), Atom(-1.0, 2.0)))
    path = tmp_path / "g.json"
    b.to_json(path)
    d = json.loads(path.read_text())
    assert set(d) == {"grid", "regular", "atoms"}
    assert d["grid"] == {"L": 20.0, "N": 1024, "dim": 1}
    assert set(d["atoms"][0]) == {"loc", "w_re", "w_im", "order"}
    back = GeneralizedFunction.from_json(path)
    assert np.array_equal(back.regular.values, b.regular.values)
    assert back.atoms == b.atoms
    atom_only = GeneralizedFunction(atoms=(Atom(1.0, 1.0),), grid=GRID)
    assert GeneralizedFunction.from_json(atom_only.to_json()).regular is None


def test_linear_combination():
    a = reg(normal_pdf(GRID.nodes))
    d = GeneralizedFunction(atoms=(Atom(0.0, 1.0),), grid=GRID)
    comb = 2 * a - d
    psi = hermite_function(2)
    assert apply_functional(comb, psi) == pytest.approx(2 * apply_functional(a, psi) - apply_functional(d, psi),
                                                        abs=1e-15)


# --- functionals ----------------------------------------------------------


def test_delta_against_h0():
    d = GeneralizedFunction(atoms=(Atom(0.0, 1.0),), grid=GRID)
    assert apply_functional(d, hermite_function(0)) == pytest.approx(math.pi**-0.25, abs=1e-15)


def test_delta_prime_against_even():
    d = GeneralizedFunction(atoms=(Atom(0.0, 1.0, 1),), grid=GRID)
    for k in (0, 2, 4):
        assert abs(apply_functional(d, hermite_function(k))) < 1e-15
    # odd psi: (delta', psi) = -psi'(0)
    val = apply_functional(d, hermite_function(1))
    assert val == pytest.approx(-hermite_oracle(1, 0.0, order=1), abs=1e-14)


def test_normal_against_gaussian():
    val = apply_functional(reg(normal_pdf(GRID.nodes)), gaussian_test_function())
    assert val == pytest.approx(1 / math.sqrt(2), abs=1e-8)


def test_atom_order_beyond_stored_derivatives():
    psi = custom_test_function(lambda x: np.exp(-x * x), {1: lambda x: -2 * x * np.exp(-x * x)})
    d2 = GeneralizedFunction(atoms=(Atom(0.0, 1.0, 2),), grid=GRID)
    with pytest.raises(ValidationError):
        apply_functional(d2, psi)


def test_conjugate_linear_pairing():
    psi = custom_test_function(lambda x: 1j * np.exp(-x * x))
    b = reg(normal_pdf(GRID.nodes))
    # (b, i g) = -i (b, g)
    plain = apply_functional(b, custom_test_function(lambda x: np.exp(-x * x)))
    assert apply_functional(b, psi) == pytest.approx(-1j * plain, abs=1e-15)


def test_atom_free_consistency():
    rng = np.random.default_rng(0)
    v = normal_pdf(GRID.nodes) * (1 + 0.1 * rng.standard_normal(GRID.size))
    psi = hermite_function(3, 0.5)
    direct = np.sum(v * np.conj(psi(GRID.nodes))) * GRID.spacing
    assert apply_functional(reg(v), psi) == pytest.approx(direct, rel=1e-13)


# --- Hermite functions ----------------------------------------------------


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_hermite_matches_scipy(sigma):
    x = np.linspace(-8, 8, 401)
    for k in range(16):
        psi = hermite_function(k, sigma)
        for order in (0, 1, 2):
            fn = psi if order == 0 else psi.derivative((order,))
            assert np.abs(fn(x) - hermite_oracle(k, x, sigma, order)).max() < 1e-11


def test_hermite_count_one():
    (h0,) = hermite_test_set(1)
    x = np.linspace(-5, 5, 11)
    assert np.allclose(h0(x), math.pi**-0.25 * np.exp(-x * x / 2), rtol=0, atol=1e-16)


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_hermite_orthonormal(sigma):
    ts = hermite_test_set(16, sigma)
    V = np.stack([p.on_grid(GRID) for p in ts])
    G = V @ V.conj().T * GRID.spacing
    assert np.abs(G - np.eye(16)).max() < 1e-8


def test_hermite_ft_eigen_ratio():
    h2 = hermite_function(2)
    F = forward_ft(GriddedFunction(GRID, h2.on_grid(GRID)))
    s = F.grid.nodes
    analytic = h2.ft(s)
    mask = np.abs(analytic) > 1e-3 * np.abs(analytic).max()
    ratio = F.values[mask] / analytic[mask]
    assert np.abs(ratio - ratio[0]).max() < 1e-8
    assert abs(abs(ratio[0]) - 1) < 1e-8


@pytest.mark.parametrize("k", range(6))
def test_hermite_ft_against_numerics(k):
    psi = hermite_function(k, 0.7)
    F = forward_ft(GriddedFunction(GRID, psi.on_grid(GRID)))
    s = F.grid.nodes
    band = np.abs(s) < 20
    assert np.abs(F.values - psi.ft(s))[band].max() < 1e-12
    conj_F = np.conj(forward_ft(GriddedFunction(GRID, np.conj(psi.on_grid(GRID)))).values)
    assert np.abs(conj_F - psi.adjoint_ft(s))[band].max() < 1e-12


def test_default_set_decays():
    ts = default_test_set()
    assert len(ts) == 48
    # wide high-order members only reach |x|^8 |psi| ~ 1 at |x| = 20
    assert all(p.decays_on(GRID) for p in ts if p.scale <= 1)
    assert all(p.decays_on(Grid(1, 40.0, 2048)) for p in ts)


def test_hermite_2d_tensor():
    g = Grid.default(2)
    psi = hermite_function((1, 2), 0.5)
    x1, x2 = g.mesh()
    expect = hermite_oracle(1, x1, 0.5) * hermite_oracle(2, x2, 0.5)
    assert np.abs(psi.on_grid(g) - expect).max() < 1e-12
    assert len(default_test_set(2)) == 48


# --- transforms -----------------------------------------------------------


def test_ft_delta_origin():
    d = GeneralizedFunction(atoms=(Atom(0.0, 1.0),), grid=GRID)
    assert np.all(ft_generalized(d).values == 1)


def test_ft_delta_shifted_at_pi():
    d = GeneralizedFunction(atoms=(Atom(1.0, 1.0),), grid=GRID)
    F = ft_generalized(d)
    s = F.grid.nodes
    i = int(np.argmin(np.abs(s - math.pi)))
    assert s[i] == pytest.approx(math.pi, abs=1e-12)
    assert abs(F.values[i] - (-1)) < 1e-12


def test_ft_normal():
    F = ft_generalized(reg(normal_pdf(GRID.nodes)))
    s = F.grid.nodes
    assert np.abs(F.values - np.exp(-s**2 / 2)).max() < 1e-10


@pytest.mark.parametrize("order", [1, 2])
def test_ft_atom_derivative_sign(order):
    # d^k of a narrow Gaussian at a tends to d^k delta_a; its exact transform is
    # the atom transform times exp(-sd^2 s^2 / 2)
    a, sd = 0.7, 0.3
    x = GRID.nodes
    u = (x - a) / sd
    dens = normal_pdf(x, a, sd**2)
    deriv = -u / sd * dens if order == 1 else (u * u - 1) / sd**2 * dens
    numeric = forward_ft(GriddedFunction(GRID, deriv)).values
    atom = ft_generalized(GeneralizedFunction(atoms=(Atom(a, 1.0, order),), grid=GRID))
    s = atom.grid.nodes
    expect = atom.values * np.exp(-0.5 * (sd * s) ** 2)
    assert np.abs(numeric - expect).max() < 1e-10


CORPUS = {
    "normal": lambda: reg(normal_pdf(GRID.nodes)),
    "shifted_complex": lambda: reg(normal_pdf(GRID.nodes, 1.0, 0.5) * (1 - 0.5j)),
    "mixture": lambda: GeneralizedFunction(GriddedFunction(GRID, 0.5 * normal_pdf(GRID.nodes)), (Atom(0.0, 0.5),)),
    "delta_prime": lambda: GeneralizedFunction(atoms=(Atom(0.5, 1.0, 1),), grid=GRID),
    "delta_second": lambda: GeneralizedFunction(atoms=(Atom(-0.3, 2.0, 2),), grid=GRID),
}


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_ft_duality(name):
    """(Ft b, psi) = (b, Ft* psi) with Ft* the e^{-ixs} transform (adjoint under the
    conjugate-linear pairing)."""
    b = CORPUS[name]()
    Fb = GeneralizedFunction(ft_generalized(b))
    for psi in default_test_set():
        lhs = apply_functional(Fb, psi)
        rhs = apply_functional(b, psi.transformed(adjoint=True))
        assert abs(lhs - rhs) < 1e-6, psi.label


def test_plain_transform_duality_only_for_even_real():
    b = CORPUS["shifted_complex"]()
    Fb = GeneralizedFunction(ft_generalized(b))
    even = hermite_function(2)
    odd = hermite_function(1)
    assert abs(apply_functional(Fb, even) - apply_functional(b, even.transformed(adjoint=False))) < 1e-6
    assert abs(apply_functional(Fb, odd) - apply_functional(b, odd.transformed(adjoint=False))) > 1e-2


# --- convolution ------------------------------------------------------------


def normal_laplace_pdf(x):
    """N(0,1) * Laplace(1) density, closed form."""
    x = np.asarray(x, dtype=float)
    return 0.25 * math.exp(0.5) * (np.exp(-x) * special.erfc((1 - x) / math.sqrt(2))
                                   + np.exp(x) * special.erfc((1 + x) / math.sqrt(2)))


def test_normal_laplace_closed_form_against_quad():
    for p in (-3.0, -0.4, 0.0, 1.1, 4.0):
        f = lambda t: normal_pdf(p - t) * 0.5 * math.exp(-abs(t))
        val = integrate.quad(f, -40, 0, points=[p], epsabs=1e-14)[0] + integrate.quad(f, 0, 40, points=[p], epsabs=1e-14)[0]
        assert normal_laplace_pdf(p) == pytest.approx(val, abs=1e-12)


def test_convolve_mixture_with_laplace():
    # fine grid: the Laplace kink limits spectral accuracy to ~dx^2
    g = Grid(1, 20.0, 16384)
    x = g.nodes
    mix = GeneralizedFunction(GriddedFunction(g, 0.5 * normal_pdf(x)), (Atom(0.0, 0.5),))
    lap = GeneralizedFunction(GriddedFunction(g, 0.5 * np.exp(-np.abs(x))))
    out = convolve_gf(mix, lap)
    expect = 0.25 * np.exp(-np.abs(x)) + 0.5 * normal_laplace_pdf(x)
    assert out.atoms == ()
    assert np.abs(out.regular.values - expect).max() < 1e-6


def test_convolve_delta_identity():
    f = reg(normal_pdf(GRID.nodes, 0.3, 2.0))
    d = GeneralizedFunction(atoms=(Atom(0.0, 1.0),), grid=GRID)
    out = convolve_gf(d, f)
    assert np.abs(out.regular.values - f.regular.values).max() < 1e-12


def test_convolve_shift():
    f = reg(normal_pdf(GRID.nodes))
    d = GeneralizedFunction(atoms=(Atom(1.3, 1.0),), grid=GRID)
    out = convolve_gf(d, f)
    assert np.abs(out.regular.values - normal_pdf(GRID.nodes, 1.3)).max() < 1e-8


def test_convolve_derivative_atom():
    f = reg(normal_pdf(GRID.nodes))
    d = GeneralizedFunction(atoms=(Atom(0.0, 1.0, 1),), grid=GRID)
    out = convolve_gf(d, f)
    x = GRID.nodes
    assert np.abs(out.regular.values - (-x * normal_pdf(x))).max() < 1e-10


def test_convolve_atomic_only_rejected():
    d = GeneralizedFunction(atoms=(Atom(0.0, 1.0),), grid=GRID)
    with pytest.raises(ValidationError):
        convolve_gf(d, d)


# --- weak distance ------------------------------------------------------------


def test_weak_distance_identical():
    b = CORPUS["mixture"]()
    assert weak_distance(b, b) == 0


def test_weak_distance_delta():
    d = GeneralizedFunction(atoms=(Atom(0.0, 1.0),), grid=GRID)
    ts = hermite_test_set(16, 1.0)
    expect = max(abs(hermite_oracle(k, 0.0)) for k in range(16))
    assert weak_distance(d, None, ts) == pytest.approx(expect, abs=1e-15)
    assert expect == pytest.approx(math.pi**-0.25, abs=1e-15)


def test_weak_distance_variance_perturbation():
    a = reg(normal_pdf(GRID.nodes))
    b = reg(normal_pdf(GRID.nodes, var=1 + 1e-4))
    d = weak_distance(a, b)
    assert 0 < d < 1e-4


def test_weak_distance_empty_set():
    with pytest.raises(ValidationError):
        weak_distance(CORPUS["normal"](), None, [])


def test_empirical_measure_transform_is_ecf():
    z = np.array([-1.0, 0.5, 2.0])
    F = ft_generalized(empirical_measure(z, GRID))
    s = F.grid.nodes
    assert np.abs(F.values - np.mean(np.exp(1j * np.outer(s, z)), axis=1)).max() < 1e-14


def _random_gf(seed):
    rng = np.random.default_rng(seed)
    vals = sum(rng.standard_normal() * normal_pdf(GRID.nodes, rng.uniform(-3, 3), rng.uniform(0.3, 2)) for _ in range(2))
    atoms = tuple(Atom(rng.uniform(-3, 3), rng.standard_normal() + 1j * rng.standard_normal(), int(rng.integers(0, 3)))
                  for _ in range(int(rng.integers(0, 3))))
    return GeneralizedFunction(GriddedFunction(GRID, vals), atoms)


@given(st.integers(0, 10**6), st.integers(0, 10**6), st.integers(0, 10**6))
def test_weak_distance_pseudometric(s1, s2, s3):
    ts = default_test_set()[::6]
    a, b, c = _random_gf(s1), _random_gf(s2), _random_gf(s3)
    ab, ba = weak_distance(a, b, ts), weak_distance(b, a, ts)
    assert ab == pytest.approx(ba, rel=1e-12, abs=1e-14)
    assert weak_distance(a, c, ts) <= ab + weak_distance(b, c, ts) + 1e-12
    assert weak_distance(a, a, ts) == 0


@given(st.integers(0, 10**6), st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_functional_linearity(seed, c):
    a, b = _random_gf(seed), _random_gf(seed + 1)
    psi = default_test_set()[seed % 48]
    lhs = apply_functional(a * c + b, psi)
    rhs = c * apply_functional(a, psi) + apply_functional(b, psi)
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(rhs))


# --- bounds -------------------------------------------------------------------

FREQ = GRID.dual()


def test_clip_within_bound_unchanged():
    b = GriddedFunction(FREQ, 0.5 / (1 + FREQ.nodes**2))
    assert np.array_equal(clip_to_bound(b, PolyBound(0, 1.0)).values, b.values)


def test_clip_exponential_to_constant():
    b = GriddedFunction(FREQ, np.exp(np.minimum(FREQ.nodes**2, 700)))
    out = clip_to_bound(b, PolyBound(0, 1.0))
    assert np.abs(out.values - 1).max() < 1e-15


def test_clip_zero_and_phase():
    assert np.all(clip_to_bound(GriddedFunction.zeros(FREQ), PolyBound(0, 1.0)).values == 0)
    b = GriddedFunction(FREQ, 5 * np.exp(1j * FREQ.nodes))
    out = clip_to_bound(b, PolyBound(0, 2.0)).values
    assert np.abs(np.abs(out) - 2).max() < 1e-14
    assert np.abs(np.angle(out) - np.angle(b.values)).max() < 1e-12


def test_clip_nan_passes_through():
    v = np.ones(FREQ.size, dtype=complex)
    v[3] = np.nan
    out = clip_to_bound(GriddedFunction(FREQ, v), PolyBound(0, 0.5)).values
    assert np.isnan(out[3]) and abs(out[4]) == pytest.approx(0.5)


@given(st.integers(0, 10**6), st.integers(0, 2), st.floats(0.1, 100))
def test_clip_idempotent_and_bounded(seed, m, V):
    rng = np.random.default_rng(seed)
    b = GriddedFunction(FREQ, 50 * (rng.standard_normal(FREQ.size) + 1j * rng.standard_normal(FREQ.size)))
    bound = PolyBound(m, V)
    once = clip_to_bound(b, bound)
    assert np.array_equal(clip_to_bound(once, bound).values, once.values)
    assert check_uniform_bound(once, bound).holds
    assert check_uniform_bound(once, PolyBound(m, V * (1 + 1e-12))).holds


def test_uniform_bound_laplace():
    phi = GriddedFunction(FREQ, 1 / (1 + FREQ.nodes**2))
    assert check_uniform_bound(phi, PolyBound(0, 1.1)).holds
    inv = GriddedFunction(FREQ, 1 + FREQ.nodes**2)
    assert check_uniform_bound(inv, PolyBound(1, 1.1)).holds
    res = check_uniform_bound(inv, PolyBound(0, 10.0))
    assert not res.holds
    # 1 + s^2 crosses 10 at |s| = 3; the first violating node lies within one spacing
    assert 3 <= abs(res.witness[0]) < 3 + FREQ.spacing


def test_uniform_bound_zero():
    assert check_uniform_bound(GriddedFunction.zeros(FREQ), PolyBound(3, 1e-9)) == (check_uniform_bound(
        GriddedFunction.zeros(FREQ), PolyBound(0, 1e-9)))
    assert check_uniform_bound(GriddedFunction.zeros(FREQ), PolyBound(0, 1e-9)).holds


def test_polybound_validation():
    with pytest.raises(ValidationError):
        PolyBound(-1, 1.0)
    with pytest.raises(ValidationError):
        PolyBound(0, math.inf)
    with pytest.raises(ValidationError):
        PolyBound(0, 0.0)
    with pytest.raises(ValidationError):
        PolyBound((1, 2, 3), 1.0).weight(Grid.default(2))


def test_conds_supersmooth_diverges():
    b = GriddedFunction(FREQ, np.exp(FREQ.nodes**2 / 2))
    for m in (0, 2, 5):
        assert not check_conds_integral(b, m).converged


def test_conds_ordinary_smooth_converges():
    res = check_conds_integral(GriddedFunction(FREQ, 1 + FREQ.nodes**2), 2)
    assert res.converged and res.value > 0
    zero = check_conds_integral(GriddedFunction.zeros(FREQ), 0)
    assert zero.value == 0 and zero.converged


# --- random generalized functions ------------------------------------------------


def test_wiener_gaussian_covariance():
    g = gaussian_test_function()
    assert wiener_covariance(WIENER_DERIVATIVE, g, g) == pytest.approx(math.sqrt(math.pi) / 2, abs=1e-8)


def test_wiener_disjoint_support():
    a = custom_test_function(lambda t: np.exp(-((t - 5) ** 2) * 8))
    b = custom_test_function(lambda t: np.exp(-((t - 15) ** 2) * 8))
    assert abs(wiener_covariance(WIENER_DERIVATIVE, a, b)) < 1e-100


@pytest.mark.parametrize("kind", [WIENER_DERIVATIVE, FT_WIENER_DERIVATIVE])
def test_gram_psd(kind):
    B = wiener_gram(kind, hermite_test_set(3))
    assert np.allclose(B, B.conj().T)
    assert np.linalg.eigvalsh(B).min() >= -1e-10


def test_gram_entries_against_quad():
    h = hermite_test_set(3)
    B = wiener_gram(WIENER_DERIVATIVE, h)
    for i in range(3):
        for j in range(3):
            val = integrate.quad(lambda t: hermite_oracle(i, t) * hermite_oracle(j, t), 0, np.inf, epsabs=1e-14)[0]
            assert B[i, j] == pytest.approx(val, abs=1e-12)
    F = wiener_gram(FT_WIENER_DERIVATIVE, h)
    # |Ft h_k|^2 = 2 pi h_k^2, so the diagonal is pi
    assert np.allclose(np.diag(F).real, math.pi, atol=1e-12)


def test_sample_process_variance():
    h0 = hermite_function(0)
    draws = sample_process(WIENER_DERIVATIVE, [h0], seed=11, size=10_000)[:, 0]
    target = 0.5
    se = target * math.sqrt(2 / (draws.size - 1))
    assert abs(draws.var(ddof=1) - target) < 3 * se
    assert abs(draws.mean()) < 3 * math.sqrt(target / draws.size)


def test_sample_process_deterministic_and_degenerate():
    ts = hermite_test_set(4)
    assert np.array_equal(sample_process(WIENER_DERIVATIVE, ts, 3), sample_process(WIENER_DERIVATIVE, ts, 3))
    left = custom_test_function(lambda t: np.exp(-((t + 12) ** 2)))
    assert np.abs(sample_process(WIENER_DERIVATIVE, [left], 0, size=100)).max() < 1e-5


def test_sample_process_complex_kind():
    ts = hermite_test_set(2)
    draws = sample_process(FT_WIENER_DERIVATIVE, ts, 5, size=20_000)
    B = wiener_gram(FT_WIENER_DERIVATIVE, ts)
    emp = draws.T @ draws.conj() / draws.shape[0]
    assert np.abs(emp - B).max() < 0.1 * np.abs(B).max()


def test_covariance_kind_validation():
    with pytest.raises(ValidationError):
        CovarianceFunctional("Brownian")
    with pytest.raises(ValidationError):
        sample_process(WIENER_DERIVATIVE, [], 0)


# --- density from a distribution function -------------------------------------


def test_step_density_is_delta():
    F = StepDistribution([0.0], [1.0])
    d = GeneralizedFunction(atoms=(Atom(0.0, 1.0),), grid=GRID)
    for psi in default_test_set():
        assert abs(density_functional(F, psi) - apply_functional(d, psi)) < 1e-8


def test_two_step_density():
    F = StepDistribution([1.0, -0.5], [0.25, 0.75])
    psi = hermite_function(3, 0.5)
    expect = 0.75 * psi(np.array([-0.5]))[0] + 0.25 * psi(np.array([1.0]))[0]
    assert abs(density_functional(F, psi) - expect) < 1e-10


def test_gridded_cdf_density():
    x = GRID.nodes
    F = GriddedFunction(GRID, special.ndtr(x))
    psi = hermite_function(2)
    expect = apply_functional(reg(normal_pdf(x)), psi)
    assert abs(density_functional(F, psi) - expect) < 1e-8
