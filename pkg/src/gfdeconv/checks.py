"""Fast invariant suite behind ``gfdeconv selftest``.

Each check returns (passed, detail). Checks are closed-form or use small
fixed-seed samples so the whole suite runs in a few seconds.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import SolverRejected
from .estimators import KernelSpec, SampleSet, ecf, ecf_derivative, nadaraya_watson
from .gf import (
    FT_WIENER_DERIVATIVE,
    WIENER_DERIVATIVE,
    Atom,
    GeneralizedFunction,
    PolyBound,
    StepDistribution,
    apply_functional,
    check_uniform_bound,
    clip_to_bound,
    convolve_gf,
    default_test_set,
    density_functional,
    ft_generalized,
    weak_distance,
    wiener_gram,
)
from .grid import Grid, GriddedFunction, forward_ft, inverse_ft, quadrature
from .sim import DistributionSpec, RegressionSpec, error_cf, sample_model
from .solvers import SolverConfig, deconvolve_known_cf, exact_triple, solve_system, solve_theorem3a, spectral_cutoff
from .studies import illposed_table


def _gauss(x, sd=1.0):
    return np.exp(-0.5 * (x / sd) ** 2) / (sd * math.sqrt(2 * math.pi))


def grid_round_trip():
    g = Grid()
    f = GriddedFunction(g, _gauss(g.nodes) * (1 + 0.3 * g.nodes))
    err = np.abs(inverse_ft(forward_ft(f)).values - f.values).max()
    return err < 1e-12, f"max |Ft^-1 Ft f - f| = {err:.2e}"


def exchange_formula():
    g = Grid()
    f = GriddedFunction(g, _gauss(g.nodes))
    s = g.dual().nodes
    conv = forward_ft(GriddedFunction(g, _gauss(g.nodes, math.sqrt(2.0))))
    err = np.abs(conv.values - np.exp(-0.5 * s**2) ** 2)[np.abs(s) <= 10].max()
    prod = np.abs(forward_ft(f).values ** 2 - conv.values)[np.abs(s) <= 10].max()
    return max(err, prod) < 1e-8, f"N*N transform error {err:.2e}, product error {prod:.2e}"


def ecf_properties():
    z = np.random.default_rng(1).standard_normal(200)
    fq = Grid().dual()
    e = ecf(z, fq).values
    d = ecf_derivative(z, fq).values
    o = fq.origin_index
    ok = abs(e[o] - 1) < 1e-15 and np.abs(e).max() <= 1 + 1e-12 and abs(d[o] - 1j * z.mean()) < 1e-12
    return bool(ok), f"ecf(0) = {e[o]:.3g}, max|ecf| = {np.abs(e).max():.6f}"


def nw_constant_response():
    rng = np.random.default_rng(2)
    z = rng.uniform(-2, 2, 50)
    data = SampleSet(z, np.full(50, 3.5), z)
    est = nadaraya_watson(data, "y", Grid(1, 4.0, 64), KernelSpec(0.3))
    v = est.values.values[est.covered]
    return bool(np.abs(v - 3.5).max() < 1e-12), f"covered fraction {est.covered.mean():.2f}"


def clip_respects_bound():
    g = Grid()
    rng = np.random.default_rng(3)
    f = GriddedFunction(g, 10 * rng.standard_normal(g.size) + 1j * rng.standard_normal(g.size))
    b = PolyBound(1, 2.0)
    res = check_uniform_bound(clip_to_bound(f, b), b)
    return res.holds, f"witness {res.witness}"


def known_cf_round_trip():
    grid = Grid()
    g = DistributionSpec("Gaussian", 1.0).as_generalized(grid)
    worst = 0.0
    for fam in ("Laplace", "Uniform", "Triangular"):
        f = DistributionSpec(fam, 1.0).as_generalized(grid)
        w = convolve_gf(g, f)
        phi = ft_generalized(f)
        worst = max(worst, weak_distance(deconvolve_known_cf(ft_generalized(w), phi), g))
    return worst < 1e-3, f"worst weak distance {worst:.2e}"


def system_round_trip():
    grid = Grid(1, 128.0, 4096)
    fq = grid.dual()
    s = fq.nodes
    g = RegressionSpec("GaussianBump")
    gam = g.spectrum(fq).regular
    gd = g.spectrum_derivative(fq)
    phi = GriddedFunction(fq, 1 / (1 + s**2))
    dphi = GriddedFunction(fq, -2 * s / (1 + s**2) ** 2)
    tr = exact_triple(gam, (gd,), phi, (dphi,))
    sol = solve_system(tr)
    w = sol.window.region
    wd = weak_distance(sol.g_hat, g.as_generalized(grid))
    perr = np.abs(sol.phi_hat.values - phi.values)[w].max()
    branch = np.abs(solve_theorem3a(tr.eps1, tr.eps2, sol.window, gam.at_origin()).values - sol.gamma_hat.values)[w].max()
    origin = sol.phi_hat.at_origin()
    ok = wd < 1e-3 and perr < 1e-2 and branch < 1e-3 and origin == 1
    return bool(ok), f"weak {wd:.1e}, phi {perr:.1e}, branch gap {branch:.1e}, phi(0) = {origin}"


def mixture_separation():
    p = 0.6
    spec = DistributionSpec("MixtureWithAtom", weight=p, base=DistributionSpec("Gaussian", 1.0))
    phi = error_cf(spec, Grid().dual())
    low = np.abs(phi.values).min()
    return bool(low >= 2 * p - 1 - 1e-12), f"inf |phi| = {low:.4f}"


def cutoff_parseval():
    fq = Grid().dual()
    e = GriddedFunction(fq, np.exp(-0.1 * fq.nodes**2))
    cut = spectral_cutoff(e, 2.0)
    a, b = quadrature(cut * cut.conj()).real, quadrature(e * e.conj()).real
    return bool(a <= b), f"{a:.4f} <= {b:.4f}"


def illposed_divergence():
    rows = illposed_table()
    g = [r["gamma_functional"] for r in rows]
    e = [r["eps_weak_distance"] for r in rows]
    ok = all(r["gamma_functional"] > r["lower_bound"] for r in rows)
    ok = ok and all(b > a for a, b in zip(g, g[1:])) and all(b < a for a, b in zip(e, e[1:]))
    return ok, "gamma functionals " + ", ".join(f"{v:.3g}" for v in g)


def density_from_step():
    F = StepDistribution([0.0], [1.0])
    err = max(abs(density_functional(F, psi) - psi(np.array([0.0]))[0]) for psi in default_test_set())
    return err < 1e-8, f"max |(F', psi) - psi(0)| = {err:.1e}"


def gram_psd():
    ts = default_test_set()[:8]
    low = min(np.linalg.eigvalsh(wiener_gram(k, ts)).min() for k in (WIENER_DERIVATIVE, FT_WIENER_DERIVATIVE))
    return low > -1e-10, f"min eigenvalue {low:.2e}"


def model_determinism():
    g = RegressionSpec("GaussianBump")
    a, b = sample_model(g, None, 50, 7), sample_model(g, None, 50, 7)
    return bool(np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)), "seed 7 twice"


def identity_deconvolution():
    grid = Grid()
    w = GeneralizedFunction(GriddedFunction(grid, _gauss(grid.nodes)))
    out = deconvolve_known_cf(ft_generalized(w), GriddedFunction(grid.dual(), np.ones(grid.size)))
    d = weak_distance(out, w)
    return d < 1e-12, f"weak distance {d:.1e}"


def atom_functional():
    psi = default_test_set()[2]  # even, so psi(0) != 0
    d = GeneralizedFunction(atoms=(Atom(0.0, 1.0),), grid=Grid())
    val = apply_functional(d, psi)
    ref = np.conj(psi(np.array([0.0]))[0])
    return abs(val - ref) < 1e-14, f"(delta, psi) = {val:.3g}"


CHECKS = {
    "grid_round_trip": grid_round_trip,
    "exchange_formula": exchange_formula,
    "ecf_properties": ecf_properties,
    "nw_constant_response": nw_constant_response,
    "clip_respects_bound": clip_respects_bound,
    "identity_deconvolution": identity_deconvolution,
    "known_cf_round_trip": known_cf_round_trip,
    "system_round_trip": system_round_trip,
    "mixture_separation": mixture_separation,
    "cutoff_parseval": cutoff_parseval,
    "illposed_divergence": illposed_divergence,
    "density_from_step": density_from_step,
    "gram_psd": gram_psd,
    "model_determinism": model_determinism,
    "atom_functional": atom_functional,
}


def run_all() -> dict:
    """name -> {"passed": bool, "detail": str}; an exception counts as a failure."""
    out = {}
    for name, fn in CHECKS.items():
        try:
            ok, detail = fn()
        except (ArithmeticError, ValueError, SolverRejected, RuntimeError) as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out[name] = {"passed": bool(ok), "detail": detail}
    return out
