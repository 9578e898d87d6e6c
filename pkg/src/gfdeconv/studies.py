"""Monte Carlo drivers: replication studies over a sample-size ladder and the
well-posed versus ill-posed perturbation demo.

Every replication draws from its own seed, ``base_seed + LADDER_STRIDE * rung
+ rep``, so results do not depend on scheduling. Replications run on a thread
pool capped by the GFDECONV_THREADS environment variable (default 1).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import SolverRejected, ValidationError
from .estimators import default_bandwidth, ecf
from .gf import GeneralizedFunction, PolyBound, apply_functional, check_uniform_bound, hermite_function, weak_distance
from .grid import Grid, GriddedFunction, forward_ft, quadrature
from .sim import (
    DistributionSpec,
    RegressionSpec,
    error_cf,
    illposed_band,
    illposed_lower_bound,
    illposed_pair,
    sample_classical,
    sample_model,
)
from .solvers import SolverConfig, deconvolve_known_cf, solve_system

LADDER_STRIDE = 100_000


def thread_count() -> int:
    raw = os.environ.get("GFDECONV_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValidationError(f"GFDECONV_THREADS must be an integer, got {raw!r}") from exc
    return max(1, n)


def replication_seed(base_seed: int, rung: int, rep: int) -> int:
    return int(base_seed) + LADDER_STRIDE * int(rung) + int(rep)


def run_parallel(fn, items, threads: int | None = None) -> list:
    """map(fn, items) in input order, on up to ``threads`` workers."""
    threads = thread_count() if threads is None else max(1, int(threads))
    items = list(items)
    if threads == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class StudyDesign:
    """What one replication does.

    mode 'system': model (a)-(c) draws of ``regression`` with channel errors
    ``errors``, solved by the plug-in system estimator.
    mode 'known': classical draws z = x* + u with x* ~ ``law`` and u ~ ``error``,
    deconvolved with the known error CF.
    """

    mode: str = "system"
    grid: Grid = field(default_factory=Grid)
    regression: RegressionSpec = field(default_factory=lambda: RegressionSpec("GaussianBump"))
    errors: dict = field(default_factory=lambda: {"u": DistributionSpec("Laplace", 1.0)})
    law: DistributionSpec = field(default_factory=lambda: DistributionSpec("Gaussian", 1.0))
    error: DistributionSpec = field(default_factory=lambda: DistributionSpec("Laplace", 1.0))
    solver: SolverConfig = field(default_factory=SolverConfig)
    estimate_bound: PolyBound | None = None
    bandwidth_c: float = 1.0
    sigma_z: float = 2.0

    def __post_init__(self):
        if self.mode not in ("system", "known"):
            raise ValidationError(f"study mode must be 'system' or 'known', got {self.mode!r}")

    def truth(self) -> GeneralizedFunction:
        if self.mode == "known":
            return self.law.as_generalized(self.grid)
        return self.regression.as_generalized(self.grid)

    def replicate(self, n: int, seed: int, truth: GeneralizedFunction | None = None) -> float:
        """Weak distance of one estimate to the truth; inf when the solver rejects."""
        truth = self.truth() if truth is None else truth
        try:
            if self.mode == "known":
                z = sample_classical(self.law, self.error, n, seed)
                freq = self.grid.dual()
                est = deconvolve_known_cf(ecf(z, freq), error_cf(self.error, freq), self.solver)
            else:
                data = sample_model(self.regression, self.errors, n, seed, self.sigma_z, self.grid.dim)
                kspec = default_bandwidth(data.z, self.bandwidth_c)
                est = solve_system(data, self.solver, self.grid, kspec, self.estimate_bound).g_hat
        except SolverRejected:
            return math.inf
        return weak_distance(est, truth)


@dataclass(frozen=True)
class StudyResult:
    ladder: tuple
    rows: list  # (n, rep, seed, weak_distance)
    medians: tuple
    rejected: tuple

    @property
    def monotone(self) -> bool:
        m = self.medians
        return all(b < a for a, b in zip(m, m[1:]))


def convergence_study(design: StudyDesign, ladder, reps: int, base_seed: int = 0,
                      threads: int | None = None) -> StudyResult:
    """R replications at each sample size in ``ladder``; median weak distance per rung."""
    ladder = tuple(int(n) for n in ladder)
    if reps < 1:
        raise ValidationError("reps must be >= 1")
    if not ladder or min(ladder) < 1:
        raise ValidationError("ladder must hold positive sample sizes")
    truth = design.truth()
    jobs = [(n, r, replication_seed(base_seed, i, r)) for i, n in enumerate(ladder) for r in range(reps)]
    dists = run_parallel(lambda job: design.replicate(job[0], job[2], truth), jobs, threads)
    rows = [(n, r, s, d) for (n, r, s), d in zip(jobs, dists)]
    medians, rejected = [], []
    for n in ladder:
        vals = np.array([d for (m, _, _, d) in rows if m == n])
        medians.append(float(np.median(vals)))
        rejected.append(int(np.isinf(vals).sum()))
    return StudyResult(ladder, rows, tuple(medians), tuple(rejected))


# --------------------------------------------------------------------------
# well-posed vs ill-posed perturbations

ILLPOSED_GRID = Grid(1, 2.0**16 / 3840.0, 2**17)  # spacing 1/3840: band edges n +- 1/n land on nodes


def illposed_table(orders=(2, 3, 4, 5), grid: Grid = ILLPOSED_GRID) -> list:
    """Per n: (eps_n - eps, h_0), weak_distance(eps_n, eps), (gamma_n - gamma, e^{-|x|})
    and the lower bound (1/(2n)) e^{-(n + 1/n) + (n - 1/n)^2}."""
    h0 = hermite_function(0)
    decay = np.exp(-np.abs(grid.nodes))
    out = []
    for n in orders:
        pair = illposed_pair(n, grid)
        lo, hi = illposed_band(n)
        out.append({
            "n": int(n),
            "band_lo": lo,
            "band_hi": hi,
            "eps_functional": float(apply_functional(pair.eps_n_minus_eps, h0).real),
            "eps_weak_distance": weak_distance(GeneralizedFunction(pair.eps_n_minus_eps)),
            "gamma_functional": float(quadrature(pair.gamma_n_minus_gamma * decay).real),
            "lower_bound": illposed_lower_bound(n),
        })
    return out


def wellposed_sequence(steps: int = 5, seed: int = 0, error: DistributionSpec | None = None,
                       grid: Grid | None = None, draws: int = 5, bound_V: float = 1.0) -> list:
    """Perturb eps = gamma phi by delta_n = 2^-n delta and divide by the
    ordinary-smooth phi; delta is the transform of a random sum of Gaussian
    bumps scaled to sup |delta| = V/2, so every delta_n lies in S*_{0,0}(V)
    with V = ``bound_V``.

    Distances are taken on the frequency grid. Each row holds the median over
    ``draws`` perturbations of weak_distance(eps_n, eps) and
    weak_distance(gamma_n, gamma), and whether every delta_n met the bound.
    """
    error = error or DistributionSpec("Laplace", 1.0)
    grid = grid or Grid()
    freq = grid.dual()
    phi = error_cf(error, freq)
    x = grid.nodes
    rng = np.random.default_rng(seed)
    envelope = PolyBound(0, bound_V)
    bases = []
    for _ in range(draws):
        centres = rng.uniform(-3, 3, 4)
        amps = rng.standard_normal(4)
        bump = sum(a * np.exp(-0.5 * (x - c) ** 2) for a, c in zip(amps, centres))
        spec = forward_ft(GriddedFunction(grid, bump))
        bases.append(spec * (0.5 * bound_V / spec.abs().max()))
    rows = []
    for step in range(steps):
        scale = 0.5**step
        e_d, g_d, inside = [], [], True
        for delta in bases:
            d = delta * scale
            inside = inside and check_uniform_bound(d, envelope).holds
            e_d.append(weak_distance(GeneralizedFunction(d)))
            g_d.append(weak_distance(GeneralizedFunction(d / phi)))
        rows.append({"step": step, "eps_weak_distance": float(np.median(e_d)),
                     "gamma_weak_distance": float(np.median(g_d)), "within_bound": bool(inside)})
    return rows
