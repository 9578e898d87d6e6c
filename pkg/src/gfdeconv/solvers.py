"""Inverse problems on the frequency grid.

* deconvolution with a known error CF, including division past isolated
  zeros of the CF;
* the two-unknown system: recover gamma = Ft(g) and the error CF phi from
  eps1 = gamma phi and eps2_k = -i (d gamma/d s_k) phi, through the
  logarithmic-derivative field kappa~_k = ((eps1)'_k - i eps2_k)/eps1 =
  phi'_k/phi, integrated along straight segments from the origin;
* the plug-in estimator built from sample-based spectral estimates.

Functions restricted to a support window hold NaN outside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import SolverRejected, ValidationError
from .estimators import KernelSpec, SpectralTriple, as_sample_set, default_bandwidth, spectral_estimates
from .gf import GeneralizedFunction, PolyBound, clip_to_bound, clipped_mask
from .grid import Grid, GriddedFunction, inverse_ft, spectral_derivative

MIN_WINDOW_NODES = 5
MAX_BAND_FRACTION = 0.05
MAX_SMALL_FRACTION = 0.5


@dataclass(frozen=True)
class SolverConfig:
    """zeta: |eps1| threshold for the support window (None: default rule);
    bound: envelope for clipping phi^-1; tau: |phi| zero tolerance;
    cutoff: optional spectral cut-off T; c: gamma(0) for the direct branch;
    outside_window: 'zero' or 'mask' for gamma-hat outside the window."""

    zeta: float | None = None
    bound: PolyBound | None = None
    tau: float = 1e-8
    cutoff: float | None = None
    c: complex = 1.0
    outside_window: str = "zero"

    def __post_init__(self):
        if self.zeta is not None and not self.zeta > 0:
            raise ValidationError("zeta must be positive")
        if not self.tau > 0:
            raise ValidationError("tau must be positive")
        if self.cutoff is not None and not self.cutoff > 0:
            raise ValidationError("cutoff T must be positive")
        if self.outside_window not in ("zero", "mask"):
            raise ValidationError("outside_window must be 'zero' or 'mask'")
        if complex(self.c) == 0:
            raise ValidationError("c must be non-zero")


def default_zeta(n: int) -> float:
    """4 n^(-1/2) log n."""
    return 4.0 * math.log(n) / math.sqrt(n)


@dataclass(frozen=True, eq=False)
class SupportWindow:
    grid: Grid
    region: np.ndarray
    boundary: np.ndarray

    @property
    def size(self) -> int:
        return int(self.region.sum())

    def extent(self) -> tuple:
        """(lo, hi): smallest and largest node coordinate in the region."""
        coords = [m[self.region] for m in self.grid.mesh()]
        return float(min(c.min() for c in coords)), float(max(c.max() for c in coords))

    def contains_origin(self) -> bool:
        return bool(self.region[self.grid.origin_index])


def _same_grid(*fs):
    g = fs[0].grid
    for f in fs[1:]:
        if f.grid != g:
            raise ValidationError("inputs must share one grid")
    return g


# --------------------------------------------------------------------------
# known-CF deconvolution


def _runs(mask: np.ndarray) -> list:
    """(start, stop) index pairs of True runs in a 1-D boolean array."""
    padded = np.concatenate([[False], mask, [False]]).astype(int)
    d = np.diff(padded)
    return list(zip(np.flatnonzero(d == 1), np.flatnonzero(d == -1)))


def divide_with_zeros(eps: GriddedFunction, phi: GriddedFunction, tau: float) -> GriddedFunction:
    """eps/phi where |phi| >= tau; inside each band |phi| < tau, a cubic
    least-squares fit through the 4 nearest valid nodes on each side."""
    grid = _same_grid(eps, phi)
    small = np.abs(phi.values) < tau
    if not small.any():
        return eps / phi
    if grid.dim != 1:
        raise SolverRejected("division past zeros is implemented on the line only")
    limit = MAX_BAND_FRACTION * grid.points
    runs = _runs(small)
    if any(b - a > limit for a, b in runs):
        raise SolverRejected("a zero band of phi is wider than 5% of the grid")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(small, 0.0, eps.values / phi.values)
    valid = np.flatnonzero(~small)
    s = grid.nodes
    for a, b in runs:
        left = valid[valid < a][-4:]
        right = valid[valid >= b][:4]
        idx = np.concatenate([left, right])
        if idx.size < 4:
            raise SolverRejected("not enough valid nodes around a zero band")
        centre = 0.5 * (s[a] + s[b - 1])
        coef = np.polyfit(s[idx] - centre, out[idx], 3)
        out[a:b] = np.polyval(coef, s[a:b] - centre)
    return GriddedFunction(grid, out)


def deconvolve_spectrum(eps: GriddedFunction, phi: GriddedFunction, cfg: SolverConfig) -> GriddedFunction:
    """gamma = eps/phi with zero handling and optional cut-off."""
    _same_grid(eps, phi)
    small = np.abs(phi.values) < cfg.tau
    if small.mean() > MAX_SMALL_FRACTION:
        raise SolverRejected("|phi| < tau on more than half the grid (outside the well-posed class)")
    gamma = divide_with_zeros(eps, phi, cfg.tau)
    if cfg.cutoff is not None:
        gamma = spectral_cutoff(gamma, cfg.cutoff)
    return gamma


def deconvolve_known_cf(eps: GriddedFunction, phi: GriddedFunction, cfg: SolverConfig | None = None) -> GeneralizedFunction:
    """g-hat = Ft^-1(eps/phi) as a regular generalized function."""
    gamma = deconvolve_spectrum(eps, phi, cfg or SolverConfig())
    return GeneralizedFunction(inverse_ft(gamma))


def spectral_cutoff(eps: GriddedFunction, T: float) -> GriddedFunction:
    """Multiply by the indicator of the box max_k |s_k| < T."""
    if not T > 0:
        raise ValidationError("T must be positive")
    inside = np.ones(eps.grid.shape, dtype=bool)
    for s in eps.grid.mesh():
        inside &= np.abs(s) < T
    return GriddedFunction(eps.grid, np.where(inside, eps.values, 0.0))


# --------------------------------------------------------------------------
# system solver


def support_window(eps1: GriddedFunction, zeta: float) -> SupportWindow:
    """Connected component of {|eps1| >= zeta} that contains the origin."""
    grid = eps1.grid
    mag = np.abs(eps1.values)
    if not mag[grid.origin_index] >= zeta:
        raise SolverRejected("|eps1(0)| is below the support threshold")
    labels, _ = ndimage.label(mag >= zeta)
    region = labels == labels[grid.origin_index]
    interior = ndimage.binary_erosion(region, border_value=0)
    return SupportWindow(grid, region, region & ~interior)


def kappa_hat(eps1: GriddedFunction, eps1_deriv_k: GriddedFunction, eps2_k: GriddedFunction,
              window: SupportWindow) -> GriddedFunction:
    """((eps1)'_k - i eps2_k)/eps1 on the window, NaN elsewhere."""
    grid = _same_grid(eps1, eps1_deriv_k, eps2_k)
    if window.grid != grid:
        raise ValidationError("window grid differs from input grid")
    r = window.region
    out = np.full(grid.shape, np.nan + 0j)
    out[r] = (eps1_deriv_k.values[r] - 1j * eps2_k.values[r]) / eps1.values[r]
    return GriddedFunction(grid, out)


def _bilinear(field: np.ndarray, pi: np.ndarray, pj: np.ndarray) -> np.ndarray:
    """Bilinear interpolation at fractional indices; NaN if any corner with
    positive weight is NaN."""
    n = field.shape[0]
    i0 = np.clip(np.floor(pi).astype(int), 0, n - 1)
    j0 = np.clip(np.floor(pj).astype(int), 0, n - 1)
    fi, fj = pi - i0, pj - j0
    i1 = np.minimum(i0 + 1, n - 1)
    j1 = np.minimum(j0 + 1, n - 1)
    out = np.zeros(pi.shape, dtype=complex)
    for ii, jj, w in ((i0, j0, (1 - fi) * (1 - fj)), (i1, j0, fi * (1 - fj)),
                      (i0, j1, (1 - fi) * fj), (i1, j1, fi * fj)):
        v = field[ii, jj]
        out += np.where(w > 0, w * np.where(w > 0, v, 0.0), 0.0)
        out = np.where((w > 0) & np.isnan(v), np.nan, out)
    return out


def path_integral(fields: tuple, window: SupportWindow) -> np.ndarray:
    """int_0^s sum_k field_k(t) dt_k along the straight segment 0 -> s for
    every window node (NaN elsewhere, and where the segment leaves the window).

    1-D: cumulative trapezoid outward from the origin. 2-D: the segment to a
    node at index offset (a, b) is sampled at max(|a|, |b|) + 1 equally
    spaced points with bilinear interpolation of the fields.
    """
    grid = window.grid
    ds = grid.spacing
    c = grid.points // 2
    out = np.full(grid.shape, np.nan + 0j)
    if grid.dim == 1:
        f = np.where(window.region, fields[0].values, np.nan)
        idx = np.flatnonzero(window.region)
        lo, hi = idx.min(), idx.max()
        out[c] = 0.0
        right = f[c:hi + 1]
        if right.size > 1:
            out[c + 1:hi + 1] = np.cumsum(0.5 * ds * (right[1:] + right[:-1]))
        left = f[lo:c + 1][::-1]
        if left.size > 1:
            out[lo:c][::-1] = -np.cumsum(0.5 * ds * (left[1:] + left[:-1]))
        return out
    f1 = np.where(window.region, fields[0].values, np.nan)
    f2 = np.where(window.region, fields[1].values, np.nan)
    ii, jj = np.nonzero(window.region)
    a, b = ii - c, jj - c
    steps = np.maximum(np.abs(a), np.abs(b))
    out[c, c] = 0.0
    for m in np.unique(steps[steps > 0]):
        sel = steps == m
        aa, bb = a[sel].astype(float), b[sel].astype(float)
        tau = np.linspace(0.0, 1.0, m + 1)
        pi = c + tau[None, :] * aa[:, None]
        pj = c + tau[None, :] * bb[:, None]
        integrand = (_bilinear(f1, pi, pj) * (aa * ds)[:, None] + _bilinear(f2, pi, pj) * (bb * ds)[:, None])
        vals = np.sum(0.5 * (integrand[:, 1:] + integrand[:, :-1]), axis=1) / m
        out[ii[sel], jj[sel]] = vals
    return out


def phi_inverse_hat(kappas: tuple, window: SupportWindow, bound: PolyBound | None = None) -> GriddedFunction:
    """exp(-int_0^s sum_k kappa~_k) on the window (NaN elsewhere), then clipped."""
    if not window.contains_origin():
        raise SolverRejected("window excludes the origin")
    kappas = tuple(kappas)
    if len(kappas) != window.grid.dim:
        raise ValidationError("need one kappa field per axis")
    integral = path_integral(kappas, window)
    with np.errstate(over="ignore"):  # supersmooth phi overflows here; the envelope clip caps it
        val = np.exp(-integral)
    val[window.grid.origin_index] = 1.0
    out = GriddedFunction(window.grid, val)
    if bound is not None:
        out = clip_to_bound(out, bound)
    return out


def solve_theorem3a(eps1: GriddedFunction, eps2: tuple, window: SupportWindow, c: complex = 1.0) -> GriddedFunction:
    """gamma = c exp(int_0^s sum_k kappa_k) with kappa_k = i eps2_k / eps1, on the window."""
    if complex(c) == 0:
        raise ValidationError("c must be non-zero")
    eps2 = tuple(eps2)
    grid = _same_grid(eps1, *eps2)
    r = window.region
    kappas = []
    for e2 in eps2:
        k = np.full(grid.shape, np.nan + 0j)
        k[r] = 1j * e2.values[r] / eps1.values[r]
        kappas.append(GriddedFunction(grid, k))
    val = complex(c) * np.exp(path_integral(tuple(kappas), window))
    val[grid.origin_index] = complex(c)
    return GriddedFunction(grid, val)


@dataclass(frozen=True, eq=False)
class SystemSolution:
    g_hat: GeneralizedFunction
    gamma_hat: GriddedFunction
    phi_hat: GriddedFunction
    phi_inv_hat: GriddedFunction
    window: SupportWindow
    zeta: float
    clipped_fraction: float
    masked_fraction: float


def solve_system(source, cfg: SolverConfig | None = None, space_grid: Grid | None = None,
                 kspec: KernelSpec | None = None, estimate_bound: PolyBound | None = None) -> SystemSolution:
    """Plug-in solution of the system.

    ``source`` is a SpectralTriple or sample data; data are first turned into
    a triple with ``spectral_estimates`` on ``space_grid`` (default grid),
    bandwidth ``kspec`` (default rule) and clipping envelope ``estimate_bound``.
    With no zeta configured, the threshold is 4 n^(-1/2) log n for sample
    based triples and 1e-6 |eps1(0)| for exact ones.
    """
    cfg = cfg or SolverConfig()
    if isinstance(source, SpectralTriple):
        triple = source
    else:
        data = as_sample_set(source)
        space_grid = space_grid or Grid.default(data.dim)
        kspec = kspec or default_bandwidth(data.z)
        triple = spectral_estimates(data, estimate_bound, kspec, space_grid)
    eps1 = triple.eps1
    grid = eps1.grid
    if cfg.zeta is not None:
        zeta = cfg.zeta
    elif triple.n is not None and triple.n > 1:
        zeta = default_zeta(triple.n)
    else:
        zeta = 1e-6 * abs(eps1.at_origin())
    window = support_window(eps1, zeta)
    if window.size < MIN_WINDOW_NODES:
        raise SolverRejected(f"support window has {window.size} nodes (< {MIN_WINDOW_NODES})")
    kappas = tuple(kappa_hat(eps1, triple.eps1_deriv[k], triple.eps2[k], window) for k in range(grid.dim))
    raw = phi_inverse_hat(kappas, window, None)
    inv = clip_to_bound(raw, cfg.bound) if cfg.bound is not None else raw
    effective = window.region & np.isfinite(inv.values)
    clipped = 0.0
    if cfg.bound is not None:
        clipped = float(clipped_mask(raw, cfg.bound)[effective].mean())
    gam = np.where(effective, inv.values * eps1.values, 0.0)
    g_hat = GeneralizedFunction(inverse_ft(GriddedFunction(grid, gam)))
    if cfg.outside_window == "mask":
        gam = np.where(effective, gam, np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(effective, 1.0 / inv.values, np.nan)
    return SystemSolution(
        g_hat=g_hat,
        gamma_hat=GriddedFunction(grid, gam),
        phi_hat=GriddedFunction(grid, phi),
        phi_inv_hat=inv,
        window=window,
        zeta=zeta,
        clipped_fraction=clipped,
        masked_fraction=float(1.0 - effective.mean()),
    )


def exact_triple(gamma: GriddedFunction, gamma_deriv: tuple, phi: GriddedFunction,
                 phi_deriv: tuple | None = None) -> SpectralTriple:
    """Noise-free triple: eps1 = gamma phi, eps1'_k = gamma'_k phi + gamma phi'_k,
    eps2_k = -i gamma'_k phi. Without ``phi_deriv`` the eps1 derivative comes
    from central differences."""
    eps1 = gamma * phi
    eps2 = tuple(gd * phi * (-1j) for gd in gamma_deriv)
    if phi_deriv is None:
        deriv = tuple(spectral_derivative(eps1, k) for k in range(gamma.grid.dim))
    else:
        deriv = tuple(gd * phi + gamma * pd for gd, pd in zip(gamma_deriv, phi_deriv))
    return SpectralTriple(eps1, deriv, eps2)


def metrics(weak_dist: float | None, window: SupportWindow | None = None, clipped_fraction: float = 0.0,
            masked_fraction: float = 0.0) -> dict:
    """Metrics record {weak_distance, window: [lo, hi], clipped_fraction, masked_fraction}."""
    return {
        "weak_distance": None if weak_dist is None else float(weak_dist),
        "window": None if window is None else list(window.extent()),
        "clipped_fraction": float(clipped_fraction),
        "masked_fraction": float(masked_fraction),
    }
