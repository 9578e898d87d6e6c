"""Synthetic data: error laws with closed-form CFs, regression functions,
the instrumented errors-in-variables model, the classical measurement-error
model, and the supersmooth ill-posedness sequence."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .estimators import SampleSet
from .gf import Atom, GeneralizedFunction
from .grid import Grid, GriddedFunction

FAMILIES = ("Gaussian", "Laplace", "Uniform", "Triangular", "MixtureWithAtom")
REGRESSIONS = ("GaussianBump", "BumpPlusConstant", "SumOfPeaks", "Polynomial")


@dataclass(frozen=True)
class DistributionSpec:
    """Law on the real line (applied independently per axis in 2-D).

    scale: sigma (Gaussian), b (Laplace), half-width a (Uniform, Triangular).
    MixtureWithAtom: mass ``weight`` at ``location`` plus (1 - weight) times ``base``.
    A zero scale is accepted and means a point mass at 0.
    """

    family: str
    scale: float = 1.0
    weight: float = 0.5
    location: float = 0.0
    base: "DistributionSpec | None" = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown family {self.family!r}")
        if self.family == "MixtureWithAtom":
            if self.base is None or self.base.family == "MixtureWithAtom":
                raise ValidationError("MixtureWithAtom needs a non-mixture base law")
            if not 0.0 <= self.weight <= 1.0:
                raise ValidationError("atom weight must lie in [0, 1]")
        elif not (math.isfinite(self.scale) and self.scale >= 0):
            raise ValidationError("scale must be finite and >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "DistributionSpec":
        d = dict(d)
        if d.get("base") is not None:
            d["base"] = cls.from_dict(d["base"])
        known = {"family", "scale", "weight", "location", "base"}
        extra = set(d) - known
        if extra:
            raise ValidationError(f"unknown distribution keys {sorted(extra)}")
        return cls(**d)

    def to_dict(self) -> dict:
        out = {"family": self.family}
        if self.family == "MixtureWithAtom":
            out.update(weight=self.weight, location=self.location, base=self.base.to_dict())
        else:
            out["scale"] = self.scale
        return out

    @property
    def is_centered(self) -> bool:
        """Mean zero (needed for the u_x and u_y channels)."""
        if self.family == "MixtureWithAtom":
            return self.location == 0.0 or self.weight == 0.0
        return True

    def cf(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        a = self.scale
        if self.family == "Gaussian":
            return np.exp(-0.5 * (a * s) ** 2) + 0j
        if self.family == "Laplace":
            return 1.0 / (1.0 + (a * s) ** 2) + 0j
        if self.family == "Uniform":
            return np.sinc(a * s / math.pi) + 0j
        if self.family == "Triangular":
            return np.sinc(a * s / (2 * math.pi)) ** 2 + 0j
        p = self.weight
        return p * np.exp(1j * self.location * s) + (1 - p) * self.base.cf(s)

    def density(self, x) -> np.ndarray:
        """Regular (absolutely continuous) part of the density; jump points of
        the uniform get the midpoint value."""
        x = np.asarray(x, dtype=float)
        a = self.scale
        if self.family == "MixtureWithAtom":
            return (1 - self.weight) * self.base.density(x)
        if a == 0:
            raise ValidationError("a point mass has no regular density")
        if self.family == "Gaussian":
            return np.exp(-0.5 * (x / a) ** 2) / (a * math.sqrt(2 * math.pi))
        if self.family == "Laplace":
            return np.exp(-np.abs(x) / a) / (2 * a)
        if self.family == "Uniform":
            r = np.abs(x)
            return np.where(r < a, 1.0, np.where(r == a, 0.5, 0.0)) / (2 * a)
        return np.clip(1.0 - np.abs(x) / a, 0.0, None) / a

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        a = self.scale
        if self.family == "Gaussian":
            return a * rng.standard_normal(size)
        if self.family == "Laplace":
            return rng.laplace(0.0, a, size) if a > 0 else np.zeros(size)
        if self.family == "Uniform":
            return rng.uniform(-a, a, size)
        if self.family == "Triangular":
            return rng.uniform(-a / 2, a / 2, size) + rng.uniform(-a / 2, a / 2, size)
        atom = rng.random(size) < self.weight
        return np.where(atom, self.location, self.base.sample(rng, size))

    def as_generalized(self, grid: Grid) -> GeneralizedFunction:
        """Density on the grid (1-D), with an atom for the mixture mass point."""
        if grid.dim != 1:
            raise ValidationError("gridded densities are provided in 1-D")
        if self.family == "MixtureWithAtom":
            reg = GriddedFunction(grid, self.density(grid.nodes))
            return GeneralizedFunction(reg, (Atom(self.location, self.weight),))
        return GeneralizedFunction(GriddedFunction(grid, self.density(grid.nodes)))


def error_cf(spec: DistributionSpec, freq_grid: Grid) -> GriddedFunction:
    """Closed-form CF on the frequency grid (product over axes in 2-D)."""
    out = 1.0
    for s in freq_grid.mesh():
        out = out * spec.cf(s)
    return GriddedFunction(freq_grid, np.broadcast_to(out, freq_grid.shape))


@dataclass(frozen=True)
class RegressionSpec:
    """Regression function g.

    GaussianBump:      amplitude * exp(-|x - center|^2 / (2 width^2))
    BumpPlusConstant:  bump + constant
    SumOfPeaks:        sum_k weights_k * delta_{locations_k}; pointwise
                       evaluation uses Gaussian peaks of sd ``width`` when
                       width > 0 (1-D only)
    Polynomial:        sum_k coefficients_k x^k, degree <= 3 (1-D only)
    """

    kind: str
    amplitude: float = 1.0
    center: float = 0.0
    width: float = 1.0
    constant: float = 0.0
    locations: tuple = ()
    weights: tuple = ()
    coefficients: tuple = ()

    def __post_init__(self):
        if self.kind not in REGRESSIONS:
            raise ValidationError(f"unknown regression kind {self.kind!r}")
        object.__setattr__(self, "locations", tuple(float(v) for v in self.locations))
        object.__setattr__(self, "weights", tuple(float(v) for v in self.weights))
        object.__setattr__(self, "coefficients", tuple(float(v) for v in self.coefficients))
        if self.kind == "SumOfPeaks":
            if len(self.locations) != len(self.weights) or not self.weights:
                raise ValidationError("SumOfPeaks needs matching non-empty locations and weights")
            if not all(math.isfinite(w) for w in self.weights):
                raise ValidationError("SumOfPeaks weights must be finite")
        if self.kind == "Polynomial" and not 1 <= len(self.coefficients) <= 4:
            raise ValidationError("Polynomial degree must be <= 3")
        if self.kind in ("GaussianBump", "BumpPlusConstant") and not self.width > 0:
            raise ValidationError("bump width must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionSpec":
        known = {"kind", "amplitude", "center", "width", "constant", "locations", "weights", "coefficients"}
        extra = set(d) - known
        if extra:
            raise ValidationError(f"unknown regression keys {sorted(extra)}")
        return cls(**d)

    def to_dict(self) -> dict:
        keys = {
            "GaussianBump": ("amplitude", "center", "width"),
            "BumpPlusConstant": ("amplitude", "center", "width", "constant"),
            "SumOfPeaks": ("locations", "weights", "width"),
            "Polynomial": ("coefficients",),
        }[self.kind]
        out = {"kind": self.kind}
        for k in keys:
            v = getattr(self, k)
            out[k] = list(v) if isinstance(v, tuple) else v
        return out

    def __call__(self, x) -> np.ndarray:
        """Pointwise values; x has shape (n,) or (n, d)."""
        x = np.asarray(x, dtype=float)
        r2 = (x - self.center) ** 2 if x.ndim == 1 else ((x - self.center) ** 2).sum(axis=1)
        if self.kind == "GaussianBump":
            return self.amplitude * np.exp(-0.5 * r2 / self.width**2)
        if self.kind == "BumpPlusConstant":
            return self.amplitude * np.exp(-0.5 * r2 / self.width**2) + self.constant
        if x.ndim != 1:
            raise ValidationError(f"{self.kind} is evaluated in 1-D only")
        if self.kind == "Polynomial":
            return np.polynomial.polynomial.polyval(x, self.coefficients)
        if self.width <= 0:
            raise ValidationError("pointwise SumOfPeaks needs width > 0")
        out = np.zeros_like(x)
        for loc, w in zip(self.locations, self.weights):
            out += w * np.exp(-0.5 * ((x - loc) / self.width) ** 2) / (self.width * math.sqrt(2 * math.pi))
        return out

    def as_generalized(self, grid: Grid) -> GeneralizedFunction:
        """g on the spatial grid; peaks become atoms."""
        if self.kind == "SumOfPeaks":
            return GeneralizedFunction(atoms=tuple(Atom(l, w) for l, w in zip(self.locations, self.weights)), grid=grid)
        if self.kind == "Polynomial":
            raise ValidationError("a polynomial does not decay; use spectrum() for its transform")
        pts = grid.points_array()
        vals = self(pts[:, 0] if grid.dim == 1 else pts)
        return GeneralizedFunction(GriddedFunction(grid, vals))

    def spectrum(self, freq_grid: Grid) -> GeneralizedFunction:
        """gamma = Ft(g) on the frequency grid.

        Bumps give the closed-form regular part; constants and polynomials
        give atoms at s = 0 (Ft x^k = 2 pi (-i)^k delta^(k)); peaks give the
        regular part sum_k w_k e^{i a_k s}.
        """
        s = freq_grid.mesh()
        if self.kind in ("GaussianBump", "BumpPlusConstant"):
            d = freq_grid.dim
            val = self.amplitude * (self.width * math.sqrt(2 * math.pi)) ** d
            for sk in s:
                val = val * np.exp(1j * self.center * sk - 0.5 * (self.width * sk) ** 2)
            reg = GriddedFunction(freq_grid, val)
            atoms = ()
            if self.kind == "BumpPlusConstant" and self.constant:
                atoms = (Atom((0.0,) * d, (2 * math.pi) ** d * self.constant),)
            return GeneralizedFunction(reg, atoms)
        if freq_grid.dim != 1:
            raise ValidationError(f"{self.kind} spectrum is provided in 1-D only")
        if self.kind == "SumOfPeaks":
            val = sum(w * np.exp(1j * l * s[0]) for l, w in zip(self.locations, self.weights))
            return GeneralizedFunction(GriddedFunction(freq_grid, val))
        if len(self.coefficients) > 3:
            raise ValidationError("cubic terms need a third-order atom, beyond the order cap")
        atoms = tuple(Atom(0.0, 2 * math.pi * c * (-1j) ** k, k) for k, c in enumerate(self.coefficients) if c)
        return GeneralizedFunction(atoms=atoms, grid=freq_grid)

    def spectrum_derivative(self, freq_grid: Grid, k: int = 0) -> GriddedFunction:
        """Analytic d gamma / d s_k for the bump kinds (regular part)."""
        if self.kind not in ("GaussianBump", "BumpPlusConstant"):
            raise ValidationError("analytic spectrum derivative is provided for bumps only")
        gam = self.spectrum(freq_grid).regular
        sk = freq_grid.mesh()[k]
        return gam * (1j * self.center - self.width**2 * sk)


def default_errors() -> dict:
    return {
        "u": DistributionSpec("Laplace", 0.5),
        "ux": DistributionSpec("Gaussian", 0.5),
        "uy": DistributionSpec("Gaussian", 0.5),
    }


def sample_model(g: RegressionSpec, err: dict | None, n: int, seed: int, sigma_z: float = 2.0,
                 dim: int = 1, heteroskedastic: bool = True) -> SampleSet:
    """Draw n observations of y = g(x*) + u_y, x = x* + u_x, z = x* + u.

    z ~ N(0, sigma_z^2 I) is drawn first and u independently of z, so
    x* = z - u. With ``heteroskedastic`` the u_x draws are multiplied by
    sqrt(1 + |z|^2 / 4), which keeps E(u_x | z, u, u_y) = 0.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    errs = default_errors()
    errs.update(err or {})
    unknown = set(errs) - {"u", "ux", "uy"}
    if unknown:
        raise ValidationError(f"unknown error channels {sorted(unknown)}")
    for ch in ("ux", "uy"):
        if not errs[ch].is_centered:
            raise ValidationError(f"error channel {ch} must have mean zero")
    rng = np.random.default_rng(seed)
    z = sigma_z * rng.standard_normal((n, dim))
    u = errs["u"].sample(rng, (n, dim))
    x_star = z - u
    u_x = errs["ux"].sample(rng, (n, dim))
    if heteroskedastic:
        u_x = u_x * np.sqrt(1.0 + (z**2).sum(axis=1, keepdims=True) / 4.0)
    u_y = errs["uy"].sample(rng, n)
    x = x_star + u_x
    y = g(x_star[:, 0] if dim == 1 else x_star) + u_y
    return SampleSet(x, y, z, x_star, u, u_x, u_y)


def sample_classical(law: DistributionSpec, err: DistributionSpec, n: int, seed: int) -> np.ndarray:
    """z = x* + u with x* ~ law and u ~ err independent (1-D)."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    rng = np.random.default_rng(seed)
    return law.sample(rng, n) + err.sample(rng, n)


@dataclass(frozen=True, eq=False)
class IllPosedPair:
    gamma_n_minus_gamma: GriddedFunction
    eps_n_minus_eps: GriddedFunction


def illposed_band(n: int) -> tuple:
    return (n - 1.0 / n, n + 1.0 / n)


def illposed_lower_bound(n: int) -> float:
    """(1/(2n)) exp(-(n + 1/n) + (n - 1/n)^2)."""
    return math.exp(-(n + 1.0 / n) + (n - 1.0 / n) ** 2) / (2.0 * n)


def illposed_pair(n: int, space_grid: Grid) -> IllPosedPair:
    """Perturbation pair for the supersmooth CF e^{-x^2}: gamma_n - gamma =
    e^{x^2} and eps_n - eps = 1 on the band (n - 1/n, n + 1/n), 0 elsewhere.

    A band edge that falls on a node gets half weight, the trapezoid value
    of a jump.
    """
    if n < 2:
        raise ValidationError("n must be >= 2")
    if space_grid.dim != 1:
        raise ValidationError("the ill-posed pair is one-dimensional")
    lo, hi = illposed_band(n)
    if not (space_grid.contains(lo) and space_grid.contains(hi)):
        raise ValidationError("band lies outside the grid")
    x = space_grid.nodes
    tol = 1e-9 * space_grid.spacing
    ind = np.where((x > lo + tol) & (x < hi - tol), 1.0, 0.0)
    ind[np.abs(x - lo) <= tol] = 0.5
    ind[np.abs(x - hi) <= tol] = 0.5
    with np.errstate(over="ignore"):
        grow = np.where(ind > 0, np.exp(np.where(ind > 0, x, 0.0) ** 2), 0.0)
    return IllPosedPair(GriddedFunction(space_grid, ind * grow), GriddedFunction(space_grid, ind))
