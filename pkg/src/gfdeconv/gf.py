"""Generalized functions as a gridded regular part plus delta-type atoms.

Functional values use the conjugate-linear pairing

    (b, psi) = int b(t) conj(psi(t)) dt,

fixed globally. Atoms contribute weight * (-1)^|alpha| * conj(d^alpha psi)(location),
so an atom of order alpha stands for weight * d^alpha delta_location.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ValidationError
from .grid import Grid, GriddedFunction, forward_ft, inverse_ft, quadrature

MAX_ATOM_ORDER = 2
DEFAULT_SCALES = (0.5, 1.0, 2.0)
DEFAULT_COUNT = 16
BOUND_RTOL = 1e-12  # rounding allowance in check_uniform_bound


# --------------------------------------------------------------------------
# atoms and generalized functions


@dataclass(frozen=True)
class Atom:
    """weight * d^order delta at ``location``."""

    location: tuple
    weight: complex = 1.0
    order: tuple | None = None

    def __post_init__(self):
        loc = tuple(float(v) for v in np.atleast_1d(self.location))
        order = (0,) * len(loc) if self.order is None else tuple(int(a) for a in np.atleast_1d(self.order))
        if len(order) != len(loc):
            raise ValidationError("atom order and location dimensions differ")
        if not all(math.isfinite(v) for v in loc):
            raise ValidationError("atom location must be finite")
        w = complex(self.weight)
        if not (math.isfinite(w.real) and math.isfinite(w.imag)):
            raise ValidationError("atom weight must be finite")
        if min(order) < 0 or sum(order) > MAX_ATOM_ORDER:
            raise ValidationError(f"atom derivative order must satisfy 0 <= |alpha| <= {MAX_ATOM_ORDER}")
        object.__setattr__(self, "location", loc)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "weight", w)

    @property
    def dim(self) -> int:
        return len(self.location)


@dataclass(frozen=True, eq=False)
class GeneralizedFunction:
    """Regular gridded part plus a tuple of atoms.

    ``grid`` may be omitted when a regular part is present; an atom-only
    object needs it for transforms and serialization.
    """

    regular: GriddedFunction | None = None
    atoms: tuple = ()
    grid: Grid | None = None

    def __post_init__(self):
        atoms = tuple(self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if self.regular is None and not atoms:
            raise ValidationError("a generalized function needs a regular part or atoms")
        grid = self.grid
        if self.regular is not None:
            if grid is not None and grid != self.regular.grid:
                raise ValidationError("grid does not match the regular part")
            grid = self.regular.grid
            for a in atoms:
                if not grid.contains(a.location):
                    raise ValidationError(f"atom at {a.location} lies outside the grid box")
        object.__setattr__(self, "grid", grid)
        if grid is not None:
            for a in atoms:
                if a.dim != grid.dim:
                    raise ValidationError("atom dimension differs from grid dimension")

    @classmethod
    def regular_only(cls, f: GriddedFunction) -> "GeneralizedFunction":
        return cls(regular=f)

    @property
    def dim(self) -> int:
        return self.grid.dim if self.grid is not None else self.atoms[0].dim

    def regular_values(self) -> np.ndarray:
        if self.regular is not None:
            return self.regular.values
        return np.zeros(self.grid.shape, dtype=complex)

    def _combine(self, other, sign):
        other = as_generalized(other)
        grid = self.grid or other.grid
        if self.grid is not None and other.grid is not None and self.grid != other.grid:
            raise ValidationError("grid mismatch")
        reg = None
        if self.regular is not None or other.regular is not None:
            reg = GriddedFunction(grid, self.regular_values_on(grid) + sign * other.regular_values_on(grid))
        atoms = self.atoms + tuple(Atom(a.location, sign * a.weight, a.order) for a in other.atoms)
        return GeneralizedFunction(reg, atoms, grid)

    def regular_values_on(self, grid):
        if self.regular is not None:
            return self.regular.values
        return np.zeros(grid.shape, dtype=complex)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __mul__(self, c):
        c = complex(c)
        reg = None if self.regular is None else self.regular * c
        return GeneralizedFunction(reg, tuple(Atom(a.location, c * a.weight, a.order) for a in self.atoms), self.grid)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def to_dict(self) -> dict:
        if self.grid is None:
            raise ValidationError("serialization needs a grid")
        g = self.grid
        reg = None
        if self.regular is not None:
            flat = self.regular.values.ravel()
            reg = [[float(v.real), float(v.imag)] for v in flat]
        return {
            "grid": {"L": g.half_width, "N": g.points, "dim": g.dim},
            "regular": reg,
            "atoms": [
                {"loc": list(a.location), "w_re": a.weight.real, "w_im": a.weight.imag, "order": list(a.order)}
                for a in self.atoms
            ],
        }

    def to_json(self, path=None, **kw) -> str:
        text = json.dumps(self.to_dict(), **kw)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "GeneralizedFunction":
        g = d["grid"]
        grid = Grid(int(g["dim"]), float(g["L"]), int(g["N"]))
        reg = None
        if d.get("regular") is not None:
            arr = np.asarray(d["regular"], dtype=float).reshape(-1, 2)
            reg = GriddedFunction(grid, arr[:, 0] + 1j * arr[:, 1])
        atoms = tuple(Atom(tuple(a["loc"]), complex(a["w_re"], a["w_im"]), tuple(a["order"])) for a in d.get("atoms", []))
        return cls(reg, atoms, grid)

    @classmethod
    def from_json(cls, source) -> "GeneralizedFunction":
        text = source
        if not str(source).lstrip().startswith("{"):
            with open(source) as fh:
                text = fh.read()
        return cls.from_dict(json.loads(text))


def as_generalized(b) -> GeneralizedFunction:
    if isinstance(b, GeneralizedFunction):
        return b
    if isinstance(b, GriddedFunction):
        return GeneralizedFunction(regular=b)
    raise ValidationError(f"cannot interpret {type(b).__name__} as a generalized function")


def empirical_measure(samples, grid: Grid) -> GeneralizedFunction:
    """(1/n) sum_j delta_{z_j}; its transform is the empirical CF."""
    z = np.asarray(samples, dtype=float).reshape(len(samples), -1)
    w = 1.0 / z.shape[0]
    return GeneralizedFunction(atoms=tuple(Atom(tuple(p), w) for p in z), grid=grid)


# --------------------------------------------------------------------------
# test functions


def hermite_functions(x, kmax: int) -> np.ndarray:
    """L2-orthonormal Hermite functions h_0..h_kmax at ``x`` (three-term recurrence)."""
    x = np.asarray(x, dtype=float)
    out = np.empty((kmax + 1,) + x.shape)
    out[0] = math.pi**-0.25 * np.exp(-0.5 * x * x)
    if kmax >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, kmax):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * x * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def _hermite_1d(k: int, sigma: float, order: int, x):
    """order-th derivative of sigma^-1/2 h_k(x/sigma), order in 0..2."""
    u = np.asarray(x, dtype=float) / sigma
    h = hermite_functions(u, k + 1)
    if order == 0:
        v = h[k]
    elif order == 1:
        lower = h[k - 1] if k > 0 else 0.0
        v = math.sqrt(k / 2) * lower - math.sqrt((k + 1) / 2) * h[k + 1]
    elif order == 2:
        v = (u * u - (2 * k + 1)) * h[k]
    else:
        raise ValidationError("Hermite derivatives stored up to order 2")
    return v * sigma ** -(0.5 + order)


def _hermite_ft_1d(k: int, sigma: float, s, sign: int):
    """int psi(x) e^{sign*i*x*s} dx = sqrt(2 pi sigma) (sign*i)^k h_k(sigma s)."""
    s = np.asarray(s, dtype=float)
    return math.sqrt(2 * math.pi * sigma) * (sign * 1j) ** k * hermite_functions(sigma * s, k)[k]


@dataclass(frozen=True, eq=False)
class TestFunction:
    """Rapidly decreasing test function with analytic derivatives and transform.

    ``derivatives`` maps a multi-index alpha to a callable of the coordinates;
    ``ft_evaluator`` gives int psi(x) e^{ix.s} dx and ``adjoint_ft_evaluator``
    the e^{-ix.s} transform, which is the adjoint of the forward transform
    under the conjugate-linear pairing.
    """

    __test__ = False  # keep pytest from collecting this class

    kind: str
    index: tuple
    scale: float
    dim: int
    evaluator: Callable
    derivatives: dict = field(default_factory=dict)
    ft_evaluator: Callable | None = None
    adjoint_ft_evaluator: Callable | None = None
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "_cache", {})

    def __call__(self, *coords):
        return self.evaluator(*coords)

    def derivative(self, alpha) -> Callable:
        alpha = tuple(int(a) for a in np.atleast_1d(alpha))
        if sum(alpha) == 0:
            return self.evaluator
        if alpha not in self.derivatives:
            raise ValidationError(f"derivative {alpha} not stored for test function {self.label}")
        return self.derivatives[alpha]

    def ft(self, *s):
        if self.ft_evaluator is None:
            raise ValidationError(f"no analytic transform for {self.label}")
        return self.ft_evaluator(*s)

    def adjoint_ft(self, *s):
        if self.adjoint_ft_evaluator is None:
            raise ValidationError(f"no analytic adjoint transform for {self.label}")
        return self.adjoint_ft_evaluator(*s)

    def on_grid(self, grid: Grid, alpha=None) -> np.ndarray:
        key = (grid, None if alpha is None else tuple(np.atleast_1d(alpha)))
        cache = self._cache
        if key not in cache:
            fn = self.evaluator if alpha is None else self.derivative(alpha)
            vals = np.asarray(fn(*grid.mesh()))
            vals = np.broadcast_to(vals, grid.shape).copy()
            vals.flags.writeable = False
            cache[key] = vals
        return cache[key]

    def transformed(self, adjoint: bool = True) -> "TestFunction":
        """The transform of this function as a test function in its own right
        (no stored derivatives)."""
        if self.kind == "hermite":
            # Ft h_k[sigma] = sqrt(2 pi) (+-i)^k h_k[1/sigma], up to the dilation weights
            sign = -1 if adjoint else 1
            const = complex(np.prod([math.sqrt(2 * math.pi) * (sign * 1j) ** k for k in self.index]))
            base = hermite_function(self.index, 1.0 / self.scale)
            return scaled_test_function(base, const, f"{'Ft*' if adjoint else 'Ft'}({self.label})")
        fn = self.adjoint_ft_evaluator if adjoint else self.ft_evaluator
        if fn is None:
            raise ValidationError(f"no analytic transform for {self.label}")
        tag = "Ft*" if adjoint else "Ft"
        return TestFunction("custom", self.index, self.scale, self.dim, fn, label=f"{tag}({self.label})")

    def decays_on(self, grid: Grid, tol: float = 1e-6) -> bool:
        """|x|^8 |psi| < tol on the grid boundary for psi and stored derivatives."""
        L = grid.half_width
        edge = np.linspace(-L, L, 65)
        if self.dim == 1:
            pts = (np.array([-L, L]),)
        else:
            pts = (np.concatenate([np.full(65, -L), np.full(65, L), edge, edge]),
                   np.concatenate([edge, edge, np.full(65, -L), np.full(65, L)]))
        r8 = sum(p * p for p in pts) ** 4
        fns = [self.evaluator] + list(self.derivatives.values())
        return all(np.all(r8 * np.abs(f(*pts)) < tol) for f in fns)


def hermite_function(index, scale: float = 1.0) -> TestFunction:
    """Dilated Hermite function; ``index`` is k (1-D) or (j, k) (2-D tensor product)."""
    idx = tuple(int(i) for i in np.atleast_1d(index))
    if scale <= 0 or min(idx) < 0:
        raise ValidationError("Hermite index must be >= 0 and scale > 0")
    sigma = float(scale)
    dim = len(idx)

    def product(orders, *coords):
        out = 1.0
        for k, o, c in zip(idx, orders, coords):
            out = out * _hermite_1d(k, sigma, o, c)
        return out

    def ft_product(sign, *s):
        out = 1.0
        for k, c in zip(idx, s):
            out = out * _hermite_ft_1d(k, sigma, c, sign)
        return out

    if dim == 1:
        alphas = [(1,), (2,)]
    else:
        alphas = [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    derivs = {a: (lambda *c, a=a: product(a, *c)) for a in alphas}
    label = f"h{idx[0] if dim == 1 else idx}[{sigma:g}]"
    return TestFunction(
        "hermite", idx, sigma, dim,
        evaluator=lambda *c: product((0,) * dim, *c),
        derivatives=derivs,
        ft_evaluator=lambda *s: ft_product(1, *s),
        adjoint_ft_evaluator=lambda *s: ft_product(-1, *s),
        label=label,
    )


def scaled_test_function(psi: TestFunction, c: complex, label: str = "") -> TestFunction:
    """c * psi, keeping derivatives and transforms."""
    mul = lambda fn: None if fn is None else (lambda *x: c * fn(*x))
    return TestFunction(
        psi.kind, psi.index, psi.scale, psi.dim, mul(psi.evaluator),
        {a: mul(f) for a, f in psi.derivatives.items()},
        mul(psi.ft_evaluator), mul(psi.adjoint_ft_evaluator), label or f"{c}*{psi.label}",
    )


def hermite_test_set(count: int, scale: float = 1.0, dim: int = 1) -> list:
    """First ``count`` Hermite functions at ``scale``; in 2-D, tensor products
    h_j(x1) h_k(x2) with j, k < ceil(sqrt(count)) in lexicographic order."""
    if count < 1 or scale <= 0:
        raise ValidationError("count >= 1 and scale > 0 required")
    if dim == 1:
        return [hermite_function(k, scale) for k in range(count)]
    m = int(math.ceil(math.sqrt(count)))
    pairs = [(j, k) for j in range(m) for k in range(m)][:count]
    return [hermite_function(p, scale) for p in pairs]


@lru_cache(maxsize=None)
def default_test_set(dim: int = 1) -> tuple:
    """16 Hermite functions at each scale in (0.5, 1, 2): 48 functionals."""
    out = []
    for s in DEFAULT_SCALES:
        out.extend(hermite_test_set(DEFAULT_COUNT, s, dim))
    return tuple(out)


def custom_test_function(fn: Callable, derivatives: dict | None = None, ft: Callable | None = None,
                         adjoint_ft: Callable | None = None, label: str = "custom", dim: int = 1,
                         scale: float = 1.0) -> TestFunction:
    derivs = {tuple(np.atleast_1d(k)): v for k, v in (derivatives or {}).items()}
    return TestFunction("custom", (), scale, dim, fn, derivs, ft, adjoint_ft, label)


def gaussian_test_function() -> TestFunction:
    """e^{-x^2/2} with derivatives and transforms (both equal sqrt(2 pi) e^{-s^2/2})."""
    g = lambda x: np.exp(-0.5 * np.asarray(x, dtype=float) ** 2)
    return custom_test_function(
        g,
        {1: lambda x: -x * g(x), 2: lambda x: (x * x - 1) * g(x)},
        ft=lambda s: math.sqrt(2 * math.pi) * g(s),
        adjoint_ft=lambda s: math.sqrt(2 * math.pi) * g(s),
        label="gauss",
    )


# --------------------------------------------------------------------------
# functionals and transforms


def apply_functional(b, psi: TestFunction) -> complex:
    """(b, psi) = quadrature(regular * conj(psi)) + sum_atoms w (-1)^|a| conj(d^a psi)(loc)."""
    b = as_generalized(b)
    total = 0j
    if b.regular is not None:
        total += quadrature(GriddedFunction(b.grid, b.regular.values * np.conj(psi.on_grid(b.grid))))
    for a in b.atoms:
        val = psi.derivative(a.order)(*[np.float64(c) for c in a.location])
        total += a.weight * (-1) ** sum(a.order) * np.conj(complex(val))
    return complex(total)


def functional_values(b, test_set: Sequence[TestFunction]) -> np.ndarray:
    return np.array([apply_functional(b, p) for p in test_set])


def _atom_spectrum(atoms: Iterable[Atom], freq: Grid) -> np.ndarray:
    s = freq.mesh()
    out = np.zeros(freq.shape, dtype=complex)
    for a in atoms:
        term = a.weight * np.exp(1j * sum(loc * sk for loc, sk in zip(a.location, s)))
        for order, sk in zip(a.order, s):
            if order:
                term = term * (-1j * sk) ** order
        out += term
    return out


def ft_generalized(b, grid: Grid | None = None) -> GriddedFunction:
    """Forward transform on the frequency grid dual to the spatial grid.

    An atom w d^alpha delta_a maps to w (-i s)^alpha e^{i a.s}: with the
    e^{+ix.s} kernel, integrating by parts |alpha| times gives (-1)^|alpha|
    d^alpha_x e^{ix.s} at x = a.
    """
    b = as_generalized(b)
    grid = grid or b.grid
    if grid is None:
        raise ValidationError("ft_generalized needs a grid for atom-only input")
    freq = grid.dual()
    vals = np.zeros(freq.shape, dtype=complex)
    if b.regular is not None:
        vals = vals + forward_ft(b.regular).values
    vals = vals + _atom_spectrum(b.atoms, freq)
    return GriddedFunction(freq, vals)


def convolve_gf(g, f) -> GeneralizedFunction:
    """g * f through the exchange formula.

    Spectra of regular parts and atoms are multiplied on the dual grid; every
    product that involves a regular factor is transformed back to a regular
    part. Products of two atoms are exact atoms (location sum, order sum) and
    are carried over when the order stays within the cap.
    """
    g = as_generalized(g)
    f = as_generalized(f)
    if g.regular is None and f.regular is None:
        raise ValidationError("convolve_gf: both operands are atomic-only")
    grid = g.grid or f.grid
    for x in (g, f):
        if x.grid is not None and x.grid != grid:
            raise ValidationError("convolve_gf: grid mismatch")
    freq = grid.dual()
    reg_g = forward_ft(g.regular).values if g.regular is not None else 0.0
    reg_f = forward_ft(f.regular).values if f.regular is not None else 0.0
    at_g = _atom_spectrum(g.atoms, freq) if g.atoms else 0.0
    at_f = _atom_spectrum(f.atoms, freq) if f.atoms else 0.0
    spec = reg_g * reg_f + at_g * reg_f + reg_g * at_f
    regular = inverse_ft(GriddedFunction(freq, np.broadcast_to(spec, freq.shape)))
    atoms = []
    for a in g.atoms:
        for c in f.atoms:
            order = tuple(x + y for x, y in zip(a.order, c.order))
            if sum(order) > MAX_ATOM_ORDER:
                raise ValidationError("convolve_gf: atom product exceeds the derivative-order cap")
            loc = tuple(x + y for x, y in zip(a.location, c.location))
            atoms.append(Atom(loc, a.weight * c.weight, order))
    return GeneralizedFunction(regular, tuple(atoms), grid)


def weak_distance(b1, b2=None, test_set: Sequence[TestFunction] | None = None) -> float:
    """max over the test set of |(b1 - b2, psi)|; ``b2=None`` means zero."""
    if test_set is None:
        b = as_generalized(b1)
        test_set = default_test_set(b.dim)
    if len(test_set) == 0:
        raise ValidationError("test set must be non-empty")
    v1 = functional_values(b1, test_set)
    v2 = 0.0 if b2 is None or (np.isscalar(b2) and b2 == 0) else functional_values(b2, test_set)
    return float(np.max(np.abs(v1 - v2)))


# --------------------------------------------------------------------------
# polynomial bounds


@dataclass(frozen=True)
class PolyBound:
    """Envelope V * prod_i (1 + t_i^2)^{m_i}."""

    m: tuple = (0,)
    V: float = 1.0

    def __post_init__(self):
        m = tuple(int(v) for v in np.atleast_1d(self.m))
        if min(m) < 0:
            raise ValidationError("m must be componentwise >= 0")
        V = float(self.V)
        if not (math.isfinite(V) and V > 0):
            raise ValidationError("V must be positive and finite")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "V", V)

    def exponents(self, dim: int) -> tuple:
        if len(self.m) == dim:
            return self.m
        if len(self.m) == 1:
            return self.m * dim
        raise ValidationError("PolyBound exponent vector does not match grid dimension")

    def weight(self, grid: Grid) -> np.ndarray:
        """prod_i (1 + t_i^2)^{m_i} on the grid."""
        out = np.ones(grid.shape)
        for m, t in zip(self.exponents(grid.dim), grid.mesh()):
            if m:
                out = out * (1.0 + t * t) ** m
        return out

    def envelope(self, grid: Grid) -> np.ndarray:
        return self.V * self.weight(grid)


@dataclass(frozen=True)
class BoundCheck:
    holds: bool
    witness: tuple | None = None


@dataclass(frozen=True)
class CondsCheck:
    value: float
    converged: bool


def clip_to_bound(b: GriddedFunction, bound: PolyBound) -> GriddedFunction:
    """Magnitude clip to the envelope, preserving phase; NaN entries pass through.

    Values already within the rounding allowance of the envelope are kept as
    they are, which makes the clip idempotent."""
    env = bound.envelope(b.grid)
    v = b.values
    over = clipped_mask(b, bound)
    out = np.where(over, env * np.exp(1j * np.angle(v)), v)
    return GriddedFunction(b.grid, out)


def clipped_mask(b: GriddedFunction, bound: PolyBound) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        return np.abs(b.values) > bound.envelope(b.grid) * (1 + BOUND_RTOL)


def check_uniform_bound(b: GriddedFunction, bound: PolyBound) -> BoundCheck:
    """prod(1+t^2)^-m |b| <= V at every finite node, up to rounding (values
    pinned to the envelope by ``clip_to_bound`` pass); the witness is the
    violating node closest to the origin (first in grid order among ties)."""
    with np.errstate(over="ignore", invalid="ignore"):
        ratio = np.abs(b.values) / bound.weight(b.grid)
        bad = ratio > bound.V * (1 + BOUND_RTOL)
    bad &= ~np.isnan(b.values.real if np.iscomplexobj(b.values) else b.values)
    if not bad.any():
        return BoundCheck(True, None)
    r2 = sum(t * t for t in b.grid.mesh())
    flat = np.flatnonzero(bad.ravel())
    pick = flat[np.argmin(r2.ravel()[flat])]
    idx = np.unravel_index(pick, b.grid.shape)
    return BoundCheck(False, tuple(float(m[idx]) for m in b.grid.mesh()))


def check_conds_integral(b: GriddedFunction, m) -> CondsCheck:
    """Quadrature of prod(1+t^2)^-m |b|; converged when the outer 10% of the
    grid contributes under 1% of the total."""
    bound = PolyBound(m, 1.0)
    with np.errstate(over="ignore", invalid="ignore"):
        w = np.abs(b.values) / bound.weight(b.grid)
    total = float(w.sum() * b.grid.cell_volume())
    rmax = np.max(np.abs(np.stack(b.grid.mesh())), axis=0)
    tail = float(w[rmax > 0.9 * b.grid.half_width].sum() * b.grid.cell_volume())
    if not math.isfinite(total):
        return CondsCheck(total, False)
    converged = total == 0.0 or tail < 0.01 * total
    return CondsCheck(total, bool(converged))


# --------------------------------------------------------------------------
# random generalized functions


@dataclass(frozen=True)
class CovarianceFunctional:
    kind: str

    def __post_init__(self):
        if self.kind not in ("WienerDerivative", "FtWienerDerivative"):
            raise ValidationError(f"unknown covariance functional {self.kind}")


WIENER_DERIVATIVE = CovarianceFunctional("WienerDerivative")
FT_WIENER_DERIVATIVE = CovarianceFunctional("FtWienerDerivative")


@lru_cache(maxsize=8)
def _half_line_rule(upper: float, panels: int, order: int = 16):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, upper, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _half_line_values(kind: CovarianceFunctional, psi: TestFunction, t):
    if psi.dim != 1:
        raise ValidationError("Wiener-derivative covariances are defined on the line")
    if kind.kind == "WienerDerivative":
        return np.asarray(psi(t), dtype=complex)
    return np.asarray(psi.ft(t), dtype=complex)


def wiener_gram(kind: CovarianceFunctional, test_set: Sequence[TestFunction], upper: float = 60.0) -> np.ndarray:
    """Gram matrix B[i, j] = int_0^inf a_i conj(a_j) with a = psi (W') or Ft(psi) (Ft(W'))."""
    t, w = _half_line_rule(float(upper), int(4 * upper))
    A = np.stack([_half_line_values(kind, p, t) for p in test_set])
    return (A * w) @ A.conj().T


def wiener_covariance(kind: CovarianceFunctional, psi1: TestFunction, psi2: TestFunction,
                      upper: float = 60.0) -> complex:
    """Composite Gauss-Legendre quadrature of the product over [0, upper]."""
    return complex(wiener_gram(kind, [psi1, psi2], upper)[0, 1])


def sample_process(kind: CovarianceFunctional, test_set: Sequence[TestFunction], seed: int,
                   size: int | None = None) -> np.ndarray:
    """Zero-mean Gaussian draw(s) of ((b, psi_1), ..., (b, psi_m)).

    Real Gram matrices give real draws; a complex Hermitian Gram gives
    circular complex draws with E[X X^H] = B. Returns shape (m,) or (size, m).
    """
    if len(test_set) < 1:
        raise ValidationError("test set must be non-empty")
    B = wiener_gram(kind, test_set)
    m = B.shape[0]
    complex_case = np.abs(B.imag).max() > 1e-14 * max(1.0, np.abs(B).max())
    B = B if complex_case else B.real
    try:
        chol = np.linalg.cholesky(B + 1e-12 * np.eye(m))
    except np.linalg.LinAlgError as exc:
        raise ValidationError("covariance Gram matrix is not positive semidefinite") from exc
    rng = np.random.default_rng(seed)
    k = 1 if size is None else int(size)
    if complex_case:
        xi = (rng.standard_normal((k, m)) + 1j * rng.standard_normal((k, m))) / math.sqrt(2)
    else:
        xi = rng.standard_normal((k, m))
    draws = xi @ chol.T
    return draws[0] if size is None else draws


# --------------------------------------------------------------------------
# densities from distribution functions


@dataclass(frozen=True)
class StepDistribution:
    """F(x) = sum_j mass_j * I(x >= location_j)."""

    locations: tuple
    masses: tuple

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=float).ravel()
        mass = np.asarray(self.masses, dtype=float).ravel()
        if loc.shape != mass.shape or loc.size == 0:
            raise ValidationError("locations and masses must be non-empty and equally long")
        order = np.argsort(loc, kind="stable")
        object.__setattr__(self, "locations", tuple(loc[order]))
        object.__setattr__(self, "masses", tuple(mass[order]))


def density_functional(F, psi: TestFunction, upper: float = 80.0) -> complex:
    """(f, psi) = -int F(x) conj(psi'(x)) dx for the density f of F.

    A ``StepDistribution`` is integrated piecewise: on each interval where F
    is constant the integral of psi' uses composite Gauss-Legendre nodes, so
    jumps never sit inside a quadrature panel. A ``GriddedFunction`` F uses
    the grid trapezoid rule.
    """
    if isinstance(F, GriddedFunction):
        d = np.conj(psi.on_grid(F.grid, (1,)))
        return -quadrature(GriddedFunction(F.grid, F.values * d))
    if not isinstance(F, StepDistribution):
        raise ValidationError("F must be a StepDistribution or GriddedFunction")
    dpsi = psi.derivative((1,))
    x, w = np.polynomial.legendre.leggauss(24)
    locs = np.array(F.locations)
    levels = np.cumsum(F.masses)
    ends = np.append(locs[1:], locs[-1] + upper)
    total = 0j
    for a, b, level in zip(locs, ends, levels):
        if b <= a or level == 0:
            continue
        n_panels = max(1, int(math.ceil((b - a) / 0.25)))
        edges = np.linspace(a, b, n_panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        nodes = mid[:, None] + half[:, None] * x[None, :]
        vals = np.conj(np.asarray(dpsi(nodes), dtype=complex))
        total += level * np.sum(vals * (half[:, None] * w[None, :]))
    return complex(-total)
