"""Uniform symmetric grids on R^d (d = 1, 2) and continuous-convention
Fourier transforms computed by FFT quadrature.

Conventions
-----------
forward:  Ft(f)(s) = int f(x) exp(+i x.s) dx
inverse:  f(x) = (2 pi)^-d int Ft(f)(s) exp(-i x.s) ds

Nodes are x_j = -L + j*dx with dx = 2L/N, so the origin is the node with
index N/2 on every axis. The dual (frequency) grid has spacing 2 pi/(N dx)
and covers [-pi/dx, pi/dx); it is itself a ``Grid`` with half-width pi/dx,
and the dual of the dual is the original grid.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ValidationError

DEFAULTS = {1: (20.0, 1024), 2: (10.0, 256)}


@dataclass(frozen=True)
class Grid:
    """Uniform grid with ``points`` nodes per axis on [-half_width, half_width)."""

    dim: int = 1
    half_width: float = 20.0
    points: int = 1024

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValidationError(f"dim must be 1 or 2, got {self.dim}")
        n = int(self.points)
        if n != self.points or n < 8 or n & (n - 1):
            raise ValidationError(f"points must be a power of two >= 8, got {self.points}")
        if not (math.isfinite(self.half_width) and self.half_width > 0):
            raise ValidationError(f"half_width must be positive and finite, got {self.half_width}")
        object.__setattr__(self, "points", n)
        object.__setattr__(self, "half_width", float(self.half_width))

    @classmethod
    def default(cls, dim: int = 1) -> "Grid":
        L, N = DEFAULTS[dim]
        return cls(dim, L, N)

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points

    @property
    def shape(self) -> tuple:
        return (self.points,) * self.dim

    @property
    def size(self) -> int:
        return self.points**self.dim

    @property
    def origin_index(self) -> tuple:
        return (self.points // 2,) * self.dim

    @property
    def nodes(self) -> np.ndarray:
        """One-axis node coordinates (identical on every axis)."""
        return -self.half_width + self.spacing * np.arange(self.points)

    def mesh(self) -> tuple:
        """Coordinate arrays of shape ``self.shape``, one per axis."""
        x = self.nodes
        if self.dim == 1:
            return (x,)
        return tuple(np.meshgrid(x, x, indexing="ij"))

    def points_array(self) -> np.ndarray:
        """All nodes as an array of shape (N**d, d), C order."""
        return np.stack([m.ravel() for m in self.mesh()], axis=1)

    def dual(self) -> "Grid":
        """Frequency grid induced by the FT."""
        return Grid(self.dim, math.pi / self.spacing, self.points)

    def contains(self, point) -> bool:
        p = np.atleast_1d(np.asarray(point, dtype=float))
        return bool(np.all(p >= -self.half_width) and np.all(p < self.half_width))

    def cell_volume(self) -> float:
        return self.spacing**self.dim


@dataclass(frozen=True, eq=False)
class GriddedFunction:
    """Complex values sampled on every node of ``grid``.

    ``values`` is stored with shape ``grid.shape``; a flat array of length
    N**d is accepted and reshaped.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.size != self.grid.size:
            raise ValidationError(f"expected {self.grid.size} values, got {v.size}")
        v = v.reshape(self.grid.shape)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: Grid, fn: Callable) -> "GriddedFunction":
        return cls(grid, fn(*grid.mesh()))

    @classmethod
    def zeros(cls, grid: Grid) -> "GriddedFunction":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    def _other(self, other):
        if isinstance(other, GriddedFunction):
            if other.grid != self.grid:
                raise ValidationError("grid mismatch")
            return other.values
        return other

    def __add__(self, other):
        return GriddedFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GriddedFunction(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return GriddedFunction(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return GriddedFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GriddedFunction(self.grid, self.values / self._other(other))

    def __neg__(self):
        return GriddedFunction(self.grid, -self.values)

    def conj(self) -> "GriddedFunction":
        return GriddedFunction(self.grid, np.conj(self.values))

    def abs(self) -> np.ndarray:
        return np.abs(self.values)

    def at_origin(self) -> complex:
        return complex(self.values[self.grid.origin_index])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    # CSV exchange format: header row, columns node (node1,node2 in 2-D), re, im
    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if self.grid.dim == 1:
            w.writerow(["node", "re", "im"])
        else:
            w.writerow(["node1", "node2", "re", "im"])
        pts = self.grid.points_array()
        flat = self.values.ravel()
        for p, v in zip(pts, flat):
            w.writerow([repr(float(c)) for c in p] + [repr(float(v.real)), repr(float(v.imag))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "GriddedFunction":
        """Read the CSV format; ``source`` is a path or the CSV text itself."""
        if "\n" in str(source):
            text = str(source)
        else:
            with open(source) as fh:
                text = fh.read()
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], [r for r in rows[1:] if r]
        dim = 1 if header[0] == "node" else 2
        if header[-2:] != ["re", "im"]:
            raise ValidationError(f"unexpected CSV header {header}")
        arr = np.array(body, dtype=float)
        axis0 = np.unique(arr[:, 0])
        n = axis0.size
        L = -axis0[0]
        grid = Grid(dim, L, n)
        if not np.allclose(axis0, grid.nodes, rtol=0, atol=1e-9 * max(1.0, L)):
            raise ValidationError("CSV nodes do not form a symmetric uniform grid")
        return cls(grid, arr[:, dim] + 1j * arr[:, dim + 1])


def _check(f: GriddedFunction):
    if not isinstance(f, GriddedFunction):
        raise ValidationError("expected a GriddedFunction")


def _axes(grid: Grid) -> tuple:
    return tuple(range(grid.dim))


def forward_ft(f: GriddedFunction) -> GriddedFunction:
    """Trapezoid (periodic) quadrature of int f(x) e^{ix.s} dx on the dual grid.

    With x_j = (j - N/2) dx and s_k = (k - N/2) ds, the kernel is
    exp(2 pi i (j - N/2)(k - N/2)/N); the shifts re-centre the origin so an
    unnormalised inverse DFT evaluates it exactly.
    """
    _check(f)
    g = f.grid
    ax = _axes(g)
    out = np.fft.fftshift(np.fft.ifftn(np.fft.ifftshift(f.values, axes=ax), axes=ax), axes=ax)
    out *= g.size * g.cell_volume()
    return GriddedFunction(g.dual(), out)


def inverse_ft(F: GriddedFunction) -> GriddedFunction:
    """(2 pi)^-d sum_k F(s_k) e^{-ix.s_k} ds^d on the dual of ``F.grid``."""
    _check(F)
    g = F.grid
    ax = _axes(g)
    out = np.fft.fftshift(np.fft.fftn(np.fft.ifftshift(F.values, axes=ax), axes=ax), axes=ax)
    out *= g.cell_volume() / (2 * math.pi) ** g.dim
    return GriddedFunction(g.dual(), out)


def _edge_ratio(f: GriddedFunction) -> float:
    a = np.abs(f.values)
    top = a.max()
    if top == 0:
        return 0.0
    n = f.grid.points
    k = max(1, int(math.ceil(0.05 * n)))
    edge = np.zeros(f.grid.shape, dtype=bool)
    for axis in range(f.grid.dim):
        sl = [slice(None)] * f.grid.dim
        sl[axis] = slice(0, k)
        edge[tuple(sl)] = True
        sl[axis] = slice(n - k, n)
        edge[tuple(sl)] = True
    return float(a[edge].max() / top)


def convolve(f: GriddedFunction, g: GriddedFunction) -> GriddedFunction:
    """Convolution realised through the exchange formula Ft(f*g) = Ft(f) Ft(g)."""
    _check(f)
    _check(g)
    if f.grid != g.grid:
        raise ValidationError("convolve: grid mismatch")
    for h in (f, g):
        if _edge_ratio(h) > 1e-6:
            warnings.warn("convolve: operand does not decay within the grid; result is aliased",
                          RuntimeWarning, stacklevel=2)
    return inverse_ft(forward_ft(f) * forward_ft(g))


def spectral_derivative(g: GriddedFunction, k: int = 0) -> GriddedFunction:
    """Second-order central differences along axis ``k``, one-sided at the edges."""
    _check(g)
    if not 0 <= k < g.grid.dim:
        raise ValidationError(f"axis {k} out of range for dim {g.grid.dim}")
    d = np.gradient(g.values, g.grid.spacing, axis=k, edge_order=2)
    return GriddedFunction(g.grid, d)


def quadrature(f: GriddedFunction) -> complex:
    """Trapezoid rule over the grid box with periodic closure (f(L) := f(-L)),
    which reduces to dx^d times the node sum."""
    _check(f)
    return complex(f.values.sum() * f.grid.cell_volume())
