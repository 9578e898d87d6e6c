"""Sample-based estimators of the known functions: empirical characteristic
functions, Nadaraya-Watson conditional moments with the indicator kernel of
the open unit ball, envelope clipping, and their spectral images."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import j1

from .errors import ValidationError
from .gf import PolyBound, clip_to_bound, clipped_mask
from .grid import Grid, GriddedFunction, forward_ft, spectral_derivative

_RESEED = 32  # recompute exponentials exactly every this many recurrence steps


# --------------------------------------------------------------------------
# data containers


@dataclass(frozen=True)
class ModelSample:
    """One observation of (x, y, z) plus latent draws kept for oracle checks."""

    x: tuple
    y: float
    z: tuple
    x_star: tuple | None = None
    u: tuple | None = None
    u_x: tuple | None = None
    u_y: float | None = None


def _cols(a, n, name):
    if a is None:
        return None
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.shape[0] != n:
        raise ValidationError(f"column {name} has {a.shape[0]} rows, expected {n}")
    return a


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Columnar storage for n observations; x, z, x_star, u, u_x have shape (n, d)."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    x_star: np.ndarray | None = None
    u: np.ndarray | None = None
    u_x: np.ndarray | None = None
    u_y: np.ndarray | None = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        n = y.size
        object.__setattr__(self, "y", y)
        for name in ("x", "z", "x_star", "u", "u_x"):
            object.__setattr__(self, name, _cols(getattr(self, name), n, name))
        if self.u_y is not None:
            object.__setattr__(self, "u_y", np.asarray(self.u_y, dtype=float).ravel())
        if self.x.shape != self.z.shape:
            raise ValidationError("x and z must have the same dimension")

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def dim(self) -> int:
        return self.z.shape[1]

    def __len__(self):
        return self.n

    def __getitem__(self, i) -> ModelSample:
        lat = lambda a: None if a is None else tuple(a[i])
        return ModelSample(tuple(self.x[i]), float(self.y[i]), tuple(self.z[i]), lat(self.x_star),
                           lat(self.u), lat(self.u_x), None if self.u_y is None else float(self.u_y[i]))

    def records(self) -> list:
        return [self[i] for i in range(self.n)]

    @property
    def has_latents(self) -> bool:
        return all(v is not None for v in (self.x_star, self.u, self.u_x, self.u_y))

    @classmethod
    def from_records(cls, records: Sequence[ModelSample]) -> "SampleSet":
        if not records:
            raise ValidationError("empty sample")
        col = lambda name: None if getattr(records[0], name) is None else [getattr(r, name) for r in records]
        return cls(col("x"), col("y"), col("z"), col("x_star"), col("u"), col("u_x"), col("u_y"))

    def to_csv(self, path=None, latents: bool = True) -> str:
        d = self.dim
        if d == 1:
            names = ["x", "y", "z"]
            cols = [self.x[:, 0], self.y, self.z[:, 0]]
        else:
            names = ["x1", "x2", "y", "z1", "z2"]
            cols = [self.x[:, 0], self.x[:, 1], self.y, self.z[:, 0], self.z[:, 1]]
        if latents and self.has_latents:
            if d == 1:
                names += ["xstar", "u", "ux", "uy"]
                cols += [self.x_star[:, 0], self.u[:, 0], self.u_x[:, 0], self.u_y]
            else:
                names += ["xstar1", "xstar2", "u1", "u2", "ux1", "ux2", "uy"]
                cols += [self.x_star[:, 0], self.x_star[:, 1], self.u[:, 0], self.u[:, 1],
                         self.u_x[:, 0], self.u_x[:, 1], self.u_y]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(names)
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "SampleSet":
        if "\n" in str(source):
            text = str(source)
        else:
            with open(source) as fh:
                text = fh.read()
        rows = list(csv.reader(io.StringIO(text)))
        header = [h.strip() for h in rows[0]]
        body = np.array([r for r in rows[1:] if r], dtype=float).reshape(-1, len(header))
        c = {h: body[:, i] for i, h in enumerate(header)}
        try:
            if "x" in c:
                pick = lambda *names: np.stack([c[k] for k in names], axis=1) if all(k in c for k in names) else None
                return cls(c["x"], c["y"], c["z"], pick("xstar"), pick("u"), pick("ux"), c.get("uy"))
            pick = lambda *names: np.stack([c[k] for k in names], axis=1) if all(k in c for k in names) else None
            return cls(pick("x1", "x2"), c["y"], pick("z1", "z2"), pick("xstar1", "xstar2"),
                       pick("u1", "u2"), pick("ux1", "ux2"), c.get("uy"))
        except KeyError as exc:
            raise ValidationError(f"data CSV is missing column {exc}") from exc


def as_sample_set(data) -> SampleSet:
    if isinstance(data, SampleSet):
        return data
    if isinstance(data, (list, tuple)) and data and isinstance(data[0], ModelSample):
        return SampleSet.from_records(list(data))
    raise ValidationError("data must be a SampleSet or a non-empty list of ModelSample")


def _points(samples) -> np.ndarray:
    z = np.asarray(samples, dtype=float)
    if z.size == 0:
        raise ValidationError("empty sample")
    if z.ndim == 1:
        z = z[:, None]
    return z


@dataclass(frozen=True)
class KernelSpec:
    """Indicator kernel of the open unit ball, K(u) = I(|u| < 1), with bandwidth h."""

    bandwidth: float

    def __post_init__(self):
        h = float(self.bandwidth)
        if not (math.isfinite(h) and h > 0):
            raise ValidationError("bandwidth must be positive")
        object.__setattr__(self, "bandwidth", h)


def default_bandwidth(z, c: float = 1.0) -> KernelSpec:
    """h = c * sd(z) * n^(-1/5) in 1-D and n^(-1/6) in 2-D (sd averaged over axes)."""
    z = _points(z)
    n, d = z.shape
    sd = float(np.mean(np.std(z, axis=0, ddof=1))) if n > 1 else 1.0
    rate = -1 / 5 if d == 1 else -1 / 6
    return KernelSpec(c * (sd if sd > 0 else 1.0) * n**rate)


# --------------------------------------------------------------------------
# empirical characteristic functions


def _exp_sums(z: np.ndarray, w: np.ndarray, freq: Grid) -> np.ndarray:
    """sum_j w_j exp(i s.z_j) at every node of ``freq``.

    In 1-D the nodes are walked outward from s = 0 by multiplying with
    exp(+-i ds z_j), reseeding from exact exponentials every few steps; at
    s = 0 the result is exactly sum_j w_j. In 2-D the kernel factorises
    into a matrix product of per-axis exponentials.
    """
    n_nodes, ds = freq.points, freq.spacing
    if z.shape[1] != freq.dim:
        raise ValidationError("sample dimension differs from grid dimension")
    if freq.dim == 1:
        zz = z[:, 0]
        out = np.empty(n_nodes, dtype=complex)
        c = n_nodes // 2
        out[c] = w.sum()
        for sign, count in ((1, n_nodes - c - 1), (-1, c)):
            step = np.exp(sign * 1j * ds * zz)
            cur = w.astype(complex)
            for m in range(1, count + 1):
                if m % _RESEED == 0:
                    cur = w * np.exp(sign * 1j * m * ds * zz)
                else:
                    cur = cur * step
                out[c + sign * m] = cur.sum()
        return out
    s = freq.nodes
    out = np.zeros(freq.shape, dtype=complex)
    for start in range(0, z.shape[0], 4096):
        zc, wc = z[start:start + 4096], w[start:start + 4096]
        e1 = np.exp(1j * np.outer(s, zc[:, 0]))
        e2 = np.exp(1j * np.outer(s, zc[:, 1]))
        out += (e1 * wc) @ e2.T
    return out


def ecf(samples, freq_grid: Grid) -> GriddedFunction:
    """(1/n) sum_j exp(i s.z_j) on the frequency grid."""
    z = _points(samples)
    n = z.shape[0]
    return GriddedFunction(freq_grid, _exp_sums(z, np.ones(n), freq_grid) / n)


def ecf_derivative(samples, freq_grid: Grid, k: int = 0) -> GriddedFunction:
    """Analytic partial derivative along axis k: (1/n) sum_j i z_jk exp(i s.z_j)."""
    z = _points(samples)
    if not 0 <= k < z.shape[1]:
        raise ValidationError(f"axis {k} out of range")
    n = z.shape[0]
    return GriddedFunction(freq_grid, _exp_sums(z, 1j * z[:, k], freq_grid) / n)


# --------------------------------------------------------------------------
# kernel regression


@dataclass(frozen=True, eq=False)
class KernelEstimate:
    """Nadaraya-Watson values on the grid plus the coverage mask
    (False where no sample fell inside the window; the value there is 0)."""

    values: GriddedFunction
    covered: np.ndarray

    @property
    def masked_fraction(self) -> float:
        return float(1.0 - self.covered.mean())


def _moment(data: SampleSet, moment: str, axis: int) -> np.ndarray:
    if moment == "y":
        return data.y
    if moment == "xy":
        if not 0 <= axis < data.dim:
            raise ValidationError(f"axis {axis} out of range")
        return data.x[:, axis] * data.y
    raise ValidationError(f"moment must be 'y' or 'xy', got {moment!r}")


def _window_sums(z: np.ndarray, v: np.ndarray, grid: Grid, h: float):
    """Counts and sums of v over samples with |z_i - node| < h, for every node."""
    if grid.dim == 1:
        order = np.argsort(z[:, 0], kind="stable")
        zs = z[order, 0]
        csum = np.concatenate([[0.0], np.cumsum(v[order])])
        x = grid.nodes
        lo = np.searchsorted(zs, x - h, side="right")
        hi = np.searchsorted(zs, x + h, side="left")
        return (hi - lo).astype(float), csum[hi] - csum[lo]
    x = grid.nodes
    order = np.argsort(z[:, 0], kind="stable")
    zs, vs = z[order], v[order]
    counts = np.zeros(grid.shape)
    sums = np.zeros(grid.shape)
    lo = np.searchsorted(zs[:, 0], x - h, side="right")
    hi = np.searchsorted(zs[:, 0], x + h, side="left")
    for i in range(grid.points):
        if hi[i] <= lo[i]:
            continue
        blk = zs[lo[i]:hi[i]]
        inside = (blk[:, 0, None] - x[i]) ** 2 + (blk[:, 1, None] - x[None, :]) ** 2 < h * h
        counts[i] = inside.sum(axis=0)
        sums[i] = vs[lo[i]:hi[i]] @ inside
    return counts, sums


def nadaraya_watson(data, moment: str, eval_grid: Grid, kspec: KernelSpec, axis: int = 0) -> KernelEstimate:
    """Ratio of indicator-kernel sums of y (or x_k y) to the window count."""
    data = as_sample_set(data)
    if data.dim != eval_grid.dim:
        raise ValidationError("data dimension differs from grid dimension")
    v = _moment(data, moment, axis)
    counts, sums = _window_sums(data.z, v, eval_grid, kspec.bandwidth)
    covered = counts > 0
    vals = np.where(covered, sums / np.where(covered, counts, 1.0), 0.0)
    return KernelEstimate(GriddedFunction(eval_grid, vals), covered)


@dataclass(frozen=True, eq=False)
class SpectralTriple:
    """eps1 = Ft(w1), its per-axis derivatives, eps2_k = Ft(w2_k), on one frequency grid."""

    eps1: GriddedFunction
    eps1_deriv: tuple
    eps2: tuple
    n: int | None = None
    covered: np.ndarray | None = None
    clipped_fraction: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.eps1.grid


def spectral_estimates(data, bound: PolyBound | None, kspec: KernelSpec, space_grid: Grid) -> SpectralTriple:
    """NW -> envelope clip -> forward FT for w1 and each w2_k; eps1 derivatives
    by central differences."""
    data = as_sample_set(data)
    nw1 = nadaraya_watson(data, "y", space_grid, kspec)

    def spectrum(est: KernelEstimate):
        f = est.values
        clipped = 0.0
        if bound is not None:
            clipped = float(clipped_mask(f, bound)[est.covered].mean()) if est.covered.any() else 0.0
            f = clip_to_bound(f, bound)
        return forward_ft(f), clipped

    eps1, clipped = spectrum(nw1)
    eps2 = tuple(spectrum(nadaraya_watson(data, "xy", space_grid, kspec, axis=k))[0] for k in range(space_grid.dim))
    deriv = tuple(spectral_derivative(eps1, k) for k in range(space_grid.dim))
    return SpectralTriple(eps1, deriv, eps2, data.n, nw1.covered, clipped)


# --------------------------------------------------------------------------
# leave-self-out weighted kernel estimator and its closed-form transform


def neighbour_counts(z: np.ndarray, h: float) -> np.ndarray:
    """alpha_i = #{j != i : |z_j - z_i| < h}."""
    z = _points(z)
    if z.shape[1] == 1:
        zs = np.sort(z[:, 0])
        hi = np.searchsorted(zs, z[:, 0] + h, side="left")
        lo = np.searchsorted(zs, z[:, 0] - h, side="right")
        return (hi - lo - 1).astype(float)
    out = np.empty(z.shape[0])
    for start in range(0, z.shape[0], 1024):
        blk = z[start:start + 1024]
        d2 = ((blk[:, None, :] - z[None, :, :]) ** 2).sum(axis=2)
        out[start:start + 1024] = (d2 < h * h).sum(axis=1) - 1
    return out


def weighted_kernel_estimate(data, kspec: KernelSpec, points, moment: str = "y", axis: int = 0) -> np.ndarray:
    """Spatial form sum_{alpha_i > 0} v_i / alpha_i * K((z_i - z)/h) at ``points`` (shape (m, d))."""
    data = as_sample_set(data)
    h = kspec.bandwidth
    alpha = neighbour_counts(data.z, h)
    keep = alpha > 0
    coef = _moment(data, moment, axis)[keep] / alpha[keep]
    zk = data.z[keep]
    p = _points(points)
    d2 = ((p[:, None, :] - zk[None, :, :]) ** 2).sum(axis=2)
    return (d2 < h * h).astype(float) @ coef


def ball_transform(s_mesh: tuple, h: float) -> np.ndarray:
    """int_{|u| < h} e^{iu.s} du: 2 sin(hs)/s in 1-D, 2 pi h J1(h|s|)/|s| in 2-D."""
    if len(s_mesh) == 1:
        return 2 * h * np.sinc(h * s_mesh[0] / math.pi)
    r = np.sqrt(s_mesh[0] ** 2 + s_mesh[1] ** 2)
    hr = h * r
    safe = np.where(hr > 0, hr, 1.0)
    return np.where(hr > 0, 2 * math.pi * h * h * j1(safe) / safe, math.pi * h * h)


@dataclass(frozen=True, eq=False)
class WeightedSincResult:
    ft: GriddedFunction
    skipped: int


def weighted_sinc_ft(data, kspec: KernelSpec, freq_grid: Grid, moment: str = "y", axis: int = 0) -> WeightedSincResult:
    """Closed-form transform of ``weighted_kernel_estimate``:

        sum_{alpha_i > 0} (v_i / alpha_i) e^{i s.z_i} B_h(s),

    with B_h the transform of the ball indicator (2h sinc(hs/pi) in 1-D).
    Terms with alpha_i = 0 are skipped and counted.
    """
    data = as_sample_set(data)
    if data.n < 2:
        raise ValidationError("weighted estimator needs n >= 2")
    h = kspec.bandwidth
    alpha = neighbour_counts(data.z, h)
    keep = alpha > 0
    coef = _moment(data, moment, axis)[keep] / alpha[keep]
    sums = _exp_sums(data.z[keep], coef.astype(complex), freq_grid) if keep.any() else 0.0
    vals = sums * ball_transform(freq_grid.mesh(), h)
    return WeightedSincResult(GriddedFunction(freq_grid, np.broadcast_to(vals, freq_grid.shape)),
                              int((~keep).sum()))
