"""Localized reproducing-kernel spaces spanned by translates of a generator.

A space is described by a generator ``phi`` (the frame elements are
``F_gamma = phi(. - gamma)``), a relatively separated node set ``Gamma``,
an envelope ``Theta`` dominating every translate, and frame constants
``A, B`` with ``A ||f||_p^p <= sum |c_gamma|^p <= B ||f||_p^p``.

Functions are handled on uniform cell-centred grids: the value stored for
a cell is the value at its centre, and integrals are midpoint sums.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import sparse
from scipy.interpolate import BSpline
from scipy.spatial import cKDTree
from scipy.special import zeta

from .errors import (
    AdmissibilityError,
    EmptyRegionWarning,
    EvaluationError,
    NonAmalgamError,
    ZeroGapError,
)

# Left limit at the right edge of a half-open unit cell.
_EDGE = 1e-12
# Floor for the constant D > 1.
D_FLOOR = 1.0 + 1e-6
# exp(-t^2) underflows to zero for t beyond this.
_GAUSS_CUTOFF = math.sqrt(745.2)


def dual_exponent(p: float) -> float:
    """Hölder conjugate ``p' = p / (p - 1)``; ``inf`` for ``p = 1``."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return math.inf if p == 1 else p / (p - 1.0)


def min_tail_exponent(p: float) -> float:
    """Smallest admissible envelope decay exponent: ``p'`` for ``p > 1``, 1 for ``p = 1``."""
    return 1.0 if p == 1 else dual_exponent(p)


# ---------------------------------------------------------------------------
# generators and envelopes


class _Profiled:
    """A function on R^n, optionally a tensor product of a 1-D profile."""

    n: int
    radius: float
    separable: bool

    def profile(self, t):
        raise NotImplementedError

    def _full(self, x):
        raise NotImplementedError

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            out = self.profile(x)
        else:
            if x.shape[-1] != self.n:
                raise ValueError(f"expected trailing dimension {self.n}, got shape {x.shape}")
            if self.separable:
                out = np.prod(self.profile(x), axis=-1)
            else:
                out = self._full(x)
        out = np.asarray(out, dtype=np.float64)
        if not np.all(np.isfinite(out)):
            raise EvaluationError(f"{self!r} produced non-finite values")
        return out

    @property
    def compact(self) -> bool:
        return math.isfinite(self.radius)


class Generator(_Profiled):
    """Generator of a shift-type frame, evaluated as a tensor product of a 1-D profile.

    Use the constructors :meth:`indicator`, :meth:`bspline`, :meth:`gaussian`,
    :meth:`tabulated`, :meth:`from_file` or :meth:`custom`.
    """

    def __init__(self, kind: str, profile: Callable, radius: float, n: int = 1,
                 breakpoints: Sequence[float] | None = None, scale: float = 1.0,
                 label: str | None = None):
        self.kind = kind
        self._profile = profile
        self.radius = float(radius)
        self.n = int(n)
        self.scale = float(scale)
        self.separable = True
        self._breakpoints = None if breakpoints is None else tuple(float(b) for b in breakpoints)
        self.label = label or kind

    def __repr__(self):
        return f"Generator({self.label!r}, n={self.n}, scale={self.scale:g})"

    def profile(self, t):
        t = np.asarray(t, dtype=np.float64)
        return self.scale * np.asarray(self._profile(t), dtype=np.float64)

    def scaled(self, factor: float) -> "Generator":
        return Generator(self.kind, self._profile, self.radius, self.n, self._breakpoints,
                         self.scale * factor, self.label)

    def breakpoints(self, cutoff: float | None = None) -> np.ndarray:
        """Points splitting the 1-D profile's support into smooth pieces of length <= 1."""
        if self._breakpoints is not None:
            lo, hi = self._breakpoints[0], self._breakpoints[-1]
            inner = list(self._breakpoints)
        else:
            r = self.radius if self.compact else (cutoff or 40.0)
            if cutoff is not None:
                r = min(r, cutoff)
            lo, hi = -r, r
            inner = [lo, hi]
        pts = set(inner)
        for k in range(math.ceil(lo), math.floor(hi) + 1):
            pts.add(float(k))
        pts = np.array(sorted(p for p in pts if lo <= p <= hi))
        return pts

    # constructors ---------------------------------------------------------

    @classmethod
    def indicator(cls, lo: float = 0.0, hi: float = 0.5, n: int = 1) -> "Generator":
        """Characteristic function of the closed interval ``[lo, hi]`` (per axis)."""
        lo, hi = float(lo), float(hi)

        def prof(t):
            return ((t >= lo) & (t <= hi)).astype(np.float64)

        return cls("indicator", prof, max(abs(lo), abs(hi)), n, (lo, hi),
                   label=f"indicator[{lo:g},{hi:g}]")

    @classmethod
    def bspline(cls, order: int = 2, n: int = 1) -> "Generator":
        """Centred cardinal B-spline of the given order (order 2 is the hat on [-1, 1])."""
        m = int(order)
        if m < 1:
            raise ValueError("B-spline order must be >= 1")
        knots = np.arange(m + 1, dtype=np.float64) - m / 2.0
        basis = BSpline.basis_element(knots, extrapolate=False)

        def prof(t):
            t = np.asarray(t, dtype=np.float64)
            v = basis(t.ravel()).reshape(t.shape)
            return np.nan_to_num(v, nan=0.0)

        return cls("bspline", prof, m / 2.0, n, tuple(knots), label=f"bspline{m}")

    @classmethod
    def gaussian(cls, width: float = 1.0, n: int = 1) -> "Generator":
        """``exp(-(t / width)^2)`` per axis; treated as supported where it is nonzero in float64."""
        w = float(width)

        def prof(t):
            return np.exp(-np.square(t / w))

        return cls("gaussian", prof, _GAUSS_CUTOFF * w, n, label=f"gaussian{w:g}")

    @classmethod
    def tabulated(cls, xs, values, n: int = 1) -> "Generator":
        """Linear interpolation through ``(xs, values)``, zero outside the table."""
        xs = np.asarray(xs, dtype=np.float64)
        vs = np.asarray(values, dtype=np.float64)
        order = np.argsort(xs)
        xs, vs = xs[order], vs[order]
        if xs.size < 2 or np.any(np.diff(xs) <= 0):
            raise ValueError("tabulated generator needs >= 2 distinct abscissae")

        def prof(t):
            return np.interp(t, xs, vs, left=0.0, right=0.0)

        return cls("tabulated", prof, float(max(abs(xs[0]), abs(xs[-1]))), n,
                   (float(xs[0]), float(xs[-1])), label="tabulated")

    @classmethod
    def from_file(cls, path, n: int = 1) -> "Generator":
        """Load a two-column ``x value`` text file."""
        data = np.loadtxt(path, ndmin=2)
        if data.shape[1] != 2:
            raise ValueError(f"{path}: expected two columns, got {data.shape[1]}")
        return cls.tabulated(data[:, 0], data[:, 1], n)

    @classmethod
    def custom(cls, func: Callable, radius: float = math.inf, n: int = 1,
               label: str = "custom") -> "Generator":
        """Any vectorised 1-D profile; ``radius`` bounds its support (``inf`` if unbounded)."""
        return cls("custom", func, radius, n, label=label)


class Envelope(_Profiled):
    """Nonnegative dominating function ``Theta`` with optional decay constants.

    ``tail_constant`` and ``tail_exponent`` are the ``C, alpha`` with
    ``sum_{k not in C_N} sup_{[0,1]^n} Theta(. - k) < C / N^(n alpha)``;
    :func:`fit_tail` estimates them when they are not known.
    """

    def __init__(self, func: Callable, n: int = 1, *, radius: float = math.inf,
                 separable: bool = True, tail_constant: float | None = None,
                 tail_exponent: float | None = None, label: str = "envelope"):
        self._func = func
        self.n = int(n)
        self.radius = float(radius)
        self.separable = separable
        self.tail_constant = tail_constant
        self.tail_exponent = tail_exponent
        self.label = label

    def __repr__(self):
        return f"Envelope({self.label!r}, n={self.n})"

    def profile(self, t):
        return np.abs(np.asarray(self._func(np.asarray(t, dtype=np.float64)), dtype=np.float64))

    def _full(self, x):
        return np.abs(np.asarray(self._func(x), dtype=np.float64))

    @cached_property
    def amalgam_norm(self) -> float:
        return wiener_amalgam_norm(self)

    def with_tail(self, C: float, alpha: float) -> "Envelope":
        return Envelope(self._func, self.n, radius=self.radius, separable=self.separable,
                        tail_constant=C, tail_exponent=alpha, label=self.label)

    @classmethod
    def from_generator(cls, gen: Generator) -> "Envelope":
        """``Theta = |phi|``: the tightest envelope for a shift-type frame."""
        return cls(gen.profile, gen.n, radius=gen.radius, label=f"|{gen.label}|")

    @classmethod
    def indicator(cls, lo: float, hi: float, n: int = 1) -> "Envelope":
        g = Generator.indicator(lo, hi, n)
        return cls(g.profile, n, radius=g.radius, label=g.label)

    @classmethod
    def gaussian(cls, width: float = 1.0, n: int = 1) -> "Envelope":
        g = Generator.gaussian(width, n)
        return cls(g.profile, n, radius=g.radius, label=g.label)

    @classmethod
    def exponential(cls, scale: float = 1.0, n: int = 1) -> "Envelope":
        """``exp(-|x|_2 / scale)``; not separable for ``n > 1``."""
        s = float(scale)
        if n == 1:
            return cls(lambda t: np.exp(-np.abs(t) / s), 1, label=f"exp{s:g}")
        return cls(lambda x: np.exp(-np.linalg.norm(x, axis=-1) / s), n, separable=False,
                   label=f"exp{s:g}")

    @classmethod
    def zero(cls, n: int = 1) -> "Envelope":
        return cls(lambda t: np.zeros_like(t), n, radius=0.0, label="zero")


# ---------------------------------------------------------------------------
# amalgam norm and envelope tails


def _cell_offsets(resolution: int) -> np.ndarray:
    return np.append(np.arange(resolution, dtype=np.float64) / resolution, 1.0 - _EDGE)


def _cell_sups(g: _Profiled, W: int, resolution: int) -> np.ndarray:
    """``sup_{x in [0,1)^n} |g(x + m)|`` for every cell ``m`` in ``[-W, W]^n``."""
    off = _cell_offsets(resolution)
    ks = np.arange(-W, W + 1, dtype=np.float64)
    if g.n == 1 or g.separable:
        vals = np.abs(np.asarray(g.profile(ks[:, None] + off[None, :])))
        if not np.all(np.isfinite(vals)):
            raise EvaluationError(f"{g!r} produced non-finite values")
        s1 = vals.max(axis=1)
        out = s1
        for _ in range(g.n - 1):
            out = np.multiply.outer(out, s1)
        return out
    # generic n-d: brute force over a res^n sample of every cell
    shape = (2 * W + 1,) * g.n
    out = np.empty(shape)
    mesh = np.stack(np.meshgrid(*([off] * g.n), indexing="ij"), axis=-1).reshape(-1, g.n)
    for idx in np.ndindex(*shape):
        m = ks[list(idx)]
        out[idx] = np.abs(g(mesh + m)).max()
    return out


def _linf_index(W: int, n: int) -> np.ndarray:
    r = np.abs(np.arange(-W, W + 1))
    out = r
    for _ in range(n - 1):
        out = np.maximum.outer(out, r)
    return out


_POWER_TOL = 1e-9


def _amalgam_window(g: _Profiled, resolution: int, tol: float, max_window: int):
    if g.compact:
        W = int(math.ceil(g.radius)) + 1
        sups = _cell_sups(g, W, resolution)
        return W, sups, 0.0
    W = 8
    prev = None
    while True:
        sups = _cell_sups(g, W, resolution)
        ring = _linf_index(W, g.n)
        total = float(sups.sum())
        outer = float(sups[ring > W // 2].sum())
        if outer <= tol * max(total, 1e-300):
            return W, sups, outer
        # power-law tails: ring masses shrink geometrically under doubling,
        # so the unsummed remainder is at most outer * q / (1 - q)
        q = outer / prev if prev else 1.0
        if q < 0.9:
            rest = outer * q / (1.0 - q)
            if rest <= _POWER_TOL * total or 2 * W > max_window:
                return W, sups, rest
        prev = outer
        if 2 * W > max_window:
            raise NonAmalgamError(
                f"amalgam partial sums of {g!r} not settled at window {W} "
                f"(outer mass {outer:.3g} of {total:.3g})")
        W *= 2


def wiener_amalgam_norm(g: _Profiled, resolution: int = 1000, *, tol: float = 1e-12,
                        max_window: int = 4096, full_output: bool = False):
    """Amalgam norm ``sum_k sup_{x in [0,1)^n} |g(x + k)|``.

    Cells are half-open; the supremum over a cell is taken over
    ``resolution`` equispaced points per axis plus the left limit at the
    right edge, so an indicator of ``[0, 1/2]`` has norm exactly 1.

    With ``full_output`` also returns a dict holding the summation window
    and a bound on the omitted tail (from the envelope's ``C, alpha`` when
    known, otherwise the mass of the last half-window that was summed).
    Slowly decaying power-law tails are closed off with a geometric
    estimate of the remainder, which is added to the returned value.
    """
    W, sups, outer = _amalgam_window(g, resolution, tol, max_window)
    value = float(sups.sum()) + (0.0 if g.compact else outer)
    if not full_output:
        return value
    C = getattr(g, "tail_constant", None)
    alpha = getattr(g, "tail_exponent", None)
    if g.compact:
        bound = 0.0
    elif C is not None and alpha is not None:
        bound = C / (2 * W + 1) ** (g.n * alpha)
    else:
        bound = outer
    return value, {"window": W, "tail_bound": bound, "compact": g.compact}


def envelope_tail_sum(theta: _Profiled, N: float, resolution: int = 1000, *,
                      tol: float = 1e-12, max_window: int = 4096, full_output: bool = False):
    """``sum_{k in Z^n, k not in [-N/2, N/2]^n} sup_{x in [0,1)^n} |Theta(x - k)|``.

    Returns 0 (with ``compact`` set in the info dict) once ``N/2`` reaches
    past the envelope's support.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    W, sups, outer = _amalgam_window(theta, resolution, tol, max_window)
    # k -> -k maps the cell of Theta(. - k) onto cell index -k; the index set is symmetric
    mask = _linf_index(W, theta.n) > N / 2.0
    value = float(sups[mask].sum())
    compact = theta.compact and N / 2.0 >= W
    if full_output:
        return value, {"compact": compact, "window": W, "truncation_bound": 0.0 if theta.compact else outer}
    return value


@dataclass(frozen=True)
class TailFit:
    """Decay constants ``C, alpha`` dominating the envelope tail on a ladder of ``N``."""

    C: float
    alpha: float
    alpha_fit: float | None
    ladder: tuple
    sums: tuple
    compact: bool

    def dominates(self, n: int) -> bool:
        return all(s < self.C / N ** (n * self.alpha) for N, s in zip(self.ladder, self.sums))


def fit_tail(theta: _Profiled, p: float, ladder: Sequence[float] | None = None,
             alpha: float | None = None, resolution: int = 1000) -> TailFit:
    """Fit ``S(N) ~ C / N^(n alpha)`` by log-log regression and make ``C`` dominate every rung.

    The exponent is the regressed slope (or ``alpha`` if given), and must
    be admissible: ``alpha >= p'`` for ``p > 1`` and ``alpha >= 1`` for
    ``p = 1``. For a compactly supported envelope the tail vanishes and
    any ``C > 0`` works; the unit constant with the minimal admissible
    exponent is returned.
    """
    amin = min_tail_exponent(p)
    if ladder is None:
        W = int(math.ceil(theta.radius)) + 1 if theta.compact else 64
        top = max(2, min(2 * W, 128))
        ladder = tuple(sorted({1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64, 96, 128} & set(range(1, top + 1))))
    ladder = tuple(float(N) for N in ladder)
    sums = tuple(envelope_tail_sum(theta, N, resolution) for N in ladder)
    n = theta.n
    pos = [(N, s) for N, s in zip(ladder, sums) if s > 0]
    if not pos:
        a = amin if alpha is None else alpha
        if a < amin:
            raise AdmissibilityError(f"tail exponent {a} below admissible minimum {amin}")
        return TailFit(1.0, a, None, ladder, sums, theta.compact)
    alpha_fit = None
    if len(pos) >= 2:
        xs = np.log([N for N, _ in pos])
        ys = np.log([s for _, s in pos])
        slope = np.polyfit(xs, ys, 1)[0]
        alpha_fit = float(-slope / n)
    a = alpha if alpha is not None else (alpha_fit if alpha_fit is not None else amin)
    if a < amin:
        raise AdmissibilityError(
            f"envelope tail decays like N^-{n * a:.3g}; need alpha >= {amin:.3g} for p = {p:g}")
    C = max(s * N ** (n * a) for N, s in zip(ladder, sums)) * (1.0 + 1e-9)
    return TailFit(float(C), float(a), alpha_fit, ladder, sums, theta.compact)


# ---------------------------------------------------------------------------
# nodes, coefficients, grids


class Lattice:
    """Finite relatively separated node set ``Gamma`` in R^n."""

    def __init__(self, nodes, occupancy: float | None = None):
        nodes = np.asarray(nodes, dtype=np.float64)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        self.nodes = nodes
        self.occupancy = occupancy

    def __len__(self):
        return self.nodes.shape[0]

    def __repr__(self):
        return f"Lattice({len(self)} nodes, n={self.n})"

    @property
    def n(self) -> int:
        return self.nodes.shape[1]

    @classmethod
    def integer(cls, lo: float, hi: float, n: int = 1, spacing: float = 1.0) -> "Lattice":
        """``spacing * Z^n`` restricted to the closed cube ``[lo, hi]^n``."""
        ks = np.arange(math.ceil(lo / spacing), math.floor(hi / spacing) + 1) * spacing
        mesh = np.meshgrid(*([ks] * n), indexing="ij")
        return cls(np.stack([m.ravel() for m in mesh], axis=-1))

    @cached_property
    def gap(self) -> float:
        return lattice_stats(self)[0]

    @cached_property
    def density(self) -> int:
        return lattice_stats(self)[1]

    def subset(self, mask) -> "Lattice":
        return Lattice(self.nodes[np.asarray(mask, dtype=bool)], self.occupancy)


def lattice_stats(lattice: Lattice) -> tuple[float, int]:
    """Gap ``beta`` (min pairwise sup-norm distance) and ``N(Gamma)`` (max half-open cell count)."""
    nodes = lattice.nodes
    if len(nodes) == 0:
        return math.inf, 0
    cells = np.floor(nodes).astype(np.int64)
    _, counts = np.unique(cells, axis=0, return_counts=True)
    density = int(counts.max())
    if len(nodes) < 2:
        return math.inf, density
    dist, _ = cKDTree(nodes).query(nodes, k=2, p=np.inf)
    beta = float(dist[:, 1].min())
    if beta == 0.0:
        raise ZeroGapError("node set contains duplicate points")
    return beta, density


@dataclass
class Coefficients:
    """Finitely supported coefficient sequence ``(gamma, c_gamma)``."""

    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=np.float64)
        if self.nodes.ndim == 1:
            self.nodes = self.nodes[:, None]
        self.values = np.asarray(self.values, dtype=np.float64).ravel()
        if self.values.shape[0] != self.nodes.shape[0]:
            raise ValueError("one coefficient per node required")

    def lp_norm(self, p: float) -> float:
        return float(np.sum(np.abs(self.values) ** p) ** (1.0 / p))

    def scaled(self, lam: float) -> "Coefficients":
        return Coefficients(self.nodes, lam * self.values)


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centred grid: cell ``i`` spans ``origin + step*[i, i+1)`` per axis."""

    origin: tuple
    step: float
    shape: tuple

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("grid step must be positive")
        object.__setattr__(self, "origin", tuple(float(o) for o in np.atleast_1d(self.origin)))
        object.__setattr__(self, "shape", tuple(int(s) for s in np.atleast_1d(self.shape)))
        if len(self.origin) != len(self.shape):
            raise ValueError("origin and shape dimensions differ")

    @classmethod
    def covering(cls, lo, hi, step: float) -> "Grid":
        """Smallest grid aligned to multiples of ``step`` that covers ``[lo, hi]``."""
        lo = np.atleast_1d(np.asarray(lo, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(hi, dtype=np.float64))
        start = np.floor(lo / step + 1e-9) * step
        count = np.ceil((hi - start) / step - 1e-9).astype(int)
        return cls(tuple(start), float(step), tuple(np.maximum(count, 1)))

    @property
    def n(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_measure(self) -> float:
        return self.step ** self.n

    def axes(self) -> list[np.ndarray]:
        return [o + self.step * (np.arange(s) + 0.5) for o, s in zip(self.origin, self.shape)]

    def points(self) -> np.ndarray:
        """Cell centres, shape ``(size, n)`` in C order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @property
    def lo(self) -> np.ndarray:
        return np.array(self.origin)

    @property
    def hi(self) -> np.ndarray:
        return np.array(self.origin) + self.step * np.array(self.shape)

    def refined(self) -> "Grid":
        return Grid(self.origin, self.step / 2.0, tuple(2 * s for s in self.shape))


@dataclass
class GridFunction:
    """Values of a function at the cell centres of ``grid``."""

    grid: Grid
    values: np.ndarray
    coefficients: Coefficients | None = field(default=None, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(self.grid.shape)

    def scaled(self, lam: float) -> "GridFunction":
        c = None if self.coefficients is None else self.coefficients.scaled(lam)
        return GridFunction(self.grid, lam * self.values, c)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        if other.grid != self.grid:
            raise ValueError("grids differ")
        return GridFunction(self.grid, self.values - other.values)

    def __call__(self, points) -> np.ndarray:
        return evaluate_at(self, points)


def evaluate_at(f: GridFunction, points) -> np.ndarray:
    """Multilinear interpolation between cell centres; constant beyond the outer centres."""
    from . import kernels

    g = f.grid
    pts = np.asarray(points, dtype=np.float64)
    if g.n == 1:
        x = pts[..., 0] if (pts.ndim >= 1 and pts.shape[-1] == 1 and pts.ndim > 1) else pts
        return kernels.interp_linear_1d(f.values, g.origin[0] + 0.5 * g.step, g.step, x)
    from scipy.interpolate import RegularGridInterpolator

    axes = g.axes()
    clipped = np.clip(pts, [a[0] for a in axes], [a[-1] for a in axes])
    return RegularGridInterpolator(axes, f.values, method="linear")(clipped)


# ---------------------------------------------------------------------------
# synthesis and norms


def synthesis_matrix(gen: Generator, nodes, grid: Grid) -> sparse.csr_matrix:
    """Sparse matrix ``S`` with ``S[i, k] = phi(x_i - gamma_k)`` over the grid's cell centres."""
    nodes = np.asarray(nodes, dtype=np.float64)
    if nodes.ndim == 1:
        nodes = nodes[:, None]
    if nodes.shape[1] != grid.n or gen.n != grid.n:
        raise ValueError("dimension mismatch between nodes, generator and grid")
    axes = grid.axes()
    rows, cols, vals = [], [], []
    R = gen.radius
    for k, gamma in enumerate(nodes):
        idx_ranges, factors = [], []
        empty = False
        for ax, (centres, gk) in enumerate(zip(axes, gamma)):
            if math.isfinite(R):
                i0 = int(np.searchsorted(centres, gk - R, side="left"))
                i1 = int(np.searchsorted(centres, gk + R, side="right"))
            else:
                i0, i1 = 0, centres.size
            if i1 <= i0:
                empty = True
                break
            idx_ranges.append(np.arange(i0, i1))
            factors.append(gen.profile(centres[i0:i1] - gk))
        if empty:
            continue
        block = factors[0]
        for fct in factors[1:]:
            block = np.multiply.outer(block, fct)
        flat = np.ravel_multi_index(np.meshgrid(*idx_ranges, indexing="ij"), grid.shape).ravel()
        block = block.ravel()
        nz = block != 0
        rows.append(flat[nz])
        cols.append(np.full(int(nz.sum()), k))
        vals.append(block[nz])
    if not np.all(np.isfinite(np.concatenate(vals) if vals else [])):
        raise EvaluationError(f"{gen!r} produced non-finite values")
    if rows:
        rows, cols, vals = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(grid.size, nodes.shape[0]))


def synthesize(c: Coefficients, gen: Generator, grid: Grid, matrix=None) -> GridFunction:
    """``f(x) = sum_gamma c_gamma phi(x - gamma)`` at every cell centre of ``grid``."""
    S = synthesis_matrix(gen, c.nodes, grid) if matrix is None else matrix
    return GridFunction(grid, S @ c.values, c)


def _region_mask(grid: Grid, region) -> np.ndarray:
    if region is None:
        return np.ones(grid.shape, dtype=bool)
    return np.asarray(region.contains(grid.points())).reshape(grid.shape)


def lp_norm_pp(f: GridFunction, p: float, region=None) -> float:
    """``||f||_p^p`` by the midpoint rule, optionally restricted to ``region``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    mask = _region_mask(f.grid, region)
    if not mask.any():
        warnings.warn("region contains no grid points; norm is zero", EmptyRegionWarning, stacklevel=2)
        return 0.0
    return float(np.sum(np.abs(f.values[mask]) ** p) * f.grid.cell_measure)


def lp_norm(f: GridFunction, p: float, region=None) -> float:
    """``(sum_{x in region} |f(x)|^p step^n)^(1/p)``."""
    return lp_norm_pp(f, p, region) ** (1.0 / p)


def sup_norm(f: GridFunction, region=None) -> float:
    mask = _region_mask(f.grid, region)
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(f.values[mask])))


def sup_bound_D(B: float, N_gamma: float, amalgam: float, p: float) -> float:
    """Constant ``D > 1`` with ``||f||_inf <= D ||f||_p`` on the space.

    ``D = max(B^(1/p) N(Gamma)^(1/p') ||Theta||_W^(1/p'), 1 + 1e-6)``; for
    ``p = 1`` the exponent ``1/p'`` is zero.
    """
    if B <= 0 or N_gamma < 1 or amalgam <= 0:
        raise ValueError("sup_bound_D needs B > 0, N_gamma >= 1, amalgam > 0")
    q = dual_exponent(p)
    inv_q = 0.0 if math.isinf(q) else 1.0 / q
    return max(B ** (1.0 / p) * N_gamma ** inv_q * amalgam ** inv_q, D_FLOOR)


# ---------------------------------------------------------------------------
# frame bounds


@lru_cache(maxsize=64)
def _leggauss(npts: int):
    return np.polynomial.legendre.leggauss(npts)


def fourier_transform(gen: Generator, omegas, *, cutoff: float = 40.0) -> np.ndarray:
    """``phi_hat(w) = int phi(x) exp(-2 pi i w x) dx`` for a 1-D generator.

    Composite Gauss-Legendre over smooth pieces of length <= 1, with the
    node count per piece scaled to the largest frequency requested.
    Unbounded profiles are integrated over ``[-cutoff, cutoff]``.
    """
    if gen.n != 1:
        raise ValueError("fourier_transform handles 1-D generators")
    omegas = np.atleast_1d(np.asarray(omegas, dtype=np.float64))
    bps = gen.breakpoints(None if gen.compact else cutoff)
    if gen.kind == "gaussian":
        # drop pieces where the profile is below 1e-17
        r = gen.radius / _GAUSS_CUTOFF * math.sqrt(-math.log(1e-17))
        bps = np.unique(np.clip(bps, -r, r))
    wmax = float(np.max(np.abs(omegas))) if omegas.size else 0.0
    out = np.zeros(omegas.shape, dtype=np.complex128)
    for a, b in zip(bps[:-1], bps[1:]):
        L = b - a
        if L <= 0:
            continue
        npts = int(math.pi * wmax * L) + 48
        npts = 32 * math.ceil(npts / 32)
        t, w = _leggauss(npts)
        x = 0.5 * (b - a) * t + 0.5 * (a + b)
        wx = 0.5 * (b - a) * w * gen.profile(x)
        phase = -2.0 * np.pi * np.multiply.outer(omegas, x)
        out += np.cos(phase) @ wx + 1j * (np.sin(phase) @ wx)
    return out


def _power_tail(t_mid, t_end, d_mid, d_end, start):
    """Extrapolate ``sum_{k >= start} c / k^q`` from two terms of a power-law sequence."""
    ok = (t_mid > 0) & (t_end > 0) & (d_end > d_mid)
    q = np.full_like(t_end, np.nan)
    q[ok] = np.log(t_mid[ok] / t_end[ok]) / np.log(d_end[ok] / d_mid[ok])
    tail = np.zeros_like(t_end)
    good = ok & (q > 1.0)
    tail[good] = t_end[good] * d_end[good] ** q[good] * zeta(q[good], start[good])
    return tail


def frame_bounds_shift_invariant(gen: Generator, n_xi: int = 64, k_max: int = 200, *,
                                 tol: float = 1e-8, full_output: bool = False):
    """Bounds ``(A1, B1)`` of the bracket ``m(xi) = sum_k |phi_hat(xi + k)|^2`` on ``[0, 1)``.

    The bracket is summed over ``|k| <= k_max`` and the remainder on each
    side is extrapolated from a power law fitted to the terms at
    ``k_max/2`` and ``k_max`` (exact for B-splines and indicators, whose
    transforms are ``|sin(pi w)|^m / |pi w|^m``). Separable ``n``-d
    generators get the product bounds. Warns when ``A1 < tol``.
    """
    if gen.n > 1:
        A1, B1 = frame_bounds_shift_invariant(_as_1d(gen), n_xi, k_max, tol=tol)
        return (A1 ** gen.n, B1 ** gen.n)
    xi = np.arange(n_xi, dtype=np.float64) / n_xi
    terms = {0: np.abs(fourier_transform(gen, xi)) ** 2}
    partial = terms[0].copy()
    quiet = 0
    k_used = k_max
    for k in range(1, k_max + 1):
        for s in (k, -k):
            terms[s] = np.abs(fourier_transform(gen, xi + s)) ** 2
            partial += terms[s]
        # rapidly decaying transforms: stop once the terms are negligible
        if max(terms[k].max(), terms[-k].max()) < 1e-18 * partial.max():
            quiet += 1
            if quiet >= 4:
                k_used = k
                break
        else:
            quiet = 0
    if k_used < k_max:
        pos_tail = neg_tail = np.zeros(n_xi)
    else:
        half = k_max // 2
        pos_tail = _power_tail(terms[half], terms[k_max], half + xi, k_max + xi, k_max + 1 + xi)
        neg_tail = _power_tail(terms[-half], terms[-k_max], half - xi, k_max - xi, k_max + 1 - xi)
    bracket = partial + pos_tail + neg_tail
    A1, B1 = float(bracket.min()), float(bracket.max())
    if A1 < tol:
        warnings.warn(f"bracket minimum {A1:.3g} below {tol:g}: translates are not a frame",
                      RuntimeWarning, stacklevel=2)
    if full_output:
        return (A1, B1), {"xi": xi, "bracket": bracket, "partial": partial,
                          "tail_estimate": float((pos_tail + neg_tail).max()), "k_max": k_used}
    return A1, B1


def _as_1d(gen: Generator) -> Generator:
    return Generator(gen.kind, gen._profile, gen.radius, 1, gen._breakpoints, gen.scale, gen.label)


def frame_constants_from_bracket(A1: float, B1: float) -> tuple[float, float]:
    """Frame constants for ``p = 2`` on ``Z^n``: ``A = 1/B1``, ``B = 1/A1``."""
    return 1.0 / B1, 1.0 / A1


def gram_frame_constants(gen: Generator, nodes, grid: Grid) -> tuple[float, float]:
    """``(A, B)`` for ``p = 2`` on a finite node set, from the extreme Gram eigenvalues."""
    S = synthesis_matrix(gen, nodes, grid)
    G = (S.T @ S).toarray() * grid.cell_measure
    ev = np.linalg.eigvalsh(G)
    if ev[0] <= 0:
        raise AdmissibilityError("translates are linearly dependent on this grid")
    return 1.0 / ev[-1], 1.0 / ev[0]


@dataclass
class LocalizationReport:
    holds: bool
    worst_slack: float
    violations: list

    def __str__(self):
        state = "holds" if self.holds else f"violated at {len(self.violations)}+ points"
        return f"localization {state}; worst slack {self.worst_slack:.3g}"


def check_localization(gen: Generator, lattice: Lattice, theta: _Profiled, grid: Grid,
                       tol: float = 1e-12, max_report: int = 20) -> LocalizationReport:
    """Check ``|F_gamma(x)| <= Theta(x - gamma)`` at every node and cell centre."""
    pts = grid.points()
    worst = math.inf
    bad = []
    for gamma in lattice.nodes:
        y = pts - gamma
        slack = theta(y) - np.abs(gen(y))
        worst = min(worst, float(slack.min()))
        if len(bad) < max_report:
            for i in np.flatnonzero(slack < -tol)[: max_report - len(bad)]:
                bad.append((tuple(gamma), tuple(pts[i]), float(slack[i])))
    return LocalizationReport(not bad and worst >= -tol, worst, bad)


# ---------------------------------------------------------------------------
# a space bundling the pieces


class Space:
    """Generator, nodes, envelope and frame constants for one ``p``."""

    def __init__(self, generator: Generator, lattice: Lattice, envelope: Envelope | None = None,
                 A: float = 1.0, B: float = 1.0, p: float = 2.0):
        self.generator = generator
        self.lattice = lattice
        self.envelope = envelope if envelope is not None else Envelope.from_generator(generator)
        self.A = float(A)
        self.B = float(B)
        self.p = float(p)
        self._matrices: dict = {}

    def __repr__(self):
        return f"Space({self.generator!r}, {self.lattice!r}, A={self.A:g}, B={self.B:g}, p={self.p:g})"

    @property
    def n(self) -> int:
        return self.generator.n

    @cached_property
    def N_gamma(self) -> int:
        return self.lattice.density

    @cached_property
    def amalgam(self) -> float:
        return wiener_amalgam_norm(self.envelope)

    @cached_property
    def D(self) -> float:
        return sup_bound_D(self.B, self.N_gamma, self.amalgam, self.p)

    def tail(self) -> TailFit:
        th = self.envelope
        if th.tail_constant is not None and th.tail_exponent is not None:
            return TailFit(th.tail_constant, th.tail_exponent, None, (), (), th.compact)
        return fit_tail(th, self.p)

    def grid_for(self, nodes, step: float, domain=None) -> Grid:
        """Grid covering every translate supported at ``nodes`` (and ``domain``)."""
        nodes = np.asarray(nodes, dtype=np.float64).reshape(-1, self.n)
        R = self.generator.radius if self.generator.compact else 40.0
        lo, hi = nodes.min(axis=0) - R, nodes.max(axis=0) + R
        if domain is not None:
            blo, bhi = domain.bounding_box
            lo, hi = np.minimum(lo, blo), np.maximum(hi, bhi)
        return Grid.covering(lo, hi, step)

    def matrix(self, grid: Grid, nodes=None) -> sparse.csr_matrix:
        nodes = self.lattice.nodes if nodes is None else np.asarray(nodes, dtype=np.float64).reshape(-1, self.n)
        key = (grid, nodes.tobytes())
        if key not in self._matrices:
            self._matrices[key] = synthesis_matrix(self.generator, nodes, grid)
        return self._matrices[key]

    def synthesize(self, c: Coefficients, grid: Grid) -> GridFunction:
        return synthesize(c, self.generator, grid, self.matrix(grid, c.nodes))
