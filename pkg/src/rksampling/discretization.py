"""Level-set discretization of functions and covering nets.

For ``j > j0`` the sets ``U_j = {|A_j f| >= (1+a)^j}`` and
``D_j = U_j minus the union of U_k for k > j`` define the piecewise constant
``h(f) = sum_j (1+a)^j chi_{D_j}``; ``D_{j0}`` is the rest. With the
approximation guarantee ``||f - A_j f||_inf <= a (1+a)^j``,

    C1(a) h <= |f| <= C2(a) h   off D_{j0},        |f| <= C2(a) (1+a)^j0   on D_{j0},

where ``C1 = 1 - a`` and ``C2 = (1 + a)^2``.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DegenerateWindowError, NetTooLargeError
from .space import GridFunction, evaluate_at, lp_norm_pp


def C1(a: float) -> float:
    return 1.0 - a


def C2(a: float) -> float:
    return (1.0 + a) ** 2


def a_for_p(p: float, tol: float = 1e-10) -> float:
    """Largest ``a`` in ``(0, 1/2]`` with ``(C2(a) / C1(a))^p <= 5/4``, by bisection."""
    if p < 1:
        raise ValueError("p must be >= 1")

    def ok(a):
        return (C2(a) / C1(a)) ** p <= 1.25

    if ok(0.5):
        return 0.5
    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def covering_number_bound(r: float, omega: float, s: int) -> float:
    """``(2r/omega + 1)^s`` balls of radius ``omega`` cover a radius-``r`` ball in dimension ``s``."""
    if r <= 0 or omega <= 0 or s < 1:
        raise ValueError("covering_number_bound needs r, omega > 0 and s >= 1")
    return (2.0 * r / omega + 1.0) ** s


def vmo_covering_bound(eps: float, D: float, mu: float, p: float, d_M: int) -> float:
    """``(4 D mu^(1/p) / eps)^d_M``; 1 once ``eps >= 2 D mu^(1/p)``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    scale = D * mu ** (1.0 / p)
    if eps >= 2.0 * scale:
        return 1.0
    return (4.0 * scale / eps) ** d_M


# ---------------------------------------------------------------------------
# level window


@dataclass(frozen=True)
class LevelParams:
    a: float
    p: float
    j0: int
    J: int

    def __post_init__(self):
        if not 0 < self.a <= 0.5:
            raise ValueError(f"a = {self.a} outside (0, 1/2]")
        if self.J < self.j0:
            raise DegenerateWindowError(f"empty level window: J = {self.J} < j0 = {self.j0}")

    @property
    def G_size(self) -> int:
        return self.J - self.j0 + 1

    @property
    def C1(self) -> float:
        return C1(self.a)

    @property
    def C2(self) -> float:
        return C2(self.a)

    @property
    def ratio_ok(self) -> bool:
        return (self.C2 / self.C1) ** self.p <= 1.25 + 1e-12

    def level_value(self, j) -> np.ndarray:
        return np.power(1.0 + self.a, np.asarray(j, dtype=np.float64))

    def thresholds(self, top: int) -> np.ndarray:
        """``(1+a)^j`` for ``j = j0+1 .. top``."""
        return np.power(1.0 + self.a, np.arange(self.j0 + 1, top + 1, dtype=np.float64))


def level_top_index(a: float, p: float, D: float, mu: float) -> int:
    """Largest ``J`` with ``C1(a) (1+a)^J <= D mu^(1/p)``."""
    return math.floor(math.log(D * mu ** (1.0 / p) / C1(a)) / math.log1p(a))


def level_bottom_index(a: float, p: float, A: float, B: float, delta: float) -> int:
    """``j0 = floor(log(A C2^-p (1 - delta) / (4B)) / (p log(1+a)))``."""
    if not 0 <= delta < 1:
        raise ValueError("delta must lie in [0, 1)")
    target = A * C2(a) ** (-p) * (1.0 - delta) / (4.0 * B)
    return math.floor(math.log(target) / (p * math.log1p(a)))


def level_window(a: float, p: float, D: float, mu: float, A: float, B: float,
                 delta: float) -> LevelParams:
    if min(a, p, D, mu, A, B) <= 0:
        raise ValueError("level_window needs positive inputs")
    return LevelParams(a, p, level_bottom_index(a, p, A, B, delta), level_top_index(a, p, D, mu))


# ---------------------------------------------------------------------------
# approximation operators


class NetFamily:
    """Per-level approximations ``A_j`` with ``||f - A_j f||_inf <= a (1+a)^j`` on the grid.

    ``exact`` mode uses ``A_j f = f``. ``lattice`` mode rounds the
    coefficients of ``f`` to a mesh ``h_j = 2 a (1+a)^j / L``, where ``L``
    is the largest absolute row sum of the synthesis matrix; the rounded
    functions form a net of the coefficient ball at that radius.
    """

    def __init__(self, mode: str = "exact", matrix=None):
        if mode not in ("exact", "lattice"):
            raise ValueError(f"unknown net mode {mode!r}")
        if mode == "lattice" and matrix is None:
            raise ValueError("lattice mode needs the synthesis matrix")
        self.mode = mode
        self.matrix = matrix
        if matrix is not None:
            self.L = float(np.max(np.abs(matrix).sum(axis=1))) if matrix.shape[0] else 0.0

    def __repr__(self):
        return f"NetFamily({self.mode!r})"

    def mesh(self, a: float, j) -> np.ndarray:
        return 2.0 * a * np.power(1.0 + a, np.asarray(j, dtype=np.float64)) / self.L

    def coefficients(self, c: np.ndarray, a: float, j) -> np.ndarray:
        h = self.mesh(a, j)
        return np.rint(np.asarray(c)[None, :] / h[:, None]) * h[:, None]

    def approximations(self, f: GridFunction, a: float, levels) -> np.ndarray:
        """``A_j f`` on the grid for every ``j`` in ``levels``, shape ``(len(levels), grid.size)``."""
        levels = np.asarray(levels)
        if self.mode == "exact":
            return np.broadcast_to(f.values.ravel(), (levels.size, f.values.size))
        if f.coefficients is None:
            raise ValueError("lattice mode needs f with coefficients")
        rounded = self.coefficients(f.coefficients.values, a, levels)
        return np.asarray(self.matrix @ rounded.T).T

    def guarantee_holds(self, f: GridFunction, a: float, levels, tol: float = 1e-12) -> bool:
        levels = np.asarray(levels)
        approx = self.approximations(f, a, levels)
        err = np.max(np.abs(approx - f.values.ravel()[None, :]), axis=1)
        return bool(np.all(err <= a * np.power(1.0 + a, levels.astype(float)) * (1 + tol) + tol))


# ---------------------------------------------------------------------------
# decomposition


@dataclass
class LevelDecomposition:
    levels: np.ndarray  # level j per grid point, j0 marks D_{j0}
    h: GridFunction
    params: LevelParams
    top: int
    f: GridFunction = field(repr=False)
    family: NetFamily = field(repr=False)

    @property
    def j0(self) -> int:
        return self.params.j0

    def mask(self, j: int) -> np.ndarray:
        return self.levels == j

    def masks(self) -> dict:
        return {int(j): self.levels == j for j in np.unique(self.levels)}

    @property
    def overflow(self) -> int:
        """Grid points above the window top ``J`` (none for functions in V_{M,Omega})."""
        return int(np.count_nonzero(self.levels > self.params.J))

    def h_at(self, points) -> np.ndarray:
        """``h(f)`` at arbitrary points, with ``f`` (and ``A_j f``) interpolated from the grid."""
        a = self.params.a
        top = max(self.top, _top_level(np.max(np.abs(evaluate_at(self.f, points)), initial=0.0), a))
        thr = self.params.thresholds(top)
        if thr.size == 0:
            return np.zeros(np.shape(points)[0])
        if self.family.mode == "exact":
            vals = np.abs(evaluate_at(self.f, points))
            idx = kernels.assign_levels_sorted(np.ascontiguousarray(vals.ravel()), thr)
        else:
            levels = np.arange(self.params.j0 + 1, top + 1)
            approx = self.family.approximations(self.f, a, levels)
            g = self.f.grid
            interp = np.stack([np.abs(evaluate_at(GridFunction(g, row), points)).ravel() for row in approx])
            idx = kernels.assign_levels_multi(np.ascontiguousarray(interp), thr)
        return np.where(idx >= 0, thr[np.maximum(idx, 0)], 0.0)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "level", "h"])
            for i, (lv, hv) in enumerate(zip(self.levels.ravel(), self.h.values.ravel())):
                w.writerow([i, int(lv), repr(float(hv))])


def _top_level(vmax: float, a: float) -> int:
    # U_k can be nonempty only if (1 - a)(1+a)^k <= max|f|
    if vmax <= 0:
        return -(10 ** 6)
    return math.floor(math.log(vmax / (1.0 - a)) / math.log1p(a)) + 1


def decompose(f: GridFunction, params: LevelParams, family: NetFamily | None = None) -> LevelDecomposition:
    """Level sets ``D_j`` and ``h(f)`` on the grid of ``f``."""
    family = family or NetFamily()
    a = params.a
    absf = np.abs(f.values.ravel())
    top = max(params.J, _top_level(float(absf.max(initial=0.0)), a))
    thr = params.thresholds(top)
    if thr.size == 0:
        idx = np.full(absf.shape, -1, dtype=np.int64)
    elif family.mode == "exact":
        idx = np.asarray(kernels.assign_levels_sorted(np.ascontiguousarray(absf), thr))
    else:
        levels = np.arange(params.j0 + 1, top + 1)
        approx = np.abs(family.approximations(f, a, levels))
        idx = np.asarray(kernels.assign_levels_multi(np.ascontiguousarray(approx), thr))
    levels = np.where(idx >= 0, params.j0 + 1 + idx, params.j0).reshape(f.grid.shape)
    hv = np.where(idx >= 0, thr[np.maximum(idx, 0)] if thr.size else 0.0, 0.0)
    return LevelDecomposition(levels, GridFunction(f.grid, hv), params, top, f, family)


@dataclass
class HBoundsReport:
    ok: bool
    min_lower_ratio: float  # min |f| / (C1 h) off D_j0
    max_upper_ratio: float  # max |f| / (C2 h) off D_j0
    max_bottom_ratio: float  # max |f| / (C2 (1+a)^j0) on D_j0
    violations: list

    def __str__(self):
        return (f"h bounds {'hold' if self.ok else 'FAIL'}: min |f|/(C1 h) = {self.min_lower_ratio:.6g}, "
                f"max |f|/(C2 h) = {self.max_upper_ratio:.6g}, "
                f"max on D_j0 = {self.max_bottom_ratio:.6g}")


def verify_h_bounds(f: GridFunction, dec: LevelDecomposition, params: LevelParams | None = None,
                    tol: float = 1e-9, max_report: int = 20) -> HBoundsReport:
    params = params or dec.params
    a = params.a
    absf = np.abs(f.values.ravel())
    h = dec.h.values.ravel()
    off = dec.levels.ravel() > params.j0
    c1, c2 = C1(a), C2(a)
    bottom = c2 * (1.0 + a) ** params.j0
    lo_r = absf[off] / (c1 * h[off]) if off.any() else np.array([np.inf])
    up_r = absf[off] / (c2 * h[off]) if off.any() else np.array([0.0])
    bt_r = absf[~off] / bottom if (~off).any() else np.array([0.0])
    bad = np.flatnonzero(
        (off & ((absf < c1 * h * (1 - tol)) | (absf > c2 * h * (1 + tol))))
        | (~off & (absf > bottom * (1 + tol))))
    return HBoundsReport(bad.size == 0, float(lo_r.min()), float(up_r.max()), float(bt_r.max()),
                         bad[:max_report].tolist())


# ---------------------------------------------------------------------------
# sampling and transfer


def sampled_pnorm(f: GridFunction, samples, p: float) -> float:
    """``(1/r) sum |f(xi)|^p``; ``f`` interpolated multilinearly between grid points."""
    pts = samples.points if hasattr(samples, "points") else np.asarray(samples, dtype=np.float64)
    if len(pts) == 0:
        raise ValueError("empty sample set")
    g = f.grid
    pts2 = pts.reshape(len(pts), -1)
    if np.any(pts2 < g.lo - 1e-12) or np.any(pts2 > g.hi + 1e-12):
        raise ValueError("sample points outside the grid")
    return float(np.mean(np.abs(evaluate_at(f, pts)) ** p))


@dataclass(frozen=True)
class TransferBounds:
    """Bounds on ``||S(f, xi)||_p^p`` as functions of ``||f||_{L^p(Omega)}^p``."""

    a: float
    p: float
    j0: int
    sigma: float
    mu: float
    hypothesis_met: bool

    def lower(self, f_omega_pp: float) -> float:
        c1p, c2p = C1(self.a) ** self.p, C2(self.a) ** self.p
        return c1p * (f_omega_pp / (c2p * self.mu) - (1.0 + self.a) ** (self.p * self.j0) - self.sigma)

    def upper(self, f_omega_pp: float) -> float:
        c1p, c2p = C1(self.a) ** self.p, C2(self.a) ** self.p
        return c2p * (f_omega_pp / (c1p * self.mu) + (1.0 + self.a) ** (self.p * self.j0) + self.sigma)

    def holds(self, sampled: float, f_omega_pp: float, tol: float = 1e-9) -> bool:
        lo, hi = self.lower(f_omega_pp), self.upper(f_omega_pp)
        return lo - tol * max(1.0, abs(lo)) <= sampled <= hi + tol * max(1.0, abs(hi))


def transfer_bounds(hL: float, hS: float, sigma: float, params: LevelParams, mu: float,
                    tol: float = 1e-12) -> TransferBounds:
    """Conclusion of the h-to-f transfer, flagged by whether ``|hS - hL| <= sigma``."""
    met = abs(hS - hL) <= sigma + tol
    return TransferBounds(params.a, params.p, params.j0, float(sigma), float(mu), bool(met))


def h_norms(dec: LevelDecomposition, domain, samples, p: float) -> tuple[float, float]:
    """``hL = mu^-1 ||h||_{L^p(Omega)}^p`` and ``hS = ||S(h, xi)||_p^p``."""
    hL = lp_norm_pp(dec.h, p, domain) / domain.measure
    pts = samples.points if hasattr(samples, "points") else samples
    hS = float(np.mean(dec.h_at(pts) ** p))
    return hL, hS


# ---------------------------------------------------------------------------
# explicit nets


@dataclass
class Net:
    coefficients: np.ndarray  # (size, d_M)
    mesh: float
    L: float
    eps: float
    matrix: object = field(repr=False)
    grid: object = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    bound: float = 1.0

    @property
    def size(self) -> int:
        return self.coefficients.shape[0]

    def __len__(self):
        return self.size

    def functions(self) -> list[GridFunction]:
        from .space import Coefficients
        return [GridFunction(self.grid, self.matrix @ c, Coefficients(self.nodes, c)) for c in self.coefficients]

    def distance(self, f: GridFunction) -> float:
        """Sup distance on the grid from ``f`` to the nearest net member."""
        fv = f.values.ravel()
        if f.coefficients is not None and self.mesh > 0:
            cand = np.rint(f.coefficients.values / self.mesh) * self.mesh
            hit = np.all(np.abs(self.coefficients - cand) <= 1e-9 * self.mesh, axis=1)
            if hit.any():
                return float(np.max(np.abs(self.matrix @ cand - fv)))
        best = math.inf
        for start in range(0, self.size, 512):
            block = np.asarray(self.matrix @ self.coefficients[start:start + 512].T)
            best = min(best, float(np.min(np.max(np.abs(block - fv[:, None]), axis=0))))
        return best


def build_net(plan, eps: float, D: float, mu: float, p: float, *, grid=None, step: float = 1 / 64,
              A: float | None = None, B: float | None = None, max_dim: int = 3) -> Net:
    """An explicit ``eps``-net (sup norm on the grid) of ``V_{M,Omega}``.

    The coefficient cube ``|c_i| <= (B mu)^(1/p)`` is gridded with mesh
    ``2 eps / L``; mesh cells that cannot contain a coefficient vector
    with ``A mu <= ||c||_p^p <= B mu`` are dropped.
    """
    space = plan.space
    nodes = plan.active_nodes
    d_M = nodes.shape[0]
    if d_M > max_dim:
        raise NetTooLargeError(f"refusing to build a net in dimension d_M = {d_M} > {max_dim}")
    A = space.A if A is None else A
    B = space.B if B is None else B
    grid = grid if grid is not None else space.grid_for(nodes, step)
    S = space.matrix(grid, nodes)
    L = float(np.max(np.abs(S).sum(axis=1)))
    bound = vmo_covering_bound(eps, D, mu, p, d_M)
    if d_M == 0 or eps >= 2.0 * D * mu ** (1.0 / p):
        return Net(np.zeros((1, d_M)), 0.0, L, eps, S, grid, nodes, bound)
    h = 2.0 * eps / L
    R = (B * mu) ** (1.0 / p)
    K = math.ceil(R / h)
    ticks = np.arange(-K, K + 1) * h
    pts = np.array(list(itertools.product(ticks, repeat=d_M)))
    # nearest and farthest points of each mesh cell from the origin
    near = np.maximum(np.abs(pts) - h / 2.0, 0.0)
    far = np.abs(pts) + h / 2.0
    near_pp = np.sum(near ** p, axis=1)
    far_pp = np.sum(far ** p, axis=1)
    keep = (near_pp <= B * mu * (1 + 1e-12)) & (far_pp >= A * mu * (1 - 1e-12))
    return Net(pts[keep], h, L, eps, S, grid, nodes, bound)
