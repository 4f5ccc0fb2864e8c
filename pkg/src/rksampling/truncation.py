"""Truncation to a finite-dimensional subspace ``V_M`` near the domain.

Given ``eps`` and ``Omega`` the radius ``N`` is chosen so that the
envelope tail beyond ``C_N`` is small enough, ``M`` collects the boundary
cubes of ``Omega`` padded by ``C_N``, and ``f~`` keeps only the
coefficients of nodes in ``M``. Then on ``Omega``

    |f - f~| < (eps / mu) ||f||_p      and      ||f - f~||_{L^p(Omega)} < eps ||f||_p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import Box, BoxUnion, Domain, gamma_occupancy
from .space import Coefficients, GridFunction, Space, TailFit, dual_exponent, lp_norm, sup_norm


def _q(p: float) -> float:
    # p = 1: the dual sums become suprema, handled by exponent 1
    return 1.0 if p == 1 else dual_exponent(p)


def truncation_radius(eps: float, C: float, N_gamma: float, B: float, p: float,
                      alpha: float, n: int, mu: float) -> float:
    """``N = (C N(Gamma) B^(q/p) / eps^q)^(1/(n alpha)) mu^(1/n)`` with ``q = p'`` (1 if ``p = 1``)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if min(C, N_gamma, B, alpha, mu) <= 0 or n < 1:
        raise ValueError("truncation_radius needs positive inputs")
    q = _q(p)
    return (C * N_gamma * B ** (q / p) / eps ** q) ** (1.0 / (n * alpha)) * mu ** (1.0 / n)


def even_radius(N: float) -> int:
    """Round up to an even integer >= 2 so the cube ``C_N`` has integer corners."""
    return max(2, 2 * math.ceil(N / 2.0 - 1e-12))


def build_M(domain: Domain, N: float) -> BoxUnion:
    """``M = Omega  u  U_i (m_i + [0, 1]^n + C_N)`` over the boundary cubes ``m_i``."""
    half = N / 2.0
    boxes = list(domain.boxes)
    for m in domain.boundary_cubes:
        lo = tuple(float(v) - half for v in m)
        hi = tuple(float(v) + 1.0 + half for v in m)
        boxes.append(Box(lo, hi))
    return BoxUnion(boxes).merged()


def dimension_constant(d: int, N_gamma: float, C_gamma: float, C: float, B: float,
                       p: float, alpha: float, eps: float) -> float:
    """``C(eps) = d N(Gamma) (C N(Gamma) B^(q/p) / eps^q)^(1/alpha) + C(Gamma)``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    q = _q(p)
    return d * N_gamma * (C * N_gamma * B ** (q / p) / eps ** q) ** (1.0 / alpha) + C_gamma


@dataclass
class TruncationPlan:
    eps: float
    N: float
    N_raw: float
    M: BoxUnion
    active: np.ndarray  # boolean mask over the lattice nodes
    active_nodes: np.ndarray
    d: int
    C_eps: float
    mu: float
    tail: TailFit | None = None
    space: Space | None = field(default=None, repr=False)

    @property
    def d_M(self) -> int:
        return int(self.active_nodes.shape[0])

    @property
    def dimension_bound(self) -> float:
        return self.C_eps * self.mu

    def report(self) -> str:
        lines = [
            f"eps        = {self.eps:g}",
            f"N          = {self.N:g}  (formula {self.N_raw:.6g})",
            f"d          = {self.d}",
            f"M          = {'; '.join(str(b) for b in self.M.boxes)}",
            f"d_M        = {self.d_M}",
            f"C(eps)*mu  = {self.dimension_bound:.6g}",
        ]
        return "\n".join(lines)


def plan_truncation(space: Space, domain: Domain, eps: float, *, tail: TailFit | None = None,
                    C_gamma: float | None = None) -> TruncationPlan:
    tail = tail if tail is not None else space.tail()
    mu = domain.measure
    N_raw = truncation_radius(eps, tail.C, space.N_gamma, space.B, space.p, tail.alpha, space.n, mu)
    N = even_radius(N_raw)
    M = build_M(domain, N)
    mask = M.contains_closed(space.lattice.nodes)
    if C_gamma is None:
        C_gamma = max(gamma_occupancy(space.lattice, domain), space.lattice.occupancy or 0.0)
    d = domain.boundary_cube_count
    C_eps = dimension_constant(d, space.N_gamma, C_gamma, tail.C, space.B, space.p, tail.alpha, eps)
    return TruncationPlan(eps, N, N_raw, M, mask, space.lattice.nodes[mask], d, C_eps, mu, tail, space)


def truncate(c: Coefficients, plan: TruncationPlan) -> Coefficients:
    """Zero the coefficients of nodes outside ``M``."""
    keep = plan.M.contains_closed(c.nodes)
    return Coefficients(c.nodes, np.where(keep, c.values, 0.0))


@dataclass
class TruncationCheck:
    sup_error: float
    sup_bound: float
    lp_error: float
    lp_bound: float
    ok: bool

    @property
    def sup_slack(self) -> float:
        return self.sup_bound - self.sup_error

    @property
    def lp_slack(self) -> float:
        return self.lp_bound - self.lp_error


def truncation_error_check(f: GridFunction, f_trunc: GridFunction, domain: Domain, p: float,
                           eps: float, mu: float | None = None, *, norm: float | None = None,
                           tol: float = 1e-9) -> TruncationCheck:
    """Measure both truncation errors on the grid points of ``Omega`` against their bounds."""
    mu = domain.measure if mu is None else mu
    fn = lp_norm(f, p) if norm is None else norm
    diff = f - f_trunc
    sup_err = sup_norm(diff, domain)
    lp_err = lp_norm(diff, p, domain)
    sup_bound = eps / mu * fn
    lp_bound = eps * fn
    slack = tol * max(1.0, fn)
    ok = sup_err <= sup_bound + slack and lp_err <= lp_bound + slack
    return TruncationCheck(sup_err, sup_bound, lp_err, lp_bound, bool(ok))


def dimension_bound(plan: TruncationPlan) -> float:
    """``C(eps) mu``; raises if the active node count exceeds it."""
    bound = plan.dimension_bound
    if plan.d_M > bound:
        raise AssertionError(f"d_M = {plan.d_M} exceeds C(eps) mu = {bound:.6g}")
    return bound
