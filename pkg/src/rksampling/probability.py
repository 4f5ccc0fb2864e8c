"""Bernstein-type tail bounds and the sample-size / failure-probability constants."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Iterable

import numpy as np

from .discretization import C2, a_for_p, level_bottom_index, level_top_index


def bernstein_bound(r: int, eta: float, L: float, *, probability: bool = False) -> float:
    """``2 exp(-r eta^2 / (8 L))``; capped at 1 with ``probability=True``."""
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    if L <= 0 or r < 1:
        raise ValueError("need L > 0 and r >= 1")
    val = 2.0 * math.exp(-r * eta * eta / (8.0 * L))
    return min(1.0, val) if probability else val


def union_failure(families: Iterable[tuple], r: int) -> float:
    """``2 sum_j |F_j| exp(-r eta_j^2 / (8 L_j))`` over ``(count, eta, L)`` triples."""
    total = 0.0
    for count, eta, L in families:
        if count < 1:
            raise ValueError("family counts must be >= 1")
        total += count * bernstein_bound(r, eta, L)
    return total


def choose_sigma_j0(A: float, B: float, delta: float, a: float, p: float) -> tuple[float, int]:
    """``sigma = A C2^-p (1 - delta) / (2B)`` and ``j0`` with ``(1+a)^(p j0) <= A C2^-p (1 - delta) / (4B)``."""
    sigma = A * C2(a) ** (-p) * (1.0 - delta) / (2.0 * B)
    return sigma, level_bottom_index(a, p, A, B, delta)


def min_sample_size(sigma: float, d_M: int, G_size: int) -> int:
    """``ceil(10 d_M |G|^2 / sigma^2)``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return math.ceil(10.0 * d_M * G_size ** 2 / sigma ** 2)


def main_bounds(p: float, D: float, tau: float, A: float, B: float) -> tuple[float, float]:
    """Coefficients of the sampling inequality for concentrated functions."""
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    lower = 0.2 - p * 2.0 ** (p + 1) * tau / 5.0 - p * D ** (p - 1) * tau
    upper = 2.0 * B / A + p * D ** (p - 1)
    if lower <= 0:
        warnings.warn(f"lower coefficient {lower:.4g} <= 0: tau too large for D = {D:g}, p = {p:g}",
                      RuntimeWarning, stacklevel=2)
    return lower, upper


def asymptotic_budget(mu: float, c: float = 1.0) -> int:
    """``ceil(c mu (log mu)^3)``."""
    if mu < math.e - 1e-12 or c <= 0:
        raise ValueError("need mu >= e and c > 0")
    return math.ceil(c * mu * math.log(mu) ** 3 - 1e-9)


@dataclass
class TheoryConstants:
    p: float
    a: float
    delta: float
    tau: float
    A: float
    B: float
    D: float
    mu: float
    d_M: int
    G_size: int
    j0: int
    J: int
    sigma: float
    C4: float
    C5: float
    log_A1: float
    r_min: int
    lower_coeff: float
    upper_coeff: float
    L_j: np.ndarray = field(repr=False)
    eta_j: np.ndarray = field(repr=False)

    @property
    def A1(self) -> float:
        return math.exp(self.log_A1) if self.log_A1 < 700 else math.inf

    @property
    def levels(self) -> np.ndarray:
        return np.arange(self.j0, self.J + 1)

    def R(self, r: int) -> float:
        return r * self.sigma ** 2 / (10.0 * self.G_size ** 2) - self.d_M

    def log_failure(self, r: int) -> float:
        """Log of the raw bound ``2 A1 |G| exp(-R (1+a)^(-p j0))``."""
        return (math.log(2.0 * self.G_size) + self.log_A1
                - self.R(r) * (1.0 + self.a) ** (-self.p * self.j0))

    def failure_raw(self, r: int) -> float:
        lf = self.log_failure(r)
        return math.exp(lf) if lf < 700 else math.inf

    def levelwise_log_failure(self, r: int) -> float:
        """Log of ``2 A1 sum_{j in G} exp(-R (1+a)^(-p j))``, the per-level sum before bounding it."""
        R = self.R(r)
        expo = -R * np.power(1.0 + self.a, -self.p * self.levels.astype(float))
        m = float(expo.max())
        return math.log(2.0) + self.log_A1 + m + math.log(float(np.exp(expo - m).sum()))

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("L_j")
        d.pop("eta_j")
        d["A1"] = self.A1
        return d


def theory_constants(p: float, A: float, B: float, D: float, mu: float, d_M: int, *,
                     delta: float, tau: float = 0.01, a: float | None = None) -> TheoryConstants:
    a = a_for_p(p) if a is None else a
    sigma, j0 = choose_sigma_j0(A, B, delta, a, p)
    J = level_top_index(a, p, D, mu)
    G = J - j0 + 1
    if G < 1:
        from .errors import DegenerateWindowError
        raise DegenerateWindowError(f"empty level window [{j0}, {J}]")
    levels = np.arange(j0, J + 1, dtype=float)
    L_j = 0.8 * np.power(1.0 + a, p * levels)
    eta_j = np.full(levels.shape, 4.0 * sigma / (5.0 * G))
    C4 = (4.0 * D / a) ** p
    C5 = 5.0 * B * D ** p / (A * (1.0 - delta))
    log_A1 = d_M * math.log(C4 * mu) / p
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        lower, upper = main_bounds(p, D, tau, A, B)
    return TheoryConstants(p=p, a=a, delta=delta, tau=tau, A=A, B=B, D=D, mu=mu, d_M=int(d_M),
                           G_size=G, j0=j0, J=J, sigma=sigma, C4=C4, C5=C5, log_A1=log_A1,
                           r_min=min_sample_size(sigma, d_M, G), lower_coeff=lower,
                           upper_coeff=upper, L_j=L_j, eta_j=eta_j)


def failure_probability(tc: TheoryConstants, r: int) -> float:
    """``min(1, 2 A1 |G| exp(-R (1+a)^(-p j0)))``, or 1 below ``r_min``."""
    if r < tc.r_min:
        return 1.0
    lf = tc.log_failure(r)
    return 1.0 if lf >= 0 else math.exp(lf)


def levelwise_failure_probability(tc: TheoryConstants, r: int) -> float:
    """Failure bound summed level by level, without replacing each term by the ``j0`` one."""
    if r < tc.r_min:
        return 1.0
    lf = tc.levelwise_log_failure(r)
    return 1.0 if lf >= 0 else math.exp(lf)


def G_size_bound(tc: TheoryConstants) -> float:
    """``log(C5 mu) / (p log(1+a))``, the real-valued window length bound."""
    return math.log(tc.C5 * tc.mu) / (tc.p * math.log1p(tc.a))


# ---------------------------------------------------------------------------
# Monte Carlo check of the tail bound


@dataclass
class TailCheck:
    distribution: str
    r: int
    eta: float
    L: float
    trials: int
    frequency: float
    bound: float
    margin: float

    @property
    def ok(self) -> bool:
        return self.frequency <= self.bound + self.margin


def _draw_sums(dist: str, r: int, L: float, trials: int, rng, q: float) -> np.ndarray:
    if dist == "rademacher":
        return L * (2.0 * rng.binomial(r, 0.5, size=trials) - r)
    if dist == "uniform":
        return L * (2.0 * rng.random((trials, r)) - 1.0).sum(axis=1)
    if dist == "sparse":
        hits = rng.binomial(r, q, size=trials)
        ups = rng.binomial(hits, 0.5)
        return L * (2.0 * ups - hits)
    if dist == "zero":
        return np.zeros(trials)
    raise ValueError(f"unknown distribution {dist!r}")


def _abs_mean(dist: str, L: float, q: float) -> float:
    means = {"rademacher": L, "uniform": L / 2.0, "sparse": q * L, "zero": 0.0}
    if dist not in means:
        raise ValueError(f"unknown distribution {dist!r}")
    return means[dist]


def empirical_tail_check(dist: str, r: int, eta: float, L: float, trials: int = 10_000,
                         seed=None, q: float = 0.1) -> TailCheck:
    """Frequency of ``|sum g_nu| >= r eta`` for i.i.d. zero-mean ``|g| <= L`` variables.

    ``dist`` is ``rademacher`` (+-L), ``uniform`` (on [-L, L]), ``sparse``
    (+-L with probability q/2 each, else 0) or ``zero``.
    """
    if _abs_mean(dist, L, q) > 2.0:
        raise ValueError(f"{dist} with L = {L:g} has E|g| > 2")
    rng = np.random.default_rng(seed)
    sums = _draw_sums(dist, r, L, trials, rng, q)
    freq = float(np.mean(np.abs(sums) >= r * eta - 1e-12 * r))
    margin = 3.0 * math.sqrt(freq * (1.0 - freq) / trials)
    return TailCheck(dist, r, eta, L, trials, freq, bernstein_bound(r, eta, L), margin)


# ---------------------------------------------------------------------------
# formatting


def format_constants(values: dict) -> str:
    """Aligned ``name : value`` block followed by ``name=value`` lines."""
    width = max(len(k) for k in values)
    aligned = [f"{k.ljust(width)} : {_fmt(v)}" for k, v in values.items()]
    kv = [f"{k}={_fmt(v)}" for k, v in values.items()]
    return "\n".join(aligned + [""] + kv)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)
