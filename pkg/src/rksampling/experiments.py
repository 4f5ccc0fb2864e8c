"""Monte Carlo harness: random concentrated functions, stability trials, success curves."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import norm

from . import kernels
from .config import ExperimentConfig
from .discretization import (
    LevelParams,
    a_for_p,
    build_net,
    decompose,
    h_norms,
    transfer_bounds,
)
from .domain import Domain, concentration_ratio, gamma_occupancy, uniform_samples
from .errors import AdmissibilityError, InfeasibleConcentrationError, NonAmalgamError, ZeroGapError
from .probability import TheoryConstants, failure_probability, main_bounds, theory_constants
from .space import (
    Coefficients,
    Generator,
    Grid,
    GridFunction,
    Lattice,
    Space,
    check_localization,
    fit_tail,
    gram_frame_constants,
    lattice_stats,
    lp_norm_pp,
    min_tail_exponent,
)
from .truncation import TruncationPlan, plan_truncation

CSV_COLUMNS = ["r", "successes", "trials", "p_hat", "wilson_lo", "wilson_hi", "theory_bound"]


def wilson_interval(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    if trials <= 0:
        return 0.0, 1.0
    z = norm.ppf(0.5 + level / 2.0)
    ph = successes / trials
    den = 1.0 + z * z / trials
    centre = (ph + z * z / (2 * trials)) / den
    half = z * math.sqrt(ph * (1 - ph) / trials + z * z / (4 * trials * trials)) / den
    # the interval ends exactly at 0 (resp. 1) when no trial failed (resp. succeeded)
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return float(lo), float(hi)


# ---------------------------------------------------------------------------
# random concentrated functions


def draw_concentrated_function(space: Space, domain: Domain, delta: float, p: float, seed=None, *,
                               grid: Grid | None = None, step: float = 1 / 64, margin: float = 1.0,
                               max_attempts: int = 1000) -> GridFunction:
    """Random ``f`` with ``int_Omega |f|^p >= (1 - delta) ||f||_p^p``, normalised to ``||f||_p = 1``.

    Coefficients are standard normal on the nodes within ``margin`` of
    ``Omega``; draws are rejected until the concentration holds.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    nodes = _nodes_near(space.lattice, domain, margin)
    if nodes.shape[0] == 0:
        raise InfeasibleConcentrationError("no nodes near the domain")
    grid = grid if grid is not None else space.grid_for(space.lattice.nodes, step, domain)
    S = space.matrix(grid, nodes)
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        c = rng.standard_normal(nodes.shape[0])
        f = GridFunction(grid, S @ c, Coefficients(nodes, c))
        total = lp_norm_pp(f, p)
        if total == 0.0:
            continue
        if lp_norm_pp(f, p, domain) >= (1.0 - delta) * total:
            return f.scaled(total ** (-1.0 / p))
    raise InfeasibleConcentrationError(
        f"no {1 - delta:.3g}-concentrated function in {max_attempts} attempts")


def _nodes_near(lattice: Lattice, domain: Domain, margin: float) -> np.ndarray:
    keep = np.zeros(len(lattice), dtype=bool)
    for b in domain.boxes:
        keep |= b.expanded(margin, margin).contains_closed(lattice.nodes)
    return lattice.nodes[keep]


# ---------------------------------------------------------------------------
# trials


@dataclass
class TrialRecord:
    trial_id: int
    r: int
    seed: object
    concentration: float
    norm_pp: float
    omega_pp: float
    sample_sum: float
    lower_bound: float
    upper_bound: float
    pass_lower: bool
    pass_upper: bool
    hL: float
    hS: float
    sigma_star: float
    sampled_scaled: float
    transfer_lower: float
    transfer_upper: float
    pass_transfer: bool
    hypothesis_met: bool
    max_family_l1: float
    timings: dict = field(default_factory=dict, compare=False)

    @property
    def success(self) -> bool:
        return self.pass_lower and self.pass_upper

    def flags_consistent(self, tol: float = 1e-9) -> bool:
        lo = self.lower_bound <= self.sample_sum
        hi = self.sample_sum <= self.upper_bound
        tr = (self.transfer_lower - tol * max(1.0, abs(self.transfer_lower)) <= self.sampled_scaled
              <= self.transfer_upper + tol * max(1.0, abs(self.transfer_upper)))
        return lo == self.pass_lower and hi == self.pass_upper and tr == self.pass_transfer

    def as_row(self) -> dict:
        d = asdict(self)
        d.pop("timings")
        d["seed"] = str(self.seed)
        return d


def run_stability_trial(f: GridFunction, domain: Domain, r: int, tc: TheoryConstants, seed=None, *,
                        trial_id: int = 0, family=None) -> TrialRecord:
    """Sample ``f`` at ``r`` uniform points and test the sampling inequality and the h transfer."""
    t0 = time.perf_counter()
    p, mu = tc.p, domain.measure
    samples = uniform_samples(domain, r, seed)
    vals = np.abs(f(samples.points)) ** p
    sample_sum = float(vals.sum())
    norm_pp = lp_norm_pp(f, p)
    omega_pp = lp_norm_pp(f, p, domain)
    lower = r / mu * tc.lower_coeff * norm_pp
    upper = r / mu * tc.upper_coeff * norm_pp
    t1 = time.perf_counter()

    # level sets of g = f scaled to ||g||_p^p = mu
    scale = mu / norm_pp
    g = f.scaled(scale ** (1.0 / p))
    params = LevelParams(tc.a, p, tc.j0, tc.J)
    dec = decompose(g, params, family)
    hL, hS = h_norms(dec, domain, samples, p)
    sigma_star = abs(hS - hL)
    tb = transfer_bounds(hL, hS, sigma_star, params, mu)
    g_omega = omega_pp * scale
    g_sampled = sample_sum / r * scale
    fam = _family_l1(dec, domain, params)
    t2 = time.perf_counter()
    return TrialRecord(
        trial_id=trial_id, r=r, seed=seed, concentration=omega_pp / norm_pp, norm_pp=norm_pp,
        omega_pp=omega_pp, sample_sum=sample_sum, lower_bound=lower, upper_bound=upper,
        pass_lower=bool(lower <= sample_sum), pass_upper=bool(sample_sum <= upper),
        hL=hL, hS=hS, sigma_star=sigma_star, sampled_scaled=g_sampled,
        transfer_lower=tb.lower(g_omega), transfer_upper=tb.upper(g_omega),
        pass_transfer=tb.holds(g_sampled, g_omega), hypothesis_met=bool(sigma_star <= tc.sigma),
        max_family_l1=fam, timings={"sample": t1 - t0, "levels": t2 - t1})


def _family_l1(dec, domain: Domain, params: LevelParams) -> float:
    """Largest ``mu^-1 int_Omega (4/5)(1+a)^(pj) chi_{D_j}`` over levels ``j > j0``."""
    g = dec.f.grid
    inside = np.asarray(domain.contains(g.points())).ravel()
    lv = dec.levels.ravel()[inside]
    best = 0.0
    for j in np.unique(lv[lv > params.j0]):
        vol = np.count_nonzero(lv == j) * g.cell_measure
        best = max(best, 0.8 * (1.0 + params.a) ** (params.p * j) * vol / domain.measure)
    return best


# ---------------------------------------------------------------------------
# setup shared by the CLI subcommands


@dataclass
class Setup:
    config: ExperimentConfig
    space: Space
    domain: Domain
    grid: Grid
    plan: TruncationPlan
    tc: TheoryConstants


def prepare(cfg: ExperimentConfig) -> Setup:
    space = cfg.build_space()
    domain = cfg.build_domain()
    grid = space.grid_for(space.lattice.nodes, cfg.step, domain)
    plan = plan_truncation(space, domain, cfg.truncation_eps)
    tc = theory_constants(cfg.p, cfg.A, cfg.B, space.D, domain.measure, plan.d_M,
                          delta=cfg.delta, tau=cfg.tau, a=cfg.a)
    return Setup(cfg, space, domain, grid, plan, tc)


# ---------------------------------------------------------------------------
# success curves


@dataclass
class CurveRow:
    r: int
    successes: int
    trials: int
    p_hat: float
    wilson_lo: float
    wilson_hi: float
    theory_bound: float
    mean_ratio: float

    @property
    def sound(self) -> bool:
        """Theory success bound not excluded by the Wilson interval."""
        return self.theory_bound <= 0 or self.wilson_hi >= self.theory_bound


@dataclass
class ResultTable:
    rows: list
    setup: Setup | None = None
    csv_path: Path | None = None
    svg_path: Path | None = None

    @property
    def sound(self) -> bool:
        return all(row.sound for row in self.rows)

    def trend_ok(self) -> bool:
        """Later success rates never fall below an earlier one beyond both 95% bands."""
        return all(self.rows[j].wilson_hi >= self.rows[i].wilson_lo
                   for i in range(len(self.rows)) for j in range(i + 1, len(self.rows)))

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for row in self.rows:
                w.writerow([row.r, row.successes, row.trials, f"{row.p_hat:.6f}",
                            f"{row.wilson_lo:.6f}", f"{row.wilson_hi:.6f}", f"{row.theory_bound:.6f}"])
        self.csv_path = path
        return path

    def plot_svg(self, path) -> Path | None:
        try:
            import matplotlib

            matplotlib.use("Agg")
            import matplotlib.pyplot as plt
        except ImportError:
            return None
        rs = [row.r for row in self.rows]
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.fill_between(rs, [row.wilson_lo for row in self.rows], [row.wilson_hi for row in self.rows],
                        alpha=0.3, label="95% Wilson band")
        ax.plot(rs, [row.p_hat for row in self.rows], "o-", label="empirical success")
        ax.plot(rs, [max(row.theory_bound, 0.0) for row in self.rows], "s--", label="theory lower bound")
        ax.set_xscale("log")
        ax.set_ylim(-0.02, 1.02)
        ax.set_xlabel("sample size r")
        ax.set_ylabel("success probability")
        ax.legend(loc="lower right")
        fig.tight_layout()
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        self.svg_path = path
        return path


def trial_seed(seed: int, r: int, t: int, stream: int) -> list:
    return [int(seed), int(r), int(t), int(stream)]


def success_curve(cfg: ExperimentConfig, *, write: bool = True, output_dir=None, plot: bool | None = None,
                  setup: Setup | None = None, check: bool = True, progress=None) -> ResultTable:
    """Run ``cfg.trials`` trials for each ``r`` in ``cfg.r_schedule``."""
    if check:
        rep = check_assumptions(cfg)
        if not rep.ok:
            raise AdmissibilityError("assumption checks failed:\n" + str(rep))
    st = setup or prepare(cfg)
    rows = []
    for r in cfg.r_schedule:
        wins, ratios = 0, []
        for t in range(cfg.trials):
            f = draw_concentrated_function(st.space, st.domain, cfg.delta, cfg.p, trial_seed(cfg.seed, r, t, 0),
                                           grid=st.grid, margin=cfg.margin)
            rec = run_stability_trial(f, st.domain, r, st.tc, trial_seed(cfg.seed, r, t, 1), trial_id=t)
            wins += rec.success
            ratios.append(rec.sample_sum * st.domain.measure / (r * rec.norm_pp))
        lo, hi = wilson_interval(wins, cfg.trials)
        theory = 1.0 - failure_probability(st.tc, r)
        rows.append(CurveRow(r, wins, cfg.trials, wins / cfg.trials, lo, hi, theory, float(np.mean(ratios))))
        if progress:
            progress(rows[-1])
    table = ResultTable(rows, st)
    if write:
        out = Path(output_dir) if output_dir is not None else cfg.resolved_output_dir()
        table.write_csv(out / f"{cfg.name}_curve.csv")
        if cfg.plot if plot is None else plot:
            table.plot_svg(out / f"{cfg.name}_curve.svg")
    return table


# ---------------------------------------------------------------------------
# indicator kernel regularity


@dataclass
class RegularityRow:
    eps: float
    value: float
    step: float
    window: int


def regularity_demo(eps_list=(0.25, 0.1, 0.01), step: float | None = None) -> list[RegularityRow]:
    """``sup_x int sup_{|x'| <= eps} |K(x + x', y) - K(x, y)| dy`` for ``K = 2 sum_k phi(x-k) phi(y-k)``.

    ``phi`` is the indicator of ``[0, 1/2]``; the exact value is 1 for every ``eps < 1/2``.
    """
    phi = Generator.indicator(0.0, 0.5)
    rows = []
    for eps in eps_list:
        if not 0 < eps < 0.5:
            raise ValueError("eps must lie in (0, 1/2)")
        h = step if step is not None else min(1.0 / 512, eps / 4.0)
        xs = Grid.covering([-1.0], [2.0], h).axes()[0]
        ys = Grid.covering([-1.0], [2.5], h).axes()[0]
        ks = np.arange(-2, 4)
        Px = phi.profile(xs[:, None] - ks[None, :])
        Py = phi.profile(ys[:, None] - ks[None, :])
        K = 2.0 * Px @ Py.T
        w = int(math.floor(eps / h + 1e-9))
        W = kernels.window_max_absdiff(K, w)
        inner = W[w:len(xs) - w] if w > 0 else W
        value = float(inner.sum(axis=1).max() * h)
        rows.append(RegularityRow(float(eps), value, h, w))
    return rows


# ---------------------------------------------------------------------------
# assumption checks


@dataclass
class AssumptionReport:
    items: list  # (name, ok, detail)

    @property
    def ok(self) -> bool:
        return all(ok for _, ok, _ in self.items)

    def __str__(self):
        return "\n".join(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}" for name, ok, detail in self.items)


def check_assumptions(cfg: ExperimentConfig) -> AssumptionReport:
    items = []
    try:
        domain = Domain(cfg.boxes, check_measure=False)
        mu = domain.measure
        items.append(("measure", mu >= 1.0, f"mu(Omega) = {mu:g}"))
    except ValueError as exc:
        return AssumptionReport([("domain", False, str(exc))])
    space = cfg.build_space()
    lat = space.lattice
    try:
        beta, NG = lattice_stats(lat)
        items.append(("gap", beta > 0, f"beta = {beta:g}, N(Gamma) = {NG}"))
    except ZeroGapError as exc:
        items.append(("gap", False, str(exc)))
        return AssumptionReport(items)
    occ = gamma_occupancy(lat, domain)
    declared = lat.occupancy
    items.append(("occupancy", declared is None or occ <= declared,
                  f"|Gamma cap Omega| / mu = {occ:g}" + ("" if declared is None else f" (declared {declared:g})")))
    grid = space.grid_for(lat.nodes, cfg.step, domain)
    loc = check_localization(space.generator, lat, space.envelope, grid)
    items.append(("localization", loc.holds, str(loc)))
    try:
        amal = space.amalgam
        items.append(("amalgam", np.isfinite(amal), f"||Theta||_W = {amal:.6g}"))
    except NonAmalgamError as exc:
        items.append(("amalgam", False, str(exc)))
        return AssumptionReport(items)
    amin = min_tail_exponent(cfg.p)
    env = space.envelope
    try:
        if env.tail_constant is not None and env.tail_exponent is not None:
            fit = fit_tail(env, cfg.p, alpha=env.tail_exponent)
            dominated = all(s < env.tail_constant / N ** (env.n * env.tail_exponent) or s == 0
                            for N, s in zip(fit.ladder, fit.sums))
            items.append(("envelope tail", dominated,
                          f"declared C = {env.tail_constant:g}, alpha = {env.tail_exponent:g}"))
            alpha = env.tail_exponent
        else:
            fit = fit_tail(env, cfg.p)
            items.append(("envelope tail", fit.dominates(env.n),
                          f"fitted C = {fit.C:.4g}, alpha = {fit.alpha:.4g}"
                          + (" (compact support)" if fit.compact else "")))
            alpha = fit.alpha
        items.append(("alpha admissible", alpha >= amin, f"alpha = {alpha:.4g} >= {amin:.4g}"))
    except AdmissibilityError as exc:
        items.append(("alpha admissible", False, str(exc)))
    if cfg.p == 2:
        Ag, Bg = gram_frame_constants(space.generator, lat.nodes, grid)
        ok = cfg.A <= Ag * (1 + 1e-6) and cfg.B >= Bg * (1 - 1e-6)
        items.append(("frame constants", ok, f"Gram bounds A = {Ag:.4g}, B = {Bg:.4g}; "
                                             f"configured A = {cfg.A:g}, B = {cfg.B:g}"))
    else:
        items.append(("frame constants", True, f"configured A = {cfg.A:g}, B = {cfg.B:g} (p != 2: taken as given)"))
    a = cfg.a if cfg.a is not None else a_for_p(cfg.p)
    ratio = ((1 + a) ** 2 / (1 - a)) ** cfg.p
    items.append(("level constant a", 0 < a <= 0.5 and ratio <= 1.25 + 1e-12,
                  f"a = {a:.6g}, (C2/C1)^p = {ratio:.6g}"))
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        lower, _ = main_bounds(cfg.p, space.D, cfg.tau, cfg.A, cfg.B)
    items.append(("tau small enough", lower > 0, f"lower coefficient = {lower:.6g}"))
    return AssumptionReport(items)


# ---------------------------------------------------------------------------
# explicit nets


@dataclass
class NetResult:
    d_M: int
    eps: float
    size: int
    bound: float
    probes: int
    covered: int
    max_distance: float

    @property
    def ok(self) -> bool:
        return self.covered == self.probes and self.size <= self.bound


def net_experiment(d_M: int, eps_fraction: float, p: float = 2.0, *, probes: int = 1000, seed=0,
                   step: float = 1 / 64, boxes: str = "0 4") -> NetResult:
    """Net of the hat space on nodes ``0 .. d_M-1`` at ``eps = eps_fraction * D mu^(1/p)``."""
    gen = Generator.bspline(2)
    A, B = (1.0, 3.0) if p == 2 else (1.0, 2.0)
    space = Space(gen, Lattice(np.arange(d_M, dtype=float)), A=A, B=B, p=p)
    domain = Domain(boxes)
    mu = domain.measure
    D = space.D
    eps = eps_fraction * D * mu ** (1.0 / p)
    plan = plan_truncation(space, domain, 0.5)
    grid = space.grid_for(plan.active_nodes, step)
    net = build_net(plan, eps, D, mu, p, grid=grid)
    rng = np.random.default_rng(seed)
    S = space.matrix(grid, plan.active_nodes)
    covered, worst = 0, 0.0
    for _ in range(probes):
        c = rng.standard_normal(d_M)
        f = GridFunction(grid, S @ c, Coefficients(plan.active_nodes, c))
        f = f.scaled((mu / lp_norm_pp(f, p)) ** (1.0 / p))
        dist = net.distance(f)
        worst = max(worst, dist)
        covered += dist <= eps * (1 + 1e-9)
    return NetResult(d_M, eps, net.size, net.bound, probes, covered, worst)
