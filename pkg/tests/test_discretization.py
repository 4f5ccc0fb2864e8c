import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rksampling.discretization import (
    C1,
    C2,
    LevelParams,
    NetFamily,
    a_for_p,
    build_net,
    covering_number_bound,
    decompose,
    h_norms,
    level_window,
    sampled_pnorm,
    transfer_bounds,
    verify_h_bounds,
    vmo_covering_bound,
)
from rksampling.domain import Domain, uniform_samples
from rksampling.errors import DegenerateWindowError, NetTooLargeError
from rksampling.space import Coefficients, Generator, Grid, GridFunction, Lattice, Space, lp_norm_pp
from rksampling.truncation import plan_truncation

A_P1 = 0.0751838
A_P2 = 0.0374065


def test_a_for_p_values():
    assert a_for_p(1) == pytest.approx(A_P1, abs=1e-7)
    assert a_for_p(2) == pytest.approx(A_P2, abs=1e-7)
    for p in (1, 1.5, 2, 4):
        a = a_for_p(p)
        assert (C2(a) / C1(a)) ** p <= 1.25 + 1e-9
        assert (C2(a + 1e-6) / C1(a + 1e-6)) ** p > 1.25


def test_a_for_p_rejects():
    with pytest.raises(ValueError):
        a_for_p(0.5)


def test_level_window_example():
    lp = level_window(0.1, 2, 2, 16, 1, 1, 0)
    assert (lp.j0, lp.J, lp.G_size) == (-10, 22, 33)
    # a = 0.1 is too coarse for p = 2
    assert not lp.ratio_ok


def test_level_params_rejects():
    with pytest.raises(DegenerateWindowError):
        LevelParams(0.1, 2, 5, 4)
    with pytest.raises(ValueError):
        LevelParams(0.7, 2, 0, 4)


def test_covering_bounds():
    assert covering_number_bound(1, 0.5, 2) == 25
    assert vmo_covering_bound(0.5, 1.0, 4.0, 2.0, 3) == 16 ** 3
    assert vmo_covering_bound(10.0, 1.0, 4.0, 2.0, 3) == 1.0


def _hat_fn(values, step=1 / 64):
    g = Generator.bspline(2)
    nodes = np.arange(len(values), dtype=float)
    grid = Grid.covering([-1], [len(values)], step)
    sp = Space(g, Lattice(nodes), A=1.0, B=3.0, p=2.0)
    c = Coefficients(nodes, values)
    return GridFunction(grid, sp.matrix(grid) @ c.values, c), sp


def test_decompose_constant_function():
    grid = Grid.covering([0], [4], 1 / 16)
    f = GridFunction(grid, np.full(grid.shape, 1.0))
    lp = LevelParams(0.1, 2, -3, 5)
    dec = decompose(f, lp)
    # 1 >= (1+a)^j  <=>  j <= 0
    assert np.all(dec.levels == 0) and np.all(dec.h.values == 1.0)
    assert verify_h_bounds(f, dec).ok


def test_decompose_zero_function_all_bottom():
    grid = Grid.covering([0], [4], 1 / 16)
    f = GridFunction(grid, np.zeros(grid.shape))
    dec = decompose(f, LevelParams(0.1, 2, -3, 5))
    assert np.all(dec.levels == -3) and not dec.h.values.any()


def test_decompose_overflow_levels():
    grid = Grid.covering([0], [1], 1 / 8)
    f = GridFunction(grid, np.full(grid.shape, 100.0))
    dec = decompose(f, LevelParams(0.1, 2, -3, 5))
    assert dec.overflow == grid.size
    assert verify_h_bounds(f, dec).ok


@pytest.mark.parametrize("mode", ["exact", "lattice"])
def test_sandwich_random_hats(mode, rng):
    a = a_for_p(2)
    lp = LevelParams(a, 2, -20, 30)
    for _ in range(20):
        f, sp = _hat_fn(rng.standard_normal(8) * 3)
        fam = NetFamily(mode, sp.matrix(f.grid)) if mode == "lattice" else NetFamily()
        assert fam.guarantee_holds(f, a, np.arange(lp.j0 + 1, lp.J + 1))
        dec = decompose(f, lp, fam)
        rep = verify_h_bounds(f, dec)
        assert rep.ok, str(rep)
        assert rep.min_lower_ratio >= 1 - 1e-9 and rep.max_upper_ratio <= 1 + 1e-9


def test_decomposition_masks_partition(rng):
    f, _ = _hat_fn(rng.standard_normal(6))
    dec = decompose(f, LevelParams(a_for_p(1), 1, -15, 10))
    masks = dec.masks()
    total = sum(m.astype(int) for m in masks.values())
    assert np.all(total == 1)
    assert min(masks) >= dec.j0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-20, 20), min_size=4, max_size=4), st.sampled_from([1.0, 2.0, 3.0]))
def test_decomposition_partition_property(vals, p):
    f, _ = _hat_fn(np.array(vals), step=1 / 16)
    a = a_for_p(p)
    dec = decompose(f, LevelParams(a, p, -30, 10))
    assert verify_h_bounds(f, dec).ok
    # h takes values in {0} u {(1+a)^j : j > j0}, and levels fill every grid point
    j = dec.levels.ravel()
    expect = np.where(j > dec.j0, (1 + a) ** j.astype(float), 0.0)
    assert np.allclose(dec.h.values.ravel(), expect, rtol=1e-12, atol=0)


def test_h_at_agrees_on_grid_points(rng):
    f, _ = _hat_fn(rng.standard_normal(6))
    dec = decompose(f, LevelParams(a_for_p(2), 2, -20, 10))
    pts = f.grid.points()[::7]
    assert np.array_equal(dec.h_at(pts), dec.h.values.ravel()[::7])


def test_to_csv(tmp_path, rng):
    f, _ = _hat_fn(rng.standard_normal(3), step=1 / 4)
    dec = decompose(f, LevelParams(0.1, 2, -5, 5))
    out = tmp_path / "dec.csv"
    dec.to_csv(out)
    lines = out.read_text().splitlines()
    assert lines[0] == "index,level,h"
    assert len(lines) == f.grid.size + 1


def test_sampled_pnorm_constant():
    grid = Grid.covering([0], [4], 1 / 16)
    f = GridFunction(grid, np.full(grid.shape, 2.0))
    s = uniform_samples(Domain("0 4"), 100, seed=1)
    assert sampled_pnorm(f, s, 2) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        sampled_pnorm(f, np.array([[5.0]]), 2)


def test_transfer_bounds_hold_when_hypothesis_met(rng):
    d = Domain("0 4")
    a = a_for_p(2)
    lp = LevelParams(a, 2, -20, 10)
    hits = 0
    for t in range(30):
        f, _ = _hat_fn(rng.standard_normal(6) * 2)
        dec = decompose(f, lp)
        s = uniform_samples(d, 400, seed=t)
        hL, hS = h_norms(dec, d, s, 2)
        sigma = abs(hS - hL) + 1e-3
        tb = transfer_bounds(hL, hS, sigma, lp, d.measure)
        assert tb.hypothesis_met
        fo = lp_norm_pp(f, 2, d)
        hits += tb.holds(sampled_pnorm(f, s, 2), fo)
    assert hits == 30


def test_transfer_hypothesis_flag():
    lp = LevelParams(0.05, 2, -5, 5)
    assert not transfer_bounds(1.0, 2.0, 0.5, lp, 4.0).hypothesis_met


def _net_plan(d_M, p):
    sp = Space(Generator.bspline(2), Lattice(np.arange(d_M, dtype=float)), A=1.0, B=3.0 if p == 2 else 2.0, p=p)
    return plan_truncation(sp, Domain("0 4"), 0.01), sp


@pytest.mark.parametrize("p", [2.0, 1.0])
def test_net_covers_random_probes(p, rng):
    plan, sp = _net_plan(2, p)
    D, mu = sp.D, 4.0
    eps = 0.25 * D * mu ** (1 / p)
    net = build_net(plan, eps, D, mu, p, step=1 / 32)
    assert 1 <= net.size <= net.bound
    S = net.matrix
    for _ in range(50):
        c = rng.standard_normal(2)
        c *= (rng.uniform(sp.A, sp.B) * mu) ** (1 / p) / np.sum(np.abs(c) ** p) ** (1 / p)
        f = GridFunction(net.grid, S @ c, Coefficients(net.nodes, c))
        assert net.distance(f) <= eps + 1e-12


def test_net_trivial_for_large_eps():
    plan, sp = _net_plan(1, 2.0)
    net = build_net(plan, 100.0, sp.D, 4.0, 2.0)
    assert net.size == 1 and net.bound == 1.0


def test_net_refuses_large_dimension(hat_space, omega4):
    plan = plan_truncation(hat_space, omega4, 0.01)
    with pytest.raises(NetTooLargeError):
        build_net(plan, 0.5, hat_space.D, 4.0, 2.0)


def test_scaled_h_breaks_upper_sandwich(rng):
    # negative controls: shrinking h trips the upper bound, inflating it the lower one
    f, _ = _hat_fn(rng.standard_normal(6) * 3)
    dec = decompose(f, LevelParams(a_for_p(2), 2, -20, 10))
    h = dec.h
    dec.h = h.scaled(0.5)
    assert verify_h_bounds(f, dec).max_upper_ratio > 1
    dec.h = h.scaled(2.0)
    assert verify_h_bounds(f, dec).min_lower_ratio < 1
    assert not verify_h_bounds(f, dec).ok


def test_transfer_limit_collapses_to_ratio():
    a, p, mu = 0.05, 2.0, 4.0
    tb = transfer_bounds(1.0, 1.0, 0.0, LevelParams(a, p, -4000, 10), mu)
    fo = 3.0
    assert tb.lower(fo) == pytest.approx((C1(a) / C2(a)) ** p * fo / mu, rel=1e-12)
    assert tb.upper(fo) == pytest.approx((C2(a) / C1(a)) ** p * fo / mu, rel=1e-12)


def test_transfer_numeric_instance():
    tb = transfer_bounds(0.0, 0.0, 0.1, LevelParams(0.1, 2, -10, 5), 4.0)
    c1p, c2p, bot = 0.9 ** 2, 1.21 ** 2, 1.1 ** -20
    assert tb.lower(2.0) == pytest.approx(c1p * (2.0 / (c2p * 4) - bot - 0.1))
    assert tb.upper(2.0) == pytest.approx(c2p * (2.0 / (c1p * 4) + bot + 0.1))


def test_sampled_pnorm_linear_monte_carlo():
    grid = Grid.covering([0], [4], 1 / 64)
    x = grid.axes()[0]
    f = GridFunction(grid, x)
    s = uniform_samples(Domain("0 4"), 10_000, seed=4)
    # mean of x^2 on [0, 4] is 16/3, variance of x^2 is 256/5 - 256/9
    se = math.sqrt((256 / 5 - 256 / 9) / 10_000)
    assert abs(sampled_pnorm(f, s, 2) - 16 / 3) <= 3 * se
    zero = GridFunction(grid, np.zeros(grid.shape))
    assert sampled_pnorm(zero, s, 2) == 0.0
