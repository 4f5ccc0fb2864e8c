import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rksampling.domain import Domain
from rksampling.errors import AdmissibilityError
from rksampling.space import (
    Coefficients,
    Envelope,
    Generator,
    Grid,
    GridFunction,
    Lattice,
    Space,
    fit_tail,
)
from rksampling.truncation import (
    build_M,
    dimension_bound,
    dimension_constant,
    even_radius,
    plan_truncation,
    truncate,
    truncation_error_check,
    truncation_radius,
)


def test_truncation_radius_formula():
    # p = 2: q = 2, N = (C NG B / eps^2)^(1/(n alpha)) mu^(1/n)
    N = truncation_radius(0.1, 2.0, 1.0, 3.0, 2.0, 2.0, 1, 4.0)
    assert N == pytest.approx(math.sqrt(2 * 3 / 0.01) * 4)
    # p = 1 uses exponent 1 on eps and B
    assert truncation_radius(0.5, 1.0, 2.0, 2.0, 1.0, 1.0, 1, 4.0) == pytest.approx(2 * 2 / 0.5 * 4)


def test_truncation_radius_rejects():
    with pytest.raises(ValueError):
        truncation_radius(0.0, 1, 1, 1, 2, 2, 1, 1)
    with pytest.raises(ValueError):
        truncation_radius(0.1, 0, 1, 1, 2, 2, 1, 1)


@pytest.mark.parametrize("N, want", [(0.3, 2), (2.0, 2), (2.01, 4), (5.0, 6), (693.2, 694)])
def test_even_radius(N, want):
    assert even_radius(N) == want


def test_build_M_interval():
    M = build_M(Domain("0 1"), 2)
    assert [(b.lo, b.hi) for b in M.boxes] == [((-2.0,), (3.0,))]
    assert M.contains_closed(np.array([-2.0, 3.0])).all()
    assert not M.contains_closed(np.array([-2.001, 3.001])).any()


def test_build_M_square():
    M = build_M(Domain("0 2 0 2"), 2)
    lo, hi = M.bounding_box
    assert lo.tolist() == [-2.0, -2.0] and hi.tolist() == [4.0, 4.0]


def test_dimension_constant():
    assert dimension_constant(2, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 0.5) == pytest.approx(2 * 4 + 1)


def test_fit_tail_compact_and_exponential():
    fit = fit_tail(Envelope.indicator(0, 0.5), p=2)
    assert fit.C == 1.0 and fit.alpha == 2.0 and fit.compact
    fit = fit_tail(Envelope.exponential(1.0), p=2)
    assert fit.alpha >= 2.0
    assert all(s <= fit.C / N ** fit.alpha * (1 + 1e-12) for N, s in zip(fit.ladder, fit.sums))


def test_fit_tail_inadmissible():
    env = Envelope(lambda t: (1.0 + np.abs(t)) ** -2.5, label="slow")
    with pytest.raises(AdmissibilityError):
        fit_tail(env, p=2)       # tail ~ N^-1.5 is below p' = 2
    assert fit_tail(env, p=1).alpha >= 1.0


def test_canonical_plan(hat_space, omega4):
    plan = plan_truncation(hat_space, omega4, 0.01)
    assert plan.N == 694
    assert plan.d == 4
    assert plan.d_M == 21            # every node of Z n [-8, 12]
    assert plan.d_M <= dimension_bound(plan)
    assert "d_M        = 21" in plan.report()


def test_plan_small_N_selects_nodes():
    sp = Space(Generator.indicator(0, 0.5), Lattice.integer(-20, 24), A=1.0, B=1.0, p=1.0)
    plan = plan_truncation(sp, Domain("0 4"), 0.5)
    # C = 1, alpha = 1, NG = 1, B = 1: N = 1/0.5 * 4 = 8
    assert plan.N == 8
    assert plan.active_nodes.min() == -5 and plan.active_nodes.max() == 9
    assert plan.d_M == 15


def _random_fn(space, grid, rng):
    c = Coefficients(space.lattice.nodes, rng.standard_normal(len(space.lattice)))
    return c, GridFunction(grid, space.matrix(grid) @ c.values, c)


@pytest.mark.parametrize("eps", [0.5, 0.1])
def test_truncation_error_bounds_gaussian(eps, rng):
    g = Generator.gaussian(0.5)
    sp = Space(g, Lattice.integer(-40, 44), A=1.0, B=1.0, p=2.0)
    d = Domain("0 4")
    plan = plan_truncation(sp, d, eps)
    assert plan.active.sum() < len(sp.lattice)   # truncation actually removes nodes
    grid = sp.grid_for(sp.lattice.nodes, 1 / 32, d)
    S = sp.matrix(grid)
    for _ in range(20):
        c, f = _random_fn(sp, grid, rng)
        ct = truncate(c, plan)
        ft = GridFunction(grid, S @ ct.values, ct)
        chk = truncation_error_check(f, ft, d, 2.0, eps)
        assert chk.ok, chk


def test_truncation_check_detects_violation():
    grid = Grid.covering([0], [4], 1 / 16)
    f = GridFunction(grid, np.ones(grid.shape))
    z = GridFunction(grid, np.zeros(grid.shape))
    chk = truncation_error_check(f, z, Domain("0 4"), 2.0, 0.1)
    assert not chk.ok and chk.sup_slack < 0 and chk.lp_slack < 0


def test_dimension_bound_raises_when_violated(hat_space, omega4):
    plan = plan_truncation(hat_space, omega4, 0.01)
    plan.C_eps = 1.0
    with pytest.raises(AssertionError):
        dimension_bound(plan)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=21, max_size=21), st.sampled_from([0.5, 0.1, 0.01]))
def test_truncate_idempotent(vals, eps):
    sp = Space(Generator.indicator(0, 0.5), Lattice.integer(-8, 12), A=1.0, B=1.0, p=1.0)
    plan = plan_truncation(sp, Domain("0 4"), eps)
    c = Coefficients(sp.lattice.nodes, vals)
    once = truncate(c, plan)
    assert np.array_equal(truncate(once, plan).values, once.values)
    assert np.array_equal(once.values != 0, plan.active & (c.values != 0))
