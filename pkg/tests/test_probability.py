import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rksampling.errors import DegenerateWindowError
from rksampling.probability import (
    G_size_bound,
    asymptotic_budget,
    bernstein_bound,
    choose_sigma_j0,
    empirical_tail_check,
    failure_probability,
    format_constants,
    levelwise_failure_probability,
    main_bounds,
    min_sample_size,
    theory_constants,
    union_failure,
)

SIGMA_EX = 0.1707534
BERN_32 = 0.7357589


def test_bernstein_values():
    assert bernstein_bound(32, 0.5, 1.0) == pytest.approx(BERN_32, abs=1e-7)
    assert bernstein_bound(1, 0.1, 1.0) > 1.0
    assert bernstein_bound(1, 0.1, 1.0, probability=True) == 1.0


@pytest.mark.parametrize("args", [(10, 0.0, 1.0), (10, 1.0, 1.0), (10, 0.5, 0.0), (0, 0.5, 1.0)])
def test_bernstein_rejects(args):
    with pytest.raises(ValueError):
        bernstein_bound(*args)


def test_union_failure():
    fam = [(3, 0.5, 1.0), (5, 0.25, 2.0)]
    want = 3 * bernstein_bound(64, 0.5, 1.0) + 5 * bernstein_bound(64, 0.25, 2.0)
    assert union_failure(fam, 64) == pytest.approx(want)
    with pytest.raises(ValueError):
        union_failure([(0, 0.5, 1.0)], 10)


def test_choose_sigma_j0_examples():
    sigma, _ = choose_sigma_j0(1.0, 1.0, 0.5, 0.1, 2.0)
    assert sigma == pytest.approx(SIGMA_EX, abs=1e-7)
    _, j0 = choose_sigma_j0(2.0, 2.0, 0.0, 0.1, 2.0)
    assert j0 == -10


def test_j0_is_conservative():
    for A, B, delta, a, p in [(1, 3, 0.1, 0.0374, 2), (2, 2, 0.1, 0.075, 1), (1, 1, 0.5, 0.1, 2)]:
        _, j0 = choose_sigma_j0(A, B, delta, a, p)
        target = A * (1 + a) ** (-2 * p) * (1 - delta) / (4 * B)
        assert (1 + a) ** (p * j0) <= target < (1 + a) ** (p * (j0 + 1))


def test_min_sample_size():
    assert min_sample_size(0.5, 10, 20) == 160000
    assert min_sample_size(0.5, 0, 20) == 0
    assert min_sample_size(0.5, 10, 40) == 4 * 160000
    with pytest.raises(ValueError):
        min_sample_size(0.0, 1, 1)


def test_main_bounds():
    lo, hi = main_bounds(1.0, 1.0, 0.01, 1.0, 1.0)
    assert lo == pytest.approx(0.182) and hi == pytest.approx(3.0)
    with pytest.warns(RuntimeWarning):
        main_bounds(2.0, 5.0, 0.5, 1.0, 1.0)
    with pytest.raises(ValueError):
        main_bounds(2.0, 1.0, 1.0, 1.0, 1.0)


def test_asymptotic_budget():
    assert asymptotic_budget(16) == 342
    assert asymptotic_budget(math.e) == 3
    with pytest.raises(ValueError):
        asymptotic_budget(2.0)


def _tc(**kw):
    base = dict(p=1.0, A=2.0, B=2.0, D=2.0, mu=4.0, d_M=4, delta=0.1, tau=0.01)
    base.update(kw)
    return theory_constants(**base)


def test_theory_constants_consistency():
    tc = _tc()
    assert tc.G_size == tc.J - tc.j0 + 1
    assert tc.r_min == min_sample_size(tc.sigma, tc.d_M, tc.G_size)
    assert tc.R(tc.r_min) >= 0 > tc.R(tc.r_min - 1)
    assert tc.G_size <= G_size_bound(tc) + 2
    d = tc.as_dict()
    assert d["A1"] == pytest.approx(tc.A1) and "L_j" not in d
    assert np.allclose(tc.eta_j, 4 * tc.sigma / (5 * tc.G_size))


def test_theory_constants_degenerate():
    with pytest.raises(DegenerateWindowError):
        _tc(D=1e-30)


def test_failure_probability_regimes():
    tc = _tc()
    assert failure_probability(tc, tc.r_min - 1) == 1.0
    assert failure_probability(tc, tc.r_min) == 1.0     # R = 0 leaves the prefactor
    big = 100 * tc.r_min
    val = failure_probability(tc, big)
    assert 0 <= val < 1e-10
    assert val == pytest.approx(min(1.0, tc.failure_raw(big)), rel=1e-9)


def test_levelwise_exceeds_j0_variant():
    # the j0 term is the smallest of the level terms, so the level sum is larger
    tc = _tc()
    r = 50 * tc.r_min
    assert levelwise_failure_probability(tc, r) >= failure_probability(tc, r)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 10**9), st.integers(1, 10**9))
def test_failure_monotone_in_r(r1, r2):
    tc = _tc()
    lo, hi = sorted((r1, r2))
    assert failure_probability(tc, hi) <= failure_probability(tc, lo)
    assert levelwise_failure_probability(tc, hi) <= levelwise_failure_probability(tc, lo)


@pytest.mark.parametrize("dist", ["rademacher", "uniform", "sparse", "zero"])
def test_empirical_tail_within_bound(dist):
    chk = empirical_tail_check(dist, 64, 0.5, 1.0, trials=4000, seed=1)
    assert chk.ok
    assert 0 <= chk.frequency <= 1


def test_empirical_tail_deterministic():
    a = empirical_tail_check("uniform", 32, 0.25, 1.0, trials=500, seed=9)
    b = empirical_tail_check("uniform", 32, 0.25, 1.0, trials=500, seed=9)
    assert a == b


def test_empirical_tail_rejects():
    with pytest.raises(ValueError):
        empirical_tail_check("rademacher", 8, 0.5, 3.0)
    with pytest.raises(ValueError):
        empirical_tail_check("cauchy", 8, 0.5, 1.0)


def test_format_constants():
    out = format_constants({"sigma": 0.5, "j0": -10, "flag": True})
    block, kv = out.split("\n\n")
    assert block.splitlines()[0] == "sigma : 0.5"
    assert kv.splitlines() == ["sigma=0.5", "j0=-10", "flag=True"]
