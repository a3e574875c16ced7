"""Curve families: invariants, gradients, spot prices, feasibility."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfmmlab.cfmm import (
    CfmmState,
    ConstantMin,
    ConstantProduct,
    ConstantSum,
    ExpProduct,
    GeometricMean,
    QuadraticOverLinear,
    cpmm_swap_output,
    invariant_eval,
    invariant_grad,
    spot_price,
    trade_feasible,
)
from cfmmlab.errors import DomainError, NonsmoothPointError

SMOOTH_INCREASING = [
    ConstantSum((1.0, 3.0)),
    ConstantProduct(),
    GeometricMean((0.5, 0.5)),
    GeometricMean((0.25, 0.75)),
    ExpProduct(),
]

TRULY_CONCAVE = [
    ConstantSum((1.0, 3.0)),
    GeometricMean((0.5, 0.5)),
    GeometricMean((0.25, 0.75)),
    ConstantMin(),
    QuadraticOverLinear(),
]

# x*y and x*e^y are quasiconcave but not concave (both are convex along the
# diagonal), so they get the level-set midpoint probe instead.
QUASICONCAVE_ONLY = [ConstantProduct(), ExpProduct()]


def finite_diff_grad(function, reserves, h=1e-6):
    reserves = np.asarray(reserves, dtype=float)
    out = np.zeros(len(reserves))
    for i in range(len(reserves)):
        hi, lo = reserves.copy(), reserves.copy()
        hi[i] += h
        lo[i] -= h
        out[i] = (invariant_eval(function, hi) - invariant_eval(function, lo)) / (2 * h)
    return out


class TestInvariantEval:
    def test_product(self):
        assert invariant_eval(ConstantProduct(), [1000.0, 1000.0]) == 1_000_000.0

    def test_min_three_goods(self):
        assert invariant_eval(ConstantMin(), [3.0, 7.0, 5.0]) == 3.0

    def test_exp_product_zero_exponent(self):
        assert invariant_eval(ExpProduct(), [2.0, 0.0]) == 2.0

    def test_quadratic_over_linear_domain(self):
        assert invariant_eval(QuadraticOverLinear(), [2.0, 1.0]) == -4.0
        with pytest.raises(DomainError):
            invariant_eval(QuadraticOverLinear(), [2.0, 0.0])


class TestInvariantGrad:
    def test_product(self):
        assert np.allclose(invariant_grad(ConstantProduct(), [2.0, 1.0]), [1.0, 2.0])

    def test_constant_sum_is_linear(self):
        c = ConstantSum((1.0, 3.0))
        assert np.allclose(invariant_grad(c, [10.0, 0.5]), [1.0, 3.0])
        assert np.allclose(invariant_grad(c, [0.1, 99.0]), [1.0, 3.0])

    def test_geometric_mean_matches_finite_differences(self):
        g = GeometricMean((0.5, 0.5))
        got = invariant_grad(g, [4.0, 1.0])
        assert np.allclose(got, finite_diff_grad(g, [4.0, 1.0]), rtol=1e-5)

    def test_min_tie_is_nonsmooth(self):
        with pytest.raises(NonsmoothPointError):
            invariant_grad(ConstantMin(), [2.0, 2.0, 5.0])

    def test_min_unique_argmin_is_one_hot(self):
        assert np.allclose(invariant_grad(ConstantMin(), [3.0, 1.0, 5.0]), [0, 1, 0])

    @pytest.mark.parametrize("function", SMOOTH_INCREASING)
    def test_positive_at_interior_points(self, function):
        rng = np.random.default_rng(3)
        for _ in range(50):
            reserves = rng.uniform(0.2, 10.0, size=2)
            assert np.all(invariant_grad(function, reserves) > 0)

    @pytest.mark.parametrize("function", SMOOTH_INCREASING + [QuadraticOverLinear()])
    def test_matches_finite_differences(self, function):
        rng = np.random.default_rng(4)
        for _ in range(30):
            reserves = rng.uniform(0.5, 8.0, size=2)
            got = invariant_grad(function, reserves)
            assert np.allclose(got, finite_diff_grad(function, reserves), rtol=1e-5, atol=1e-8)


class TestSpotPrice:
    def test_balanced_product_pool(self):
        assert np.allclose(spot_price(ConstantProduct(), [1000.0, 1000.0]), [0.5, 0.5])

    def test_skewed_product_pool(self):
        assert np.allclose(spot_price(ConstantProduct(), [2.0, 1.0]), [1 / 3, 2 / 3])

    def test_constant_sum_price_is_fixed(self):
        c = ConstantSum((1.0, 1.0))
        assert np.allclose(spot_price(c, [7.0, 1.0]), [0.5, 0.5])

    def test_quadratic_over_linear_uses_absolute_gradient(self):
        p = spot_price(QuadraticOverLinear(), [2.0, 1.0])
        assert np.all(p > 0)
        assert p.sum() == pytest.approx(1.0)

    def test_min_tie_propagates_nonsmooth(self):
        with pytest.raises(NonsmoothPointError):
            spot_price(ConstantMin(), [2.0, 2.0])


class TestTradeFeasible:
    def test_profitable_for_pool(self):
        state = CfmmState(ConstantProduct(), (100.0, 100.0))
        assert trade_feasible(state, [10.0, -9.0])  # 110*91 >= 10000

    def test_zero_trade(self):
        state = CfmmState(ConstantProduct(), (100.0, 100.0))
        assert trade_feasible(state, [0.0, 0.0])

    def test_value_extracting_trade_rejected(self):
        state = CfmmState(ConstantProduct(), (100.0, 100.0))
        assert not trade_feasible(state, [10.0, -10.0])  # 110*90 < 10000

    def test_negative_post_reserves_infeasible(self):
        state = CfmmState(ConstantSum((1.0, 1.0)), (5.0, 5.0))
        assert not trade_feasible(state, [10.0, -6.0])

    def test_domain_exit_infeasible_not_error(self):
        state = CfmmState(QuadraticOverLinear(), (2.0, 1.0))
        assert not trade_feasible(state, [0.0, -1.0])

    def test_fee_scales_trade(self):
        state = CfmmState(ConstantProduct(), (100.0, 100.0), fee=0.5)
        # with fee 0.5 only half the deposit counts: 105*95.5 > 10000
        assert trade_feasible(state, [10.0, -9.0])
        assert not trade_feasible(state, [10.0, -10.0])


@settings(max_examples=200, deadline=None)
@given(
    r0=st.floats(1.0, 1e6),
    r1=st.floats(1.0, 1e6),
    amount=st.floats(0.0, 1e5),
)
def test_swap_consistency(r0, r1, amount):
    out = cpmm_swap_output(r0, r1, amount)
    assert 0.0 <= out <= r1
    post = (r0 + amount) * (r1 - out)
    assert abs(post - r0 * r1) <= 1e-10 * r0 * r1


class TestSwapOutput:
    def test_half_pool_deposit_arithmetic(self):
        assert cpmm_swap_output(100.0, 100.0, 100.0) == pytest.approx(50.0)

    def test_no_trade(self):
        assert cpmm_swap_output(123.0, 456.0, 0.0) == 0.0

    def test_small_trade_value(self):
        got = cpmm_swap_output(1000.0, 1000.0, 10.0)
        assert got == pytest.approx(9.900990099009901, abs=1e-12)


def _random_interior_pair(rng, function):
    if isinstance(function, QuadraticOverLinear):
        return rng.uniform(0.5, 8.0, size=2), rng.uniform(0.5, 8.0, size=2)
    return rng.uniform(0.2, 10.0, size=2), rng.uniform(0.2, 10.0, size=2)


@pytest.mark.parametrize("function", TRULY_CONCAVE)
def test_concavity_probe(function, subtests=None):
    rng = np.random.default_rng(7)
    dim = 3 if isinstance(function, ConstantMin) else 2
    for _ in range(1000):
        if dim == 3:
            a, b = rng.uniform(0.2, 10.0, size=3), rng.uniform(0.2, 10.0, size=3)
        else:
            a, b = _random_interior_pair(rng, function)
        t = rng.uniform(0.0, 1.0)
        mid = t * a + (1 - t) * b
        lhs = invariant_eval(function, mid)
        rhs = t * invariant_eval(function, a) + (1 - t) * invariant_eval(function, b)
        assert lhs >= rhs - 1e-9, (function, a, b, t)


@pytest.mark.parametrize("function", QUASICONCAVE_ONLY)
def test_quasiconcavity_probe(function):
    # midpoint value never drops below the worse endpoint: the feasible
    # upper level sets are convex even though the function itself is not
    # concave along the diagonal
    rng = np.random.default_rng(8)
    for _ in range(1000):
        a, b = _random_interior_pair(rng, function)
        t = rng.uniform(0.0, 1.0)
        mid = t * a + (1 - t) * b
        lhs = invariant_eval(function, mid)
        floor = min(invariant_eval(function, a), invariant_eval(function, b))
        assert lhs >= floor - 1e-9, (function, a, b, t)


def test_level_set_closure_under_equality_trades():
    # walking along the level set keeps the invariant constant
    function = ConstantProduct()
    state = CfmmState(function, (100.0, 100.0))
    level = invariant_eval(function, state.reserves)
    rng = np.random.default_rng(9)
    reserves = np.asarray(state.reserves)
    for _ in range(100):
        new_x = reserves[0] * rng.uniform(0.8, 1.25)
        new_reserves = np.array([new_x, level / new_x])
        trade = new_reserves - reserves
        assert trade_feasible(CfmmState(function, tuple(reserves)), trade)
        reserves = new_reserves
        drift = abs(invariant_eval(function, reserves) - level)
        assert drift <= 1e-10 * abs(level)
