"""Utility families, price-taking demand, and one-shot welfare."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from cfmmlab.distributions import BernoulliProduct, DiscreteAtoms, UniformBox
from cfmmlab.economy import (
    CobbDouglasProduct,
    ExchangeEconomy,
    ShiftedLogSum,
    WeightedGeometric,
    excess_demand,
    one_shot_welfare,
    utility_eval,
    utility_grad,
    walrasian_demand,
)
from cfmmlab.errors import DimensionMismatchError, DomainError


def central_diff_gradient(u, x, h=1e-6):
    """Independent oracle: central finite differences of the utility value."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros(len(x))
    for i in range(len(x)):
        hi = x.copy()
        lo = x.copy()
        hi[i] += h
        lo[i] -= h
        grad[i] = (utility_eval(u, hi) - utility_eval(u, lo)) / (2 * h)
    return grad


UTILITIES_2D = [
    CobbDouglasProduct(),
    WeightedGeometric((0.5, 0.5)),
    WeightedGeometric((0.3, 0.7)),
    ShiftedLogSum((0.0, 0.0)),
    ShiftedLogSum((0.5, 1.5)),
    ShiftedLogSum((0.02, 0.02)),
]


class TestUtilityEval:
    def test_product_at_half_half(self):
        assert utility_eval(CobbDouglasProduct(), [0.5, 0.5]) == 0.25

    def test_product_with_zero_factor(self):
        assert utility_eval(CobbDouglasProduct(), [0.0, 5.0]) == 0.0

    def test_shifted_log_at_origin(self):
        assert utility_eval(ShiftedLogSum((1.0, 1.0)), [0.0, 0.0]) == 0.0

    def test_shifted_log_neg_inf_sentinel(self):
        assert utility_eval(ShiftedLogSum((0.0, 1.0)), [0.0, 1.0]) == -math.inf

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            utility_eval(WeightedGeometric((0.5, 0.5)), [1.0, 1.0, 1.0])

    def test_bad_weights_rejected(self):
        with pytest.raises(DomainError):
            WeightedGeometric((0.5, 0.6))
        with pytest.raises(DomainError):
            WeightedGeometric((-0.5, 1.5))
        with pytest.raises(DomainError):
            ShiftedLogSum((-1.0, 0.0))


class TestUtilityGrad:
    def test_product_gradient(self):
        assert np.allclose(utility_grad(CobbDouglasProduct(), [2.0, 3.0]), [3.0, 2.0])

    def test_log_gradient(self):
        assert np.allclose(utility_grad(ShiftedLogSum((0.0, 0.0)), [1.0, 2.0]), [1.0, 0.5])

    def test_weighted_geometric_matches_finite_differences(self):
        u = WeightedGeometric((0.5, 0.5))
        got = utility_grad(u, [1.0, 1.0])
        oracle = central_diff_gradient(u, [1.0, 1.0])
        assert np.allclose(got, oracle, rtol=1e-5)
        assert np.allclose(got, [0.5, 0.5])

    def test_boundary_point_rejected_for_geometric(self):
        with pytest.raises(DomainError):
            utility_grad(CobbDouglasProduct(), [0.0, 1.0])

    @pytest.mark.parametrize("u", UTILITIES_2D)
    def test_gradient_check_random_interior(self, u):
        rng = np.random.default_rng(11)
        for _ in range(50):
            x = rng.uniform(0.2, 5.0, size=2)
            got = utility_grad(u, x)
            oracle = central_diff_gradient(u, x)
            assert np.allclose(got, oracle, rtol=1e-5), (u, x)


class TestWalrasianDemand:
    def test_closed_form_example(self):
        got = walrasian_demand(CobbDouglasProduct(), [1.0, 0.0], [1.0, 1.0])
        assert np.allclose(got, [0.5, 0.5])

    def test_zero_wealth_returns_zero_bundle(self):
        for u in UTILITIES_2D:
            got = walrasian_demand(u, [0.0, 0.0], [0.3, 0.7])
            assert np.all(got == 0.0), u

    def test_price_scale_invariance(self):
        a = walrasian_demand(CobbDouglasProduct(), [1.0, 0.0], [1.0, 1.0])
        b = walrasian_demand(CobbDouglasProduct(), [1.0, 0.0], [2.0, 2.0])
        assert np.array_equal(a, b)
        assert np.allclose(b, [0.5, 0.5])

    def test_nonpositive_price_rejected(self):
        with pytest.raises(DomainError):
            walrasian_demand(CobbDouglasProduct(), [1.0, 0.0], [1.0, 0.0])

    def test_shifted_log_clamped_corner_keeps_kkt(self):
        # large shift on good 1 drives its demand to the corner
        u = ShiftedLogSum((5.0, 0.0))
        price = np.array([0.5, 0.5])
        endowment = np.array([0.5, 0.5])
        zeta = walrasian_demand(u, endowment, price)
        assert zeta[0] == 0.0
        assert math.isclose(float(price @ zeta), float(price @ endowment), rel_tol=1e-12)
        # corner coordinate must have marginal utility per unit price below
        # the interior one (otherwise releasing the clamp would improve)
        marginals = utility_grad(u, zeta) / price
        assert marginals[0] <= marginals[1] + 1e-12

    @pytest.mark.parametrize("u", UTILITIES_2D)
    def test_demand_optimality_against_random_budget_bundles(self, u):
        rng = np.random.default_rng(5)
        endowment = np.array([1.3, 0.4])
        price = np.array([0.35, 0.65])
        zeta = walrasian_demand(u, endowment, price)
        best = utility_eval(u, zeta)
        wealth = float(price @ endowment)
        for _ in range(1000):
            direction = rng.uniform(0.0, 1.0, size=2) + 1e-12
            bundle = direction * (wealth / float(price @ direction))
            assert best >= utility_eval(u, bundle) - 1e-9


@settings(max_examples=150, deadline=None)
@given(
    u=st.sampled_from(UTILITIES_2D),
    e1=st.floats(0.0, 10.0),
    e2=st.floats(0.0, 10.0),
    p1=st.floats(0.05, 20.0),
    p2=st.floats(0.05, 20.0),
)
def test_budget_binds_exactly(u, e1, e2, p1, p2):
    endowment = np.array([e1, e2])
    price = np.array([p1, p2])
    zeta = walrasian_demand(u, endowment, price)
    wealth = float((price / price.sum()) @ endowment)
    spent = float((price / price.sum()) @ zeta)
    assert abs(spent - wealth) <= 1e-12 * max(1.0, wealth)
    assert np.all(zeta >= 0.0)


@settings(max_examples=150, deadline=None)
@given(
    u=st.sampled_from(UTILITIES_2D),
    e1=st.floats(0.0, 10.0),
    e2=st.floats(0.0, 10.0),
    p1=st.floats(0.05, 20.0),
    p2=st.floats(0.05, 20.0),
)
def test_walras_law(u, e1, e2, p1, p2):
    endowment = np.array([e1, e2])
    price = np.array([p1, p2])
    z = excess_demand(u, endowment, price)
    wealth = float((price / price.sum()) @ endowment)
    assert abs(float((price / price.sum()) @ z)) <= 1e-12 * max(1.0, wealth)


@settings(max_examples=100, deadline=None)
@given(
    u=st.sampled_from(UTILITIES_2D),
    exponent=st.integers(-8, 8),
)
def test_homogeneity_exact_for_dyadic_scalings(u, exponent):
    endowment = np.array([1.0, 0.25])
    price = np.array([0.375, 0.625])
    lam = 2.0**exponent
    a = walrasian_demand(u, endowment, price)
    b = walrasian_demand(u, endowment, lam * price)
    assert np.array_equal(a, b)


class TestOneShotWelfare:
    def test_bernoulli_atoms_exact(self):
        u = CobbDouglasProduct()
        dist = BernoulliProduct(0.5, 1.0, 2)
        value, se = one_shot_welfare(u, dist, [0.5, 0.5])
        # enumerating the four corners: (0,0)->0, (1,0)->1/4, (0,1)->1/4, (1,1)->1
        assert value == pytest.approx(0.375, abs=1e-15)
        assert se == 0.0

    def test_degenerate_point_needs_no_trade(self):
        dist = DiscreteAtoms(((1.0, 1.0),), (1.0,))
        value, se = one_shot_welfare(CobbDouglasProduct(), dist, [0.5, 0.5])
        assert value == 1.0
        assert se == 0.0

    def test_uniform_monte_carlo_matches_quadrature_oracle(self):
        # at price (1/2,1/2) the traded bundle is balanced at half the
        # trader's total endowment, so U = ((d1+d2)/2)^2
        oracle, _ = integrate.dblquad(lambda y, x: ((x + y) / 2.0) ** 2, 0, 1, 0, 1)
        assert oracle == pytest.approx(7.0 / 24.0, abs=1e-12)
        u = CobbDouglasProduct()
        dist = UniformBox((0.0, 0.0), (1.0, 1.0))
        value, se = one_shot_welfare(u, dist, [0.5, 0.5], n_samples=40_000, seed=2)
        assert se > 0.0
        assert abs(value - oracle) <= 3.0 * se


class TestExchangeEconomy:
    def test_rejects_empty(self):
        with pytest.raises(DomainError):
            ExchangeEconomy(())

    def test_rejects_mixed_dimensions(self):
        with pytest.raises(DimensionMismatchError):
            ExchangeEconomy(
                (
                    (CobbDouglasProduct(), (1.0, 0.0)),
                    (CobbDouglasProduct(), (1.0, 0.0, 1.0)),
                )
            )

    def test_aggregate(self):
        eco = ExchangeEconomy(
            ((CobbDouglasProduct(), (1.0, 0.0)), (CobbDouglasProduct(), (0.0, 2.0)))
        )
        assert np.allclose(eco.aggregate_endowment(), [1.0, 2.0])
