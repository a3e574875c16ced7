"""Sequential-trader process: determinism, conservation, estimators."""

import math

import numpy as np
import pytest
from scipy import stats

from cfmmlab.cfmm import CfmmState, ConstantMin, ConstantProduct, ConstantSum
from cfmmlab.distributions import (
    BernoulliProduct,
    DiscreteAtoms,
    UniformBox,
    sample_endowment,
)
from cfmmlab.economy import CobbDouglasProduct, ShiftedLogSum, utility_eval
from cfmmlab.errors import DimensionMismatchError, DomainError, NonsmoothPointError
from cfmmlab.rng import StepRng
from cfmmlab.simulation import (
    CfmmwdConfig,
    estimate_avg_price,
    estimate_welfare,
    reserve_heatmap,
    run_cfmmwd,
)
from cfmmlab.solvers import build_csmm_example_chain, stationary_distribution, trade_choice

CD = CobbDouglasProduct()


def csmm_config(r1=2.0, r2=2.0, steps=100_000, seed=11, scale=1.0, record_every=1):
    return CfmmwdConfig(
        cfmm=CfmmState(ConstantSum((1.0, 1.0)), (r1, r2)),
        utility=CD,
        distribution=BernoulliProduct(0.5, 1.0, 2),
        steps=steps,
        seed=seed,
        liquidity_scale=scale,
        record_every=record_every,
    )


class TestSampling:
    def test_point_mass(self):
        dist = DiscreteAtoms(((1.0, 0.0),), (1.0,))
        for step in range(50):
            assert np.array_equal(sample_endowment(dist, StepRng(0, step)), [1.0, 0.0])

    def test_bernoulli_corner_frequencies(self):
        dist = BernoulliProduct(0.5, 1.0, 2)
        counts = {(0, 0): 0, (1, 0): 0, (0, 1): 0, (1, 1): 0}
        n = 100_000
        for step in range(n):
            draw = dist.sample_scalars(StepRng(123, step))
            counts[(int(draw[0]), int(draw[1]))] += 1
        observed = np.array([counts[k] for k in sorted(counts)])
        chi2 = float(((observed - n / 4) ** 2 / (n / 4)).sum())
        # three degrees of freedom; reject only at the 1e-6 level
        assert chi2 < stats.chi2.ppf(1.0 - 1e-6, df=3)

    def test_uniform_mean_within_three_se(self):
        dist = UniformBox((0.0, 2.0), (1.0, 6.0))
        n = 100_000
        draws = np.array([dist.sample_scalars(StepRng(7, step)) for step in range(n)])
        se = draws.std(axis=0, ddof=1) / math.sqrt(n)
        assert np.all(np.abs(draws.mean(axis=0) - [0.5, 4.0]) <= 3 * se)

    def test_atom_probabilities(self):
        dist = DiscreteAtoms(((1.0, 0.0), (0.0, 1.0), (2.0, 2.0)), (0.2, 0.5, 0.3))
        n = 100_000
        hits = np.zeros(3)
        for step in range(n):
            draw = tuple(dist.sample_scalars(StepRng(5, step)))
            hits[{(1.0, 0.0): 0, (0.0, 1.0): 1, (2.0, 2.0): 2}[draw]] += 1
        assert np.all(np.abs(hits / n - [0.2, 0.5, 0.3]) < 0.01)


class TestRunDeterminism:
    def test_identical_configs_bit_identical_trajectories(self):
        a = run_cfmmwd(csmm_config(steps=5000))
        b = run_cfmmwd(csmm_config(steps=5000))
        assert np.array_equal(a.record_reserves, b.record_reserves)
        assert np.array_equal(a.record_utilities, b.record_utilities)
        assert a.welfare_sum == b.welfare_sum
        assert a.final_reserves == b.final_reserves

    def test_different_seeds_differ(self):
        a = run_cfmmwd(csmm_config(steps=5000, seed=1))
        b = run_cfmmwd(csmm_config(steps=5000, seed=2))
        assert not np.array_equal(a.record_reserves, b.record_reserves)

    def test_thinning_does_not_change_the_path(self):
        dense = run_cfmmwd(csmm_config(steps=4000, record_every=1))
        thin = run_cfmmwd(csmm_config(steps=4000, record_every=10))
        assert np.array_equal(dense.record_reserves[::10], thin.record_reserves)
        assert dense.welfare_sum == thin.welfare_sum
        assert dense.final_reserves == thin.final_reserves

    def test_restart_reproduces_suffix(self):
        full = run_cfmmwd(csmm_config(steps=2000))
        k = 700
        resumed = run_cfmmwd(
            csmm_config(steps=2000 - k),
            start_step=k,
            initial_reserves=full.record_reserves[k],
        )
        assert np.array_equal(resumed.record_reserves, full.record_reserves[k:])
        assert resumed.final_reserves == full.final_reserves

    def test_restart_reproduces_suffix_general_path(self):
        config = CfmmwdConfig(
            cfmm=CfmmState(ConstantMin(), (4.0, 5.0, 6.0)),
            utility=CD,
            distribution=UniformBox((0.0, 0.0, 0.0), (1.0, 1.0, 1.0)),
            steps=60,
            seed=4,
        )
        full = run_cfmmwd(config)
        resumed = run_cfmmwd(
            CfmmwdConfig(
                cfmm=config.cfmm,
                utility=config.utility,
                distribution=config.distribution,
                steps=30,
                seed=4,
            ),
            start_step=30,
            initial_reserves=full.record_reserves[30],
        )
        assert np.array_equal(resumed.record_reserves, full.record_reserves[30:])


class TestConservation:
    def test_levels_conserved_on_product_pool(self):
        config = CfmmwdConfig(
            cfmm=CfmmState(ConstantProduct(), (1000.0, 1000.0)),
            utility=CD,
            distribution=UniformBox((0.0, 0.0), (1.0, 1.0)),
            steps=100_000,
            seed=42,
        )
        traj = run_cfmmwd(config)
        assert traj.max_level_drift <= 1e-8 * abs(traj.initial_level)
        assert np.all(traj.record_reserves >= 0.0)

    def test_no_wealth_keeps_reserves_constant(self):
        config = CfmmwdConfig(
            cfmm=CfmmState(ConstantProduct(), (50.0, 50.0)),
            utility=CD,
            distribution=DiscreteAtoms(((0.0, 0.0),), (1.0,)),
            steps=2000,
            seed=0,
        )
        traj = run_cfmmwd(config)
        assert np.all(traj.record_reserves == 50.0)
        assert traj.final_reserves == (50.0, 50.0)
        assert not traj.record_traded.any()

    def test_scaled_reserves(self):
        config = csmm_config(scale=10.0, steps=10)
        traj = run_cfmmwd(config)
        assert traj.initial_reserves == (20.0, 20.0)
        assert traj.initial_level == 40.0


class TestOccupancy:
    def test_boundary_occupancy_matches_exact_chain(self):
        # the linear pool walk has an exact finite-chain law to compare with
        chain = build_csmm_example_chain(2, 2)
        pi = stationary_distribution(chain)
        steps = 1_000_000
        traj = run_cfmmwd(csmm_config(r1=2.0, r2=2.0, steps=steps, seed=17))
        xs = traj.record_reserves[:, 0]
        boundary = (xs == 0.0) | (xs == 4.0)
        frac = float(boundary.mean())
        batches = boundary.reshape(32, -1).mean(axis=1)
        se = float(batches.std(ddof=1) / math.sqrt(32))
        exact = float(pi[0] + pi[-1])
        assert abs(frac - exact) <= 3 * se

    def test_reserves_stay_on_half_integer_grid(self):
        traj = run_cfmmwd(csmm_config(steps=20_000, seed=3))
        doubled = 2.0 * traj.record_reserves
        assert np.array_equal(doubled, np.round(doubled))


class TestEstimators:
    def test_constant_utility_has_zero_se(self):
        config = CfmmwdConfig(
            cfmm=CfmmState(ConstantProduct(), (50.0, 50.0)),
            utility=CD,
            distribution=DiscreteAtoms(((1.0, 1.0),), (1.0,)),
            steps=6400,
            seed=0,
        )
        traj = run_cfmmwd(config)
        welfare, se = estimate_welfare(traj)
        assert welfare == 1.0
        assert se == 0.0

    def test_welfare_matches_exact_chain_expectation(self):
        # oracle: stationary law x the four endowment corners, traded by hand
        chain = build_csmm_example_chain(2, 2)
        pi = stationary_distribution(chain)
        exact = 0.0
        atoms = (((0.0, 0.0), 0.25), ((1.0, 0.0), 0.25), ((0.0, 1.0), 0.25), ((1.0, 1.0), 0.25))
        for reserves, weight in zip(chain.states, pi):
            pool = CfmmState(ConstantSum((1.0, 1.0)), reserves)
            for atom, prob in atoms:
                zeta, _ = trade_choice(CD, atom, pool)
                exact += float(weight) * prob * utility_eval(CD, zeta)
        traj = run_cfmmwd(csmm_config(r1=2.0, r2=2.0, steps=1_000_000, seed=23))
        welfare, se = estimate_welfare(traj)
        assert se > 0.0
        assert abs(welfare - exact) <= 3 * se

    def test_lambda_scaling_welfare_increases_toward_one_shot(self):
        # exact-chain oracle at growing liquidity: welfare climbs to 3/8
        values = []
        for scale in (1, 10, 100):
            chain = build_csmm_example_chain(scale, scale)
            pi = stationary_distribution(chain)
            value = 0.0
            atoms = (((1.0, 0.0), 0.25), ((0.0, 1.0), 0.25), ((1.0, 1.0), 0.25))
            for reserves, weight in zip(chain.states, pi):
                pool = CfmmState(ConstantSum((1.0, 1.0)), reserves)
                for atom, prob in atoms:
                    zeta, _ = trade_choice(CD, atom, pool)
                    value += float(weight) * prob * utility_eval(CD, zeta)
            values.append(value)
        assert values[0] < values[1] < values[2] < 0.375
        assert 0.375 - values[2] < 0.001

    def test_neg_inf_steps_propagate_with_count(self):
        config = CfmmwdConfig(
            cfmm=CfmmState(ConstantSum((1.0, 1.0)), (2.0, 2.0)),
            utility=ShiftedLogSum((0.0, 0.0)),
            distribution=BernoulliProduct(0.5, 1.0, 2),
            steps=500,
            seed=1,
        )
        traj = run_cfmmwd(config)
        welfare, se = estimate_welfare(traj)
        assert welfare == -math.inf
        assert math.isnan(se)
        assert traj.neg_inf_count > 0

    def test_avg_price_constant_on_linear_pool(self):
        traj = run_cfmmwd(csmm_config(steps=1000))
        price, se = estimate_avg_price(traj)
        assert np.array_equal(price, [0.5, 0.5])
        assert np.allclose(se, 0.0)

    def test_avg_price_undefined_on_min_pool(self):
        config = CfmmwdConfig(
            cfmm=CfmmState(ConstantMin(), (3.0, 3.0)),
            utility=CD,
            distribution=BernoulliProduct(0.5, 1.0, 2),
            steps=50,
            seed=2,
        )
        traj = run_cfmmwd(config)
        with pytest.raises(NonsmoothPointError):
            estimate_avg_price(traj)


class TestHeatmap:
    def test_constant_trajectory_single_bin(self):
        config = CfmmwdConfig(
            cfmm=CfmmState(ConstantProduct(), (50.0, 50.0)),
            utility=CD,
            distribution=DiscreteAtoms(((0.0, 0.0),), (1.0,)),
            steps=100,
            seed=0,
        )
        counts, _, _ = reserve_heatmap(run_cfmmwd(config), bins=20)
        assert (counts > 0).sum() == 1
        assert counts.sum() == 100

    def test_counts_conserved(self):
        traj = run_cfmmwd(csmm_config(steps=5000, record_every=7))
        counts, _, _ = reserve_heatmap(traj, bins=13)
        assert counts.sum() == len(traj.record_steps)

    def test_near_uniform_along_the_line_segment(self):
        traj = run_cfmmwd(csmm_config(r1=2.0, r2=2.0, steps=500_000, seed=29))
        counts, _, _ = reserve_heatmap(traj, bins=9)
        occupied = counts[counts > 0]
        assert len(occupied) == 9  # all nine half-step states on the segment
        assert occupied.min() > 0.7 * occupied.mean()

    def test_three_goods_rejected(self):
        config = CfmmwdConfig(
            cfmm=CfmmState(ConstantMin(), (2.0, 2.0, 2.0)),
            utility=CD,
            distribution=UniformBox((0, 0, 0), (1, 1, 1)),
            steps=5,
            seed=0,
        )
        with pytest.raises(DimensionMismatchError):
            reserve_heatmap(run_cfmmwd(config))


class TestConfigValidation:
    def test_bad_steps(self):
        with pytest.raises(DomainError):
            csmm_config(steps=0)

    def test_bad_scale(self):
        with pytest.raises(DomainError):
            csmm_config(scale=0.0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            CfmmwdConfig(
                cfmm=CfmmState(ConstantProduct(), (10.0, 10.0)),
                utility=CD,
                distribution=UniformBox((0, 0, 0), (1, 1, 1)),
                steps=5,
                seed=0,
            )
