"""Welfare and stochastic-price error as pool liquidity scales up.

Two tables: average welfare of the unit-price linear pool against the
one-shot level 3/8, and the distance of the product pool's stochastic
equilibrium price from the clearing price, both across liquidity multiples.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

import cfmmlab as cl  # noqa: E402
from cfmmlab.simulation import estimate_welfare  # noqa: E402
from cfmmlab.solvers import SolverSettings, price_to_reserves  # noqa: E402


def welfare_table(steps: int, seed: int) -> None:
    print("linear pool at the clearing price, Bernoulli(1/2)^2 endowments")
    print(f"{'lambda':>8s} {'welfare':>10s} {'se':>9s} {'exact chain':>12s}")
    for scale in (1.0, 4.0, 16.0, 64.0):
        config = cl.CfmmwdConfig(
            cfmm=cl.CfmmState(cl.ConstantSum((1.0, 1.0)), (2.0, 2.0)),
            utility=cl.CobbDouglasProduct(),
            distribution=cl.BernoulliProduct(0.5, 1.0, 2),
            steps=steps,
            seed=seed,
            liquidity_scale=scale,
            record_every=10**9,
        )
        welfare, se = estimate_welfare(cl.run_cfmmwd(config))
        total = int(4 * scale)
        exact = 0.375 - 1.0 / (8.0 * (2 * total + 1))
        print(f"{scale:8.0f} {welfare:10.6f} {se:9.2e} {exact:12.6f}")
    print(f"{'inf':>8s} {'':>10s} {'':>9s} {0.375:12.6f}  (one-shot welfare)")


def price_table() -> None:
    print("\nproduct pool: stochastic price vs clearing price (1/3, 2/3)")
    dist = cl.DiscreteAtoms(((2.0, 0.0), (0.0, 1.0)), (0.5, 0.5))
    u = cl.CobbDouglasProduct()
    p_star = cl.distributional_walrasian_equilibrium(u, dist)
    base = price_to_reserves(cl.ConstantProduct(), 25.0, p_star)
    settings = SolverSettings(tolerance=1e-12, max_iterations=300_000)
    print(f"{'lambda':>8s} {'p_s(1)':>10s} {'|p_s - p*|':>12s}")
    for scale in (1.0, 4.0, 16.0, 64.0):
        level = float(np.prod(scale * base))
        p_s = cl.stochastic_equilibrium_price(
            u, dist, cl.ConstantProduct(), level, settings, initial_price=p_star
        )
        print(f"{scale:8.0f} {p_s[0]:10.6f} {float(np.max(np.abs(p_s - p_star))):12.3e}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=1_000_000)
    parser.add_argument("--seed", type=int, default=101)
    args = parser.parse_args()
    welfare_table(args.steps, args.seed)
    price_table()
