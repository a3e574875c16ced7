"""The linear-pool worked example: exact chain vs long simulation.

For integer reserves and 0/1 endowments the reserve walk is a finite
reflecting chain whose stationary law is uniform. This prints the exact
average welfare, the long-run simulation estimate, and the rough
(1 - 1/(r1+r2)) * 3/8 reference value side by side.
"""

import argparse
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

import cfmmlab as cl  # noqa: E402
from cfmmlab.economy import utility_eval  # noqa: E402
from cfmmlab.simulation import estimate_welfare  # noqa: E402
from cfmmlab.solvers import trade_choice  # noqa: E402

ATOMS = (((0.0, 0.0), 0.25), ((1.0, 0.0), 0.25), ((0.0, 1.0), 0.25), ((1.0, 1.0), 0.25))


def run(r1: int, r2: int, steps: int, seed: int) -> None:
    u = cl.CobbDouglasProduct()
    chain = cl.build_csmm_example_chain(r1, r2)
    pi = cl.stationary_distribution(chain)
    exact = 0.0
    for reserves, weight in zip(chain.states, pi):
        pool = cl.CfmmState(cl.ConstantSum((1.0, 1.0)), reserves)
        for atom, prob in ATOMS:
            zeta, _ = trade_choice(u, atom, pool)
            exact += float(weight) * prob * utility_eval(u, zeta)

    config = cl.CfmmwdConfig(
        cfmm=cl.CfmmState(cl.ConstantSum((1.0, 1.0)), (float(r1), float(r2))),
        utility=u,
        distribution=cl.BernoulliProduct(0.5, 1.0, 2),
        steps=steps,
        seed=seed,
        record_every=10**9,
    )
    welfare, se = estimate_welfare(cl.run_cfmmwd(config))

    total = r1 + r2
    print(f"states                : {len(pi)}")
    print(f"boundary mass         : {float(pi[0] + pi[-1]):.12f}  (= 2/(2(r1+r2)+1))")
    print(f"exact average welfare : {exact:.6f}")
    print(f"simulated ({steps} steps): {welfare:.6f} +- {se:.1e}")
    print(f"(1 - 1/(r1+r2)) * 3/8 : {(1 - 1 / total) * 0.375:.6f}")
    print(f"one-shot welfare      : {0.375:.6f}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--r1", type=int, default=5)
    parser.add_argument("--r2", type=int, default=5)
    parser.add_argument("--steps", type=int, default=1_000_000)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()
    run(args.r1, args.r2, args.steps, args.seed)
