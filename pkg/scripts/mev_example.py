"""Builder value demonstrations.

Part one reruns the three-transaction censoring example (builder holding
(0,1) doubles its utility by dropping the competing seller). Part two prints
the builder/non-builder value gap of a content-blind builder across
inclusion probabilities.
"""

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

import cfmmlab as cl  # noqa: E402
from cfmmlab.economy import utility_eval  # noqa: E402
from cfmmlab.mev import (  # noqa: E402
    BuilderProblem,
    Transaction,
    batch_walrasian_allocation,
    censoring_mev,
    censorship_min_mev,
    uninformed_builder_gap,
)
from cfmmlab.solvers import SolverSettings  # noqa: E402

CD = cl.CobbDouglasProduct()
TIGHT = SolverSettings(tolerance=1e-13, max_iterations=200_000)


def censoring_example() -> None:
    txs = (Transaction(CD, (1.0, 0.0)), Transaction(CD, (1.0, 0.0)), Transaction(CD, (0.0, 1.0)))
    problem = BuilderProblem(CD, (0.0, 1.0), txs, capacity=4, mode="censoring")
    best = censoring_mev(problem, TIGHT)
    _, allocations = batch_walrasian_allocation([Transaction(CD, (0.0, 1.0)), *txs], TIGHT)
    forced = censorship_min_mev(
        BuilderProblem(CD, (0.0, 1.0), txs, capacity=3, mode="censorship_minimizer"), TIGHT
    )
    print("three submitted transactions, builder holds (0, 1):")
    print(f"  free censoring  : utility {best.utility:.6f}, included {list(best.subset)}")
    print(f"  full inclusion  : utility {utility_eval(CD, allocations[0]):.6f}")
    print(f"  forced capacity : utility {forced.utility:.6f} at capacity 3")


def gap_table() -> None:
    dist = cl.BernoulliProduct(0.5, 1.0, 2)
    print("\ncontent-blind builder vs ordinary trader (0/1 endowments):")
    print(f"{'Pr[included]':>13s} {'builder':>9s} {'trader':>9s} {'gap':>9s}")
    for prob in (0.0, 0.25, 0.5, 0.75, 1.0):
        builder, trader, gap = uninformed_builder_gap(CD, dist, prob)
        print(f"{prob:13.2f} {builder:9.4f} {trader:9.4f} {gap:9.4f}")


if __name__ == "__main__":
    censoring_example()
    gap_table()
