"""Rebalance-vs-post sweep: how much a passive pool position gives up.

Sweeps the market price c = (1, p) for a product pool seeded at (1, 1) and
prints the utility of rebalancing on the market, the utility after the pool
is arbitraged, and the gap (zero only at the tangent price p = 1).
"""

import argparse
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

import cfmmlab as cl  # noqa: E402
from cfmmlab.lp_analysis import LpComparison, lp_loss  # noqa: E402


def run(lo: float, hi: float, count: int) -> None:
    print(f"{'p':>8s} {'rebalance':>10s} {'pooled':>8s} {'gap':>10s}")
    for p in np.geomspace(lo, hi, count):
        cmp = LpComparison(cl.CobbDouglasProduct(), cl.ConstantProduct(), (1.0, 1.0), (1.0, float(p)))
        u_rebalance, u_pool, gap = lp_loss(cmp)
        print(f"{p:8.3f} {u_rebalance:10.5f} {u_pool:8.5f} {gap:10.5f}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--lo", type=float, default=0.1)
    parser.add_argument("--hi", type=float, default=10.0)
    parser.add_argument("--count", type=int, default=21)
    args = parser.parse_args()
    run(args.lo, args.hi, args.count)
