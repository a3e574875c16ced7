"""Command-line front end.

Subcommands: simulate, equilibrium, mev, lp-loss, stationary. Exit codes:
0 success, 1 numerical failure (the message names the failing step),
2 configuration errors. Artifacts are byte-deterministic for a fixed config.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .cfmm import CfmmState
from .distributions import DiscreteAtoms
from .economy import (
    CobbDouglasProduct,
    ShiftedLogSum,
    WeightedGeometric,
    excess_demand,
    utility_eval,
)
from .errors import CfmmLabError, ConfigError
from .lp_analysis import LpComparison, lp_loss
from .mev import (
    EXACT_ENUMERATION_CAP,
    BuilderProblem,
    Transaction,
    censoring_mev,
    censorship_min_mev,
)
from .simulation import (
    CfmmwdConfig,
    reserve_heatmap,
    run_cfmmwd,
    run_summary,
    write_heatmap_csv,
    write_run_json,
    write_trajectory_csv,
)
from .solvers import (
    SolverSettings,
    build_csmm_example_chain,
    distributional_walrasian_equilibrium,
    stationary_distribution,
    trade_choice,
)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _simulate_one(args: tuple) -> dict:
    sim_config, out_dir, heatmap_bins, echo = args
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    traj = run_cfmmwd(sim_config)
    write_trajectory_csv(traj, out / "trajectory.csv")
    if traj.record_reserves.shape[1] == 2:
        counts, x_edges, y_edges = reserve_heatmap(traj, heatmap_bins)
        write_heatmap_csv(counts, x_edges, y_edges, out / "heatmap.csv")
    summary = run_summary(traj, config_echo=echo)
    write_run_json(summary, out / "run.json")
    return summary


def cmd_simulate(args) -> int:
    doc = cfgmod.load_config(args.config)
    state, scale = cfgmod.build_cfmm_state(doc)
    utility = cfgmod.build_utility(doc)
    distribution = cfgmod.build_distribution(doc)
    run = cfgmod.build_run_params(
        doc, {"steps": args.steps, "seed": args.seed, "out_dir": args.out_dir}
    )
    echo = cfgmod.config_echo(doc)
    base_out = Path(run["out_dir"])

    jobs = []
    for replica in range(args.replicas):
        try:
            sim_config = CfmmwdConfig(
                cfmm=state,
                utility=utility,
                distribution=distribution,
                steps=run["steps"],
                seed=run["seed"] + replica,
                liquidity_scale=scale,
                record_every=run["record_every"],
            )
        except CfmmLabError as exc:
            raise ConfigError(str(exc)) from exc
        out_dir = base_out if args.replicas == 1 else base_out / f"replica_{replica:03d}"
        jobs.append((sim_config, str(out_dir), run["heatmap_bins"], echo))

    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            summaries = list(pool.map(_simulate_one, jobs))
    else:
        summaries = [_simulate_one(job) for job in jobs]

    if args.replicas > 1:
        merged = {"replicas": summaries}
        with open(base_out / "replicas.json", "w", newline="\n") as fh:
            json.dump(merged, fh, indent=2)
            fh.write("\n")

    for summary in summaries:
        welfare = summary["welfare"]
        line = (
            f"seed={summary['seed']} steps={summary['steps']} "
            f"welfare={_fmt(welfare)} se={_fmt(summary['welfare_se'])}"
            if not math.isinf(welfare)
            else f"seed={summary['seed']} steps={summary['steps']} welfare=-inf "
            f"(corner steps: {summary['neg_inf_steps']})"
        )
        if "avg_price" in summary:
            price = ",".join(_fmt(v) for v in summary["avg_price"])
            ses = ",".join(_fmt(v) for v in summary["avg_price_se"])
            line += f" avg_price=({price}) se=({ses})"
        print(line)
    return 0


def cmd_equilibrium(args) -> int:
    doc = cfgmod.load_config(args.config)
    utility = cfgmod.build_utility(doc)
    distribution = cfgmod.build_distribution(doc)
    section = doc.get("equilibrium", {})
    n_samples = section.get("n_samples", 100_000)
    seed = section.get("seed", 0) if args.seed is None else args.seed
    tolerance = section.get("tolerance", 1e-10)
    settings = SolverSettings(tolerance=tolerance, max_iterations=100_000)
    price = distributional_walrasian_equilibrium(utility, distribution, settings, n_samples, seed)

    atoms = distribution.atoms()
    if atoms is not None:
        residual = np.zeros(len(price))
        for point, prob in zip(*atoms):
            residual += prob * excess_demand(utility, point, price)
    else:
        from .rng import StepRng

        residual = np.zeros(len(price))
        for i in range(n_samples):
            residual += excess_demand(utility, distribution.sample(StepRng(seed, i)), price)
        residual /= n_samples
    print("equilibrium_price=(" + ",".join(_fmt(v) for v in price) + ")")
    print(f"excess_demand_residual={_fmt(float(np.max(np.abs(residual))))}")
    return 0


_UTILITY_TAGS = {
    "cobb_douglas": CobbDouglasProduct,
    "weighted_geometric": WeightedGeometric,
    "shifted_log_sum": ShiftedLogSum,
}


def _read_transactions(path: Path, utility) -> list[Transaction]:
    if not path.is_file():
        raise ConfigError(f"transactions file not found: {path}")
    expected_tag = next(
        tag for tag, cls in _UTILITY_TAGS.items() if isinstance(utility, cls)
    )
    txs = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0] != "utility_tag":
            raise ConfigError(
                f"{path}: first column must be `utility_tag`, got header {header}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            tag = row[0]
            if tag != expected_tag:
                raise ConfigError(
                    f"{path}:{line_no}: utility_tag {tag!r} does not match the "
                    f"configured utility {expected_tag!r}"
                )
            try:
                amounts = tuple(float(v) for v in row[1:])
            except ValueError as exc:
                raise ConfigError(f"{path}:{line_no}: bad amount in {row[1:]}") from exc
            txs.append(Transaction(utility, amounts))
    return txs


def cmd_mev(args) -> int:
    doc = cfgmod.load_config(args.config)
    utility = cfgmod.build_utility(doc)
    section = cfgmod.require_section(doc, "mev")
    for key in ("mode", "builder_endowment", "capacity", "transactions"):
        if key not in section:
            raise ConfigError(f"[mev] needs `{key}`")
    mode = section["mode"]
    if mode not in ("censoring", "censorship_minimizer"):
        raise ConfigError(f"[mev] mode must be censoring|censorship_minimizer, got {mode!r}")
    allow_heuristic = bool(section.get("allow_heuristic", False))
    tx_path = Path(section["transactions"])
    if not tx_path.is_absolute():
        tx_path = Path(doc["_path"]).parent / tx_path
    txs = _read_transactions(tx_path, utility)
    if len(txs) > EXACT_ENUMERATION_CAP and not allow_heuristic:
        raise ConfigError(
            f"{len(txs)} transactions exceed the exact enumeration cap of "
            f"{EXACT_ENUMERATION_CAP}; set allow_heuristic = true in [mev] to "
            "run the greedy search"
        )
    try:
        problem = BuilderProblem(
            builder_utility=utility,
            builder_endowment=tuple(float(v) for v in section["builder_endowment"]),
            transactions=tuple(txs),
            capacity=int(section["capacity"]),
            mode=mode,
        )
    except CfmmLabError as exc:
        raise ConfigError(f"invalid [mev]: {exc}") from exc

    result = censoring_mev(problem) if mode == "censoring" else censorship_min_mev(problem)
    censored = sorted(set(range(len(txs))) - set(result.subset))
    report = {
        "mode": mode,
        "builder_endowment": list(problem.builder_endowment),
        "capacity": problem.capacity,
        "n_transactions": len(txs),
        "transactions_file": str(tx_path),
        "included_indices": list(result.subset),
        "censored_indices": censored,
        "price": None if result.price is None else list(result.price),
        "builder_allocation": list(result.allocation),
        "builder_utility": result.utility,
        "exact": result.exact,
        "skipped_degenerate_batches": result.skipped_degenerate,
    }
    out_dir = Path(args.out_dir) if args.out_dir else Path(doc.get("run", {}).get("out_dir", "out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "mev_report.json", "w", newline="\n") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    print(
        f"mode={mode} utility={_fmt(result.utility)} included={list(result.subset)} "
        f"censored={censored} exact={result.exact}"
    )
    return 0


def cmd_lp_loss(args) -> int:
    doc = cfgmod.load_config(args.config)
    utility = cfgmod.build_utility(doc)
    section = cfgmod.require_section(doc, "lp")
    function = cfgmod.build_trading_function(section, key_prefix="lp")
    if "reserves" not in section:
        raise ConfigError("[lp] needs `reserves`")
    reserves = tuple(float(v) for v in section["reserves"])
    lo = float(section.get("price_lo", 0.1))
    hi = float(section.get("price_hi", 10.0))
    count = int(section.get("price_count", 50))
    scale = section.get("price_scale", "linear")
    if lo <= 0 or hi <= lo or count < 1:
        raise ConfigError(f"[lp] need 0 < price_lo < price_hi and price_count >= 1")
    if scale not in ("linear", "geometric"):
        raise ConfigError(f"[lp] price_scale must be linear|geometric, got {scale!r}")
    grid = (
        np.linspace(lo, hi, count)
        if scale == "linear"
        else np.geomspace(lo, hi, count)
    )
    out_dir = Path(args.out_dir) if args.out_dir else Path(doc.get("run", {}).get("out_dir", "out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for p in grid:
        cmp = LpComparison(utility, function, reserves, (1.0, float(p)))
        u_rebalance, u_cfmm, gap = lp_loss(cmp)
        rows.append((float(p), u_rebalance, u_cfmm, gap))
    with open(out_dir / "lp_loss.csv", "w", newline="\n") as fh:
        fh.write("p,u_rebalance,u_cfmm,gap\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    print(f"wrote {len(rows)} rows to {out_dir / 'lp_loss.csv'}")
    return 0


def cmd_stationary(args) -> int:
    doc = cfgmod.load_config(args.config)
    section = cfgmod.require_section(doc, "stationary")
    for key in ("r1", "r2"):
        if key not in section:
            raise ConfigError(f"[stationary] needs `{key}`")
    r1, r2 = section["r1"], section["r2"]
    if not isinstance(r1, int) or not isinstance(r2, int) or r1 < 1 or r2 < 1:
        raise ConfigError(f"[stationary] r1 and r2 must be integers >= 1, got {r1}, {r2}")
    chain = build_csmm_example_chain(r1, r2)
    pi = stationary_distribution(chain)
    boundary_mass = float(pi[0] + pi[-1])
    total = r1 + r2

    # exact long-run welfare: stationary reserve law x four endowment corners
    from .cfmm import ConstantSum

    utility = CobbDouglasProduct()
    atoms, probs = DiscreteAtoms(
        ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)), (0.25, 0.25, 0.25, 0.25)
    ).atoms()
    welfare = 0.0
    for state_reserves, weight in zip(chain.states, pi):
        pool = CfmmState(ConstantSum((1.0, 1.0)), state_reserves)
        for atom, prob in zip(atoms, probs):
            zeta, _ = trade_choice(utility, atom, pool)
            welfare += float(weight) * prob * utility_eval(utility, zeta)

    one_shot = 0.375
    reference = (1.0 - 1.0 / total) * one_shot
    print(f"states={len(pi)}")
    print(f"boundary_mass={_fmt(boundary_mass)}")
    print(f"boundary_mass_exact={_fmt(2.0 / (2.0 * total + 1.0))}")
    print(f"exact_average_welfare={_fmt(welfare)}")
    print(f"one_shot_welfare={_fmt(one_shot)}")
    print(f"reference_formula_value={_fmt(reference)}")
    print(f"relative_difference={_fmt(abs(reference - welfare) / abs(welfare))}")
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        payload = {
            "r1": r1,
            "r2": r2,
            "stationary": [float(v) for v in pi],
            "boundary_mass": boundary_mass,
            "exact_average_welfare": welfare,
            "one_shot_welfare": one_shot,
            "reference_formula_value": reference,
        }
        with open(out_dir / "stationary.json", "w", newline="\n") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfmmlab",
        description="Pool-versus-sequential-traders experiments: simulation, "
        "equilibria, builder value, LP loss",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser):
        p.add_argument("--config", required=True, help="TOML experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the configured seed")
        p.add_argument("--steps", type=int, default=None, help="override the configured steps")
        p.add_argument("--out-dir", default=None, help="override the artifact directory")
        p.add_argument("--workers", type=int, default=1, help="parallel replica workers")

    p_sim = sub.add_parser("simulate", help="run the sequential-trader process")
    common(p_sim)
    p_sim.add_argument("--replicas", type=int, default=1, help="independent seeds to run")
    p_sim.set_defaults(func=cmd_simulate)

    p_eq = sub.add_parser("equilibrium", help="expected-demand clearing price")
    common(p_eq)
    p_eq.set_defaults(func=cmd_equilibrium)

    p_mev = sub.add_parser("mev", help="builder value over inclusion sets")
    common(p_mev)
    p_mev.set_defaults(func=cmd_mev)

    p_lp = sub.add_parser("lp-loss", help="rebalancing-vs-pool utility sweep")
    common(p_lp)
    p_lp.set_defaults(func=cmd_lp_loss)

    p_st = sub.add_parser("stationary", help="exact chain of the unit-price pool example")
    common(p_st)
    p_st.set_defaults(func=cmd_stationary)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "replicas", 1) < 1 or args.workers < 1:
        print("error: --replicas and --workers must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CfmmLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
