"""The sequential-trader reserve process and its estimators.

Each step draws an i.i.d. endowment, the trader executes the optimal trade
against the pool, and reserves move by the net inflow. The induced reserve
sequence is a Markov process on the invariant level set. Welfare and price
statistics stream over every step even when full states are thinned for
storage, and every step's randomness comes from a counter-based stream so a
run can be reproduced, restarted mid-way, or thinned without changing draws.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .cfmm import (
    CfmmState,
    ConstantProduct,
    ConstantSum,
    ExpProduct,
    GeometricMean,
    invariant_eval,
    spot_price,
)
from .distributions import EndowmentDistribution
from .economy import UtilityFunction, utility_eval
from .errors import (
    CfmmLabError,
    DimensionMismatchError,
    DomainError,
    NonsmoothPointError,
    SolverError,
)
from .rng import StepRng
from .solvers import make_pair_planner, trade_choice

N_BATCHES = 32


@dataclass(frozen=True)
class CfmmwdConfig:
    """One experiment: pool, shared utility, endowment law, horizon, seed."""

    cfmm: CfmmState
    utility: UtilityFunction
    distribution: EndowmentDistribution
    steps: int
    seed: int
    liquidity_scale: float = 1.0
    record_every: int = 1

    def __post_init__(self):
        if self.steps < 1:
            raise DomainError(f"steps must be >= 1, got {self.steps}")
        if self.liquidity_scale <= 0:
            raise DomainError(f"liquidity_scale must be > 0, got {self.liquidity_scale}")
        if self.record_every < 1:
            raise DomainError(f"record_every must be >= 1, got {self.record_every}")
        if self.distribution.dimension != len(self.cfmm.reserves):
            raise DimensionMismatchError(
                f"distribution dimension {self.distribution.dimension} vs "
                f"{len(self.cfmm.reserves)} reserves"
            )
        # validates the scaled reserves against the curve domain
        self.scaled_state()

    def scaled_state(self) -> CfmmState:
        scaled = tuple(v * self.liquidity_scale for v in self.cfmm.reserves)
        return CfmmState(self.cfmm.function, scaled, self.cfmm.fee)

    def digest(self) -> str:
        return hashlib.sha256(repr(self).encode()).hexdigest()[:16]


@dataclass
class Trajectory:
    """Recorded path plus streaming statistics of one run."""

    config: CfmmwdConfig
    start_step: int
    steps: int
    record_steps: np.ndarray
    record_reserves: np.ndarray  # (n_rec, l), pre-trade states
    record_prices: np.ndarray  # (n_rec, l), NaN where the spot price is undefined
    record_utilities: np.ndarray
    record_traded: np.ndarray
    welfare_sum: float
    welfare_batch_sums: np.ndarray
    welfare_batch_counts: np.ndarray
    neg_inf_count: int
    price_sum: np.ndarray
    price_batch_sums: np.ndarray  # (N_BATCHES, l)
    price_nan_count: int
    initial_reserves: tuple[float, ...]
    final_reserves: tuple[float, ...]
    initial_level: float
    max_level_drift: float
    config_digest: str = field(default="")

    def __post_init__(self):
        if not self.config_digest:
            self.config_digest = self.config.digest()


def run_cfmmwd(
    config: CfmmwdConfig,
    *,
    start_step: int = 0,
    initial_reserves=None,
) -> Trajectory:
    """Simulate the reserve process; bit-identical given identical inputs.

    `start_step`/`initial_reserves` restart the process mid-trajectory: step
    k always consumes stream (seed, k), so a restart from a recorded state
    reproduces the suffix of the original run exactly.
    """
    state = config.scaled_state()
    reserves = (
        np.asarray(state.reserves, dtype=float)
        if initial_reserves is None
        else np.asarray(initial_reserves, dtype=float)
    )
    dim = len(reserves)
    steps = config.steps
    fast = dim == 2 and isinstance(
        state.function, (ConstantSum, ConstantProduct, GeometricMean, ExpProduct)
    )

    rec_steps: list[int] = []
    rec_reserves: list[tuple] = []
    rec_prices: list[tuple] = []
    rec_utils: list[float] = []
    rec_traded: list[bool] = []

    welfare_sum = 0.0
    wf_batch_sums = np.zeros(N_BATCHES)
    wf_batch_counts = np.zeros(N_BATCHES, dtype=np.int64)
    neg_inf = 0
    price_sum = np.zeros(dim)
    price_batch_sums = np.zeros((N_BATCHES, dim))
    price_nan = 0

    level0 = invariant_eval(state.function, reserves)
    max_drift = 0.0

    if fast:
        (
            reserves,
            welfare_sum,
            neg_inf,
            max_drift,
        ) = _run_fast_two_goods(
            config,
            state,
            reserves,
            start_step,
            level0,
            rec_steps,
            rec_reserves,
            rec_prices,
            rec_utils,
            rec_traded,
            wf_batch_sums,
            wf_batch_counts,
            price_sum,
            price_batch_sums,
        )
    else:
        u = config.utility
        for i in range(steps):
            step = start_step + i
            rng = StepRng(config.seed, step)
            draw = np.asarray(config.distribution.sample_scalars(rng))
            here = CfmmState(state.function, tuple(reserves), 0.0)
            try:
                price = spot_price(state.function, reserves)
            except NonsmoothPointError:
                price = np.full(dim, math.nan)
                price_nan += 1
            try:
                zeta, flow = trade_choice(u, draw, here)
            except CfmmLabError as exc:
                raise SolverError(
                    f"trade solve failed at step {step} with reserves "
                    f"{tuple(reserves)} and endowment {tuple(draw)}: {exc}"
                ) from exc
            uval = utility_eval(u, zeta)
            traded = bool(np.any(flow != 0.0))
            if i % config.record_every == 0:
                rec_steps.append(step)
                rec_reserves.append(tuple(reserves))
                rec_prices.append(tuple(price))
                rec_utils.append(uval)
                rec_traded.append(traded)
            batch = i * N_BATCHES // steps
            if uval == -math.inf:
                neg_inf += 1
            welfare_sum += uval
            wf_batch_sums[batch] += uval
            wf_batch_counts[batch] += 1
            if not math.isnan(price[0]):
                price_sum += price
                price_batch_sums[batch] += price
            reserves = reserves + flow
            drift = abs(invariant_eval(state.function, reserves) - level0)
            if drift > max_drift:
                max_drift = drift

    return Trajectory(
        config=config,
        start_step=start_step,
        steps=steps,
        record_steps=np.asarray(rec_steps, dtype=np.int64),
        record_reserves=np.asarray(rec_reserves, dtype=float),
        record_prices=np.asarray(rec_prices, dtype=float),
        record_utilities=np.asarray(rec_utils, dtype=float),
        record_traded=np.asarray(rec_traded, dtype=bool),
        welfare_sum=welfare_sum,
        welfare_batch_sums=wf_batch_sums,
        welfare_batch_counts=wf_batch_counts,
        neg_inf_count=neg_inf,
        price_sum=price_sum,
        price_batch_sums=price_batch_sums,
        price_nan_count=price_nan,
        initial_reserves=tuple(
            float(v)
            for v in (state.reserves if initial_reserves is None else initial_reserves)
        ),
        final_reserves=tuple(float(v) for v in reserves),
        initial_level=level0,
        max_level_drift=max_drift,
    )


def _scalar_price(function):
    """price(rx, ry) -> (p1, p2): normalized spot price as plain floats."""
    if isinstance(function, ConstantSum):
        c1, c2 = function.coefficients
        csum = c1 + c2
        const = (c1 / csum, c2 / csum)
        return lambda rx, ry: const
    if isinstance(function, ConstantProduct):

        def cp_price(rx, ry):
            tot = rx + ry
            return ry / tot, rx / tot

        return cp_price
    if isinstance(function, GeometricMean):
        w1, w2 = function.weights

        def gm_price(rx, ry):
            g1, g2 = w1 / rx, w2 / ry
            tot = g1 + g2
            return g1 / tot, g2 / tot

        return gm_price

    def exp_price(rx, ry):  # grad = (e^y, x e^y)
        tot = 1.0 + rx
        return 1.0 / tot, rx / tot

    return exp_price


def _run_fast_two_goods(
    config,
    state,
    reserves,
    start_step,
    level0,
    rec_steps,
    rec_reserves,
    rec_prices,
    rec_utils,
    rec_traded,
    wf_batch_sums,
    wf_batch_counts,
    price_sum,
    price_batch_sums,
):
    """Scalar inner loop for two-good pools; this is where long runs live."""
    from .distributions import make_two_good_sampler

    function = state.function
    u = config.utility
    plan = make_pair_planner(u, function)
    sampler = make_two_good_sampler(config.distribution, config.seed)
    steps = config.steps
    record_every = config.record_every

    price_of = _scalar_price(function)
    uval2 = _scalar_utility(u)
    level2 = _scalar_level(function)

    rx, ry = float(reserves[0]), float(reserves[1])
    welfare_sum = 0.0
    neg_inf = 0
    max_drift = 0.0
    psum1 = psum2 = 0.0
    # plain-float accumulators in the loop; copied into the arrays at the end
    wf_sums = [0.0] * N_BATCHES
    wf_counts = [0] * N_BATCHES
    p1_sums = [0.0] * N_BATCHES
    p2_sums = [0.0] * N_BATCHES
    next_record = 0

    for i in range(steps):
        dx, dy = sampler(start_step + i)
        p1, p2 = price_of(rx, ry)
        zx, zy, fx, fy = plan(dx, dy, rx, ry)
        uval = uval2(zx, zy)
        if i == next_record:
            rec_steps.append(start_step + i)
            rec_reserves.append((rx, ry))
            rec_prices.append((p1, p2))
            rec_utils.append(uval)
            rec_traded.append(fx != 0.0 or fy != 0.0)
            next_record += record_every
        batch = i * N_BATCHES // steps
        if uval == -math.inf:
            neg_inf += 1
        welfare_sum += uval
        wf_sums[batch] += uval
        wf_counts[batch] += 1
        psum1 += p1
        psum2 += p2
        p1_sums[batch] += p1
        p2_sums[batch] += p2
        if fx != 0.0 or fy != 0.0:
            rx += fx
            ry += fy
            drift = level2(rx, ry) - level0
            if drift < 0.0:
                drift = -drift
            if drift > max_drift:
                max_drift = drift

    price_sum[0] = psum1
    price_sum[1] = psum2
    wf_batch_sums[:] = wf_sums
    wf_batch_counts[:] = wf_counts
    price_batch_sums[:, 0] = p1_sums
    price_batch_sums[:, 1] = p2_sums
    return np.array([rx, ry]), welfare_sum, neg_inf, max_drift


def _scalar_utility(u: UtilityFunction):
    from .economy import CobbDouglasProduct, ShiftedLogSum, WeightedGeometric

    if isinstance(u, CobbDouglasProduct):
        return lambda zx, zy: zx * zy
    if isinstance(u, WeightedGeometric):
        w1, w2 = u.weights
        return lambda zx, zy: zx**w1 * zy**w2
    if isinstance(u, ShiftedLogSum):
        s1, s2 = u.shifts

        def val(zx, zy):
            a, b = zx + s1, zy + s2
            if a <= 0.0 or b <= 0.0:
                return -math.inf
            return math.log(a) + math.log(b)

        return val
    raise DomainError(f"unsupported utility {u!r}")


def _scalar_level(function):
    if isinstance(function, ConstantSum):
        c1, c2 = function.coefficients
        return lambda rx, ry: c1 * rx + c2 * ry
    if isinstance(function, ConstantProduct):
        return lambda rx, ry: rx * ry
    if isinstance(function, GeometricMean):
        w1, w2 = function.weights
        return lambda rx, ry: rx**w1 * ry**w2
    return lambda rx, ry: rx * math.exp(ry)


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------


def _batch_se(batch_sums: np.ndarray, batch_counts: np.ndarray) -> float:
    means = batch_sums / batch_counts
    if np.any(np.isinf(means)) or np.any(np.isnan(means)):
        return math.nan
    return float(means.std(ddof=1) / math.sqrt(len(means)))


def estimate_welfare(traj: Trajectory) -> tuple[float, float]:
    """Running mean of realized trader utilities with a batch-means error.

    Steps whose utility is -inf (log utilities pinned at a corner) force the
    mean to -inf; their count is `traj.neg_inf_count`.
    """
    if traj.neg_inf_count > 0:
        return -math.inf, math.nan
    mean = traj.welfare_sum / traj.steps
    return float(mean), _batch_se(traj.welfare_batch_sums, traj.welfare_batch_counts)


def estimate_avg_price(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Time-averaged spot prices, renormalized to the simplex."""
    if traj.price_nan_count > 0:
        raise NonsmoothPointError(
            f"{traj.price_nan_count} steps had no well-defined spot price"
        )
    avg = traj.price_sum / traj.steps
    avg = avg / avg.sum()
    ses = np.array(
        [
            _batch_se(traj.price_batch_sums[:, j], traj.welfare_batch_counts)
            for j in range(traj.price_sum.shape[0])
        ]
    )
    return avg, ses


def reserve_heatmap(
    traj: Trajectory, bins: int = 50
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Occupancy counts of recorded reserve points on a bins x bins grid.

    The grid spans the bounding box of the recorded trajectory; counts sum
    to the number of recorded steps.
    """
    if traj.record_reserves.shape[1] != 2:
        raise DimensionMismatchError("heatmaps are only defined for two-good pools")
    if bins < 1:
        raise DomainError(f"bins must be >= 1, got {bins}")
    xs = traj.record_reserves[:, 0]
    ys = traj.record_reserves[:, 1]
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(ys.min()), float(ys.max())
    if x_hi <= x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi <= y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    counts, x_edges, y_edges = np.histogram2d(
        xs, ys, bins=bins, range=[[x_lo, x_hi], [y_lo, y_hi]]
    )
    return counts.astype(np.int64), x_edges, y_edges


# ---------------------------------------------------------------------------
# Artifact writers (the documented CSV/JSON surfaces)
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """`step,R_1..R_l,p_1..p_l,utility,traded` with 17-significant-digit floats."""
    dim = traj.record_reserves.shape[1]
    header = (
        ["step"]
        + [f"R_{j + 1}" for j in range(dim)]
        + [f"p_{j + 1}" for j in range(dim)]
        + ["utility", "traded"]
    )
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(len(traj.record_steps)):
            row = [str(int(traj.record_steps[i]))]
            row += [_fmt(v) for v in traj.record_reserves[i]]
            row += [_fmt(v) for v in traj.record_prices[i]]
            row.append(_fmt(traj.record_utilities[i]))
            row.append("1" if traj.record_traded[i] else "0")
            fh.write(",".join(row) + "\n")


def write_heatmap_csv(counts: np.ndarray, x_edges: np.ndarray, y_edges: np.ndarray, path) -> None:
    """`x_bin_lo,x_bin_hi,y_bin_lo,y_bin_hi,count`, one row per grid cell."""
    with open(path, "w", newline="\n") as fh:
        fh.write("x_bin_lo,x_bin_hi,y_bin_lo,y_bin_hi,count\n")
        for i in range(counts.shape[0]):
            for j in range(counts.shape[1]):
                fh.write(
                    ",".join(
                        [
                            _fmt(x_edges[i]),
                            _fmt(x_edges[i + 1]),
                            _fmt(y_edges[j]),
                            _fmt(y_edges[j + 1]),
                            str(int(counts[i, j])),
                        ]
                    )
                    + "\n"
                )


def run_summary(traj: Trajectory, config_echo: dict | None = None) -> dict:
    """Deterministic run.json payload: config echo, seed, totals, estimates."""
    welfare, welfare_se = estimate_welfare(traj)
    summary = {
        "seed": traj.config.seed,
        "steps": traj.steps,
        "start_step": traj.start_step,
        "record_every": traj.config.record_every,
        "recorded_steps": int(len(traj.record_steps)),
        "config_digest": traj.config_digest,
        "initial_reserves": [float(v) for v in traj.initial_reserves],
        "final_reserves": [float(v) for v in traj.final_reserves],
        "initial_level": float(traj.initial_level),
        "max_level_drift": float(traj.max_level_drift),
        "welfare": welfare,
        "welfare_se": welfare_se,
        "neg_inf_steps": traj.neg_inf_count,
    }
    if traj.price_nan_count == 0:
        avg_price, price_se = estimate_avg_price(traj)
        summary["avg_price"] = [float(v) for v in avg_price]
        summary["avg_price_se"] = [float(v) for v in price_se]
    else:
        summary["price_undefined_steps"] = traj.price_nan_count
    if config_echo is not None:
        summary["config"] = config_echo
    return summary


def write_run_json(summary: dict, path) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(summary, fh, indent=2, allow_nan=True)
        fh.write("\n")
