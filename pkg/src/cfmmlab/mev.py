"""Block-builder extractable value under batch exchange auctions.

A builder collects transactions (utility, endowment), picks which ones to
include next to its own, and the included set trades at the batch Walrasian
equilibrium. The builder's optimal utility over admissible inclusion sets is
its extractable value; two admission regimes are covered (free censoring and
forced maximal inclusion), plus the expected-value gap between builders and
ordinary traders when the builder cannot see transaction contents.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .cfmm import CfmmState, TradingFunction
from .distributions import EndowmentDistribution
from .economy import (
    ExchangeEconomy,
    UtilityFunction,
    as_bundle,
    utility_eval,
)
from .errors import ConfigError, DegenerateEconomyError, DomainError
from .rng import StepRng
from .solvers import (
    DEFAULT_SETTINGS,
    SolverSettings,
    distributional_walrasian_equilibrium,
    finite_walrasian_equilibrium,
    price_to_reserves,
    trade_choice,
)

#: exact subset enumeration is capped at this many transactions (2^20 subsets)
EXACT_ENUMERATION_CAP = 20


@dataclass(frozen=True)
class Transaction:
    """A trader's submission: its utility function and endowment."""

    utility: UtilityFunction
    endowment: tuple[float, ...]

    def __post_init__(self):
        e = as_bundle(self.endowment, what="transaction endowment")
        object.__setattr__(self, "endowment", tuple(float(v) for v in e))


@dataclass(frozen=True)
class BuilderProblem:
    """Builder endowment, received transactions, block capacity, and regime."""

    builder_utility: UtilityFunction
    builder_endowment: tuple[float, ...]
    transactions: tuple[Transaction, ...]
    capacity: int
    mode: Literal["censoring", "censorship_minimizer"] = "censoring"

    def __post_init__(self):
        e = as_bundle(self.builder_endowment, what="builder endowment")
        object.__setattr__(self, "builder_endowment", tuple(float(v) for v in e))
        object.__setattr__(self, "transactions", tuple(self.transactions))
        if self.capacity < 1:
            raise DomainError(f"capacity must be >= 1, got {self.capacity}")
        if self.mode not in ("censoring", "censorship_minimizer"):
            raise DomainError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class MevResult:
    subset: tuple[int, ...]
    utility: float
    allocation: tuple[float, ...]
    price: tuple[float, ...] | None
    exact: bool
    skipped_degenerate: int


def batch_walrasian_allocation(
    txs: list[Transaction] | tuple[Transaction, ...],
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> tuple[np.ndarray | None, list[np.ndarray]]:
    """Clearing price and per-transaction allocations of one batch.

    A single-transaction batch is autarkic: the trader keeps its endowment
    and no price needs to be computed. Batches with a good nobody holds have
    no equilibrium and raise.
    """
    if len(txs) == 0:
        raise DomainError("cannot allocate an empty batch")
    if len(txs) == 1:
        return None, [np.asarray(txs[0].endowment, dtype=float)]
    economy = ExchangeEconomy(tuple((t.utility, t.endowment) for t in txs))
    price, allocations = finite_walrasian_equilibrium(economy, settings)
    return price, allocations


def _score_subset(
    problem: BuilderProblem, subset: tuple[int, ...], settings: SolverSettings
) -> tuple[float, np.ndarray, np.ndarray | None]:
    batch = [Transaction(problem.builder_utility, problem.builder_endowment)]
    batch += [problem.transactions[i] for i in subset]
    price, allocations = batch_walrasian_allocation(batch, settings)
    return utility_eval(problem.builder_utility, allocations[0]), allocations[0], price


def _enumerate_best(
    problem: BuilderProblem, sizes, settings: SolverSettings
) -> MevResult:
    best_key = None
    best = None
    skipped = 0
    m = len(problem.transactions)
    for size in sizes:
        for subset in itertools.combinations(range(m), size):
            try:
                utility, allocation, price = _score_subset(problem, subset, settings)
            except DegenerateEconomyError:
                skipped += 1
                continue
            # ties break toward the lexicographically smallest index set
            key = (-utility, subset)
            if best_key is None or key < best_key:
                best_key = key
                best = (subset, utility, allocation, price)
    if best is None:
        raise DegenerateEconomyError(
            "every admissible batch was degenerate (a good with zero supply)"
        )
    subset, utility, allocation, price = best
    return MevResult(
        subset=subset,
        utility=utility,
        allocation=tuple(float(v) for v in allocation),
        price=None if price is None else tuple(float(v) for v in price),
        exact=True,
        skipped_degenerate=skipped,
    )


def _greedy_best(problem: BuilderProblem, max_size: int, settings: SolverSettings) -> MevResult:
    """Greedy add/drop search, flagged non-exact in the result."""
    m = len(problem.transactions)
    current: list[int] = []
    skipped = 0

    def score(subset):
        nonlocal skipped
        try:
            return _score_subset(problem, tuple(sorted(subset)), settings)
        except DegenerateEconomyError:
            skipped += 1
            return -math.inf, None, None

    best_utility, best_alloc, best_price = score(current)
    improved = True
    while improved:
        improved = False
        if len(current) < max_size:
            candidates = [i for i in range(m) if i not in current]
            for i in candidates:
                utility, alloc, price = score(current + [i])
                if utility > best_utility + 1e-15:
                    best_utility, best_alloc, best_price = utility, alloc, price
                    current.append(i)
                    improved = True
                    break
        if not improved and current:
            for i in list(current):
                trimmed = [j for j in current if j != i]
                utility, alloc, price = score(trimmed)
                if utility > best_utility + 1e-15:
                    best_utility, best_alloc, best_price = utility, alloc, price
                    current = trimmed
                    improved = True
                    break
    if best_alloc is None:
        raise DegenerateEconomyError("greedy search found no feasible batch")
    return MevResult(
        subset=tuple(sorted(current)),
        utility=best_utility,
        allocation=tuple(float(v) for v in best_alloc),
        price=None if best_price is None else tuple(float(v) for v in best_price),
        exact=False,
        skipped_degenerate=skipped,
    )


def censoring_mev(
    problem: BuilderProblem, settings: SolverSettings = DEFAULT_SETTINGS
) -> MevResult:
    """Best builder utility over subsets of at most capacity-1 transactions.

    Exact enumeration up to EXACT_ENUMERATION_CAP transactions; larger pools
    fall back to a greedy add/drop heuristic whose result carries
    ``exact=False``.
    """
    if problem.mode != "censoring":
        raise ConfigError(f"problem mode is {problem.mode!r}, expected 'censoring'")
    m = len(problem.transactions)
    room = min(m, problem.capacity - 1)
    if m > EXACT_ENUMERATION_CAP:
        return _greedy_best(problem, room, settings)
    return _enumerate_best(problem, range(room + 1), settings)


def censorship_min_mev(
    problem: BuilderProblem, settings: SolverSettings = DEFAULT_SETTINGS
) -> MevResult:
    """Best builder utility when the block must be as full as possible.

    The included set has exactly min(M, capacity-1) transactions, so the
    builder only chooses which ones to drop when capacity binds.
    """
    if problem.mode != "censorship_minimizer":
        raise ConfigError(
            f"problem mode is {problem.mode!r}, expected 'censorship_minimizer'"
        )
    m = len(problem.transactions)
    size = min(m, problem.capacity - 1)
    if m > EXACT_ENUMERATION_CAP:
        return _greedy_best(problem, size, settings)
    return _enumerate_best(problem, [size], settings)


def uninformed_builder_gap(
    u: UtilityFunction,
    distribution: EndowmentDistribution,
    inclusion_prob: float,
    settings: SolverSettings = DEFAULT_SETTINGS,
    n_samples: int = 100_000,
    seed: int = 0,
) -> tuple[float, float, float]:
    """Expected builder value, non-builder value, and their difference.

    A content-blind builder includes as much as it can, so its expected
    value is the one-shot welfare at the equilibrium price. An ordinary
    trader lands in the block with probability `inclusion_prob` (value:
    welfare) and otherwise keeps its endowment, giving the gap
    (1 - inclusion_prob) * (welfare - E[U(endowment)]).
    """
    if not 0.0 <= inclusion_prob <= 1.0:
        raise DomainError(f"inclusion_prob must be in [0,1], got {inclusion_prob}")
    from .economy import one_shot_welfare

    price = distributional_walrasian_equilibrium(u, distribution, settings, n_samples, seed)
    welfare, _ = one_shot_welfare(u, distribution, price, n_samples, seed)
    atoms = distribution.atoms()
    if atoms is not None:
        endowment_value = sum(
            prob * utility_eval(u, np.asarray(point))
            for point, prob in zip(*atoms)
        )
    else:
        total = 0.0
        for i in range(n_samples):
            total += utility_eval(u, distribution.sample(StepRng(seed, i)))
        endowment_value = total / n_samples
    non_builder = inclusion_prob * welfare + (1.0 - inclusion_prob) * endowment_value
    return welfare, non_builder, welfare - non_builder


def expected_trade_utility_surface(
    u: UtilityFunction,
    distribution: EndowmentDistribution,
    function: TradingFunction,
    level: float,
    grid,
    settings: SolverSettings = DEFAULT_SETTINGS,
    n_samples: int = 20_000,
    seed: int = 0,
) -> list[tuple[np.ndarray, float]]:
    """Expected utility of one arriving trader, per grid spot price.

    Each grid point is mapped to reserves on the level set, one trader drawn
    from the endowment distribution trades, and the expectation of its
    realized utility is returned (exact over atoms, Monte Carlo otherwise).
    Values may be -inf for log utilities near the simplex boundary.
    """
    atoms = distribution.atoms()
    if atoms is not None:
        points = [np.asarray(p, dtype=float) for p in atoms[0]]
        probs = list(atoms[1])
    else:
        points = [distribution.sample(StepRng(seed, i)) for i in range(n_samples)]
        probs = [1.0 / n_samples] * n_samples

    surface = []
    for price in grid:
        reserves = price_to_reserves(function, level, price)
        state = CfmmState(function, tuple(reserves))
        total = 0.0
        for point, prob in zip(points, probs):
            zeta, _ = trade_choice(u, point, state, settings)
            value = utility_eval(u, zeta)
            if value == -math.inf:
                total = -math.inf
                break
            total += prob * value
        surface.append((np.asarray(price, dtype=float), total))
    return surface
