"""Pure exchange-economy primitives.

Utility families, price-taking demand, excess demand, and the one-shot
social welfare of the batch-auction allocation. All operations are pure
functions; vectors are plain numpy arrays (goods quantities are nonnegative,
prices strictly positive).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DimensionMismatchError, DomainError

NEG_INF = float("-inf")


def as_bundle(values, *, what: str = "bundle") -> np.ndarray:
    """Validate and return a nonnegative goods vector as a float array."""
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1:
        raise DimensionMismatchError(f"{what} must be a 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{what} has non-finite entries: {arr}")
    if np.any(arr < 0):
        raise DomainError(f"{what} has negative entries: {arr}")
    return arr


def normalize_price(p) -> np.ndarray:
    """Project a positive price vector onto the unit simplex (l1 scale)."""
    arr = np.atleast_1d(np.asarray(p, dtype=float))
    if arr.ndim != 1:
        raise DimensionMismatchError(f"price must be a 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError(f"price entries must be finite and > 0, got {arr}")
    return arr / arr.sum()


def _check_dim(u_dim: int | None, x: np.ndarray, what: str) -> None:
    if u_dim is not None and len(x) != u_dim:
        raise DimensionMismatchError(f"{what}: expected dimension {u_dim}, got {len(x)}")


@dataclass(frozen=True)
class WeightedGeometric:
    """U(x) = prod_i x_i^{w_i} with w > 0 and sum(w) = 1."""

    weights: tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        if len(w) < 2:
            raise DimensionMismatchError("need at least two goods")
        if any(v <= 0 for v in w):
            raise DomainError(f"weights must be positive, got {w}")
        if abs(sum(w) - 1.0) > 1e-9:
            raise DomainError(f"weights must sum to 1, got sum {sum(w)}")
        object.__setattr__(self, "weights", w)

    @property
    def dimension(self) -> int:
        return len(self.weights)

    def value(self, x: np.ndarray) -> float:
        _check_dim(self.dimension, x, "utility value")
        return float(np.prod(np.power(x, self.weights)))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        _check_dim(self.dimension, x, "utility gradient")
        if np.any(x <= 0):
            raise DomainError(f"gradient undefined on the boundary, got {x}")
        w = np.asarray(self.weights)
        return self.value(x) * w / x

    def demand(self, endowment: np.ndarray, price: np.ndarray) -> np.ndarray:
        wealth = float(price @ endowment)
        if wealth == 0.0:
            return np.zeros_like(price)
        return np.asarray(self.weights) * wealth / price


@dataclass(frozen=True)
class CobbDouglasProduct:
    """U(x) = prod_i x_i.

    Same maximizers as equal-weight :class:`WeightedGeometric` (one is a
    monotone transform of the other) but reports the raw product as the
    utility level.
    """

    @property
    def dimension(self) -> None:
        return None  # any dimension >= 2

    def value(self, x: np.ndarray) -> float:
        return float(np.prod(x))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        if np.any(x <= 0):
            raise DomainError(f"gradient undefined on the boundary, got {x}")
        return self.value(x) / x

    def demand(self, endowment: np.ndarray, price: np.ndarray) -> np.ndarray:
        wealth = float(price @ endowment)
        if wealth == 0.0:
            return np.zeros_like(price)
        return wealth / (len(price) * price)


@dataclass(frozen=True)
class ShiftedLogSum:
    """U(x) = sum_i log(x_i + s_i) with shifts s >= 0.

    With s_i = 1/n this is the family whose welfare degrades without bound
    as n grows when traders can be left holding a corner bundle.
    """

    shifts: tuple[float, ...]

    def __post_init__(self):
        s = tuple(float(v) for v in self.shifts)
        if len(s) < 2:
            raise DimensionMismatchError("need at least two goods")
        if any(v < 0 for v in s):
            raise DomainError(f"shifts must be >= 0, got {s}")
        object.__setattr__(self, "shifts", s)

    @property
    def dimension(self) -> int:
        return len(self.shifts)

    def value(self, x: np.ndarray) -> float:
        _check_dim(self.dimension, x, "utility value")
        shifted = np.asarray(x, dtype=float) + self.shifts
        if np.any(shifted < 0):
            raise DomainError(f"x + shifts must be >= 0, got {shifted}")
        if np.any(shifted == 0.0):
            return NEG_INF
        return float(np.sum(np.log(shifted)))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        _check_dim(self.dimension, x, "utility gradient")
        shifted = np.asarray(x, dtype=float) + self.shifts
        if np.any(shifted <= 0):
            raise DomainError(f"gradient needs x + shifts > 0, got {shifted}")
        return 1.0 / shifted

    def demand(self, endowment: np.ndarray, price: np.ndarray) -> np.ndarray:
        # Unclamped optimum: zeta_i = mu/p_i - s_i with the budget fixing mu.
        # Negative coordinates are clamped to zero and the budget re-solved
        # over the surviving coordinates (water-filling; terminates because
        # the active set only ever shrinks).
        s = np.asarray(self.shifts)
        wealth = float(price @ endowment)
        active = np.ones(len(price), dtype=bool)
        zeta = np.zeros(len(price))
        for _ in range(len(price)):
            mu = (wealth + float(price[active] @ s[active])) / int(active.sum())
            cand = mu / price[active] - s[active]
            if np.all(cand >= 0):
                zeta[active] = cand
                return zeta
            keep = cand > 0
            idx = np.flatnonzero(active)
            active[idx[~keep]] = False
            if not active.any():
                return np.zeros(len(price))
        zeta[active] = np.maximum(mu / price[active] - s[active], 0.0)
        return zeta


UtilityFunction = Union[WeightedGeometric, CobbDouglasProduct, ShiftedLogSum]


@dataclass(frozen=True)
class ExchangeEconomy:
    """A finite set of traders, each a (utility, endowment) pair."""

    agents: tuple[tuple[UtilityFunction, tuple[float, ...]], ...]

    def __post_init__(self):
        if len(self.agents) < 1:
            raise DomainError("economy needs at least one agent")
        frozen = []
        dim = None
        for u, endowment in self.agents:
            e = as_bundle(endowment, what="endowment")
            if dim is None:
                dim = len(e)
                if dim < 2:
                    raise DimensionMismatchError("economies need at least two goods")
            elif len(e) != dim:
                raise DimensionMismatchError("all endowments must share one dimension")
            frozen.append((u, tuple(float(v) for v in e)))
        object.__setattr__(self, "agents", tuple(frozen))

    @property
    def dimension(self) -> int:
        return len(self.agents[0][1])

    def aggregate_endowment(self) -> np.ndarray:
        total = np.zeros(self.dimension)
        for _, e in self.agents:
            total += e
        return total


def utility_eval(u: UtilityFunction, x) -> float:
    """U(x); -inf sentinel for log variants pinned at x_i + s_i = 0."""
    return u.value(as_bundle(x, what="allocation"))


def utility_grad(u: UtilityFunction, x) -> np.ndarray:
    """Componentwise partial derivatives at an interior point."""
    return u.gradient(as_bundle(x, what="allocation"))


def walrasian_demand(u: UtilityFunction, endowment, price) -> np.ndarray:
    """Utility-maximizing bundle on the budget line p.x = p.endowment.

    Prices are l1-normalized internally, so demand is invariant to the
    price scale. Zero-wealth traders get the zero bundle.
    """
    e = as_bundle(endowment, what="endowment")
    p = normalize_price(price)
    if len(e) != len(p):
        raise DimensionMismatchError(f"endowment dim {len(e)} vs price dim {len(p)}")
    return u.demand(e, p)


def excess_demand(u: UtilityFunction, endowment, price) -> np.ndarray:
    """z = demand - endowment; satisfies p.z = 0 (Walras' law)."""
    e = as_bundle(endowment, what="endowment")
    return walrasian_demand(u, e, price) - e


def one_shot_welfare(
    u: UtilityFunction,
    distribution,
    price,
    n_samples: int = 100_000,
    seed: int = 0,
) -> tuple[float, float]:
    """Expected trader utility E[U(demand(endowment, price))].

    Exact (zero standard error) when the endowment distribution exposes
    finitely many atoms; Monte Carlo with an i.i.d. standard error otherwise.
    """
    p = normalize_price(price)
    atoms = distribution.atoms()
    if atoms is not None:
        points, probs = atoms
        total = 0.0
        for point, prob in zip(points, probs):
            total += prob * u.value(walrasian_demand(u, point, p))
        return total, 0.0

    from .rng import StepRng

    values = np.empty(n_samples)
    for i in range(n_samples):
        draw = distribution.sample(StepRng(seed, i))
        values[i] = u.value(walrasian_demand(u, draw, p))
    if np.any(np.isneginf(values)):
        return NEG_INF, math.nan
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(n_samples))
    return mean, se
