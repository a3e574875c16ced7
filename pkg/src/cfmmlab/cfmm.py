"""Trading-function families: invariant evaluation, spot prices, feasibility.

A pool holds reserves R and accepts a trade vector L (positive entries flow
into the pool) iff C(R + (1-fee)L) >= C(R). Spot prices are the l1-normalized
gradient of C at the reserves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .economy import as_bundle
from .errors import (
    DimensionMismatchError,
    DomainError,
    NonsmoothPointError,
    UnsupportedVariantError,
)

#: ties in the min-curve gradient are declared at this relative resolution
_TIE_REL = 1e-12


@dataclass(frozen=True)
class ConstantSum:
    """C(x) = c . x with c > 0; the pool quotes a fixed price vector c."""

    coefficients: tuple[float, ...]

    def __post_init__(self):
        c = tuple(float(v) for v in self.coefficients)
        if len(c) < 2:
            raise DimensionMismatchError("need at least two goods")
        if any(v <= 0 for v in c):
            raise DomainError(f"coefficients must be > 0, got {c}")
        object.__setattr__(self, "coefficients", c)

    dimension = property(lambda self: len(self.coefficients))


@dataclass(frozen=True)
class ConstantProduct:
    """C(x, y) = x * y (two goods)."""

    dimension = 2


@dataclass(frozen=True)
class GeometricMean:
    """C(x) = prod_i x_i^{w_i}, w > 0, sum(w) = 1."""

    weights: tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        if len(w) < 2:
            raise DimensionMismatchError("need at least two goods")
        if any(v <= 0 for v in w):
            raise DomainError(f"weights must be > 0, got {w}")
        if abs(sum(w) - 1.0) > 1e-9:
            raise DomainError(f"weights must sum to 1, got sum {sum(w)}")
        object.__setattr__(self, "weights", w)

    dimension = property(lambda self: len(self.weights))


@dataclass(frozen=True)
class ConstantMin:
    """C(x) = min_i x_i. Nonsmooth wherever the minimum ties."""

    dimension = None  # any


@dataclass(frozen=True)
class QuadraticOverLinear:
    """C(x, y) = -x^2 / y on {y > 0}; decreasing in x, increasing in y."""

    dimension = 2


@dataclass(frozen=True)
class ExpProduct:
    """C(x, y) = x * exp(y) (two goods)."""

    dimension = 2


TradingFunction = Union[
    ConstantSum, ConstantProduct, GeometricMean, ConstantMin, QuadraticOverLinear, ExpProduct
]

_TWO_GOOD = (ConstantProduct, QuadraticOverLinear, ExpProduct)


def _check_reserves(function: TradingFunction, reserves: np.ndarray) -> None:
    dim = getattr(function, "dimension", None)
    if isinstance(function, _TWO_GOOD) and len(reserves) != 2:
        raise DimensionMismatchError(
            f"{type(function).__name__} is a two-good curve, got {len(reserves)} reserves"
        )
    if dim is not None and len(reserves) != dim:
        raise DimensionMismatchError(
            f"{type(function).__name__} expects {dim} reserves, got {len(reserves)}"
        )
    if len(reserves) < 2:
        raise DimensionMismatchError("pools need at least two goods")
    if isinstance(function, QuadraticOverLinear) and reserves[1] <= 0:
        raise DomainError(f"-x^2/y needs y > 0, got reserves {reserves}")


def invariant_eval(function: TradingFunction, reserves) -> float:
    """C(R)."""
    r = as_bundle(reserves, what="reserves")
    _check_reserves(function, r)
    if isinstance(function, ConstantSum):
        return float(np.dot(function.coefficients, r))
    if isinstance(function, ConstantProduct):
        return float(r[0] * r[1])
    if isinstance(function, GeometricMean):
        return float(np.prod(np.power(r, function.weights)))
    if isinstance(function, ConstantMin):
        return float(r.min())
    if isinstance(function, QuadraticOverLinear):
        return float(-r[0] * r[0] / r[1])
    if isinstance(function, ExpProduct):
        return float(r[0] * math.exp(r[1]))
    raise UnsupportedVariantError(f"unknown trading function {function!r}")


def invariant_grad(function: TradingFunction, reserves) -> np.ndarray:
    """Gradient of C at interior reserves (one-hot at the unique min for the
    min curve; raises at ties)."""
    r = as_bundle(reserves, what="reserves")
    _check_reserves(function, r)
    if isinstance(function, ConstantSum):
        return np.asarray(function.coefficients, dtype=float).copy()
    if isinstance(function, ConstantMin):
        order = np.sort(r)
        if len(r) > 1 and order[1] - order[0] <= _TIE_REL * max(1.0, order[0]):
            raise NonsmoothPointError(f"min curve has tied minima at {r}")
        grad = np.zeros(len(r))
        grad[int(np.argmin(r))] = 1.0
        return grad
    if np.any(r <= 0):
        raise DomainError(f"gradient needs strictly interior reserves, got {r}")
    if isinstance(function, ConstantProduct):
        return np.array([r[1], r[0]])
    if isinstance(function, GeometricMean):
        w = np.asarray(function.weights)
        return invariant_eval(function, r) * w / r
    if isinstance(function, QuadraticOverLinear):
        return np.array([-2.0 * r[0] / r[1], (r[0] / r[1]) ** 2])
    if isinstance(function, ExpProduct):
        ey = math.exp(r[1])
        return np.array([ey, r[0] * ey])
    raise UnsupportedVariantError(f"unknown trading function {function!r}")


def spot_price(function: TradingFunction, reserves) -> np.ndarray:
    """l1-normalized |grad C(R)|: the pool's marginal exchange rate.

    Absolute values keep the result on the simplex for the one decreasing
    curve (-x^2/y); for all increasing variants they are a no-op.
    """
    grad = np.abs(invariant_grad(function, reserves))
    total = grad.sum()
    if total <= 0:
        raise DomainError(f"degenerate gradient at reserves {reserves}")
    return grad / total


@dataclass(frozen=True)
class CfmmState:
    """An immutable pool snapshot: curve, reserves, trading fee in [0, 1)."""

    function: TradingFunction
    reserves: tuple[float, ...]
    fee: float = 0.0

    def __post_init__(self):
        r = as_bundle(self.reserves, what="reserves")
        _check_reserves(self.function, r)
        if not 0.0 <= self.fee < 1.0:
            raise DomainError(f"fee must be in [0,1), got {self.fee}")
        object.__setattr__(self, "reserves", tuple(float(v) for v in r))

    @property
    def level(self) -> float:
        return invariant_eval(self.function, self.reserves)

    def reserves_array(self) -> np.ndarray:
        return np.asarray(self.reserves, dtype=float)


def trade_feasible(state: CfmmState, trade) -> bool:
    """Whether the pool accepts the trade: C(R + (1-fee)L) >= C(R).

    Post-trade reserves outside the curve's domain (or negative) make the
    trade infeasible rather than an error. The comparison uses a relative
    tolerance because invariant magnitudes span many orders across pools.
    """
    trade_arr = np.atleast_1d(np.asarray(trade, dtype=float))
    reserves = state.reserves_array()
    if len(trade_arr) != len(reserves):
        raise DimensionMismatchError(
            f"trade dim {len(trade_arr)} vs reserves dim {len(reserves)}"
        )
    post = reserves + (1.0 - state.fee) * trade_arr
    if np.any(post < 0):
        return False
    if isinstance(state.function, QuadraticOverLinear) and post[1] <= 0:
        return False
    before = invariant_eval(state.function, state.reserves)
    after = invariant_eval(state.function, post)
    return after >= before - 1e-12 * max(1.0, abs(before))


def cpmm_swap_output(reserve_in: float, reserve_out: float, amount_in: float) -> float:
    """Output of a fee-less x*y pool for a one-sided deposit.

    g(d) = reserve_out - reserve_in*reserve_out/(reserve_in + d); the post
    trade reserves preserve the product exactly.
    """
    if reserve_in <= 0 or reserve_out <= 0:
        raise DomainError("reserves must be > 0")
    if amount_in < 0:
        raise DomainError("amount_in must be >= 0")
    # same algebra as out - in*out/(in+d), but exactly 0 at d=0
    return reserve_out * amount_in / (reserve_in + amount_in)
