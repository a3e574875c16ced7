"""Liquidity-provider adverse selection.

Compares the two things a holder of a bundle R can do when the market price
is c: rebalance on the open market (utility-maximize on the budget line), or
post the bundle as pool liquidity and let arbitrage carry the reserves to the
point of the level set tangent to c. Rebalancing is strictly better whenever
the pool's spot price at R differs from c.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cfmm import TradingFunction, invariant_eval, invariant_grad, spot_price
from .economy import UtilityFunction, as_bundle, normalize_price, utility_eval, walrasian_demand
from .errors import ConvergenceError, DomainError, UnsupportedVariantError
from .solvers import DEFAULT_SETTINGS, SolverSettings, price_to_reserves


@dataclass(frozen=True)
class LpComparison:
    utility: UtilityFunction
    cfmm: TradingFunction
    initial: tuple[float, ...]
    market_price: tuple[float, ...]

    def __post_init__(self):
        r = as_bundle(self.initial, what="initial bundle")
        if np.any(r <= 0):
            raise DomainError(f"initial bundle must be interior, got {tuple(r)}")
        c = normalize_price(self.market_price)
        object.__setattr__(self, "initial", tuple(float(v) for v in r))
        object.__setattr__(self, "market_price", tuple(float(v) for v in c))


def lp_rebalance_opt(cmp: LpComparison) -> np.ndarray:
    """Best bundle on the budget line c.x = c.R (market rebalancing)."""
    return walrasian_demand(cmp.utility, cmp.initial, cmp.market_price)


def lp_cfmm_arb(cmp: LpComparison, settings: SolverSettings = DEFAULT_SETTINGS) -> np.ndarray:
    """Reserves after the market arbitrages the posted pool.

    Arbitrage minimizes the market value c.x over the invariant level set,
    which lands on the tangency point grad C(x) proportional to c. Solved by
    the closed price->reserve inverse where one exists, by Newton on the
    tangency system otherwise.
    """
    level = invariant_eval(cmp.cfmm, cmp.initial)
    try:
        return price_to_reserves(cmp.cfmm, level, cmp.market_price)
    except UnsupportedVariantError:
        pass
    return _tangency_newton(cmp.cfmm, level, np.asarray(cmp.market_price), np.asarray(cmp.initial), settings)


def _tangency_newton(
    function: TradingFunction,
    level: float,
    price: np.ndarray,
    start: np.ndarray,
    settings: SolverSettings,
) -> np.ndarray:
    """Solve grad C(x) = t*c, C(x) = level for (x, t)."""
    n = len(start)
    x = start.astype(float).copy()
    t = float(np.linalg.norm(invariant_grad(function, x)) / np.linalg.norm(price))
    h = 1e-7
    for _ in range(settings.max_iterations):
        grad = invariant_grad(function, x)
        r1 = grad - t * price
        r2 = invariant_eval(function, x) - level
        if np.max(np.abs(r1)) <= 1e-12 * max(1.0, float(np.max(np.abs(grad)))) and abs(
            r2
        ) <= 1e-12 * max(1.0, abs(level)):
            return x
        hess = np.empty((n, n))
        for j in range(n):
            bump = x.copy()
            bump[j] += h * max(1.0, abs(x[j]))
            hess[:, j] = (invariant_grad(function, bump) - grad) / (h * max(1.0, abs(x[j])))
        jac = np.zeros((n + 1, n + 1))
        jac[:n, :n] = hess
        jac[:n, n] = -price
        jac[n, :n] = grad
        try:
            step = np.linalg.solve(jac, -np.concatenate([r1, [r2]]))
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError("tangency system is singular") from exc
        scale = 1.0
        while np.any(x + scale * step[:n] <= 0) and scale > 1e-8:
            scale *= 0.5
        x = x + scale * step[:n]
        t = t + scale * step[n]
    raise ConvergenceError(
        f"tangency Newton did not converge (residual {float(np.max(np.abs(r1))):.3e})",
        residual=float(np.max(np.abs(r1))),
    )


def lp_loss(cmp: LpComparison, settings: SolverSettings = DEFAULT_SETTINGS) -> tuple[float, float, float]:
    """(rebalance utility, post-arbitrage utility, gap).

    The gap is nonnegative, zero exactly when c is already tangent to the
    level set at R, and strictly positive otherwise: posting liquidity is
    weakly dominated by rebalancing.
    """
    u_rebalance = utility_eval(cmp.utility, lp_rebalance_opt(cmp))
    reserves_after = lp_cfmm_arb(cmp, settings)
    u_cfmm = utility_eval(cmp.utility, reserves_after)
    tangent = spot_price(cmp.cfmm, cmp.initial)
    c = np.asarray(cmp.market_price)
    if float(np.max(np.abs(tangent - c))) <= 1e-9:
        return u_rebalance, u_cfmm, 0.0
    return u_rebalance, u_cfmm, u_rebalance - u_cfmm
