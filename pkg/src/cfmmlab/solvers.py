"""Numerical routines: optimal trades against a pool, exchange equilibria,
stochastic price fixed points, price/reserve inversion, and stationary
distributions of finite reserve chains.

The two-good trade problem is solved on the invariant level set: the trade is
parameterized by the post-trade pool holding of the first good, the second
coordinate follows from the level equation in closed form, and the resulting
one-dimensional unimodal objective is maximized analytically where a closed
form exists (linear and product curves) or by golden-section search otherwise.
Optima that would drive a reserve negative are clamped to the feasible
interval, which realizes the maximal feasible trade.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .cfmm import (
    CfmmState,
    ConstantMin,
    ConstantProduct,
    ConstantSum,
    ExpProduct,
    GeometricMean,
    QuadraticOverLinear,
    TradingFunction,
    invariant_eval,
    invariant_grad,
    spot_price,
)
from .distributions import EndowmentDistribution
from .economy import (
    CobbDouglasProduct,
    ExchangeEconomy,
    ShiftedLogSum,
    UtilityFunction,
    WeightedGeometric,
    as_bundle,
    normalize_price,
)
from .errors import (
    BoundaryDriftError,
    ConvergenceError,
    DegenerateEconomyError,
    DimensionMismatchError,
    DomainError,
    ReducibleChainError,
    UnsupportedVariantError,
)
from .rng import StepRng

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
#: iterates closer than this to the simplex boundary abort the price fixed point
BOUNDARY_GUARD = 1e-6


@dataclass(frozen=True)
class SolverSettings:
    tolerance: float = 1e-10
    max_iterations: int = 10_000
    damping: float = 0.5

    def __post_init__(self):
        if self.tolerance <= 0:
            raise DomainError(f"tolerance must be > 0, got {self.tolerance}")
        if self.max_iterations < 1:
            raise DomainError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not 0.0 < self.damping <= 1.0:
            raise DomainError(f"damping must be in (0,1], got {self.damping}")


DEFAULT_SETTINGS = SolverSettings()


# ---------------------------------------------------------------------------
# Two-good trade machinery
# ---------------------------------------------------------------------------


def _golden_max(h, lo: float, hi: float, iters: int = 72) -> float:
    """Argmax of a unimodal h on [lo, hi] by golden-section search."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    hc, hd = h(c), h(d)
    for _ in range(iters):
        if hc >= hd:
            b, d, hd = d, c, hc
            c = b - _INVPHI * (b - a)
            hc = h(c)
        else:
            a, c, hc = c, d, hd
            d = a + _INVPHI * (b - a)
            hd = h(d)
        if b - a <= 1e-14 * max(1.0, abs(a) + abs(b)):
            break
    return 0.5 * (a + b)


def _log_pair(u: UtilityFunction):
    """(w1, w2, s1, s2) so the two-good objective is
    w1*log(z1+s1) + w2*log(z2+s2) up to a monotone transform."""
    if isinstance(u, WeightedGeometric):
        if len(u.weights) != 2:
            raise DimensionMismatchError("two-good path needs a two-good utility")
        return u.weights[0], u.weights[1], 0.0, 0.0
    if isinstance(u, CobbDouglasProduct):
        return 0.5, 0.5, 0.0, 0.0
    if isinstance(u, ShiftedLogSum):
        if len(u.shifts) != 2:
            raise DimensionMismatchError("two-good path needs a two-good utility")
        return 0.5, 0.5, u.shifts[0], u.shifts[1]
    raise UnsupportedVariantError(f"unsupported utility {u!r}")


def make_pair_planner(u: UtilityFunction, function: TradingFunction):
    """Specialized two-good trade solver for a (utility, curve) pair.

    Returns plan(dx, dy, rx, ry) -> (zx, zy, fx, fy) where (zx, zy) is the
    trader's final bundle and (fx, fy) the net flow into the pool. Pure
    scalar arithmetic; this is the hot path of the sequential simulation.
    """
    w1, w2, s1, s2 = _log_pair(u)

    if isinstance(function, ConstantSum):
        c1, c2 = function.coefficients
        ratio = c2 / c1  # units of y the pool releases per unit of x deposited, per price

        def plan(dx: float, dy: float, rx: float, ry: float):
            # Fixed-price market: interior optimum from the first-order
            # condition, then clamp to the reserve/holdings box. `a` is the
            # amount of good x deposited (negative = withdrawn).
            a = w2 * (dx + s1) - w1 * ratio * (dy + s2)
            a_lo = max(-rx, -dy * ratio)
            a_hi = min(dx, ry * ratio)
            if a < a_lo:
                a = a_lo
            elif a > a_hi:
                a = a_hi
            if a == 0.0:
                return dx, dy, 0.0, 0.0
            zx = dx - a
            zy = dy + a / ratio
            if zx < 0.0:
                zx = 0.0
            if zy < 0.0:
                zy = 0.0
            return zx, zy, a, -a / ratio

        return plan

    if isinstance(function, ConstantProduct) or (
        isinstance(function, GeometricMean) and len(function.weights) == 2
    ):
        is_product = isinstance(function, ConstantProduct)
        gw1, gw2 = (0.5, 0.5) if is_product else function.weights
        hyperbola = is_product or abs(gw1 - gw2) < 1e-15

        def plan(dx: float, dy: float, rx: float, ry: float):
            if rx <= 0.0 or ry <= 0.0:
                raise DomainError("product-curve trading needs strictly positive reserves")
            if hyperbola:
                # equal weights: the level set is x*y = prod
                prod = rx * ry
                a_tot = rx + dx
                b_tot = ry + dy
                x_lo = prod / b_tot
                x_hi = a_tot
                if x_hi <= x_lo:
                    return dx, dy, 0.0, 0.0
                # FOC of w1*log(A+s1-x') + w2*log(B+s2-prod/x'):
                # w1*(B+s2)*x'^2 + (w2-w1)*prod*x' - w2*prod*(A+s1) = 0
                big_a = a_tot + s1
                big_b = b_tot + s2
                if w1 == w2:
                    x_star = math.sqrt(prod * big_a / big_b)
                else:
                    qa = w1 * big_b
                    qb = (w2 - w1) * prod
                    qc = -w2 * prod * big_a
                    x_star = (-qb + math.sqrt(qb * qb - 4.0 * qa * qc)) / (2.0 * qa)
                if x_star < x_lo:
                    x_star = x_lo
                elif x_star > x_hi:
                    x_star = x_hi
                y_star = prod / x_star
            else:
                k = rx**gw1 * ry**gw2
                a_tot = rx + dx
                b_tot = ry + dy
                x_lo = (k / b_tot**gw2) ** (1.0 / gw1)
                x_hi = a_tot
                if x_hi <= x_lo:
                    return dx, dy, 0.0, 0.0

                def h(xp):
                    zx = a_tot - xp + s1
                    zy = b_tot - (k / xp**gw1) ** (1.0 / gw2) + s2
                    if zx <= 0.0 or zy <= 0.0:
                        return -math.inf
                    return w1 * math.log(zx) + w2 * math.log(zy)

                x_star = _golden_max(h, x_lo, x_hi)
                y_star = (k / x_star**gw1) ** (1.0 / gw2)
            fx = x_star - rx
            fy = y_star - ry
            zx = dx - fx
            zy = dy - fy
            if zx < 0.0:
                zx = 0.0
            if zy < 0.0:
                zy = 0.0
            # snap exact no-trade when the optimum does not beat staying put
            if not _improves(w1, w2, s1, s2, zx, zy, dx, dy):
                return dx, dy, 0.0, 0.0
            return zx, zy, fx, fy

        return plan

    if isinstance(function, ExpProduct):

        def plan(dx: float, dy: float, rx: float, ry: float):
            k = rx * math.exp(ry)
            if k <= 0.0:
                raise DomainError("x*exp(y) trading needs x > 0")
            a_tot = rx + dx
            b_tot = ry + dy
            x_lo = k * math.exp(-b_tot)
            x_hi = a_tot if a_tot < k else k
            if x_hi <= x_lo:
                return dx, dy, 0.0, 0.0

            def h(xp):
                zx = a_tot - xp + s1
                zy = b_tot - math.log(k / xp) + s2
                if zx <= 0.0 or zy <= 0.0:
                    return -math.inf
                return w1 * math.log(zx) + w2 * math.log(zy)

            x_star = _golden_max(h, x_lo, x_hi)
            y_star = math.log(k / x_star)
            fx, fy = x_star - rx, y_star - ry
            zx, zy = dx - fx, dy - fy
            if zx < 0.0:
                zx = 0.0
            if zy < 0.0:
                zy = 0.0
            if not _improves(w1, w2, s1, s2, zx, zy, dx, dy):
                return dx, dy, 0.0, 0.0
            return zx, zy, fx, fy

        return plan

    raise UnsupportedVariantError(
        f"no two-good trade path for {type(function).__name__}"
    )


def _improves(w1, w2, s1, s2, zx, zy, dx, dy) -> bool:
    """Candidate beats the no-trade point in the shared log objective."""
    cand_x, cand_y = zx + s1, zy + s2
    base_x, base_y = dx + s1, dy + s2
    cand = (
        -math.inf
        if cand_x <= 0 or cand_y <= 0
        else w1 * math.log(cand_x) + w2 * math.log(cand_y)
    )
    base = (
        -math.inf
        if base_x <= 0 or base_y <= 0
        else w1 * math.log(base_x) + w2 * math.log(base_y)
    )
    if base == -math.inf:
        return cand > -math.inf
    return cand > base + 1e-15 * max(1.0, abs(base))


# ---------------------------------------------------------------------------
# Budget demand with reserve caps (linear pools of any dimension)
# ---------------------------------------------------------------------------


def _demand_with_caps(u: UtilityFunction, delta: np.ndarray, price: np.ndarray, caps: np.ndarray) -> np.ndarray:
    """Maximize U over {0 <= z <= caps, price.z = price.delta}.

    The KKT system reduces to one scalar equation: each coordinate is a clip
    of a monotone function of the multiplier, so total spend is monotone in
    the multiplier and bisection is exact and cycle-free.
    """
    wealth = float(price @ delta)
    if wealth == 0.0 and not isinstance(u, ShiftedLogSum):
        return np.zeros_like(delta)
    if isinstance(u, (WeightedGeometric, CobbDouglasProduct)):
        w = (
            np.asarray(u.weights)
            if isinstance(u, WeightedGeometric)
            else np.full(len(delta), 1.0 / len(delta))
        )

        def bundle(nu):
            return np.minimum(w * nu / price, caps)

        hi = max(wealth / float(w.min()), 1.0)
        while float(price @ bundle(hi)) < wealth - 1e-15 * max(1.0, wealth):
            hi *= 2.0
    elif isinstance(u, ShiftedLogSum):
        s = np.asarray(u.shifts)

        def bundle(nu):
            return np.clip(nu / price - s, 0.0, caps)

        hi = (wealth + float(price @ s)) * len(delta) + 1.0
        while float(price @ bundle(hi)) < wealth - 1e-15 * max(1.0, wealth):
            hi *= 2.0
    else:
        raise UnsupportedVariantError(f"unsupported utility {u!r}")

    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(price @ bundle(mid)) < wealth:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, hi):
            break
    zeta = bundle(0.5 * (lo + hi))
    # budget polish on the strictly interior coordinates
    slack = wealth - float(price @ zeta)
    interior = (zeta > 0) & (zeta < caps)
    if abs(slack) > 0 and interior.any():
        weights = price[interior]
        zeta[interior] += slack * weights / float(weights @ weights)
        zeta = np.clip(zeta, 0.0, caps)
    return zeta


# ---------------------------------------------------------------------------
# Newton path for curved pools in three or more goods
# ---------------------------------------------------------------------------


def _utility_hessian(u: UtilityFunction, x: np.ndarray) -> np.ndarray:
    if isinstance(u, WeightedGeometric):
        w = np.asarray(u.weights)
        val = u.value(x)
        ratio = w / x
        return val * (np.outer(ratio, ratio) - np.diag(w / x**2))
    if isinstance(u, CobbDouglasProduct):
        val = u.value(x)
        inv = 1.0 / x
        return val * (np.outer(inv, inv) - np.diag(inv**2))
    if isinstance(u, ShiftedLogSum):
        return -np.diag(1.0 / (x + np.asarray(u.shifts)) ** 2)
    raise UnsupportedVariantError(f"unsupported utility {u!r}")


def _curve_hessian(function: TradingFunction, x: np.ndarray) -> np.ndarray:
    if isinstance(function, GeometricMean):
        w = np.asarray(function.weights)
        val = invariant_eval(function, x)
        ratio = w / x
        return val * (np.outer(ratio, ratio) - np.diag(w / x**2))
    raise UnsupportedVariantError(f"no Hessian for {type(function).__name__}")


def _newton_trade(u, delta, function, reserves, settings) -> tuple[np.ndarray, np.ndarray]:
    level = invariant_eval(function, reserves)
    if level <= 0:
        raise DomainError("curved-pool trading needs a positive invariant level")
    total = reserves + delta

    # damped warm start: demand at the supporting plane of the current
    # iterate, projected back onto the level set (the curve is 1-homogeneous)
    post = reserves.copy()
    for _ in range(60):
        price = spot_price(function, post)
        zeta = _demand_at_wealth(u, float(price @ (total - post)), price)
        new_post = np.maximum(total - zeta, 1e-12 * np.max(total))
        new_post *= level / invariant_eval(function, new_post)
        step = new_post - post
        post = post + settings.damping * step
        if np.max(np.abs(step)) <= 1e-9 * np.max(total):
            break

    zeta = np.maximum(total - post, 1e-12 * np.max(total))
    mu = float(np.linalg.norm(u.gradient(zeta)) / np.linalg.norm(invariant_grad(function, post)))
    n = len(delta)
    scale = max(1.0, float(np.linalg.norm(u.gradient(zeta))))
    for _ in range(100):
        post = total - zeta
        grad_c = invariant_grad(function, post)
        r1 = u.gradient(zeta) - mu * grad_c
        r2 = invariant_eval(function, post) - level
        if (
            np.max(np.abs(r1)) <= 1e-11 * scale
            and abs(r2) <= 1e-13 * max(1.0, abs(level))
        ):
            break
        jac = np.zeros((n + 1, n + 1))
        jac[:n, :n] = _utility_hessian(u, zeta) + mu * _curve_hessian(function, post)
        jac[:n, n] = -grad_c
        jac[n, :n] = -grad_c
        try:
            step = np.linalg.solve(jac, -np.concatenate([r1, [r2]]))
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(
                f"trade Newton produced a singular KKT system (residual {np.max(np.abs(r1)):.3e})",
                residual=float(np.max(np.abs(r1))),
            ) from exc
        t = 1.0
        base_norm = float(np.linalg.norm(np.concatenate([r1, [r2]])))
        for _ in range(60):
            z_new = zeta + t * step[:n]
            mu_new = mu + t * step[n]
            post_new = total - z_new
            if np.all(z_new > 0) and np.all(post_new > 0) and mu_new > 0:
                r1n = u.gradient(z_new) - mu_new * invariant_grad(function, post_new)
                r2n = invariant_eval(function, post_new) - level
                if float(np.linalg.norm(np.concatenate([r1n, [r2n]]))) <= (1 - 1e-4 * t) * base_norm:
                    break
            t *= 0.5
        else:
            raise ConvergenceError(
                f"trade Newton line search stalled (residual {base_norm:.3e})",
                residual=base_norm,
            )
        zeta = zeta + t * step[:n]
        mu = mu + t * step[n]
    else:
        raise ConvergenceError(
            "trade Newton did not converge "
            f"(stationarity residual {float(np.max(np.abs(r1))):.3e}, level residual {abs(r2):.3e})",
            residual=float(np.max(np.abs(r1))),
        )

    post = total - zeta
    post *= level / invariant_eval(function, post)  # exact level polish (1-homogeneous)
    zeta = np.maximum(total - post, 0.0)
    if u.value(zeta) < u.value(delta):
        return delta.copy(), np.zeros_like(delta)
    return zeta, delta - zeta


def _demand_at_wealth(u: UtilityFunction, wealth: float, price: np.ndarray) -> np.ndarray:
    """Demand of a trader whose budget is `wealth` at the given prices."""
    if wealth <= 0:
        wealth = max(wealth, 0.0)
    if isinstance(u, WeightedGeometric):
        return np.asarray(u.weights) * wealth / price
    if isinstance(u, CobbDouglasProduct):
        return wealth / (len(price) * price)
    if isinstance(u, ShiftedLogSum):
        synthetic = np.zeros_like(price)
        synthetic[0] = wealth / price[0]
        return u.demand(synthetic, price)
    raise UnsupportedVariantError(f"unsupported utility {u!r}")


# ---------------------------------------------------------------------------
# Trade choice
# ---------------------------------------------------------------------------


def trade_choice(
    u: UtilityFunction,
    endowment,
    state: CfmmState,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> tuple[np.ndarray, np.ndarray]:
    """Optimal trade of one price-taking trader against the pool.

    Returns (zeta, flow_in): the trader's final bundle and the net vector
    flowing into the pool (reserves update is R + flow_in). The invariant is
    preserved at equality whenever a trade happens; when the unconstrained
    optimum would drive a reserve negative the best boundary-feasible trade
    is returned. The no-trade point is always feasible, so the trader never
    leaves with less utility than the endowment.
    """
    delta = as_bundle(endowment, what="endowment")
    reserves = state.reserves_array()
    if len(delta) != len(reserves):
        raise DimensionMismatchError(
            f"endowment dim {len(delta)} vs reserves dim {len(reserves)}"
        )
    if state.fee != 0.0:
        raise DomainError("trade choice is defined for fee-less pools (fee=0)")
    if isinstance(state.function, QuadraticOverLinear):
        raise UnsupportedVariantError(
            "-x^2/y is decreasing in x; the utility-maximizing trade is "
            "degenerate at the open domain boundary and is not supported"
        )
    if not delta.any():
        return delta.copy(), np.zeros_like(delta)

    if isinstance(state.function, ConstantMin):
        # Any strictly increasing trader drains every reserve down to the
        # invariant level, leaving the pool at (k, ..., k).
        k = invariant_eval(state.function, reserves)
        zeta = delta + reserves - k
        return zeta, delta - zeta

    if isinstance(state.function, ConstantSum):
        price = np.asarray(state.function.coefficients, dtype=float)
        if len(delta) == 2:
            plan = make_pair_planner(u, state.function)
            zx, zy, fx, fy = plan(delta[0], delta[1], reserves[0], reserves[1])
            return np.array([zx, zy]), np.array([fx, fy])
        zeta = _demand_with_caps(u, delta, price, delta + reserves)
        if u.value(zeta) < u.value(delta):
            return delta.copy(), np.zeros_like(delta)
        return zeta, delta - zeta

    if len(delta) == 2:
        plan = make_pair_planner(u, state.function)
        zx, zy, fx, fy = plan(delta[0], delta[1], reserves[0], reserves[1])
        return np.array([zx, zy]), np.array([fx, fy])

    if isinstance(state.function, GeometricMean):
        return _newton_trade(u, delta, state.function, reserves, settings)

    raise UnsupportedVariantError(
        f"no trade path for {type(state.function).__name__} in dimension {len(delta)}"
    )


# ---------------------------------------------------------------------------
# Walrasian equilibria
# ---------------------------------------------------------------------------


def _tatonnement(excess, aggregate: np.ndarray, settings: SolverSettings, start=None) -> np.ndarray:
    """Multiplicative price adjustment p_i <- p_i (1 + a z_i / supply_i).

    The step size adapts: it shrinks when the residual grows (overshoot)
    and creeps back up while progress is steady.
    """
    n = len(aggregate)
    p = np.full(n, 1.0 / n) if start is None else normalize_price(start)
    alpha = 0.2
    prev_norm = math.inf
    norm = math.inf
    for _ in range(settings.max_iterations):
        z = excess(p)
        norm = float(np.max(np.abs(z)))
        if norm <= settings.tolerance:
            return p
        if norm > prev_norm * (1.0 + 1e-12):
            alpha = max(alpha * 0.5, 1e-5)
        else:
            alpha = min(alpha * 1.08, 0.95)
        prev_norm = norm
        rel = np.clip(z / aggregate, -0.9, 4.0)
        p = p * (1.0 + alpha * rel)
        p = p / p.sum()
    raise ConvergenceError(
        f"tatonnement stalled at excess-demand residual {norm:.3e} "
        f"(tolerance {settings.tolerance:.1e})",
        residual=norm,
    )


def finite_walrasian_equilibrium(
    economy: ExchangeEconomy, settings: SolverSettings = DEFAULT_SETTINGS
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Equilibrium price and allocations for finitely many traders.

    The returned price is simplex-normalized, aggregate excess demand is
    below tolerance in every good, and the allocations are the individual
    demands at that price (so they exhaust the aggregate endowment).
    """
    aggregate = economy.aggregate_endowment()
    if np.any(aggregate <= 0):
        bad = [i for i, v in enumerate(aggregate) if v <= 0]
        raise DegenerateEconomyError(
            f"goods {bad} have zero aggregate endowment; no equilibrium with "
            "strictly increasing utilities"
        )
    endowments = np.asarray([e for _, e in economy.agents], dtype=float)
    utilities = [u for u, _ in economy.agents]
    all_geometric = all(
        isinstance(u, (WeightedGeometric, CobbDouglasProduct)) for u in utilities
    )

    if all_geometric:
        weight_rows = np.asarray(
            [
                u.weights
                if isinstance(u, WeightedGeometric)
                else np.full(economy.dimension, 1.0 / economy.dimension)
                for u in utilities
            ]
        )

        def excess(p):
            wealth = endowments @ p
            return (weight_rows * wealth[:, None] / p[None, :]).sum(axis=0) - aggregate

    else:

        def excess(p):
            total = -aggregate.copy()
            for u, e in zip(utilities, endowments):
                total += u.demand(e, p)
            return total

    p_star = _tatonnement(excess, aggregate, settings)
    allocations = [u.demand(e, p_star) for u, e in zip(utilities, endowments)]
    return p_star, allocations


def distributional_walrasian_equilibrium(
    u: UtilityFunction,
    distribution: EndowmentDistribution,
    settings: SolverSettings = DEFAULT_SETTINGS,
    n_samples: int = 100_000,
    seed: int = 0,
) -> np.ndarray:
    """Price at which expected excess demand vanishes.

    Exact expectation over finitely many atoms; otherwise the expectation is
    taken over one fixed Monte Carlo sample (deterministic in the seed), so
    the population residual is within sampling error of zero.
    """
    atoms = distribution.atoms()
    if atoms is not None:
        points = np.asarray(atoms[0], dtype=float)
        probs = np.asarray(atoms[1], dtype=float)
    else:
        points = np.asarray(
            [distribution.sample(StepRng(seed, i)) for i in range(n_samples)]
        )
        probs = np.full(len(points), 1.0 / len(points))

    aggregate = probs @ points
    if np.any(aggregate <= 0):
        bad = [i for i, v in enumerate(aggregate) if v <= 0]
        raise DegenerateEconomyError(f"goods {bad} have zero expected endowment")

    if isinstance(u, (WeightedGeometric, CobbDouglasProduct)):
        w = (
            np.asarray(u.weights)
            if isinstance(u, WeightedGeometric)
            else np.full(points.shape[1], 1.0 / points.shape[1])
        )

        def excess(p):
            return w * float(p @ aggregate) / p - aggregate

    else:

        def excess(p):
            mean = np.zeros(points.shape[1])
            for point, prob in zip(points, probs):
                mean += prob * u.demand(point, p)
            return mean - aggregate

    return _tatonnement(excess, aggregate, settings)


# ---------------------------------------------------------------------------
# Price <-> reserve inversion and the stochastic price fixed point
# ---------------------------------------------------------------------------


def price_to_reserves(function: TradingFunction, level: float, price) -> np.ndarray:
    """Reserves R with C(R) = level and spot price equal to `price`.

    Only defined for curves whose reserve-to-price map is a bijection onto
    the open simplex on each level set (the product and geometric-mean
    families).
    """
    p = normalize_price(price)
    if np.min(p) <= 1e-12:
        raise DomainError(f"price {p} is on the simplex boundary")
    if isinstance(function, ConstantProduct):
        if len(p) != 2:
            raise DimensionMismatchError("x*y is a two-good curve")
        if level <= 0:
            raise DomainError(f"level must be > 0, got {level}")
        t = math.sqrt(level / (p[0] * p[1]))
        return np.array([t * p[1], t * p[0]])
    if isinstance(function, GeometricMean):
        if len(p) != len(function.weights):
            raise DimensionMismatchError("price dimension does not match the curve")
        if level <= 0:
            raise DomainError(f"level must be > 0, got {level}")
        w = np.asarray(function.weights)
        lam = float(np.prod((w / p) ** w)) / level
        return w / (lam * p)
    raise UnsupportedVariantError(
        f"{type(function).__name__} has no price->reserve inverse "
        "(its spot-price map is not a bijection on level sets)"
    )


def stochastic_equilibrium_price(
    u: UtilityFunction,
    distribution: EndowmentDistribution,
    function: TradingFunction,
    level: float,
    settings: SolverSettings = DEFAULT_SETTINGS,
    n_samples: int = 20_000,
    seed: int = 0,
    initial_price=None,
) -> np.ndarray:
    """Fixed point of the expected one-step spot-price update.

    Starting from price p, reserves are recovered on the level set, one
    trader drawn from the endowment distribution executes their optimal
    trade, and the post-trade spot price is averaged over the distribution.
    Damped iteration runs until the update is below tolerance. Iterates that
    approach the simplex boundary abort with :class:`BoundaryDriftError`:
    that is the regime (e.g. a point-mass endowment in one good) where no
    interior fixed point exists.
    """
    atoms = distribution.atoms()
    if atoms is not None:
        points = [np.asarray(pt, dtype=float) for pt in atoms[0]]
        probs = list(atoms[1])
    else:
        points = [distribution.sample(StepRng(seed, i)) for i in range(n_samples)]
        probs = [1.0 / n_samples] * n_samples

    dim = len(points[0])
    p = (
        np.full(dim, 1.0 / dim)
        if initial_price is None
        else normalize_price(initial_price)
    )
    residual = math.inf
    for _ in range(settings.max_iterations):
        if float(np.min(p)) < BOUNDARY_GUARD:
            raise BoundaryDriftError(
                "price iterates drifted to the simplex boundary "
                f"(min coordinate {float(np.min(p)):.2e}); no interior fixed point",
                residual=residual,
            )
        reserves = price_to_reserves(function, level, p)
        state = CfmmState(function, tuple(reserves))
        updated = np.zeros(dim)
        for point, prob in zip(points, probs):
            _, flow = trade_choice(u, point, state, settings)
            updated += prob * spot_price(function, reserves + flow)
        updated /= updated.sum()
        residual = float(np.max(np.abs(updated - p)))
        if residual <= settings.tolerance:
            return updated
        p = (1.0 - settings.damping) * p + settings.damping * updated
        p /= p.sum()
    raise ConvergenceError(
        f"price fixed point not reached after {settings.max_iterations} iterations "
        f"(residual {residual:.3e}, min coordinate {float(np.min(p)):.3e})",
        residual=residual,
    )


# ---------------------------------------------------------------------------
# Finite chains
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MarkovChain:
    """Finite chain over labelled reserve points with a row-stochastic matrix."""

    states: tuple
    transition: np.ndarray

    def __post_init__(self):
        matrix = np.asarray(self.transition, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionMismatchError(f"transition must be square, got {matrix.shape}")
        if len(self.states) != matrix.shape[0]:
            raise DimensionMismatchError("one state label per matrix row required")
        if np.any(matrix < 0):
            raise DomainError("transition probabilities must be >= 0")
        rows = matrix.sum(axis=1)
        if np.max(np.abs(rows - 1.0)) > 1e-12:
            raise DomainError(f"rows must sum to 1 within 1e-12, worst {rows}")
        object.__setattr__(self, "transition", matrix)


def _closed_classes(matrix: np.ndarray) -> list[list[int]]:
    graph = sp.csr_matrix(matrix > 0)
    n_comp, labels = connected_components(graph, directed=True, connection="strong")
    if n_comp == 1:
        return []
    closed = []
    for comp in range(n_comp):
        members = np.flatnonzero(labels == comp)
        outside = np.flatnonzero(labels != comp)
        if not (matrix[np.ix_(members, outside)] > 0).any():
            closed.append([int(i) for i in members])
    return closed


def stationary_distribution(
    chain: MarkovChain, settings: SolverSettings = DEFAULT_SETTINGS
) -> np.ndarray:
    """Unique stationary law of an irreducible finite chain.

    Solved as a linear system (one balance row replaced by normalization);
    power iteration on the lazy chain is the fallback when the direct solve
    is ill-conditioned. Aperiodic chains are not required.
    """
    matrix = chain.transition
    n = matrix.shape[0]
    if n == 1:
        return np.array([1.0])
    closed = _closed_classes(matrix)
    if closed:
        raise ReducibleChainError(
            f"chain is reducible; closed communicating classes: {closed}", closed
        )

    system = matrix.T - np.eye(n)
    system[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    try:
        pi = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError:
        pi = np.full(n, 1.0 / n)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()

    residual = float(np.max(np.abs(pi @ matrix - pi)))
    if residual > settings.tolerance:
        lazy = 0.5 * (matrix + np.eye(n))
        for _ in range(settings.max_iterations):
            nxt = pi @ lazy
            if float(np.max(np.abs(nxt - pi))) <= 0.25 * settings.tolerance:
                pi = nxt
                break
            pi = nxt
        pi /= pi.sum()
        residual = float(np.max(np.abs(pi @ matrix - pi)))
        if residual > settings.tolerance:
            raise ConvergenceError(
                f"stationary solve residual {residual:.3e} above tolerance",
                residual=residual,
            )
    return pi


def build_csmm_example_chain(r1: int, r2: int) -> MarkovChain:
    """Reserve chain of the unit-price linear pool facing 0/1 endowments.

    Traders holding exactly one good swap half a unit when the pool can
    cover it; blocked moves collapse into self-loops. States enumerate the
    first-good reserve on the half-integer grid {0, 1/2, ..., r1+r2}.
    """
    if r1 < 1 or r2 < 1 or r1 != int(r1) or r2 != int(r2):
        raise DomainError(f"initial reserves must be integers >= 1, got {(r1, r2)}")
    total = int(r1) + int(r2)
    n = 2 * total + 1
    matrix = np.zeros((n, n))
    for j in range(n):
        up = j + 1 if j + 1 < n else j
        down = j - 1 if j - 1 >= 0 else j
        matrix[j, up] += 0.25
        matrix[j, down] += 0.25
        matrix[j, j] += 0.5
    states = tuple((j / 2.0, total - j / 2.0) for j in range(n))
    return MarkovChain(states=states, transition=matrix)
