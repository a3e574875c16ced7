"""Numerical laboratory for constant function market makers facing
sequential price-taking traders."""

from .cfmm import (
    CfmmState,
    ConstantMin,
    ConstantProduct,
    ConstantSum,
    ExpProduct,
    GeometricMean,
    QuadraticOverLinear,
    TradingFunction,
    cpmm_swap_output,
    invariant_eval,
    invariant_grad,
    spot_price,
    trade_feasible,
)
from .distributions import (
    BernoulliProduct,
    DiscreteAtoms,
    EndowmentDistribution,
    UniformBox,
    sample_endowment,
)
from .economy import (
    CobbDouglasProduct,
    ExchangeEconomy,
    ShiftedLogSum,
    UtilityFunction,
    WeightedGeometric,
    excess_demand,
    one_shot_welfare,
    utility_eval,
    utility_grad,
    walrasian_demand,
)
from .simulation import (
    CfmmwdConfig,
    Trajectory,
    estimate_avg_price,
    estimate_welfare,
    reserve_heatmap,
    run_cfmmwd,
)
from .solvers import (
    MarkovChain,
    SolverSettings,
    build_csmm_example_chain,
    distributional_walrasian_equilibrium,
    finite_walrasian_equilibrium,
    price_to_reserves,
    stationary_distribution,
    stochastic_equilibrium_price,
    trade_choice,
)

__version__ = "0.1.0"
