"""Discrete-time binomial market engine.

Scenario lattice and expectation operators, market/portfolio algebra,
the two-asset binomial model, a payoff expression language, risk-neutral
pricing with replicating portfolios, and the verification predicates that
certify all of it.
"""
from .crr import (
    CrrMarket,
    CrrParams,
    MarketNotViableError,
    disc_rfr_proc,
    discount_factor,
    discounted_value,
    filtration_equivalent_bernoulli,
    geom_rand_walk,
    is_viable,
    price_path,
    risk_neutral_q,
    step_rate_from_annual,
)
from .lattice import (
    BinaryLattice,
    LatticeProcess,
    PathMeasure,
    TossPath,
    conditional_expectation_step,
    enumerate_paths,
    expectation,
    is_measurable_at,
    path_probability,
    truncate,
)
from .market import (
    Asset,
    Market,
    Portfolio,
    PortfolioFormatError,
    PortfolioRow,
    PredictabilityError,
    QuantityProcess,
    closing_value_process,
    init_value,
    is_self_financing,
    is_trading_strategy,
    make_self_financing,
    qty_empty,
    qty_mult_comp,
    qty_rem_comp,
    qty_single,
    qty_sum,
    quantities_allclose,
    read_portfolio_csv,
    support_set,
    value_process,
    write_portfolio_csv,
)
from .payoff import (
    PayoffEvalError,
    PayoffExpr,
    PayoffSyntaxError,
    eval_payoff,
    parse_payoff,
    payoff_horizon,
    print_payoff,
)
from .pricing import (
    ArbitrageVerdict,
    PriceLattice,
    ReplicationReport,
    construct_arbitrage,
    fair_price,
    is_arbitrage_process,
    is_martingale,
    is_risk_neutral,
    martingale_residual,
    one_step_no_arbitrage_check,
    price_lattice,
    replicating_portfolio,
    verify_replication,
)

__all__ = [
    "Asset",
    "ArbitrageVerdict",
    "BinaryLattice",
    "CrrMarket",
    "CrrParams",
    "LatticeProcess",
    "Market",
    "MarketNotViableError",
    "PathMeasure",
    "PayoffEvalError",
    "PayoffExpr",
    "PayoffSyntaxError",
    "Portfolio",
    "PortfolioFormatError",
    "PortfolioRow",
    "PredictabilityError",
    "PriceLattice",
    "QuantityProcess",
    "ReplicationReport",
    "TossPath",
    "closing_value_process",
    "conditional_expectation_step",
    "construct_arbitrage",
    "disc_rfr_proc",
    "discount_factor",
    "discounted_value",
    "enumerate_paths",
    "eval_payoff",
    "expectation",
    "fair_price",
    "filtration_equivalent_bernoulli",
    "geom_rand_walk",
    "init_value",
    "is_arbitrage_process",
    "is_martingale",
    "is_measurable_at",
    "is_risk_neutral",
    "is_self_financing",
    "is_trading_strategy",
    "is_viable",
    "make_self_financing",
    "martingale_residual",
    "one_step_no_arbitrage_check",
    "parse_payoff",
    "path_probability",
    "payoff_horizon",
    "price_lattice",
    "price_path",
    "print_payoff",
    "qty_empty",
    "qty_mult_comp",
    "qty_rem_comp",
    "qty_single",
    "qty_sum",
    "quantities_allclose",
    "read_portfolio_csv",
    "replicating_portfolio",
    "risk_neutral_q",
    "step_rate_from_annual",
    "support_set",
    "truncate",
    "value_process",
    "verify_replication",
    "write_portfolio_csv",
]
