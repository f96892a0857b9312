"""Simulator and sweep harness for optimization with voluntary utility sharing."""

from .domains import (
    LogisticCurve,
    LogisticMarketParams,
    SimpleMarketParams,
    logistic_market_rewards,
    logistic_production,
    market_price,
    sample_domain_params,
    simple_market_rewards,
)
from .engine import (
    DEFECTOR,
    SHARER,
    CeConfig,
    EvaluatedBatch,
    Policy,
    Population,
    RunTrace,
    build_joint,
    evaluate_batch,
    init_policy,
    make_population,
    run_cedos,
    sample_policy,
    select_elite,
    spawn_agent_rngs,
    update_policy,
)
from .experiment import (
    SchellingRow,
    SweepResult,
    confidence_interval,
    curve_statistics,
    run_sweep,
    schelling_points,
)
from .game import clip_shares_to_reward, sharing_utility

__version__ = "0.1.0"

__all__ = [
    "CeConfig",
    "DEFECTOR",
    "EvaluatedBatch",
    "LogisticCurve",
    "LogisticMarketParams",
    "Policy",
    "Population",
    "RunTrace",
    "SHARER",
    "SchellingRow",
    "SimpleMarketParams",
    "SweepResult",
    "build_joint",
    "clip_shares_to_reward",
    "confidence_interval",
    "curve_statistics",
    "evaluate_batch",
    "init_policy",
    "logistic_market_rewards",
    "logistic_production",
    "make_population",
    "market_price",
    "run_cedos",
    "run_sweep",
    "sample_domain_params",
    "sample_policy",
    "schelling_points",
    "select_elite",
    "sharing_utility",
    "simple_market_rewards",
    "spawn_agent_rngs",
    "update_policy",
]
