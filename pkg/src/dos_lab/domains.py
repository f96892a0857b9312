"""Market domains that map joint actions to per-agent rewards.

Two synthetic resource markets are provided:

* simple market -- reward is an agent's own consumption divided by global
  consumption raised to a slope exponent, so total payoff degrades as the
  group consumes more.
* logistic market -- each agent converts invested energy into produced
  units through its own sigmoid production curve, and a falling sigmoid
  price on total production sets the value of each unit.

Reward functions accept a length-``n`` action vector or an
``(n_samples, n)`` batch; agents index the last axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

ACTION_MIN = 0.1
ACTION_MAX = 4.0


@dataclass(frozen=True)
class SimpleMarketParams:
    """Slope exponent plus the admissible consumption interval."""

    xi: float
    a_min: float = ACTION_MIN
    a_max: float = ACTION_MAX


@dataclass(frozen=True)
class LogisticCurve:
    """Sigmoid parameterization: steepness ``c`` and x-axis offset ``o``."""

    c: float
    o: float


@dataclass(frozen=True)
class LogisticMarketParams:
    """One production curve per agent plus the global price curve."""

    per_agent: tuple[LogisticCurve, ...]
    price: LogisticCurve
    a_min: float = ACTION_MIN
    a_max: float = ACTION_MAX


DomainParams = SimpleMarketParams | LogisticMarketParams


def simple_market_rewards(actions: np.ndarray, params: SimpleMarketParams) -> np.ndarray:
    """Own consumption over penalized global consumption.

    ``rewards[i] = actions[i] / sum(actions) ** xi``. Requires a strictly
    positive consumption total, which the action box guarantees.
    """
    a = np.asarray(actions, dtype=float)
    total = a.sum(axis=-1, keepdims=True)
    if np.any(total <= 0.0):
        raise ValueError("total consumption must be positive; actions were not clipped into the box")
    return a / total**params.xi


def logistic_production(action, params: LogisticCurve):
    """Produced units for invested energy, a rising sigmoid in (0, 1)."""
    return expit(params.c * (np.asarray(action, dtype=float) - params.o))


def market_price(total_production, params: LogisticCurve):
    """Price per produced unit, a falling sigmoid in (0, 1)."""
    # 1 - expit(z) computed as expit(-z) to stay stable for large |z|.
    return expit(-params.c * (np.asarray(total_production, dtype=float) - params.o))


def logistic_market_rewards(actions: np.ndarray, params: LogisticMarketParams) -> np.ndarray:
    """Produced units times the global price at total production."""
    a = np.asarray(actions, dtype=float)
    c = np.array([curve.c for curve in params.per_agent])
    o = np.array([curve.o for curve in params.per_agent])
    if a.shape[-1] != len(params.per_agent):
        raise ValueError(f"{a.shape[-1]} actions but {len(params.per_agent)} production curves")
    produced = expit(c * (a - o))
    price = market_price(produced.sum(axis=-1, keepdims=True), params.price)
    return produced * price


def sample_domain_params(domain_kind: str, n: int, rng: np.random.Generator) -> DomainParams:
    """Draw one domain instance from the documented uniform ranges.

    Simple market: slope ``xi ~ U[2, 4]``. Logistic market: every
    production curve and the price curve get ``(c, o) ~ U[1, 3]^2``.
    The draw order is fixed (per-agent curves first, then price) so a
    given seeded stream always yields the same instance.
    """
    if domain_kind == "simple":
        return SimpleMarketParams(xi=float(rng.uniform(2.0, 4.0)))
    if domain_kind == "logistic":
        per_agent = tuple(
            LogisticCurve(c=float(c), o=float(o)) for c, o in rng.uniform(1.0, 3.0, size=(n, 2))
        )
        price_c, price_o = rng.uniform(1.0, 3.0, size=2)
        return LogisticMarketParams(per_agent=per_agent, price=LogisticCurve(float(price_c), float(price_o)))
    raise ValueError(f"unknown domain kind: {domain_kind!r} (expected 'simple' or 'logistic')")


def domain_rewards(domain, actions: np.ndarray) -> np.ndarray:
    """Dispatch to the reward function for ``domain``.

    Accepts market parameter records or, for custom test objectives, any
    callable mapping an action batch to a reward batch of the same shape.
    """
    if isinstance(domain, SimpleMarketParams):
        return simple_market_rewards(actions, domain)
    if isinstance(domain, LogisticMarketParams):
        return logistic_market_rewards(actions, domain)
    if callable(domain):
        return np.asarray(domain(actions), dtype=float)
    raise TypeError(f"unsupported domain object: {type(domain).__name__}")
