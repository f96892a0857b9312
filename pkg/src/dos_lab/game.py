"""Core payoff transforms for games with voluntary utility transfers.

Agents earn a reward vector from a joint action and may hand over a
non-negative share of it; every share is redistributed uniformly to the
other ``n - 1`` agents. All functions here are pure and operate on the
last axis of their inputs, so a batch of joint samples can be processed
as a single ``(n_samples, n_agents)`` array.
"""

from __future__ import annotations

import numpy as np


def sharing_utility(rewards: np.ndarray, shares: np.ndarray) -> np.ndarray:
    """Utilities after each agent's share is split evenly among the others.

    Agent ``i`` keeps ``rewards[i] - shares[i]`` and receives
    ``sum(shares[j], j != i) / (n - 1)``. The total utility therefore
    equals the total reward (redistribution conserves value).

    Inputs may be single length-``n`` vectors or arrays whose last axis
    indexes agents. Raises for ``n < 2`` (the even split is undefined)
    and for negative shares (those must be clipped away upstream).
    """
    r = np.asarray(rewards, dtype=float)
    s = np.asarray(shares, dtype=float)
    if r.shape != s.shape:
        raise ValueError(f"rewards shape {r.shape} != shares shape {s.shape}")
    n = r.shape[-1]
    if n < 2:
        raise ValueError(f"utility sharing needs at least 2 agents, got n={n}")
    if np.any(s < 0.0):
        raise ValueError("negative share encountered; samples must be clipped to >= 0")
    received = (s.sum(axis=-1, keepdims=True) - s) / (n - 1)
    return r - s + received


def clip_shares_to_reward(shares: np.ndarray, rewards: np.ndarray) -> np.ndarray:
    """Cap each share at the agent's realized reward for this joint action.

    Negative rewards clip the share all the way to zero: an agent cannot
    give away value it did not earn. Idempotent and shape-preserving;
    accepts the same vector-or-batch layouts as :func:`sharing_utility`.
    """
    s = np.asarray(shares, dtype=float)
    r = np.asarray(rewards, dtype=float)
    if s.shape != r.shape:
        raise ValueError(f"shares shape {s.shape} != rewards shape {r.shape}")
    return np.minimum(s, np.maximum(r, 0.0))
