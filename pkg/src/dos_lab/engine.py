"""Synchronized cross-entropy optimization over actions and shares.

Every agent keeps an independent diagonal Gaussian policy: sharers over
``(action, share)``, defectors over ``(action,)`` only. Each round all
agents draw a batch of samples, the draws are paired by sample index
into joint actions and shares, shares are capped at realized rewards,
utilities are computed, and every agent refits its policy toward its own
elite samples. Rounds are synchronous: updates in round ``t`` are
computed entirely from round-``t`` samples under round-``t`` policies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .domains import domain_rewards
from .game import clip_shares_to_reward, sharing_utility

SHARER = "sharer"
DEFECTOR = "defector"

# Column layout of a sharer's sample matrix; defectors only have ACTION.
ACTION, SHARE = 0, 1


@dataclass(frozen=True)
class Policy:
    """Diagonal Gaussian over an agent's decision variables.

    ``mu`` and ``sigma`` have one entry per dimension: ``[action]`` for
    defectors, ``[action, share]`` for sharers. ``sigma`` stays strictly
    positive; after every update it is floored at the configured minimum
    to preserve exploration.
    """

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=float))
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=float))
        if self.mu.shape != self.sigma.shape or self.mu.ndim != 1:
            raise ValueError("mu and sigma must be 1-D arrays of equal length")
        if np.any(self.sigma <= 0.0):
            raise ValueError("sigma must be strictly positive")

    @property
    def dim(self) -> int:
        return self.mu.shape[0]


@dataclass(frozen=True)
class CeConfig:
    """Hyperparameters of the cross-entropy round loop.

    Defaults are the reference experimental setup: 100 rounds of 100
    samples, standard-normal prior, keep the top quarter of samples,
    blend old and new policy statistics at rate 0.5, and never let a
    standard deviation drop below 0.2.
    """

    n_iter: int = 100
    n_sample: int = 100
    mu0: float = 0.0
    sigma0: float = 1.0
    sigma_min: float = 0.2
    psi: float = 0.25
    alpha: float = 0.5
    a_min: float = 0.1
    a_max: float = 4.0

    def __post_init__(self):
        if self.n_iter < 1:
            raise ValueError("n_iter must be >= 1")
        if self.n_sample < 1:
            raise ValueError("n_sample must be >= 1")
        if not self.sigma0 > 0.0:
            raise ValueError("sigma0 must be > 0")
        if not self.sigma_min > 0.0:
            raise ValueError("sigma_min must be > 0")
        if not 0.0 < self.psi <= 1.0:
            raise ValueError("psi must lie in (0, 1]")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if not self.a_min > 0.0:
            raise ValueError("a_min must be > 0")
        if not self.a_max > self.a_min:
            raise ValueError("a_max must exceed a_min")


@dataclass
class EvaluatedBatch:
    """One round's joint samples with rewards, utilities, and elite flags.

    All arrays are ``(n_sample, n)`` except ``elite_mask``, which is
    ``(n, n_sample)`` boolean with exactly the elite count set per agent.
    ``shares`` holds the reward-clipped values that were actually paid.
    """

    actions: np.ndarray
    shares: np.ndarray
    rewards: np.ndarray
    utilities: np.ndarray
    elite_mask: np.ndarray | None = None


@dataclass
class Population:
    """Agent lineup for one run: roles, the shared domain, and policies.

    Roles are canonical: the first ``k`` agents are sharers, the rest
    defectors. ``domain`` is a market parameter record (or a callable
    reward batch function for synthetic objectives).
    """

    n: int
    roles: tuple[str, ...]
    domain: object
    policies: list[Policy]

    def __post_init__(self):
        if len(self.roles) != self.n or len(self.policies) != self.n:
            raise ValueError("roles and policies must both have length n")
        for role, policy in zip(self.roles, self.policies):
            if policy.dim != (2 if role == SHARER else 1):
                raise ValueError(f"{role} policy has dimension {policy.dim}")


@dataclass
class RunTrace:
    """Per-round aggregates of one seeded run plus the executed outcome.

    ``global_utility[t]`` is the round-``t`` batch mean of summed
    utilities, ``mean_share[t]`` the batch mean of clipped shares over
    sharing agents (0 when there are none), and
    ``per_agent_mean_utility[t]`` the batch mean utility per agent.
    """

    global_utility: np.ndarray
    mean_share: np.ndarray
    per_agent_mean_utility: np.ndarray
    final_actions: np.ndarray
    final_shares: np.ndarray
    final_rewards: np.ndarray
    final_utilities: np.ndarray


class EvaluationError(RuntimeError):
    """A domain produced a non-finite reward during a round."""


def make_population(domain, n: int, n_sharers: int, cfg: CeConfig) -> Population:
    """Fresh population with ``n_sharers`` sharers at indices 0..k-1."""
    if n < 2:
        raise ValueError("a run needs at least 2 agents")
    if not 0 <= n_sharers <= n:
        raise ValueError(f"sharer count {n_sharers} outside [0, {n}]")
    roles = (SHARER,) * n_sharers + (DEFECTOR,) * (n - n_sharers)
    return Population(n=n, roles=roles, domain=domain, policies=[init_policy(r, cfg) for r in roles])


def init_policy(role: str, cfg: CeConfig) -> Policy:
    """Prior policy for a role; the sigma floor only applies to updates."""
    dim = 2 if role == SHARER else 1
    return Policy(mu=np.full(dim, cfg.mu0), sigma=np.full(dim, cfg.sigma0))


def sample_policy(policy: Policy, n_sample: int, cfg: CeConfig, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n_sample`` rows, clamping actions into the box and shares to >= 0.

    Returns an ``(n_sample, dim)`` matrix of the values as they will be
    broadcast and evaluated; the raw Gaussian draws are not kept.
    """
    rows = rng.normal(loc=policy.mu, scale=policy.sigma, size=(n_sample, policy.dim))
    rows[:, ACTION] = np.clip(rows[:, ACTION], cfg.a_min, cfg.a_max)
    if policy.dim > 1:
        rows[:, SHARE] = np.maximum(rows[:, SHARE], 0.0)
    return rows


def build_joint(samples: Sequence[np.ndarray], roles: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    """Pair every agent's k-th sample into the k-th joint action and share.

    Defector columns of the share matrix are identically zero. Raises if
    any agent contributed a different number of rows than the others.
    """
    n = len(samples)
    if n != len(roles):
        raise ValueError("one sample matrix per role is required")
    n_rows = samples[0].shape[0]
    for i, rows in enumerate(samples):
        if rows.shape[0] != n_rows:
            raise ValueError(f"agent {i} contributed {rows.shape[0]} samples, expected {n_rows}")
    actions = np.column_stack([rows[:, ACTION] for rows in samples])
    shares = np.zeros((n_rows, n))
    for i, (rows, role) in enumerate(zip(samples, roles)):
        if role == SHARER:
            shares[:, i] = rows[:, SHARE]
    return actions, shares


def evaluate_batch(actions: np.ndarray, shares: np.ndarray, domain) -> EvaluatedBatch:
    """Score joint samples: domain rewards, share clipping, then utilities."""
    rewards = domain_rewards(domain, actions)
    finite = np.isfinite(rewards)
    if not finite.all():
        bad = int(np.argwhere(~finite)[0][0])
        raise EvaluationError(f"non-finite reward for joint sample {bad}: actions={actions[bad]}")
    clipped = clip_shares_to_reward(shares, rewards)
    return EvaluatedBatch(actions=actions, shares=clipped, rewards=rewards,
                          utilities=sharing_utility(rewards, clipped))


def elite_count(psi: float, n_sample: int) -> int:
    """Number of samples kept per round: at least one, at most all."""
    return max(1, round(psi * n_sample))


def select_elite(utilities: np.ndarray, psi: float) -> np.ndarray:
    """Indices of the highest-utility samples, ties won by lower index.

    Returns a sorted index array of length ``elite_count(psi, len(u))``.
    """
    u = np.asarray(utilities, dtype=float)
    order = np.argsort(-u, kind="stable")
    return np.sort(order[: elite_count(psi, u.shape[0])])


def update_policy(policy: Policy, elite_rows: np.ndarray, cfg: CeConfig) -> Policy:
    """Blend the policy toward the elite statistics, flooring sigma.

    ``elite_rows`` holds the agent's own columns of its elite samples,
    post-clipping. The new center is the elite mean, the new spread the
    elite population standard deviation; both are mixed in at rate
    ``alpha`` and the result's sigma is floored at ``sigma_min``.
    """
    rows = np.asarray(elite_rows, dtype=float)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise ValueError("elite_rows must be a non-empty (k, dim) matrix")
    if rows.shape[1] != policy.dim:
        raise ValueError(f"elite rows have {rows.shape[1]} columns, policy has {policy.dim}")
    mu_new = rows.mean(axis=0)
    sigma_new = rows.std(axis=0)
    mu = (1.0 - cfg.alpha) * policy.mu + cfg.alpha * mu_new
    sigma = np.maximum((1.0 - cfg.alpha) * policy.sigma + cfg.alpha * sigma_new, cfg.sigma_min)
    return Policy(mu=mu, sigma=sigma)


def own_columns(batch: EvaluatedBatch, agent: int, role: str) -> np.ndarray:
    """Agent's evaluated decision variables, one row per joint sample."""
    if role == SHARER:
        return np.column_stack([batch.actions[:, agent], batch.shares[:, agent]])
    return batch.actions[:, agent : agent + 1]


def spawn_agent_rngs(master_seed: int, run_index: int, n: int) -> list[np.random.Generator]:
    """Independent per-agent streams keyed by (seed, run, agent).

    Keying each stream by its agent index means adding or removing
    agents never perturbs the draws of the remaining ones.
    """
    return [
        np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(run_index, i)))
        for i in range(n)
    ]


def domain_rng(master_seed: int, run_index: int) -> np.random.Generator:
    """Stream for sampling one run's domain parameters."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(run_index,)))


IterationHook = Callable[[int, EvaluatedBatch, list[Policy]], None]


def run_cedos(
    pop: Population,
    cfg: CeConfig,
    agent_rngs: Sequence[np.random.Generator],
    on_iteration: IterationHook | None = None,
) -> tuple[RunTrace, list[Policy]]:
    """Run the full synchronized loop and execute the converged policies.

    After ``cfg.n_iter`` rounds each agent draws one final action (and
    share), the joint outcome is evaluated once, and the executed
    vectors land in the returned trace. ``on_iteration(t, batch,
    policies)`` is invoked after each round's update with the elite mask
    filled in and the post-update policies; the input population is not
    mutated. Returns the trace and the final policies.
    """
    n = pop.n
    if len(agent_rngs) != n:
        raise ValueError(f"{len(agent_rngs)} rng streams for {n} agents")
    policies = list(pop.policies)
    sharer_cols = [i for i, role in enumerate(pop.roles) if role == SHARER]

    global_utility = np.empty(cfg.n_iter)
    mean_share = np.empty(cfg.n_iter)
    per_agent_mean = np.empty((cfg.n_iter, n))

    for t in range(cfg.n_iter):
        samples = [sample_policy(policies[i], cfg.n_sample, cfg, agent_rngs[i]) for i in range(n)]
        actions, shares = build_joint(samples, pop.roles)
        try:
            batch = evaluate_batch(actions, shares, pop.domain)
        except EvaluationError as err:
            raise EvaluationError(f"iteration {t}: {err}") from err

        elite_mask = np.zeros((n, cfg.n_sample), dtype=bool)
        updated = []
        for i in range(n):
            elite = select_elite(batch.utilities[:, i], cfg.psi)
            elite_mask[i, elite] = True
            updated.append(update_policy(policies[i], own_columns(batch, i, pop.roles[i])[elite], cfg))
        batch.elite_mask = elite_mask
        policies = updated

        global_utility[t] = batch.utilities.sum(axis=1).mean()
        mean_share[t] = batch.shares[:, sharer_cols].mean() if sharer_cols else 0.0
        per_agent_mean[t] = batch.utilities.mean(axis=0)
        if on_iteration is not None:
            on_iteration(t, batch, policies)

    final_samples = [sample_policy(policies[i], 1, cfg, agent_rngs[i]) for i in range(n)]
    final_actions, final_shares = build_joint(final_samples, pop.roles)
    final = evaluate_batch(final_actions, final_shares, pop.domain)

    trace = RunTrace(
        global_utility=global_utility,
        mean_share=mean_share,
        per_agent_mean_utility=per_agent_mean,
        final_actions=final.actions[0],
        final_shares=final.shares[0],
        final_rewards=final.rewards[0],
        final_utilities=final.utilities[0],
    )
    return trace, policies
