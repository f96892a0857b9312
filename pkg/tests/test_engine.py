"""Tests for policies, sampling, elite selection, updates, and the round loop."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from dos_lab.engine import (
    DEFECTOR,
    SHARER,
    CeConfig,
    EvaluationError,
    Policy,
    build_joint,
    elite_count,
    evaluate_batch,
    init_policy,
    make_population,
    run_cedos,
    sample_policy,
    select_elite,
    spawn_agent_rngs,
    update_policy,
)

DEFAULTS = CeConfig()


def brute_force_elite(utilities, psi):
    """Reference selection: full sort on (-utility, index), keep the head."""
    count = max(1, round(psi * len(utilities)))
    ranked = sorted(range(len(utilities)), key=lambda i: (-utilities[i], i))
    return sorted(ranked[:count])


def brute_force_update(mu, sigma, rows, alpha, sigma_min):
    """Reference update: plain-Python mean, population std, blend, floor."""
    new_mu, new_sigma = [], []
    for d in range(len(mu)):
        column = [row[d] for row in rows]
        mean = sum(column) / len(column)
        std = (sum((x - mean) ** 2 for x in column) / len(column)) ** 0.5
        new_mu.append((1 - alpha) * mu[d] + alpha * mean)
        new_sigma.append(max((1 - alpha) * sigma[d] + alpha * std, sigma_min))
    return new_mu, new_sigma


class TestConfigAndPolicy:
    def test_defaults(self):
        assert (DEFAULTS.n_iter, DEFAULTS.n_sample) == (100, 100)
        assert (DEFAULTS.mu0, DEFAULTS.sigma0, DEFAULTS.sigma_min) == (0.0, 1.0, 0.2)
        assert (DEFAULTS.psi, DEFAULTS.alpha) == (0.25, 0.5)
        assert (DEFAULTS.a_min, DEFAULTS.a_max) == (0.1, 4.0)

    @pytest.mark.parametrize("bad", [dict(psi=0.0), dict(psi=1.5), dict(alpha=0.0), dict(alpha=2.0),
                                     dict(sigma0=0.0), dict(sigma_min=-1.0), dict(n_iter=0),
                                     dict(n_sample=0), dict(a_min=0.0), dict(a_min=5.0)])
    def test_rejects_out_of_range(self, bad):
        with pytest.raises(ValueError):
            CeConfig(**bad)

    def test_policy_requires_positive_sigma(self):
        with pytest.raises(ValueError, match="positive"):
            Policy(mu=np.zeros(2), sigma=np.array([1.0, 0.0]))

    def test_init_sharer_and_defector(self):
        sharer = init_policy(SHARER, DEFAULTS)
        defector = init_policy(DEFECTOR, DEFAULTS)
        assert np.array_equal(sharer.mu, [0.0, 0.0]) and np.array_equal(sharer.sigma, [1.0, 1.0])
        assert np.array_equal(defector.mu, [0.0]) and np.array_equal(defector.sigma, [1.0])

    def test_prior_below_floor_left_alone(self):
        # the floor constrains updates, not the prior
        cfg = CeConfig(sigma0=0.05, sigma_min=0.2)
        policy = init_policy(DEFECTOR, cfg)
        assert policy.sigma[0] == 0.05
        updated = update_policy(policy, np.array([[1.0], [1.0]]), CeConfig(alpha=1.0))
        assert updated.sigma[0] == 0.2

    def test_make_population_layout(self):
        pop = make_population(lambda a: a, 5, 2, DEFAULTS)
        assert pop.roles == (SHARER, SHARER, DEFECTOR, DEFECTOR, DEFECTOR)
        assert [p.dim for p in pop.policies] == [2, 2, 1, 1, 1]
        with pytest.raises(ValueError, match="outside"):
            make_population(lambda a: a, 5, 6, DEFAULTS)
        with pytest.raises(ValueError, match="at least 2"):
            make_population(lambda a: a, 1, 0, DEFAULTS)


class TestSamplePolicy:
    def test_actions_saturate_at_box_ceiling(self):
        policy = Policy(mu=np.array([10.0, 0.0]), sigma=np.array([1.0, 1.0]))
        rows = sample_policy(policy, 100, DEFAULTS, np.random.default_rng(0))
        assert np.all(rows[:, 0] == 4.0)
        assert np.all(rows[:, 1] >= 0.0)

    def test_same_seed_same_draws(self):
        policy = init_policy(SHARER, DEFAULTS)
        first = sample_policy(policy, 64, DEFAULTS, np.random.default_rng(11))
        second = sample_policy(policy, 64, DEFAULTS, np.random.default_rng(11))
        assert np.array_equal(first, second)

    def test_sample_means_match_clipped_normal(self):
        # analytic mean of max(N(mu, s), 0) is mu*Phi(mu/s) + s*phi(mu/s)
        mu_share, s = 0.5, 0.2
        expected_share = mu_share * norm.cdf(mu_share / s) + s * norm.pdf(mu_share / s)
        assert expected_share >= 0.5
        policy = Policy(mu=np.array([2.0, mu_share]), sigma=np.array([s, s]))
        rows = sample_policy(policy, 10_000, DEFAULTS, np.random.default_rng(2))
        stderr = 3 * s / np.sqrt(10_000)
        assert abs(rows[:, 0].mean() - 2.0) < stderr
        assert abs(rows[:, 1].mean() - expected_share) < stderr

    @given(st.integers(0, 2**32 - 1), st.integers(1, 200))
    @settings(max_examples=25)
    def test_draws_respect_clamps(self, seed, n_sample):
        policy = init_policy(SHARER, DEFAULTS)
        rows = sample_policy(policy, n_sample, DEFAULTS, np.random.default_rng(seed))
        assert rows.shape == (n_sample, 2)
        assert np.all((rows[:, 0] >= 0.1) & (rows[:, 0] <= 4.0))
        assert np.all(rows[:, 1] >= 0.0)


class TestBuildJoint:
    def test_single_sample_pair(self):
        actions, shares = build_joint(
            [np.array([[1.5, 0.3]]), np.array([[2.5, 0.7]])], (SHARER, SHARER))
        assert np.array_equal(actions, [[1.5, 2.5]])
        assert np.array_equal(shares, [[0.3, 0.7]])

    def test_pairs_align_by_sample_index(self):
        a = np.array([[1.0, 0.1], [2.0, 0.2], [3.0, 0.3]])
        b = np.array([[4.0], [5.0], [6.0]])
        actions, shares = build_joint([a, b], (SHARER, DEFECTOR))
        assert np.array_equal(actions, [[1.0, 4.0], [2.0, 5.0], [3.0, 6.0]])
        assert np.array_equal(shares[:, 0], [0.1, 0.2, 0.3])

    def test_defector_column_is_zero(self):
        rows = [np.array([[1.0, 9.0]]), np.array([[1.0, 9.0]])]
        _, shares = build_joint(rows, (SHARER, DEFECTOR))
        assert shares[0, 1] == 0.0

    def test_row_count_mismatch_rejected(self):
        with pytest.raises(ValueError, match="agent 1"):
            build_joint([np.zeros((3, 1)), np.zeros((2, 1))], (DEFECTOR, DEFECTOR))


class TestEvaluateBatch:
    def test_zero_shares_leave_rewards(self):
        batch = evaluate_batch(np.array([[1.0, 1.0]]), np.zeros((1, 2)),
                               lambda a: np.full_like(a, 3.0))
        assert np.array_equal(batch.utilities, [[3.0, 3.0]])

    def test_coin_game_row(self):
        batch = evaluate_batch(np.array([[1.0, 1.0]]), np.array([[0.0, 1.0]]),
                               lambda a: np.array([[0.0, 2.0]]))
        assert np.array_equal(batch.utilities, [[1.0, 1.0]])

    def test_overshooting_shares_clipped_then_conserved(self):
        rng = np.random.default_rng(8)
        actions = rng.uniform(0.1, 4.0, size=(32, 5))
        shares = rng.uniform(0.0, 10.0, size=(32, 5))
        batch = evaluate_batch(actions, shares, lambda a: a / a.sum(axis=-1, keepdims=True) ** 2)
        assert np.all(batch.shares <= batch.rewards + 1e-15)
        assert np.allclose(batch.utilities.sum(axis=1), batch.rewards.sum(axis=1), atol=1e-9)

    def test_non_finite_reward_names_sample(self):
        def broken(actions):
            rewards = np.ones_like(actions)
            rewards[2, 0] = np.nan
            return rewards

        with pytest.raises(EvaluationError, match="sample 2"):
            evaluate_batch(np.ones((4, 2)), np.zeros((4, 2)), broken)


class TestSelectElite:
    def test_top_half(self):
        assert select_elite(np.array([3.0, 1.0, 2.0, 0.0]), 0.5).tolist() == [0, 2]

    def test_keep_everything(self):
        assert select_elite(np.array([5.0, -1.0, 2.0]), 1.0).tolist() == [0, 1, 2]

    def test_ties_break_toward_low_index(self):
        assert select_elite(np.array([7.0, 7.0, 7.0, 7.0]), 0.25).tolist() == [0]

    def test_count_floor_is_one(self):
        assert elite_count(0.01, 10) == 1
        assert elite_count(0.25, 100) == 25

    @given(st.lists(st.sampled_from([0.0, 1.0, 1.5, 2.0, -3.0, 7.25]), min_size=1, max_size=40),
           st.floats(0.01, 1.0))
    def test_matches_brute_force(self, utilities, psi):
        expected = brute_force_elite(utilities, psi)
        assert select_elite(np.array(utilities), psi).tolist() == expected

    @given(st.lists(st.floats(-50, 50, allow_nan=False), min_size=2, max_size=60), st.floats(0.05, 1.0))
    def test_elite_mean_dominates_batch_mean(self, utilities, psi):
        u = np.array(utilities)
        elite = select_elite(u, psi)
        assert u[elite].mean() >= u.mean() - 1e-12


class TestUpdatePolicy:
    def test_degenerate_elite_hits_floor(self):
        policy = Policy(mu=np.array([0.0, 0.0]), sigma=np.array([1.0, 1.0]))
        rows = np.tile([[3.0, 0.5]], (4, 1))
        updated = update_policy(policy, rows, CeConfig(alpha=1.0))
        assert np.array_equal(updated.mu, [3.0, 0.5])
        assert np.array_equal(updated.sigma, [0.2, 0.2])

    def test_mean_interpolation(self):
        policy = Policy(mu=np.array([0.0]), sigma=np.array([1.0]))
        updated = update_policy(policy, np.array([[2.0]] * 3), CeConfig(alpha=0.5))
        assert updated.mu[0] == pytest.approx(1.0)

    def test_hand_case_population_std(self):
        # elite {0, 2}: mean 1, population std 1; alpha 0.5 from (0, 1)
        policy = Policy(mu=np.array([0.0]), sigma=np.array([1.0]))
        updated = update_policy(policy, np.array([[0.0], [2.0]]), CeConfig(alpha=0.5))
        assert updated.mu[0] == pytest.approx(0.5)
        assert updated.sigma[0] == pytest.approx(1.0)

    def test_empty_elite_rejected(self):
        with pytest.raises(ValueError, match="non-empty"):
            update_policy(init_policy(DEFECTOR, DEFAULTS), np.empty((0, 1)), DEFAULTS)

    @given(st.lists(st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=2),
                    min_size=1, max_size=30),
           st.floats(0.05, 1.0), st.floats(0.05, 1.0))
    def test_matches_brute_force_and_floor(self, rows, alpha, sigma_min):
        cfg = CeConfig(alpha=alpha, sigma_min=sigma_min)
        policy = Policy(mu=np.array([0.3, -0.7]), sigma=np.array([1.1, 0.4]))
        updated = update_policy(policy, np.array(rows), cfg)
        mu_ref, sigma_ref = brute_force_update(policy.mu, policy.sigma, rows, alpha, sigma_min)
        assert np.allclose(updated.mu, mu_ref, atol=1e-12)
        assert np.allclose(updated.sigma, sigma_ref, atol=1e-12)
        assert np.all(updated.sigma >= sigma_min)


def quadratic(actions):
    return -((actions - 2.0) ** 2)


class TestRunCedos:
    def test_round_invariants_via_hook(self):
        cfg = CeConfig(n_iter=15, n_sample=40)
        pop = make_population(lambda a: a / a.sum(axis=-1, keepdims=True) ** 2, 4, 2, cfg)
        seen = []

        def check(t, batch, policies):
            assert np.allclose(batch.utilities.sum(axis=1), batch.rewards.sum(axis=1), atol=1e-9)
            assert np.all(batch.shares[:, 2:] == 0.0)
            assert batch.elite_mask.sum(axis=1).tolist() == [10, 10, 10, 10]
            for policy in policies:
                assert np.all(policy.sigma >= cfg.sigma_min)
            seen.append(batch.rewards.sum(axis=1).mean())

        trace, _ = run_cedos(pop, cfg, spawn_agent_rngs(1, 0, 4), on_iteration=check)
        assert len(seen) == cfg.n_iter
        # recorded global utility must equal the batch-mean total reward
        assert np.allclose(trace.global_utility, seen, atol=1e-9)

    def test_identical_seeds_identical_traces(self):
        cfg = CeConfig(n_iter=10, n_sample=30)
        results = []
        for _ in range(2):
            pop = make_population(quadratic, 3, 1, cfg)
            trace, policies = run_cedos(pop, cfg, spawn_agent_rngs(42, 0, 3))
            results.append((trace, policies))
        first, second = results
        assert np.array_equal(first[0].global_utility, second[0].global_utility)
        assert np.array_equal(first[0].mean_share, second[0].mean_share)
        assert np.array_equal(first[0].per_agent_mean_utility, second[0].per_agent_mean_utility)
        assert np.array_equal(first[0].final_utilities, second[0].final_utilities)
        for p, q in zip(first[1], second[1]):
            assert np.array_equal(p.mu, q.mu) and np.array_equal(p.sigma, q.sigma)

    def test_input_population_not_mutated(self):
        cfg = CeConfig(n_iter=3, n_sample=10)
        pop = make_population(quadratic, 2, 1, cfg)
        before = [(p.mu.copy(), p.sigma.copy()) for p in pop.policies]
        run_cedos(pop, cfg, spawn_agent_rngs(0, 0, 2))
        for policy, (mu, sigma) in zip(pop.policies, before):
            assert np.array_equal(policy.mu, mu) and np.array_equal(policy.sigma, sigma)

    def test_all_sharers_mean_share_positive_all_defectors_zero(self):
        cfg = CeConfig(n_iter=5, n_sample=20)
        sharers = make_population(quadratic, 3, 3, cfg)
        trace, _ = run_cedos(sharers, cfg, spawn_agent_rngs(3, 0, 3))
        assert np.all(trace.mean_share >= 0.0)
        defectors = make_population(quadratic, 3, 0, cfg)
        trace, _ = run_cedos(defectors, cfg, spawn_agent_rngs(3, 0, 3))
        assert np.all(trace.mean_share == 0.0)
        assert np.all(trace.final_shares == 0.0)

    def test_evaluation_error_carries_iteration(self):
        def explodes(actions):
            return np.full_like(actions, np.inf)

        pop = make_population(explodes, 2, 0, CeConfig(n_iter=2, n_sample=5))
        with pytest.raises(EvaluationError, match="iteration 0"):
            run_cedos(pop, CeConfig(n_iter=2, n_sample=5), spawn_agent_rngs(0, 0, 2))

    def test_final_execution_within_bounds(self):
        cfg = CeConfig(n_iter=8, n_sample=25)
        pop = make_population(lambda a: a / a.sum(axis=-1, keepdims=True) ** 2, 3, 2, cfg)
        trace, _ = run_cedos(pop, cfg, spawn_agent_rngs(7, 0, 3))
        assert np.all((trace.final_actions >= cfg.a_min) & (trace.final_actions <= cfg.a_max))
        assert np.all(trace.final_shares >= 0.0)
        assert np.all(trace.final_shares <= np.maximum(trace.final_rewards, 0.0))
        assert abs(trace.final_utilities.sum() - trace.final_rewards.sum()) < 1e-9


class TestRngStreams:
    def test_agent_streams_stable_under_population_growth(self):
        small = spawn_agent_rngs(99, 0, 3)
        large = spawn_agent_rngs(99, 0, 6)
        for a, b in zip(small, large):
            assert np.array_equal(a.standard_normal(16), b.standard_normal(16))

    def test_runs_get_distinct_streams(self):
        first = spawn_agent_rngs(99, 0, 1)[0].standard_normal(8)
        second = spawn_agent_rngs(99, 1, 1)[0].standard_normal(8)
        assert not np.array_equal(first, second)
