import numpy as np
import pytest

from landmarkrl.nets import numerical_gradients
from landmarkrl.policies import (
    NonFiniteTarget,
    SoftQPolicy,
    StudentPolicy,
    Uvfa,
    make_action_set,
    pseudo_discount,
    soft_value,
    softmax,
)


class TestActionSet:
    def test_count_and_noop(self):
        acts = make_action_set(1.0)
        assert acts.shape == (17, 2)
        assert np.array_equal(acts[0], [0.0, 0.0])

    def test_magnitudes(self):
        acts = make_action_set(2.0)
        mags = np.linalg.norm(acts[1:], axis=1)
        assert np.allclose(np.sort(np.unique(np.round(mags, 9))), [1.0, 2.0])

    def test_direction_coverage(self):
        acts = make_action_set(1.0)
        angles = np.arctan2(acts[1:9, 1], acts[1:9, 0])
        assert np.allclose(np.sort(angles % (2 * np.pi)), np.arange(8) * np.pi / 4)


class TestPseudoDiscount:
    def test_zero_iff_within_tolerance(self):
        goals = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]])
        latents = np.array([[0.05, 0.0], [0.5, 0.0], [1.0, 1.0]])
        out = pseudo_discount(goals, latents, reach_tol=0.1, gamma=0.9)
        assert np.array_equal(out, [0.0, 0.9, 0.0])

    def test_values_only_zero_or_gamma(self):
        rng = np.random.default_rng(0)
        out = pseudo_discount(
            rng.standard_normal((100, 2)), rng.standard_normal((100, 2)), 0.3, 0.95
        )
        assert set(np.unique(out)).issubset({0.0, 0.95})


class TestActDistribution:
    def make_policy(self, n_actions=2, seed=0, **kw):
        return SoftQPolicy(2, 1, n_actions, hidden=(8,), rng=np.random.default_rng(seed), **kw)

    def test_softmax_direct_two_actions(self):
        probs = softmax(np.array([0.0, np.log(3.0)]), temperature=1.0)
        assert np.allclose(probs, [0.25, 0.75])

    def test_large_temperature_near_uniform(self):
        q = np.random.default_rng(1).uniform(-5, 5, size=17)
        probs = softmax(q, temperature=1e3)
        uniform = np.full(17, 1 / 17)
        kl = np.sum(probs * np.log(probs / uniform))
        assert kl < 1e-3

    def test_eval_mode_deterministic_argmax(self):
        pol = self.make_policy(n_actions=5, seed=3)
        feats = np.array([0.3, -0.2])
        goal = np.array([0.1])
        a = pol.act(feats, goal, None, explore=False)
        b = pol.act(feats, goal, None, explore=False)
        assert a == b
        q = pol.q_values(feats[None, :], goal[None, :])[0]
        assert a == int(np.argmax(q))

    def test_explore_sampling_matches_softmax_frequencies(self):
        pol = self.make_policy(n_actions=3, seed=5, temperature=0.5)
        feats, goal = np.zeros(2), np.zeros(1)
        q = pol.q_values(feats[None, :], goal[None, :])[0]
        expected = softmax(q, 0.5)
        rng = np.random.default_rng(9)
        draws = np.array([pol.act(feats, goal, rng, explore=True) for _ in range(4000)])
        freq = np.bincount(draws, minlength=3) / 4000
        assert np.allclose(freq, expected, atol=0.03)


class TestSoftValue:
    def test_matches_baselined_logsumexp_definition(self):
        rng = np.random.default_rng(2)
        q = rng.standard_normal((4, 6))
        alpha = 0.3
        direct = alpha * (np.log(np.exp(q / alpha).sum(axis=1)) - np.log(6))
        assert np.allclose(soft_value(q, alpha), direct)

    def test_between_mean_and_max(self):
        q = np.array([[-3.0, -1.0, -2.0]])
        v = soft_value(q, 0.1)[0]
        assert q.mean() <= v <= q.max()

    def test_nonpositive_q_gives_nonpositive_value(self):
        rng = np.random.default_rng(3)
        q = -rng.uniform(0, 5, size=(20, 17))
        assert np.all(soft_value(q, 0.1) <= 0.0)

    def test_counts_override_for_padded_rows(self):
        q = np.array([[-1.0, -2.0, -np.inf]])
        padded = soft_value(q, 0.5, counts=np.array([2]))
        plain = soft_value(np.array([[-1.0, -2.0]]), 0.5)
        assert padded[0] == pytest.approx(plain[0], rel=1e-12)


def oracle_soft_value(q, alpha):
    # independent transcription of the entropy-baselined operator
    return alpha * (np.log(np.exp(q / alpha).sum(axis=-1)) - np.log(q.shape[-1]))


def chain_mdp(alpha, gamma):
    """3-state chain; action 0 stays, action 1 moves right; state 2 absorbing.

    Returns (transitions, oracle_q, oracle_v) where the oracle is plain
    soft value iteration on the same reward/discount structure.
    """
    n_states, n_actions = 3, 2
    nxt = np.array([[0, 1], [1, 2], [2, 2]])
    reward = np.zeros((n_states, n_actions))
    sigma = np.zeros((n_states, n_actions))
    for s in range(n_states):
        for a in range(n_actions):
            reward[s, a] = 0.0 if nxt[s, a] == 2 else -1.0
            sigma[s, a] = 0.0 if nxt[s, a] == 2 else gamma
    q = np.zeros((n_states, n_actions))
    for _ in range(500):
        v = oracle_soft_value(q, alpha)
        q = reward + sigma * v[nxt]
    return nxt, reward, sigma, q, oracle_soft_value(q, alpha)


class TestLowLevelUpdate:
    def test_target_is_reward_when_goal_reached(self):
        pol = SoftQPolicy(2, 2, 3, hidden=(8,), rng=np.random.default_rng(0))
        feats = np.zeros((1, 2))
        goals = np.zeros((1, 2))
        actions = np.array([1])
        rewards = np.array([-0.7])
        # discount 0 -> the regression target is exactly the reward.
        pol.td_update(feats, goals, actions, rewards, feats, goals, np.array([0.0]))
        for _ in range(3000):
            pol.td_update(feats, goals, actions, rewards, feats, goals, np.array([0.0]))
        q = pol.q_values(feats, goals)[0]
        assert q[1] == pytest.approx(-0.7, abs=1e-3)

    def test_converges_to_soft_value_iteration_oracle(self):
        alpha, gamma = 0.2, 0.9
        nxt, reward, sigma, oracle_q, oracle_v = chain_mdp(alpha, gamma)
        # One-hot states, constant goal, single linear layer: a table.
        pol = SoftQPolicy(
            3, 1, 2, hidden=(), lr=0.05, temperature=alpha, target_sync=1,
            rng=np.random.default_rng(1),
        )
        eye = np.eye(3)
        states, goals, acts, rews, nexts, sigmas = [], [], [], [], [], []
        for s in range(3):
            for a in range(2):
                states.append(eye[s])
                goals.append([0.0])
                acts.append(a)
                rews.append(reward[s, a])
                nexts.append(eye[nxt[s, a]])
                sigmas.append(sigma[s, a])
        batch = tuple(np.asarray(x) for x in (states, goals, acts, rews, nexts, sigmas))
        # Anneal the step size so Adam settles onto the fixed point exactly.
        for lr, iters in ((0.05, 3000), (5e-3, 3000), (5e-4, 3000), (5e-5, 2000)):
            pol.opt.lr = lr
            for _ in range(iters):
                pol.td_update(
                    batch[0], batch[1], batch[2], batch[3], batch[4], batch[1], batch[5]
                )
        learned_q = pol.q_values(eye, np.zeros((3, 1)))
        assert np.max(np.abs(learned_q - oracle_q)) < 1e-3
        learned_v = pol.soft_state_value(eye, np.zeros((3, 1)))
        assert np.max(np.abs(learned_v - oracle_v)) < 1e-3

    def test_self_loop_geometric_limit(self):
        # r = -1 every step, sigma = gamma = 0.9, tiny temperature: Q -> -10.
        alpha = 1e-3
        pol = SoftQPolicy(
            1, 1, 2, hidden=(), lr=0.1, temperature=alpha, target_sync=1,
            rng=np.random.default_rng(2),
        )
        s = np.ones((2, 1))
        g = np.zeros((2, 1))
        a = np.array([0, 1])
        r = np.array([-1.0, -1.0])
        sig = np.array([0.9, 0.9])
        for _ in range(5000):
            pol.td_update(s, g, a, r, s, g, sig)
        q = pol.q_values(np.ones((1, 1)), np.zeros((1, 1)))[0]
        assert np.allclose(q, -10.0, atol=0.05)

    def test_non_finite_target_rejected(self):
        pol = SoftQPolicy(2, 1, 2, hidden=(8,), rng=np.random.default_rng(3))
        with pytest.raises(NonFiniteTarget):
            pol.td_update(
                np.zeros((1, 2)), np.zeros((1, 1)), np.array([0]),
                np.array([np.nan]), np.zeros((1, 2)), np.zeros((1, 1)), np.array([0.9]),
            )

    def test_td_gradient_matches_finite_differences(self):
        pol = SoftQPolicy(2, 1, 3, hidden=(6,), rng=np.random.default_rng(4))
        rng = np.random.default_rng(5)
        feats = rng.standard_normal((5, 2))
        goals = rng.standard_normal((5, 1))
        actions = rng.integers(0, 3, size=5)
        targets = rng.standard_normal(5)
        x = np.concatenate([feats, goals], axis=1)

        def loss():
            q = pol.net.apply(x)
            return 0.5 * np.mean((q[np.arange(5), actions] - targets) ** 2)

        q, cache = pol.net.forward_cached(x)
        upstream = np.zeros_like(q)
        upstream[np.arange(5), actions] = (q[np.arange(5), actions] - targets) / 5
        analytic, _ = pol.net.backward_from(cache, upstream)
        numeric = numerical_gradients(loss, pol.net.params())
        for a_, n_ in zip(analytic, numeric):
            assert np.linalg.norm(a_ - n_) / max(np.linalg.norm(n_), 1e-12) < 1e-4


class TestUvfa:
    def test_regression_reaches_targets(self):
        v = Uvfa(2, 1, hidden=(16,), lr=1e-2, rng=np.random.default_rng(6))
        rng = np.random.default_rng(7)
        feats = rng.standard_normal((16, 2))
        goals = rng.standard_normal((16, 1))
        targets = -np.abs(rng.standard_normal(16))
        for _ in range(3000):
            v.regress(feats, goals, targets)
        assert np.max(np.abs(v.value(feats, goals) - targets)) < 5e-2

    def test_non_finite_targets_rejected(self):
        v = Uvfa(2, 1, hidden=(8,), rng=np.random.default_rng(8))
        with pytest.raises(NonFiniteTarget):
            v.regress(np.zeros((1, 2)), np.zeros((1, 1)), np.array([np.inf]))


class TestStudent:
    def test_bandit_prefers_better_candidate(self):
        # One decision per episode, two fixed candidates; candidate B pays -1,
        # candidate A pays -6. After training the argmax must match the
        # brute-force expected-return comparison.
        student = StudentPolicy(1, 2, hidden=(16,), lr=5e-3, temperature=0.5,
                                rng=np.random.default_rng(9))
        cand_a = np.array([1.0, 0.0])
        cand_b = np.array([0.0, 1.0])
        cands = np.stack([cand_a, cand_b])
        feats = np.zeros((2, 1))
        chosen = np.stack([cand_a, cand_b])
        rewards = np.array([-6.0, -1.0])
        nxt = [None, None]
        disc = np.array([0.0, 0.0])
        for _ in range(3000):
            student.td_update(feats, chosen, rewards, feats, nxt, disc)
        pick = student.choose(np.zeros(1), cands, None, explore=False)
        assert pick == 1

    def test_bootstraps_from_next_candidates(self):
        student = StudentPolicy(1, 1, hidden=(), lr=0.1, temperature=0.1,
                                target_sync=1, rng=np.random.default_rng(10))
        # Terminal decision at candidate [1]: reward 2. A predecessor decision
        # bootstraps from it with discount 0.5; fixed point ~ -1 + 0.5*V(next).
        feats = np.zeros((1, 1))
        term_chosen = np.ones((1, 1))
        for _ in range(2000):
            student.td_update(feats, term_chosen, np.array([2.0]), feats, [None], np.array([0.0]))
        v_term = student.scores(np.zeros(1), np.ones((1, 1)))[0]
        assert v_term == pytest.approx(2.0, abs=1e-2)
        for _ in range(4000):
            student.td_update(
                feats, np.zeros((1, 1)), np.array([-1.0]), feats,
                [np.ones((1, 1))], np.array([0.5]),
            )
        # The shared bias couples both scores; at the fixed point the
        # predecessor must equal -1 + 0.5 * the terminal score as it now is.
        v_pred = student.scores(np.zeros(1), np.zeros((1, 1)))[0]
        v_term_now = student.scores(np.zeros(1), np.ones((1, 1)))[0]
        assert v_pred == pytest.approx(-1.0 + 0.5 * v_term_now, abs=5e-2)
