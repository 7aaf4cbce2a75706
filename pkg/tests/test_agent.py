import math

import numpy as np
import pytest

from landmarkrl.agent import (
    Agent,
    Episode,
    EpisodeStore,
    MixSchedule,
    TransitionBatch,
    choose_policy,
    her_relabel,
    intrinsic_reward,
    update_p,
)
from landmarkrl.config import RunConfig
from landmarkrl.run import build_env


def desk_config(**over):
    base = dict(
        env="umaze",
        total_steps=2000,
        subgoal_interval=10,
        landmark_count=6,
        graph_sample_size=48,
        warmup_steps=100,
        repr_every_episodes=2,
        repr_steps=3,
        repr_batch=32,
        low_batch=32,
        student_batch=16,
        eval_episodes=2,
        episode_capacity=20,
    )
    base.update(over)
    cfg = RunConfig(**base)
    cfg.validate()
    return cfg


def make_agent(**over):
    cfg = desk_config(**over)
    return Agent(cfg, build_env(cfg), root_seed=cfg.seed)


class TestIntrinsicReward:
    def test_zero_at_goal(self):
        z = np.array([0.3, -0.7])
        assert intrinsic_reward(z, z) == 0.0

    def test_three_four_five(self):
        assert intrinsic_reward(np.array([0.0, 0.0]), np.array([3.0, 4.0])) == -5.0

    def test_translation_invariant(self):
        rng = np.random.default_rng(0)
        g, z, shift = (rng.standard_normal(2) for _ in range(3))
        assert intrinsic_reward(g, z) == pytest.approx(intrinsic_reward(g + shift, z + shift))

    def test_always_nonpositive(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            assert intrinsic_reward(rng.standard_normal(3), rng.standard_normal(3)) <= 0.0


class TestChoosePolicy:
    def test_p_one_always_teacher(self):
        for q in np.linspace(0, 1, 101):
            assert choose_policy(1.0, float(q)) == "teacher"

    def test_q_zero_always_teacher(self):
        for p in np.linspace(0.5, 1.0, 51):
            assert choose_policy(float(p), 0.0) == "teacher"

    def test_monte_carlo_frequency_at_half(self):
        rng = np.random.default_rng(2)
        draws = rng.uniform(size=100_000)
        freq = np.mean([choose_policy(0.5, float(q)) == "teacher" for q in draws])
        assert abs(freq - 0.75) < 0.01

    def test_boundary_inequality_is_inclusive(self):
        # 2q - 1 == p exactly -> teacher.
        assert choose_policy(0.5, 0.75) == "teacher"
        assert choose_policy(0.5, 0.7500001) == "student"

    def test_text_rule_uses_p_directly(self):
        assert choose_policy(0.6, 0.59, rule="text") == "teacher"
        assert choose_policy(0.6, 0.61, rule="text") == "student"

    def test_unknown_rule_rejected(self):
        with pytest.raises(ValueError):
            choose_policy(0.5, 0.5, rule="coin")


class TestUpdateP:
    def test_in_range_assignment(self):
        s = MixSchedule()
        assert update_p(s, 0.9) == 0.9

    def test_low_rate_floors_at_half(self):
        s = MixSchedule()
        assert update_p(s, 0.2) == 0.5

    def test_full_rate_caps_at_one(self):
        s = MixSchedule()
        assert update_p(s, 1.0) == 1.0
        assert update_p(s, 0.3) == 1.0  # never decreases

    def test_never_decreases(self):
        s = MixSchedule()
        rng = np.random.default_rng(3)
        last = s.p
        for _ in range(200):
            update_p(s, float(rng.uniform()))
            assert s.p >= last
            assert 0.5 <= s.p <= 1.0
            last = s.p

    def test_window_rate(self):
        s = MixSchedule()
        for ok in [True, True, False, True]:
            s.record(ok)
        assert s.recent_success_rate() == pytest.approx(0.75)
        assert MixSchedule().recent_success_rate() == 0.0


def segment_batch(k=5, d=2, state_dim=4, seed=0):
    rng = np.random.default_rng(seed)
    return TransitionBatch(
        states=rng.standard_normal((k, state_dim)),
        actions=rng.integers(0, 17, size=k),
        next_states=rng.standard_normal((k, state_dim)),
        goals=np.tile(rng.standard_normal(d), (k, 1)),
        rewards=-rng.uniform(0, 2, size=k),
    )


def toy_encode(states):
    return np.atleast_2d(states)[:, :2] * 0.5


class TestHerRelabel:
    def test_final_relabeled_reward_exactly_zero(self):
        seg = segment_batch()
        out = her_relabel(seg, toy_encode)
        assert out.rewards[-1] == 0.0

    def test_counts_one_relabel_per_transition(self):
        seg = segment_batch(k=7)
        out = her_relabel(seg, toy_encode)
        assert out.count == 14
        assert np.array_equal(out.states[:7], seg.states)
        assert np.array_equal(out.rewards[:7], seg.rewards)

    def test_relabeled_rewards_match_independent_recomputation(self):
        seg = segment_batch(k=6, seed=4)
        out = her_relabel(seg, toy_encode)
        new_goal = toy_encode(seg.next_states[-1][None, :])[0]
        for i in range(6):
            z = toy_encode(seg.next_states[i][None, :])[0]
            assert out.rewards[6 + i] == pytest.approx(intrinsic_reward(new_goal, z))
            assert np.array_equal(out.goals[6 + i], new_goal)

    def test_input_segment_not_mutated(self):
        seg = segment_batch(k=4, seed=5)
        snapshot = {
            "states": seg.states.copy(),
            "goals": seg.goals.copy(),
            "rewards": seg.rewards.copy(),
        }
        her_relabel(seg, toy_encode)
        assert np.array_equal(seg.states, snapshot["states"])
        assert np.array_equal(seg.goals, snapshot["goals"])
        assert np.array_equal(seg.rewards, snapshot["rewards"])


def tiny_episode(length, state_dim=4, d=2, seed=0, interval=5):
    rng = np.random.default_rng(seed)
    from landmarkrl.agent import Decision

    decisions = [
        Decision(t, rng.standard_normal(d), rng.standard_normal((3, d)), bool(t % 2))
        for t in range(0, length, interval)
    ]
    return Episode(
        states=rng.standard_normal((length + 1, state_dim)),
        actions=rng.integers(0, 17, size=length),
        env_rewards=-np.ones(length),
        intrinsic_rewards=-rng.uniform(size=length),
        goals=rng.standard_normal((length, d)),
        success=False,
        decisions=decisions,
    )


class TestEpisodeStore:
    def test_capacity_eviction_keeps_rings_consistent(self):
        store = EpisodeStore(3, max_len=10, state_dim=4, goal_dim=2)
        for i in range(7):
            store.append(tiny_episode(10, seed=i), interval=5)
        assert len(store) == 3
        assert store.total_states == 3 * 11
        assert store.total_transitions == 3 * 10
        kept = np.concatenate([ep.states for ep in store.episodes])
        rng = np.random.default_rng(0)
        sampled = store.sample_states(200, rng)
        for row in sampled:
            assert any(np.array_equal(row, s) for s in kept)

    def test_transition_sampling_fields_consistent(self):
        store = EpisodeStore(4, max_len=12, state_dim=4, goal_dim=2)
        eps = [tiny_episode(12, seed=i) for i in range(4)]
        for ep in eps:
            store.append(ep, interval=5)
        batch = store.sample_transitions(64, np.random.default_rng(1))
        all_states = np.concatenate([ep.states[:-1] for ep in eps])
        all_next = np.concatenate([ep.states[1:] for ep in eps])
        for s, ns in zip(batch["state"], batch["next_state"]):
            i = next(j for j in range(all_states.shape[0]) if np.array_equal(all_states[j], s))
            assert np.array_equal(all_next[i], ns)

    def test_seg_end_is_segment_final_state(self):
        store = EpisodeStore(2, max_len=12, state_dim=4, goal_dim=2)
        ep = tiny_episode(12, seed=9, interval=5)
        store.append(ep, interval=5)
        batch = store.sample_transitions(100, np.random.default_rng(2))
        for s, seg_end in zip(batch["state"], batch["seg_end"]):
            t = next(
                j for j in range(ep.states.shape[0] - 1) if np.array_equal(ep.states[j], s)
            )
            expected = ep.states[min((t // 5 + 1) * 5, 12)]
            assert np.array_equal(seg_end, expected)

    def test_decision_sampling_uniform_over_all(self):
        store = EpisodeStore(5, max_len=20, state_dim=4, goal_dim=2)
        for i in range(5):
            store.append(tiny_episode(20, seed=i), interval=5)
        assert store.total_decisions == 5 * 4
        picks = store.sample_decisions(500, np.random.default_rng(3))
        assert len(picks) == 500
        seen = {(id(ep), d) for ep, d in picks}
        assert len(seen) > 10


class TestRunEpisode:
    def test_interval_at_least_length_gives_single_subgoal(self):
        agent = make_agent(subgoal_interval=400, max_steps=30, total_steps=500)
        ep = agent.run_episode(seed=0, mode="train")
        assert len(ep.decisions) == 1
        assert np.all(ep.goals == ep.goals[0])

    def test_decision_count_is_ceil_t_over_c(self):
        agent = make_agent(max_steps=37, subgoal_interval=10, total_steps=500)
        ep = agent.run_episode(seed=1, mode="train")
        if not ep.success:
            assert len(ep.decisions) == math.ceil(37 / 10)

    def test_p_one_never_uses_student(self):
        agent = make_agent(total_steps=4000)
        agent.schedule.p = 1.0
        for i in range(4):
            ep = agent.run_episode(seed=i, mode="train")
            if i == 0:
                # The buffer is empty for the whole first episode; every
                # decision falls back to the goal representation.
                continue
            assert all(d.used_teacher for d in ep.decisions)

    def test_replayed_actions_reproduce_stored_trajectory(self):
        agent = make_agent(total_steps=3000)
        seeds = [11, 12, 13]
        eps = [agent.run_episode(seed=s, mode="train") for s in seeds]
        env = build_env(agent.cfg)
        for seed, ep in zip(seeds, eps):
            obs, _ = env.reset(seed=seed, mode="train")
            assert np.array_equal(obs.vector(), ep.states[0])
            for t in range(ep.length):
                r = env.step(agent.actions[ep.actions[t]])
                assert np.array_equal(r.observation.vector(), ep.states[t + 1])
                assert r.reward == ep.env_rewards[t]

    def test_intrinsic_rewards_match_recomputation(self):
        agent = make_agent(total_steps=1000)
        ep = agent.run_episode(seed=3, mode="train")
        for t in range(ep.length):
            z = agent.encode(ep.states[t + 1][None, :])[0]
            assert ep.intrinsic_rewards[t] == pytest.approx(
                intrinsic_reward(ep.goals[t], z)
            )
            assert ep.intrinsic_rewards[t] <= 0.0

    def test_segment_reward_sums_recorded_per_decision(self):
        agent = make_agent(total_steps=1000, subgoal_interval=10)
        ep = agent.run_episode(seed=5, mode="train")
        for i, d in enumerate(ep.decisions):
            end = min(d.t + 10, ep.length)
            assert d.reward_sum == pytest.approx(float(ep.env_rewards[d.t : end].sum()))

    def test_high_level_returns_bounded_below(self):
        agent = make_agent(total_steps=1000)
        ep = agent.run_episode(seed=6, mode="train")
        assert sum(d.reward_sum for d in ep.decisions) >= -agent._max_episode_len()

    def test_eval_mode_untouched_buffers_and_rngs(self):
        agent = make_agent(total_steps=2000)
        for i in range(3):
            agent.run_episode(seed=i, mode="train")
        before = {name: rng.bit_generator.state for name, rng in agent.rngs.items()}
        stored = len(agent.store)
        counts = agent.table.counts.copy()
        steps = agent.env_steps
        builds = agent.graph_builds
        agent.evaluate(3, seed=50)
        assert len(agent.store) == stored
        assert np.array_equal(agent.table.counts, counts)
        assert agent.env_steps == steps
        assert agent.graph_builds == builds
        after = {name: rng.bit_generator.state for name, rng in agent.rngs.items()}
        assert before == after

    def test_eval_repeats_identically(self):
        agent = make_agent(total_steps=2000)
        for i in range(3):
            agent.run_episode(seed=i, mode="train")
        a = agent.evaluate(3, seed=7)
        b = agent.evaluate(3, seed=7)
        assert a == b

    def test_ablation_flags_disable_teacher_and_graphs(self):
        agent = make_agent(use_graphs=False, use_teacher=False, total_steps=3000)
        for i in range(3):
            ep = agent.run_episode(seed=i, mode="train")
            assert not any(d.used_teacher for d in ep.decisions)
        assert agent.graph_builds == 0
        assert agent.last_graph is None

    def test_pseudo_discount_zero_iff_within_tolerance(self):
        agent = make_agent()
        from landmarkrl.policies import pseudo_discount

        rng = np.random.default_rng(8)
        goals = rng.standard_normal((50, 2))
        latents = goals + rng.standard_normal((50, 2)) * agent.delta_z
        out = pseudo_discount(goals, latents, agent.delta_z, agent.gamma)
        dist = np.linalg.norm(goals - latents, axis=1)
        assert np.array_equal(out == 0.0, dist <= agent.delta_z)


class TestScheduledMaintenance:
    def test_runs_on_cadence_and_ratchets_p(self):
        agent = make_agent(repr_every_episodes=2, total_steps=3000)
        ran = []
        for i in range(4):
            agent.run_episode(seed=i, mode="train")
            ran.append(agent.scheduled_maintenance())
        assert ran == [False, True, False, True]
        assert agent.schedule.p >= 0.5
        assert np.isfinite(agent.last_repr_stats["contrastive"])

    def test_snapshot_refreshed_on_event(self):
        # The first event's gradient steps move the encoder; the second
        # event's snapshot must then pick up the moved parameters.
        agent = make_agent(repr_every_episodes=1, repr_steps=3, total_steps=3000)
        agent.run_episode(seed=0, mode="train")
        agent.scheduled_maintenance()
        before = [p.copy() for p in agent.repr.old_net.params()]
        agent.run_episode(seed=1, mode="train")
        agent.scheduled_maintenance()
        after = agent.repr.old_net.params()
        assert any(not np.array_equal(b, a) for b, a in zip(before, after))
        # Right after the event the snapshot equals the pre-step encoder, so
        # their difference is exactly the event's own gradient movement.
