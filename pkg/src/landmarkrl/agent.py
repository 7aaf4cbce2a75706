"""Bi-level goal-conditioned agent: teacher/student subgoal selection,
low-level soft-Q control with intrinsic rewards, hindsight relabeling,
and replay management.

Every `c` steps a subgoal latent is chosen, either by the graph strategy
(teacher) or by the learned student head; the chance of the teacher is
(1+p)/2 where p tracks the recent train success rate. The low level is
rewarded with the negative latent distance to the subgoal in force.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import landmarks as lm
from .mazes import Maze, Observation
from .nets import Adam
from .policies import SoftQPolicy, StudentPolicy, Uvfa, make_action_set, pseudo_discount
from .representation import ReprFn, TripletBuffer, update_representation
from .seeding import generator_state, restore_generator, substream

log = logging.getLogger(__name__)


def intrinsic_reward(goal: np.ndarray, latent: np.ndarray) -> float:
    """Negative L2 distance between the subgoal and the achieved latent."""
    return -float(np.linalg.norm(np.asarray(goal) - np.asarray(latent)))


def choose_policy(p: float, q: float, rule: str = "pseudocode") -> str:
    """Teacher/student pick from one uniform draw q in [0, 1]."""
    if rule == "pseudocode":
        return "teacher" if 2.0 * q - 1.0 <= p else "student"
    if rule == "text":
        return "teacher" if q <= p else "student"
    raise ValueError(f"unknown mixing rule {rule!r}")


@dataclass
class MixSchedule:
    p: float = 0.5
    window: deque = field(default_factory=lambda: deque(maxlen=100))
    cadence: int = 100

    def record(self, success: bool) -> None:
        self.window.append(bool(success))

    def recent_success_rate(self) -> float:
        if not self.window:
            return 0.0
        return float(np.mean(self.window))


def update_p(schedule: MixSchedule, recent_success_rate: float) -> float:
    """Ratchet p toward the success rate; never below 0.5, never decreasing."""
    schedule.p = min(1.0, max(schedule.p, float(recent_success_rate), 0.5))
    return schedule.p


# -- episode storage ---------------------------------------------------------


@dataclass
class Decision:
    t: int
    latent: np.ndarray  # chosen subgoal (d,)
    candidates: np.ndarray  # (C, d) scored candidates at this decision
    used_teacher: bool
    reward_sum: float = 0.0  # summed environmental reward over the segment


@dataclass
class Episode:
    states: np.ndarray  # (L+1, S) raw observation vectors
    actions: np.ndarray  # (L,) action indices
    env_rewards: np.ndarray  # (L,)
    intrinsic_rewards: np.ndarray  # (L,) collected against the goal in force
    goals: np.ndarray  # (L, d) subgoal in force at each step
    success: bool
    decisions: list[Decision]

    @property
    def length(self) -> int:
        return self.actions.shape[0]


@dataclass
class TransitionBatch:
    states: np.ndarray
    actions: np.ndarray
    next_states: np.ndarray
    goals: np.ndarray
    rewards: np.ndarray

    @property
    def count(self) -> int:
        return self.states.shape[0]


def her_relabel(segment: TransitionBatch, encode) -> TransitionBatch:
    """Original transitions plus a copy re-targeted at the achieved latent.

    The relabeled goal is the encoding of the segment's final state and
    the relabeled intrinsic rewards are recomputed against it; the final
    relabeled transition therefore earns exactly 0.
    """
    k = segment.count
    end_latent = encode(segment.next_states[-1][None, :])[0]
    next_latents = encode(segment.next_states)
    new_rewards = np.asarray(
        [intrinsic_reward(end_latent, z) for z in next_latents]
    )
    return TransitionBatch(
        states=np.concatenate([segment.states, segment.states]),
        actions=np.concatenate([segment.actions, segment.actions]),
        next_states=np.concatenate([segment.next_states, segment.next_states]),
        goals=np.concatenate([segment.goals, np.tile(end_latent, (k, 1))]),
        rewards=np.concatenate([segment.rewards, new_rewards]),
    )


class _Ring:
    """Fixed-capacity row store with FIFO span eviction."""

    def __init__(self, capacity: int, columns: dict[str, int]):
        self.capacity = int(capacity)
        self.arrays = {
            name: np.zeros((self.capacity, dim)) if dim > 1 else np.zeros(self.capacity)
            for name, dim in columns.items()
        }
        self.head = 0
        self.used = 0
        self._tail = 0
        self.spans: deque[int] = deque()

    def append(self, rows: dict[str, np.ndarray]) -> None:
        n = next(iter(rows.values())).shape[0]
        if n > self.capacity:
            raise ValueError("episode larger than ring capacity")
        while self.used + n > self.capacity:
            self.drop_oldest()
        idx = (self._tail + np.arange(n)) % self.capacity
        for name, data in rows.items():
            self.arrays[name][idx] = data
        self._tail = (self._tail + n) % self.capacity
        self.used += n
        self.spans.append(n)

    def drop_oldest(self) -> None:
        dropped = self.spans.popleft()
        self.head = (self.head + dropped) % self.capacity
        self.used -= dropped

    def sample_rows(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.used == 0:
            raise ValueError("ring is empty")
        offs = rng.integers(0, self.used, size=n)
        return (self.head + offs) % self.capacity

    def take(self, name: str, rows: np.ndarray) -> np.ndarray:
        return self.arrays[name][rows]


class EpisodeStore:
    """Bounded FIFO of full episodes plus flat rings for fast sampling."""

    def __init__(self, capacity_episodes: int, max_len: int, state_dim: int, goal_dim: int):
        self.capacity = int(capacity_episodes)
        self.max_len = int(max_len)
        self.episodes: deque[Episode] = deque(maxlen=self.capacity)
        rows = self.capacity * (max_len + 1)
        self._trans = _Ring(
            self.capacity * max_len,
            {
                "state": state_dim,
                "action": 1,
                "next_state": state_dim,
                "goal": goal_dim,
                "seg_end": state_dim,
                "env_reward": 1,
            },
        )
        self._states = _Ring(rows, {"state": state_dim})
        self._warned_small = False

    def __len__(self) -> int:
        return len(self.episodes)

    @property
    def total_states(self) -> int:
        return self._states.used

    @property
    def total_transitions(self) -> int:
        return self._trans.used

    @property
    def total_decisions(self) -> int:
        return sum(len(ep.decisions) for ep in self.episodes)

    def append(self, ep: Episode, interval: int) -> None:
        if len(self.episodes) == self.capacity:
            self._trans.drop_oldest()
            self._states.drop_oldest()
        self.episodes.append(ep)
        length = ep.length
        seg_end_idx = np.minimum(
            (np.arange(length) // interval + 1) * interval, length
        )
        self._trans.append(
            {
                "state": ep.states[:-1],
                "action": ep.actions.astype(np.float64),
                "next_state": ep.states[1:],
                "goal": ep.goals,
                "seg_end": ep.states[seg_end_idx],
                "env_reward": ep.env_rewards,
            }
        )
        self._states.append({"state": ep.states})

    def sample_states(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.total_states < n and not self._warned_small:
            log.warning(
                "sampling %d states from a buffer holding %d (with replacement)",
                n,
                self.total_states,
            )
            self._warned_small = True
        rows = self._states.sample_rows(n, rng)
        return self._states.take("state", rows)

    def sample_transitions(self, n: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
        rows = self._trans.sample_rows(n, rng)
        out = {name: self._trans.take(name, rows) for name in self._trans.arrays}
        out["action"] = out["action"].astype(np.int64)
        return out

    def sample_decisions(self, n: int, rng: np.random.Generator):
        counts = np.asarray([len(ep.decisions) for ep in self.episodes], dtype=np.int64)
        total = int(counts.sum())
        if total == 0:
            return []
        cums = np.cumsum(counts)
        flat = rng.integers(0, total, size=n)
        ep_idx = np.searchsorted(cums, flat, side="right")
        out = []
        for f, e in zip(flat, ep_idx):
            d = int(f - (cums[e] - counts[e]))
            out.append((self.episodes[e], d))
        return out


# -- the agent ----------------------------------------------------------------


class Agent:
    """Owns all learners, buffers, schedules and RNG substreams for a run."""

    def __init__(self, cfg, env: Maze, root_seed: int):
        self.cfg = cfg
        self.env = env
        spec = env.spec
        self.state_dim = env.observation_dim
        self.goal_dim = cfg.latent_dim
        self.interval = cfg.subgoal_interval
        self.gamma = cfg.discount
        self.actions = make_action_set(spec.max_action)
        self._extent = spec.extent
        self._max_action = spec.max_action

        hidden = cfg.hidden_dims()
        self.repr = ReprFn(self.state_dim, cfg.latent_dim, hidden, rng=substream(root_seed, "init-repr"))
        self.repr_opt = Adam(self.repr.net.params(), lr=cfg.lr_repr)
        self.policy = SoftQPolicy(
            self.state_dim,
            cfg.latent_dim,
            self.actions.shape[0],
            hidden=hidden,
            lr=cfg.lr_q,
            temperature=cfg.temperature,
            target_sync=cfg.target_sync,
            rng=substream(root_seed, "init-q"),
        )
        self.uvfa = Uvfa(
            self.state_dim, cfg.latent_dim, hidden=hidden, lr=cfg.lr_uvfa,
            rng=substream(root_seed, "init-uvfa"),
        )
        self.student = StudentPolicy(
            self.state_dim,
            cfg.latent_dim,
            hidden=hidden,
            lr=cfg.lr_student,
            temperature=cfg.student_temperature,
            target_sync=cfg.target_sync,
            rng=substream(root_seed, "init-student"),
        )
        self.table = lm.CountTable(cfg.latent_dim, cfg.hash_bits, substream(root_seed, "hash-projection"))
        self.store = EpisodeStore(
            cfg.episode_capacity, self._max_episode_len(), self.state_dim, cfg.latent_dim
        )
        self.triplets = TripletBuffer(cfg.triplet_capacity)
        self.schedule = MixSchedule(cadence=cfg.repr_every_episodes)

        self.rngs = {
            name: substream(root_seed, name)
            for name in ("env", "mix", "action", "batch", "her", "graph", "student", "warmup")
        }

        self.env_steps = 0
        self.episode_count = 0
        self.graph_builds = 0
        self.delta_z = cfg.latent_goal_tolerance if cfg.latent_goal_tolerance > 0 else 0.1
        self._auto_delta_z = cfg.latent_goal_tolerance <= 0
        self.last_repr_stats = {"contrastive": float("nan"), "stability": float("nan")}
        self.last_graph: lm.LandmarkGraph | None = None

        # High-level bucket sequences under the current encoder, one row per
        # stored episode (novelty exact mode); refreshed on encoder updates.
        self._max_decisions = len(lm.highlevel_indices(self._max_episode_len() + 1, self.interval))
        self._key_rows = np.zeros((cfg.episode_capacity, self._max_decisions), dtype=np.int64)
        self._key_lens = np.zeros(cfg.episode_capacity, dtype=np.int64)
        self._key_count = 0

    def _max_episode_len(self) -> int:
        return self.cfg.max_steps if self.cfg.max_steps > 0 else self.env.spec.max_steps

    # -- featurization ------------------------------------------------------

    def featurize(self, raw_states: np.ndarray) -> np.ndarray:
        """Scale positions by the maze extent and velocities by max action."""
        arr = np.atleast_2d(np.asarray(raw_states, dtype=np.float64)).copy()
        arr[:, 0:2] /= self._extent
        arr[:, 2:4] /= self._max_action
        return arr

    def encode(self, raw_states: np.ndarray) -> np.ndarray:
        return self.repr.encode(self.featurize(raw_states))

    def value_fn(self, raw_states: np.ndarray, goal_latents: np.ndarray) -> np.ndarray:
        return self.uvfa.value(self.featurize(raw_states), goal_latents)

    # -- novelty cache -------------------------------------------------------

    def _episode_keys(self, ep: Episode) -> np.ndarray:
        idx = lm.highlevel_indices(ep.states.shape[0], self.interval)
        return self.table.keys(self.encode(ep.states[idx]))

    def _append_key_row(self, ep: Episode) -> None:
        slot = self._key_count % self.cfg.episode_capacity
        keys = self._episode_keys(ep)
        self._key_rows[slot, : keys.shape[0]] = keys
        self._key_lens[slot] = keys.shape[0]
        self._key_count += 1

    def refresh_key_cache(self) -> None:
        self._key_count = 0
        self._key_lens[:] = 0
        for ep in self.store.episodes:
            self._append_key_row(ep)

    def novelty_source(self):
        if self.cfg.novelty_mode == "incremental":
            return lm.IncrementalNovelty(self.table)
        active = min(self._key_count, self.cfg.episode_capacity)
        return lm.NoveltyIndex(
            self.table, self._key_rows[:active], self._key_lens[:active], self.gamma
        )

    # -- subgoal selection ----------------------------------------------------

    def _build_graph(
        self, current_state: np.ndarray, goal_state: np.ndarray, rng, record: bool = True
    ) -> lm.LandmarkGraph:
        graph = lm.build_graph(
            self.store,
            self.encode,
            self.value_fn,
            self.table,
            self.novelty_source(),
            landmark_count=self.cfg.landmark_count,
            sample_size=self.cfg.graph_sample_size,
            current_state=current_state,
            goal_state=goal_state,
            rng=rng,
            built_at=self.env_steps,
        )
        if record:
            self.graph_builds += 1
            self.last_graph = graph
            if self._auto_delta_z and graph.size >= 2:
                lat = graph.latents()
                diam = np.sqrt(((lat[:, None, :] - lat[None, :, :]) ** 2).sum(axis=2).max())
                if diam > 0:
                    self.delta_z = 0.1 * float(diam)
        return graph

    def _ablation_candidates(self, rng) -> np.ndarray:
        n = min(self.cfg.landmark_count + 2, max(self.store.total_states, 1))
        states = self.store.sample_states(n, rng)
        return self.encode(states)

    def _choose_subgoal(self, current_state, goal_state, explore: bool, rngs):
        """Returns (latent, candidates, used_teacher)."""
        cfg = self.cfg
        goal_latent = self.encode(goal_state[None, :])[0]
        if self.store.total_states == 0:
            return goal_latent, goal_latent[None, :], False
        if not cfg.use_graphs:
            cands = self._ablation_candidates(rngs["graph"])
            idx = self.student.choose(
                self.featurize(current_state[None, :])[0], cands, rngs["student"], explore
            )
            return cands[idx].copy(), cands, False
        graph = self._build_graph(current_state, goal_state, rngs["graph"], record=explore)
        use_teacher = False
        if cfg.use_teacher:
            if not explore:
                use_teacher = True
            else:
                q = float(rngs["mix"].uniform())
                use_teacher = choose_policy(self.schedule.p, q, cfg.teacher_rule) == "teacher"
        cand_idx = graph.candidate_indices()
        cands = graph.latents()[cand_idx]
        if use_teacher:
            node = lm.select_subgoal(graph)
            latent = graph.nodes[node].latent.copy()
        else:
            pick = self.student.choose(
                self.featurize(current_state[None, :])[0], cands, rngs["student"], explore
            )
            latent = cands[pick].copy()
        return latent, cands, use_teacher

    # -- learning updates -------------------------------------------------------

    def _low_level_update(self) -> None:
        cfg = self.cfg
        batch = self.store.sample_transitions(cfg.low_batch, self.rngs["batch"])
        goals = batch["goal"].copy()
        relabel = self.rngs["her"].uniform(size=goals.shape[0]) < cfg.her_fraction
        if relabel.any():
            goals[relabel] = self.encode(batch["seg_end"][relabel])
        z_next = self.encode(batch["next_state"])
        rewards = -np.linalg.norm(goals - z_next, axis=1)
        discounts = pseudo_discount(goals, z_next, self.delta_z, self.gamma)
        feats = self.featurize(batch["state"])
        next_feats = self.featurize(batch["next_state"])
        self.policy.td_update(
            feats, goals, batch["action"], rewards, next_feats, goals, discounts
        )
        v_targets = self.policy.soft_state_value(feats, goals)
        self.uvfa.regress(feats, goals, v_targets)

    def _student_update(self) -> None:
        cfg = self.cfg
        picks = self.store.sample_decisions(cfg.student_batch, self.rngs["batch"])
        if not picks:
            return
        feats, chosen, rewards, next_feats, next_cands, discounts = [], [], [], [], [], []
        gamma_c = self.gamma**self.interval
        for ep, di in picks:
            d = ep.decisions[di]
            feats.append(ep.states[d.t])
            chosen.append(d.latent)
            rewards.append(d.reward_sum)
            if di + 1 < len(ep.decisions):
                nxt = ep.decisions[di + 1]
                next_feats.append(ep.states[nxt.t])
                next_cands.append(nxt.candidates)
                discounts.append(gamma_c)
            else:
                next_feats.append(ep.states[-1])
                next_cands.append(None)
                discounts.append(0.0)
        self.student.td_update(
            self.featurize(np.stack(feats)),
            np.stack(chosen),
            np.asarray(rewards),
            self.featurize(np.stack(next_feats)),
            next_cands,
            np.asarray(discounts),
        )

    def finish_episode(self, ep: Episode) -> None:
        """Store the episode, update the count table, record the outcome."""
        self.store.append(ep, self.interval)
        self._append_key_row(ep)
        lm.record_episode(self.table, ep.states, self.encode, self.interval, self.gamma)
        self.schedule.record(ep.success)
        self.episode_count += 1

    def scheduled_maintenance(self) -> bool:
        """Representation + p update on the episode cadence; True if it ran."""
        cfg = self.cfg
        if self.episode_count == 0 or self.episode_count % cfg.repr_every_episodes != 0:
            return False
        self.repr.snapshot()
        stats = {"contrastive": [], "stability": []}
        for _ in range(cfg.repr_steps):
            out = update_representation(
                self.repr,
                self.repr_opt,
                list(self.store.episodes),
                self.triplets,
                offset=self.interval,
                scale=cfg.contrast_scale,
                power=cfg.contrast_power,
                eps=cfg.contrast_eps,
                stable_fraction=cfg.stable_fraction,
                batch_size=cfg.repr_batch,
                rng=self.rngs["batch"],
            )
            if not out["updated"]:
                break
            stats["contrastive"].append(out["contrastive"])
            stats["stability"].append(out["stability"])
        if stats["contrastive"]:
            self.last_repr_stats = {
                "contrastive": float(np.mean(stats["contrastive"])),
                "stability": float(np.mean(stats["stability"])),
            }
        self.refresh_key_cache()
        update_p(self.schedule, self.schedule.recent_success_rate())
        return True

    # -- rollouts ---------------------------------------------------------------

    def run_episode(self, seed: int, mode: str = "train") -> Episode:
        """One full episode; training mode explores, stores and learns."""
        train = mode == "train"
        env = self.env
        obs, goal_obs = env.reset(seed=seed, mode=mode)
        goal_state = goal_obs.vector()
        max_len = self._max_episode_len()
        # Evaluation draws from its own substreams so a mid-training eval
        # leaves the training trajectory untouched.
        rngs = self.rngs if train else {
            name: substream(seed, f"eval-{name}") for name in ("graph", "mix", "student")
        }

        states = [obs.vector()]
        actions: list[int] = []
        env_rewards: list[float] = []
        int_rewards: list[float] = []
        goals: list[np.ndarray] = []
        decisions: list[Decision] = []
        success = False

        goal_latent = None
        for t in range(max_len):
            if t % self.interval == 0:
                latent, cands, used_teacher = self._choose_subgoal(
                    states[-1], goal_state, explore=train, rngs=rngs
                )
                goal_latent = latent
                decisions.append(Decision(t, latent.copy(), cands, used_teacher))
                if train and self.env_steps > self.cfg.warmup_steps:
                    self._student_update()

            feats_row = self.featurize(states[-1][None, :])[0]
            if train and self.env_steps < self.cfg.warmup_steps:
                a_idx = int(self.rngs["warmup"].integers(self.actions.shape[0]))
            else:
                a_idx = self.policy.act(
                    feats_row, goal_latent, self.rngs["action"] if train else None, explore=train
                )
            result = env.step(self.actions[a_idx])
            next_vec = result.observation.vector()
            z_next = self.encode(next_vec[None, :])[0]

            states.append(next_vec)
            actions.append(a_idx)
            env_rewards.append(result.reward)
            int_rewards.append(intrinsic_reward(goal_latent, z_next))
            goals.append(goal_latent.copy())
            decisions[-1].reward_sum += result.reward
            if train:
                self.env_steps += 1
                if (
                    self.env_steps > self.cfg.warmup_steps
                    and self.store.total_transitions > 0
                    and self.env_steps % self.cfg.low_update_every == 0
                ):
                    self._low_level_update()
            if result.success:
                success = True
            if result.done:
                break

        ep = Episode(
            states=np.asarray(states),
            actions=np.asarray(actions, dtype=np.int64),
            env_rewards=np.asarray(env_rewards),
            intrinsic_rewards=np.asarray(int_rewards),
            goals=np.asarray(goals),
            success=success,
            decisions=decisions,
        )
        if train:
            self.finish_episode(ep)
        return ep

    def evaluate(self, episodes: int, seed: int) -> tuple[float, list[bool]]:
        """Deterministic rollouts from the hardest start; no learning."""
        results = []
        for i in range(episodes):
            ep = self.run_episode(seed=seed + i, mode="eval")
            results.append(bool(ep.success))
        rate = float(np.mean(results)) if results else 0.0
        return rate, results

    # -- serialization -------------------------------------------------------------

    def to_state(self) -> tuple[dict[str, np.ndarray], dict]:
        arrays: dict[str, np.ndarray] = {}
        arrays.update(self.repr.net.to_state("repr/"))
        arrays.update(self.repr.old_net.to_state("repr_old/"))
        arrays.update(self.policy.net.to_state("q/"))
        arrays.update(self.policy.target_net.to_state("q_target/"))
        arrays.update(self.uvfa.net.to_state("uvfa/"))
        arrays.update(self.student.net.to_state("student/"))
        arrays.update(self.student.target_net.to_state("student_target/"))
        arrays.update(self.repr_opt.to_state("opt_repr/"))
        arrays.update(self.policy.opt.to_state("opt_q/"))
        arrays.update(self.uvfa.opt.to_state("opt_uvfa/"))
        arrays.update(self.student.opt.to_state("opt_student/"))
        arrays.update(self.table.to_state("table/"))
        arrays.update(_episodes_to_arrays(list(self.store.episodes), "episodes/"))
        trip = self.triplets.to_arrays()
        if trip is not None:
            for k, v in trip.items():
                arrays[f"triplets/{k}"] = v
        if self.last_graph is not None:
            arrays.update(_graph_to_arrays(self.last_graph, "graph/"))
        meta = {
            "env_steps": self.env_steps,
            "episode_count": self.episode_count,
            "graph_builds": self.graph_builds,
            "delta_z": self.delta_z,
            "auto_delta_z": self._auto_delta_z,
            "schedule_p": self.schedule.p,
            "schedule_window": [bool(x) for x in self.schedule.window],
            "policy_updates": self.policy._updates,
            "student_updates": self.student._updates,
            "last_repr_stats": self.last_repr_stats,
            "rng": {name: generator_state(rng) for name, rng in self.rngs.items()},
        }
        return arrays, meta

    def load_state(self, arrays, meta: dict) -> None:
        self.repr.net.copy_from(type(self.repr.net).from_state(arrays, "repr/"))
        self.repr.old_net.copy_from(type(self.repr.net).from_state(arrays, "repr_old/"))
        self.policy.net.copy_from(type(self.policy.net).from_state(arrays, "q/"))
        self.policy.target_net.copy_from(type(self.policy.net).from_state(arrays, "q_target/"))
        self.uvfa.net.copy_from(type(self.uvfa.net).from_state(arrays, "uvfa/"))
        self.student.net.copy_from(type(self.student.net).from_state(arrays, "student/"))
        self.student.target_net.copy_from(
            type(self.student.net).from_state(arrays, "student_target/")
        )
        self.repr_opt.load_state(arrays, "opt_repr/")
        self.policy.opt.load_state(arrays, "opt_q/")
        self.uvfa.opt.load_state(arrays, "opt_uvfa/")
        self.student.opt.load_state(arrays, "opt_student/")
        self.table.load_state(arrays, "table/")
        episodes = _episodes_from_arrays(arrays, "episodes/")
        self.store = EpisodeStore(
            self.cfg.episode_capacity, self._max_episode_len(), self.state_dim, self.goal_dim
        )
        for ep in episodes:
            self.store.append(ep, self.interval)
        keys = [k for k in _array_keys(arrays) if k.startswith("triplets/")]
        if keys:
            trip = {k.split("/", 1)[1]: np.asarray(arrays[k]) for k in keys}
            self.triplets = TripletBuffer.from_arrays(self.cfg.triplet_capacity, trip)
        else:
            self.triplets = TripletBuffer(self.cfg.triplet_capacity)
        if any(k.startswith("graph/") for k in _array_keys(arrays)):
            self.last_graph = _graph_from_arrays(arrays, "graph/")
        self.env_steps = int(meta["env_steps"])
        self.episode_count = int(meta["episode_count"])
        self.graph_builds = int(meta["graph_builds"])
        self.delta_z = float(meta["delta_z"])
        self._auto_delta_z = bool(meta["auto_delta_z"])
        self.schedule.p = float(meta["schedule_p"])
        self.schedule.window = deque(meta["schedule_window"], maxlen=100)
        self.policy._updates = int(meta["policy_updates"])
        self.student._updates = int(meta["student_updates"])
        self.last_repr_stats = dict(meta["last_repr_stats"])
        self.rngs = {name: restore_generator(state) for name, state in meta["rng"].items()}
        self.refresh_key_cache()


def _array_keys(arrays) -> list[str]:
    return list(arrays.keys()) if hasattr(arrays, "keys") else list(arrays)


def _episodes_to_arrays(episodes: list[Episode], prefix: str) -> dict[str, np.ndarray]:
    if not episodes:
        return {f"{prefix}count": np.asarray([0], dtype=np.int64)}
    out = {f"{prefix}count": np.asarray([len(episodes)], dtype=np.int64)}
    out[f"{prefix}states"] = np.concatenate([ep.states for ep in episodes])
    out[f"{prefix}state_lens"] = np.asarray([ep.states.shape[0] for ep in episodes], dtype=np.int64)
    out[f"{prefix}actions"] = np.concatenate([ep.actions for ep in episodes])
    out[f"{prefix}env_rewards"] = np.concatenate([ep.env_rewards for ep in episodes])
    out[f"{prefix}int_rewards"] = np.concatenate([ep.intrinsic_rewards for ep in episodes])
    out[f"{prefix}goals"] = np.concatenate([ep.goals for ep in episodes])
    out[f"{prefix}success"] = np.asarray([ep.success for ep in episodes], dtype=np.int64)
    dec_meta = []
    dec_latents = []
    dec_cands = []
    dec_counts = []
    for ep in episodes:
        dec_counts.append(len(ep.decisions))
        for d in ep.decisions:
            dec_meta.append([d.t, int(d.used_teacher), d.reward_sum, d.candidates.shape[0]])
            dec_latents.append(d.latent)
            dec_cands.append(d.candidates)
    out[f"{prefix}dec_counts"] = np.asarray(dec_counts, dtype=np.int64)
    out[f"{prefix}dec_meta"] = np.asarray(dec_meta)
    out[f"{prefix}dec_latents"] = np.stack(dec_latents)
    out[f"{prefix}dec_cands"] = np.concatenate(dec_cands)
    return out


def _episodes_from_arrays(arrays, prefix: str) -> list[Episode]:
    count = int(np.asarray(arrays[f"{prefix}count"])[0])
    if count == 0:
        return []
    states = np.asarray(arrays[f"{prefix}states"])
    state_lens = np.asarray(arrays[f"{prefix}state_lens"])
    actions = np.asarray(arrays[f"{prefix}actions"], dtype=np.int64)
    env_rewards = np.asarray(arrays[f"{prefix}env_rewards"])
    int_rewards = np.asarray(arrays[f"{prefix}int_rewards"])
    goals = np.asarray(arrays[f"{prefix}goals"])
    success = np.asarray(arrays[f"{prefix}success"])
    dec_counts = np.asarray(arrays[f"{prefix}dec_counts"], dtype=np.int64)
    dec_meta = np.asarray(arrays[f"{prefix}dec_meta"])
    dec_latents = np.asarray(arrays[f"{prefix}dec_latents"])
    dec_cands = np.asarray(arrays[f"{prefix}dec_cands"])

    episodes = []
    s_off = t_off = d_off = c_off = 0
    for i in range(count):
        sl = int(state_lens[i])
        length = sl - 1
        decisions = []
        for j in range(int(dec_counts[i])):
            t, teacher, rsum, n_cand = dec_meta[d_off]
            cands = dec_cands[c_off : c_off + int(n_cand)]
            decisions.append(
                Decision(int(t), dec_latents[d_off].copy(), np.asarray(cands), bool(teacher), float(rsum))
            )
            c_off += int(n_cand)
            d_off += 1
        episodes.append(
            Episode(
                states=states[s_off : s_off + sl].copy(),
                actions=actions[t_off : t_off + length].copy(),
                env_rewards=env_rewards[t_off : t_off + length].copy(),
                intrinsic_rewards=int_rewards[t_off : t_off + length].copy(),
                goals=goals[t_off : t_off + length].copy(),
                success=bool(success[i]),
                decisions=decisions,
            )
        )
        s_off += sl
        t_off += length
    return episodes


_KIND_CODES = {"sampled": 0, "goal": 1, "current": 2}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}


def _graph_to_arrays(graph: lm.LandmarkGraph, prefix: str) -> dict[str, np.ndarray]:
    y = graph.size
    state_dim = next(
        (n.source_state.shape[0] for n in graph.nodes if n.source_state is not None), 1
    )
    sources = np.full((y, state_dim), np.nan)
    for i, n in enumerate(graph.nodes):
        if n.source_state is not None:
            sources[i] = n.source_state
    return {
        f"{prefix}latents": graph.latents(),
        f"{prefix}kinds": np.asarray([_KIND_CODES[n.kind] for n in graph.nodes], dtype=np.int64),
        f"{prefix}novelty": graph.novelties(),
        f"{prefix}sources": sources,
        f"{prefix}u_raw": graph.u_raw,
        f"{prefix}u_prop": graph.u_prop,
        f"{prefix}meta": np.asarray(
            [graph.current_index, -1 if graph.goal_index is None else graph.goal_index, graph.built_at],
            dtype=np.int64,
        ),
    }


def _graph_from_arrays(arrays, prefix: str) -> lm.LandmarkGraph:
    latents = np.asarray(arrays[f"{prefix}latents"])
    kinds = np.asarray(arrays[f"{prefix}kinds"])
    novelty_vals = np.asarray(arrays[f"{prefix}novelty"])
    sources = np.asarray(arrays[f"{prefix}sources"])
    meta = np.asarray(arrays[f"{prefix}meta"])
    nodes = []
    for i in range(latents.shape[0]):
        src = None if np.any(np.isnan(sources[i])) else sources[i].copy()
        nodes.append(
            Landmark_from(latents[i], src, _KIND_NAMES[int(kinds[i])], float(novelty_vals[i]))
        )
    return lm.LandmarkGraph(
        nodes,
        np.asarray(arrays[f"{prefix}u_raw"]),
        np.asarray(arrays[f"{prefix}u_prop"]),
        int(meta[0]),
        None if int(meta[1]) < 0 else int(meta[1]),
        int(meta[2]),
    )


def Landmark_from(latent, source, kind, novelty_value) -> lm.Landmark:
    mark = lm.Landmark(np.asarray(latent).copy(), source, kind)
    mark.novelty = novelty_value
    return mark
