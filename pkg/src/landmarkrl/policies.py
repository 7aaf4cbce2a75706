"""Goal-conditioned learners: discrete soft-Q low level, UVFA, student head.

All learners share the diffnet core and consume normalized state features
concatenated with a latent goal. The low-level policy is a discrete
maximum-entropy Q-learner over a fixed action set (8 directions x 2
magnitudes + no-op); the UVFA regresses to the low-level soft state
value; the high-level student scores candidate latents one at a time.
"""

from __future__ import annotations

import numpy as np

from .nets import Adam, Mlp, NetError


class NonFiniteTarget(NetError):
    """TD targets contained NaN/inf; the batch was rejected."""


def make_action_set(max_action: float) -> np.ndarray:
    """17 planar actions: no-op plus 8 directions at half and full magnitude."""
    angles = np.arange(8) * (np.pi / 4.0)
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    acts = [np.zeros(2)]
    for mag in (0.5, 1.0):
        acts.extend(dirs * (mag * max_action))
    return np.asarray(acts)


def pseudo_discount(goals: np.ndarray, latents: np.ndarray, reach_tol: float, gamma: float):
    """0 where the latent goal is reached (within tol), else gamma."""
    d = np.linalg.norm(np.atleast_2d(goals) - np.atleast_2d(latents), axis=1)
    return np.where(d <= reach_tol, 0.0, gamma)


def softmax(values: np.ndarray, temperature: float) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64) / temperature
    v = v - v.max(axis=-1, keepdims=True)
    e = np.exp(v)
    return e / e.sum(axis=-1, keepdims=True)


def soft_value(q_values: np.ndarray, temperature: float, counts=None) -> np.ndarray:
    """Entropy-baselined soft value over the last axis.

    alpha * (logsumexp(Q/alpha) - log n) lies between the mean and the
    max of Q, so nonpositive action values give a nonpositive state
    value (the raw logsumexp would add a positive uniform-entropy bonus
    that compounds through bootstrapping). `counts` overrides n when
    rows are padded with -inf entries.
    """
    v = np.asarray(q_values, dtype=np.float64) / temperature
    m = v.max(axis=-1)
    lse = m + np.log(np.exp(v - m[..., None]).sum(axis=-1))
    n = np.asarray(counts) if counts is not None else v.shape[-1]
    return temperature * (lse - np.log(n))


class SoftQPolicy:
    """Discrete soft-Q learner over (state features, latent goal)."""

    def __init__(
        self,
        feat_dim: int,
        goal_dim: int,
        n_actions: int,
        *,
        hidden=(64, 64),
        lr=1e-3,
        temperature=0.1,
        target_sync=250,
        rng=None,
    ):
        self.n_actions = int(n_actions)
        self.temperature = float(temperature)
        self.target_sync = int(target_sync)
        self.net = Mlp([feat_dim + goal_dim, *hidden, n_actions], "relu", rng=rng)
        self.target_net = self.net.clone()
        self.opt = Adam(self.net.params(), lr=lr)
        self._updates = 0

    def q_values(self, feats: np.ndarray, goals: np.ndarray) -> np.ndarray:
        return self.net.apply(np.concatenate([np.atleast_2d(feats), np.atleast_2d(goals)], axis=1))

    def act(self, feats: np.ndarray, goal: np.ndarray, rng: np.random.Generator | None, explore: bool) -> int:
        q = self.net.apply(np.concatenate([feats, goal]))
        if not explore:
            return int(np.argmax(q))
        probs = softmax(q, self.temperature)
        return int(rng.choice(self.n_actions, p=probs))

    def td_update(self, feats, goals, actions, rewards, next_feats, next_goals, discounts) -> float:
        """One soft-Q step toward r + sigma * softvalue_target(s')."""
        x_next = np.concatenate([next_feats, next_goals], axis=1)
        q_next = self.target_net.apply(x_next)
        targets = rewards + discounts * soft_value(q_next, self.temperature)
        if not np.all(np.isfinite(targets)):
            raise NonFiniteTarget("low-level TD targets are not finite")
        x = np.concatenate([feats, goals], axis=1)
        q, cache = self.net.forward_cached(x)
        rows = np.arange(q.shape[0])
        diff = q[rows, actions] - targets
        upstream = np.zeros_like(q)
        upstream[rows, actions] = diff / q.shape[0]
        grads, _ = self.net.backward_from(cache, upstream)
        self.opt.step(self.net.params(), grads)
        self._updates += 1
        if self._updates % self.target_sync == 0:
            self.target_net.copy_from(self.net)
        return float(0.5 * np.mean(diff**2))

    def soft_state_value(self, feats, goals) -> np.ndarray:
        return soft_value(self.q_values(feats, goals), self.temperature)


class Uvfa:
    """Goal-conditioned state value regressed to the soft state value."""

    def __init__(self, feat_dim: int, goal_dim: int, *, hidden=(64, 64), lr=1e-3, rng=None):
        self.net = Mlp([feat_dim + goal_dim, *hidden, 1], "relu", rng=rng)
        self.opt = Adam(self.net.params(), lr=lr)

    def value(self, feats: np.ndarray, goals: np.ndarray) -> np.ndarray:
        x = np.concatenate([np.atleast_2d(feats), np.atleast_2d(goals)], axis=1)
        return self.net.apply(x)[:, 0]

    def regress(self, feats, goals, targets) -> float:
        if not np.all(np.isfinite(targets)):
            raise NonFiniteTarget("value regression targets are not finite")
        x = np.concatenate([feats, goals], axis=1)
        v, cache = self.net.forward_cached(x)
        diff = v[:, 0] - targets
        grads, _ = self.net.backward_from(cache, (diff / diff.shape[0])[:, None])
        self.opt.step(self.net.params(), grads)
        return float(0.5 * np.mean(diff**2))


class StudentPolicy:
    """High-level learned policy scoring candidate subgoal latents."""

    def __init__(
        self,
        feat_dim: int,
        goal_dim: int,
        *,
        hidden=(64, 64),
        lr=1e-3,
        temperature=0.2,
        target_sync=250,
        rng=None,
    ):
        self.temperature = float(temperature)
        self.target_sync = int(target_sync)
        self.net = Mlp([feat_dim + goal_dim, *hidden, 1], "relu", rng=rng)
        self.target_net = self.net.clone()
        self.opt = Adam(self.net.params(), lr=lr)
        self._updates = 0

    def scores(self, feats: np.ndarray, candidates: np.ndarray, net: Mlp | None = None) -> np.ndarray:
        net = net or self.net
        c = candidates.shape[0]
        x = np.concatenate([np.tile(feats, (c, 1)), candidates], axis=1)
        return net.apply(x)[:, 0]

    def choose(self, feats, candidates, rng: np.random.Generator | None, explore: bool) -> int:
        s = self.scores(feats, candidates)
        if not explore:
            return int(np.argmax(s))
        return int(rng.choice(candidates.shape[0], p=softmax(s, self.temperature)))

    def td_update(self, feats, chosen, reward_sums, next_feats, next_candidates, discounts) -> float:
        """Soft TD over the next decision's candidate set.

        `next_candidates` is a list (one (C_i, d) array per row, or None at
        episode end); `discounts` already carries gamma^c or 0 for terminal
        rows.
        """
        n = feats.shape[0]
        boot = np.zeros(n)
        live = [i for i in range(n) if next_candidates[i] is not None and discounts[i] != 0.0]
        if live:
            c_max = max(next_candidates[i].shape[0] for i in live)
            goal_dim = chosen.shape[1]
            padded = np.zeros((len(live), c_max, goal_dim))
            mask = np.zeros((len(live), c_max), dtype=bool)
            for row, i in enumerate(live):
                cands = next_candidates[i]
                padded[row, : cands.shape[0]] = cands
                mask[row, : cands.shape[0]] = True
            flat = np.concatenate(
                [np.repeat(next_feats[live], c_max, axis=0), padded.reshape(-1, goal_dim)],
                axis=1,
            )
            vals = self.target_net.apply(flat)[:, 0].reshape(len(live), c_max)
            vals = np.where(mask, vals, -np.inf)
            boot[live] = soft_value(vals, self.temperature, counts=mask.sum(axis=1))
        targets = reward_sums + discounts * boot
        if not np.all(np.isfinite(targets)):
            raise NonFiniteTarget("high-level TD targets are not finite")
        x = np.concatenate([feats, chosen], axis=1)
        q, cache = self.net.forward_cached(x)
        diff = q[:, 0] - targets
        grads, _ = self.net.backward_from(cache, (diff / n)[:, None])
        self.opt.step(self.net.params(), grads)
        self._updates += 1
        if self._updates % self.target_sync == 0:
            self.target_net.copy_from(self.net)
        return float(0.5 * np.mean(diff**2))
