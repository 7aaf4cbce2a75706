"""Subgoal representation learning.

The encoder maps states to a low-dimensional latent space so that
1-step-adjacent states land close together and states a full subgoal
interval apart land far apart. The loss is a squared pull on the near
pair plus an inverse-power push on the far pair; a drift penalty toward a
frozen snapshot keeps already-well-fit triplets stable across updates.
"""

from __future__ import annotations

import logging
import math
from collections import deque

import numpy as np

from .nets import Adam, Mlp, add_scaled

log = logging.getLogger(__name__)


# -- losses ----------------------------------------------------------------


def contrastive_loss(z_near_a, z_near_b, z_far, scale, power, eps):
    """Pull term ||z_a - z_b||^2 plus push term scale / (||z_a - z_far||^n + eps).

    Accepts single points (d,) returning a scalar, or batches (B, d)
    returning (B,).
    """
    if power < 1:
        raise ValueError("power must be >= 1")
    if scale <= 0 or eps <= 0:
        raise ValueError("scale and eps must be > 0")
    za = np.atleast_2d(np.asarray(z_near_a, dtype=np.float64))
    zb = np.atleast_2d(np.asarray(z_near_b, dtype=np.float64))
    zf = np.atleast_2d(np.asarray(z_far, dtype=np.float64))
    pull = np.sum((za - zb) ** 2, axis=1)
    far = np.linalg.norm(za - zf, axis=1)
    push = scale / (far**power + eps)
    out = pull + push
    return float(out[0]) if np.asarray(z_near_a).ndim == 1 else out


def contrastive_loss_grads(z_near_a, z_near_b, z_far, scale, power, eps):
    """Gradients of the summed batch loss w.r.t. the three point batches."""
    za = np.atleast_2d(np.asarray(z_near_a, dtype=np.float64))
    zb = np.atleast_2d(np.asarray(z_near_b, dtype=np.float64))
    zf = np.atleast_2d(np.asarray(z_far, dtype=np.float64))
    diff_near = za - zb
    g_a = 2.0 * diff_near
    g_b = -2.0 * diff_near
    diff_far = za - zf
    r = np.linalg.norm(diff_far, axis=1, keepdims=True)
    denom = (r**power + eps) ** 2
    # d/dv [scale / (r^n + eps)] = -scale * n * r^(n-2) * v / (r^n + eps)^2
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(r > 0.0, -scale * power * r ** (power - 2) / denom, 0.0)
    g_far_pair = coef * diff_far
    g_a = g_a + g_far_pair
    g_f = -g_far_pair
    return g_a, g_b, g_f


def stability_loss(repr_fn: "ReprFn", states) -> float:
    """Mean L2 distance between current and snapshot encodings; 0 if empty."""
    states = np.atleast_2d(np.asarray(states, dtype=np.float64))
    if states.shape[0] == 0 or states.size == 0:
        return 0.0
    z_new = repr_fn.encode(states)
    z_old = repr_fn.encode_old(states)
    return float(np.mean(np.linalg.norm(z_new - z_old, axis=1)))


# -- encoder ----------------------------------------------------------------


class ReprFn:
    """Latent encoder plus the frozen snapshot it is regularized toward."""

    def __init__(self, state_dim, latent_dim, hidden=(64, 64), rng=None):
        self.latent_dim = int(latent_dim)
        dims = [int(state_dim), *hidden, self.latent_dim]
        self.net = Mlp(dims, activation="tanh", rng=rng)
        self.old_net = self.net.clone()

    def encode(self, states) -> np.ndarray:
        return self.net.apply(states)

    def encode_old(self, states) -> np.ndarray:
        return self.old_net.apply(states)

    def snapshot(self) -> None:
        self.old_net.copy_from(self.net)


# -- triplet buffer ----------------------------------------------------------


class TripletRecord:
    """One sampled triplet and the newest loss recorded for it."""

    __slots__ = ("s_start", "s_next", "s_far", "loss", "seq")

    def __init__(self, s_start, s_next, s_far, loss, seq):
        self.s_start = np.asarray(s_start, dtype=np.float64)
        self.s_next = np.asarray(s_next, dtype=np.float64)
        self.s_far = np.asarray(s_far, dtype=np.float64)
        self.loss = float(loss)
        self.seq = int(seq)


class TripletBuffer:
    """Bounded FIFO of triplet records."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self._records: deque[TripletRecord] = deque(maxlen=self.capacity)
        self._seq = 0

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    def add(self, s_start, s_next, s_far, loss) -> TripletRecord:
        rec = TripletRecord(s_start, s_next, s_far, loss, self._seq)
        self._seq += 1
        self._records.append(rec)
        return rec

    def to_arrays(self):
        n = len(self._records)
        if n == 0:
            return None
        dim = self._records[0].s_start.shape[0]
        out = {
            "s_start": np.zeros((n, dim)),
            "s_next": np.zeros((n, dim)),
            "s_far": np.zeros((n, dim)),
            "loss": np.zeros(n),
            "seq": np.zeros(n, dtype=np.int64),
        }
        for i, rec in enumerate(self._records):
            out["s_start"][i] = rec.s_start
            out["s_next"][i] = rec.s_next
            out["s_far"][i] = rec.s_far
            out["loss"][i] = rec.loss
            out["seq"][i] = rec.seq
        return out

    @classmethod
    def from_arrays(cls, capacity, arrays) -> "TripletBuffer":
        buf = cls(capacity)
        if arrays is not None:
            for i in range(arrays["loss"].shape[0]):
                rec = TripletRecord(
                    arrays["s_start"][i],
                    arrays["s_next"][i],
                    arrays["s_far"][i],
                    arrays["loss"][i],
                    int(arrays["seq"][i]),
                )
                buf._records.append(rec)
            buf._seq = int(arrays["seq"].max()) + 1 if arrays["seq"].size else 0
        return buf


def topk_stable(buffer: TripletBuffer, k: float) -> list[TripletRecord]:
    """The ceil(k*|buffer|) records with the smallest recorded losses.

    Sorted ascending by loss; ties broken by insertion order.
    """
    if not 0.0 <= k <= 1.0:
        raise ValueError("k must lie in [0, 1]")
    count = math.ceil(k * len(buffer))
    if count == 0:
        return []
    return sorted(buffer, key=lambda r: (r.loss, r.seq))[:count]


# -- update ------------------------------------------------------------------


def sample_triplet_indices(episode_lengths, offset, count, rng):
    """Uniform (episode, t) pairs with t + offset inside the state array."""
    lengths = np.asarray(episode_lengths, dtype=np.int64)
    valid = np.maximum(lengths - offset, 0)
    total = int(valid.sum())
    if total == 0:
        return None
    cums = np.cumsum(valid)
    flat = rng.integers(0, total, size=count)
    ep = np.searchsorted(cums, flat, side="right")
    t = flat - (cums[ep] - valid[ep])
    return ep, t


def update_representation(
    repr_fn: ReprFn,
    optimizer: Adam,
    episodes,
    triplet_buffer: TripletBuffer,
    *,
    offset: int,
    scale: float,
    power: int,
    eps: float,
    stable_fraction: float,
    batch_size: int,
    rng: np.random.Generator,
):
    """One combined gradient step: contrastive mean + stability mean.

    Samples triplets (s_t, s_{t+1}, s_{t+offset}) from the episode list,
    adds the drift penalty on the most stable stored triplets, steps the
    optimizer, then records the post-step losses of the sampled triplets
    into the buffer (and refreshes the losses of the stable ones used).

    Returns a stats dict; ``updated`` is False when no episode is long
    enough for the offset.
    """
    lengths = [ep.states.shape[0] for ep in episodes]
    picked = sample_triplet_indices(lengths, offset, batch_size, rng)
    if picked is None:
        log.warning("representation update skipped: no episode longer than %d states", offset)
        return {"updated": False, "contrastive": float("nan"), "stability": float("nan")}
    ep_idx, t_idx = picked
    n = len(ep_idx)
    state_dim = episodes[0].states.shape[1]
    s0 = np.zeros((n, state_dim))
    s1 = np.zeros((n, state_dim))
    sc = np.zeros((n, state_dim))
    for row, (e, t) in enumerate(zip(ep_idx, t_idx)):
        states = episodes[e].states
        s0[row] = states[t]
        s1[row] = states[t + 1]
        sc[row] = states[t + offset]

    net = repr_fn.net
    z0, cache0 = net.forward_cached(s0)
    z1, cache1 = net.forward_cached(s1)
    zc, cachec = net.forward_cached(sc)
    g0, g1, gc = contrastive_loss_grads(z0, z1, zc, scale, power, eps)
    contrast_vals = contrastive_loss(z0, z1, zc, scale, power, eps)
    contrast_mean = float(np.mean(contrast_vals))

    grads = net.zero_grads()
    add_scaled(grads, net.backward_from(cache0, g0 / n)[0])
    add_scaled(grads, net.backward_from(cache1, g1 / n)[0])
    add_scaled(grads, net.backward_from(cachec, gc / n)[0])

    stable = topk_stable(triplet_buffer, stable_fraction)
    stability_mean = 0.0
    if stable:
        s_stable = np.stack([rec.s_start for rec in stable])
        z_new, cache_s = net.forward_cached(s_stable)
        z_old = repr_fn.encode_old(s_stable)
        diff = z_new - z_old
        norms = np.linalg.norm(diff, axis=1, keepdims=True)
        stability_mean = float(np.mean(norms))
        upstream = np.where(norms > 0.0, diff / np.where(norms > 0.0, norms, 1.0), 0.0)
        add_scaled(grads, net.backward_from(cache_s, upstream / len(stable))[0])

    optimizer.step(net.params(), grads)

    # Record the newest losses under the just-updated encoder.
    z0n = net.apply(s0)
    z1n = net.apply(s1)
    zcn = net.apply(sc)
    new_losses = contrastive_loss(z0n, z1n, zcn, scale, power, eps)
    for row in range(n):
        triplet_buffer.add(s0[row], s1[row], sc[row], new_losses[row])
    if stable:
        zs0 = net.apply(np.stack([rec.s_start for rec in stable]))
        zs1 = net.apply(np.stack([rec.s_next for rec in stable]))
        zsc = net.apply(np.stack([rec.s_far for rec in stable]))
        refreshed = contrastive_loss(zs0, zs1, zsc, scale, power, eps)
        for rec, val in zip(stable, refreshed):
            rec.loss = float(val)

    return {"updated": True, "contrastive": contrast_mean, "stability": stability_mean}
