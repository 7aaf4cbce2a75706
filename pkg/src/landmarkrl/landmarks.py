"""Latent landmark graphs: counting, novelty, sampling, utility, selection.

Every subgoal decision builds a small complete directed graph over latent
points: farthest-point-sampled landmarks from a fresh state sample, plus
the task-goal and current-state representations. Nodes carry a novelty
value (discounted future visitation estimate from a SimHash count table,
smaller = more novel), edges carry a utility (mean goal-conditioned value
of transitioning), relay-propagated with max-plus relaxation. The subgoal
is the candidate minimizing (1 - softmax(utility)) * novelty.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


class GraphBuildError(RuntimeError):
    """Graph construction hit non-finite values or an empty candidate set."""


# -- count table -------------------------------------------------------------


class CountTable:
    """SimHash-bucketed visit counts over latent points.

    The key of a point is the sign pattern of `bits` fixed random
    projections, packed into an integer. `counts` is the historical
    cumulative visit count per bucket; `occupancy`/`occurrences` are the
    incremental-mode accumulators fed by ``record_episode``.
    """

    def __init__(self, latent_dim: int, bits: int, rng: np.random.Generator):
        if not 1 <= bits <= 24:
            raise ValueError("hash bits must lie in [1, 24]")
        self.bits = int(bits)
        self.latent_dim = int(latent_dim)
        self.projection = rng.standard_normal((self.bits, self.latent_dim))
        self.size = 1 << self.bits
        self.counts = np.zeros(self.size)
        self.occupancy = np.zeros(self.size)
        self.occurrences = np.zeros(self.size, dtype=np.int64)
        self._weights = (1 << np.arange(self.bits)).astype(np.int64)

    def keys(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        signs = (pts @ self.projection.T) >= 0.0
        return signs.astype(np.int64) @ self._weights

    def key(self, point: np.ndarray) -> int:
        return int(self.keys(point)[0])

    @property
    def total_recorded(self) -> float:
        return float(self.counts.sum())

    def to_state(self, prefix: str = "") -> dict[str, np.ndarray]:
        return {
            f"{prefix}projection": self.projection,
            f"{prefix}counts": self.counts,
            f"{prefix}occupancy": self.occupancy,
            f"{prefix}occurrences": self.occurrences,
        }

    def load_state(self, state, prefix: str = "") -> None:
        self.projection[...] = np.asarray(state[f"{prefix}projection"])
        self.counts[...] = np.asarray(state[f"{prefix}counts"])
        self.occupancy[...] = np.asarray(state[f"{prefix}occupancy"])
        self.occurrences[...] = np.asarray(state[f"{prefix}occurrences"])


def highlevel_indices(n_states: int, interval: int) -> np.ndarray:
    """Indices of the states where subgoal decisions happen (stride c)."""
    return np.arange(0, n_states, interval)


def discounted_suffix_sums(values: np.ndarray, gamma: float) -> np.ndarray:
    """S[i] = values[i] + gamma * S[i+1] over the last axis."""
    out = np.array(values, dtype=np.float64, copy=True)
    for i in range(out.shape[-1] - 2, -1, -1):
        out[..., i] += gamma * out[..., i + 1]
    return out


def record_episode(table: CountTable, states: np.ndarray, encode, interval: int, gamma: float) -> None:
    """Episode-end table update.

    Phase 1 bumps the visit count of every high-level state's bucket;
    phase 2 adds each high-level state's discounted future occupancy
    (using the freshly bumped counts) into its bucket's accumulator.
    """
    idx = highlevel_indices(states.shape[0], interval)
    keys = table.keys(encode(states[idx]))
    np.add.at(table.counts, keys, 1.0)
    np.add.at(table.occurrences, keys, 1)
    sums = discounted_suffix_sums(table.counts[keys], gamma)
    np.add.at(table.occupancy, keys, sums)


def rebuild_occupancy(table: CountTable, episodes, encode, interval: int, gamma: float) -> None:
    """Recompute the incremental accumulators from the stored episodes.

    Uses the current encoder and the current counts; afterwards (and until
    the next table update) incremental novelty equals exact novelty.
    """
    table.occupancy[:] = 0.0
    table.occurrences[:] = 0
    for ep in episodes:
        states = ep.states if hasattr(ep, "states") else np.asarray(ep)
        idx = highlevel_indices(states.shape[0], interval)
        keys = table.keys(encode(states[idx]))
        np.add.at(table.occurrences, keys, 1)
        sums = discounted_suffix_sums(table.counts[keys], gamma)
        np.add.at(table.occupancy, keys, sums)


class NoveltyIndex:
    """Exact-mode novelty, rebuilt per graph from current counts.

    `key_rows` is an (episodes, max_decisions) int64 matrix of bucket keys
    under the current encoder, `lengths` the per-episode decision counts.
    A landmark's novelty is the summed discounted suffix occupancy over
    all occurrences of its bucket; buckets that never occur fall back to
    their raw visit count.
    """

    def __init__(self, table: CountTable, key_rows: np.ndarray, lengths: np.ndarray, gamma: float):
        self.table = table
        self._acc = np.zeros(table.size)
        self._occ = np.zeros(table.size, dtype=np.int64)
        if key_rows.size:
            mask = np.arange(key_rows.shape[1])[None, :] < lengths[:, None]
            safe_keys = np.where(mask, key_rows, 0)
            vals = np.where(mask, table.counts[safe_keys], 0.0)
            sums = discounted_suffix_sums(vals, gamma)
            flat_keys = key_rows[mask]
            np.add.at(self._acc, flat_keys, sums[mask])
            np.add.at(self._occ, flat_keys, 1)

    def value(self, key: int) -> float:
        if self._occ[key] > 0:
            return float(self._acc[key])
        return float(self.table.counts[key])


class IncrementalNovelty:
    """Reads the record-time accumulators; stale w.r.t. later count bumps."""

    def __init__(self, table: CountTable):
        self.table = table

    def value(self, key: int) -> float:
        if self.table.occurrences[key] > 0:
            return float(self.table.occupancy[key])
        return float(self.table.counts[key])


def novelty(
    latent_point,
    episodes,
    table: CountTable,
    encode,
    interval: int,
    gamma: float,
    mode: str = "exact",
) -> float:
    """Novelty of one latent point against the stored episodes."""
    key = table.key(np.asarray(latent_point, dtype=np.float64))
    if mode == "incremental":
        return IncrementalNovelty(table).value(key)
    if mode != "exact":
        raise ValueError(f"unknown novelty mode {mode!r}")
    seqs = []
    for ep in episodes:
        states = ep.states if hasattr(ep, "states") else np.asarray(ep)
        idx = highlevel_indices(states.shape[0], interval)
        seqs.append(table.keys(encode(states[idx])))
    if seqs:
        max_len = max(s.shape[0] for s in seqs)
        key_rows = np.zeros((len(seqs), max_len), dtype=np.int64)
        lengths = np.zeros(len(seqs), dtype=np.int64)
        for i, s in enumerate(seqs):
            key_rows[i, : s.shape[0]] = s
            lengths[i] = s.shape[0]
    else:
        key_rows = np.zeros((0, 0), dtype=np.int64)
        lengths = np.zeros(0, dtype=np.int64)
    return NoveltyIndex(table, key_rows, lengths, gamma).value(key)


# -- farthest point sampling ---------------------------------------------------


def farthest_point_sample(points: np.ndarray, m: int, initial) -> np.ndarray:
    """Greedy max-min selection of m point indices, starting from `initial`.

    `initial` must equal one of the rows. Ties break toward the lowest
    index; if m exceeds the number of points, all indices are returned.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[0] == 0:
        raise ValueError("points must be non-empty")
    if m < 1:
        raise ValueError("m must be >= 1")
    init = np.asarray(initial, dtype=np.float64).reshape(-1)
    matches = np.flatnonzero(np.all(pts == init[None, :], axis=1))
    if matches.size == 0:
        raise ValueError("initial point is not one of the candidate points")
    start = int(matches[0])
    n = pts.shape[0]
    m = min(m, n)
    chosen = [start]
    dist = np.linalg.norm(pts - pts[start], axis=1)
    dist[start] = -np.inf
    for _ in range(m - 1):
        nxt = int(np.argmax(dist))
        chosen.append(nxt)
        dist = np.minimum(dist, np.linalg.norm(pts - pts[nxt], axis=1))
        dist[nxt] = -np.inf
    return np.asarray(chosen, dtype=np.int64)


# -- graph -----------------------------------------------------------------


@dataclass
class Landmark:
    latent: np.ndarray
    source_state: np.ndarray | None
    kind: str  # sampled | goal | current
    novelty: float = field(default=np.nan)


@dataclass
class LandmarkGraph:
    nodes: list[Landmark]
    u_raw: np.ndarray
    u_prop: np.ndarray
    current_index: int
    goal_index: int | None
    built_at: int = 0

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return self.size * (self.size - 1)

    def latents(self) -> np.ndarray:
        return np.stack([n.latent for n in self.nodes])

    def novelties(self) -> np.ndarray:
        return np.asarray([n.novelty for n in self.nodes])

    def candidate_indices(self) -> np.ndarray:
        return np.asarray([j for j in range(self.size) if j != self.current_index])


def edge_utility(
    node_latents: np.ndarray,
    node_sources: list[np.ndarray | None],
    sample_states: np.ndarray,
    sample_latents: np.ndarray,
    value_fn,
) -> np.ndarray:
    """Mean transition value from each node toward every other node.

    Each sampled state is assigned to its nearest node in latent space;
    row i of the result averages value_fn(assigned states of i, latent j)
    over columns j. A node with an empty cell uses its own source state;
    a source-less node (the synthetic goal) uses the nearest sampled state.
    """
    latents = np.atleast_2d(node_latents)
    y = latents.shape[0]
    n = sample_states.shape[0]
    d2 = ((sample_latents[:, None, :] - latents[None, :, :]) ** 2).sum(axis=2)
    assign = np.argmin(d2, axis=1)

    rep_states: list[np.ndarray] = []
    owners: list[int] = []
    for i in range(y):
        rows = np.flatnonzero(assign == i)
        if rows.size:
            members = sample_states[rows]
        elif node_sources[i] is not None:
            members = node_sources[i][None, :]
        else:
            nearest = int(np.argmin(d2[:, i])) if n else 0
            members = sample_states[nearest][None, :]
        rep_states.append(members)
        owners.extend([i] * members.shape[0])
    stacked = np.concatenate(rep_states, axis=0)
    owners_arr = np.asarray(owners)

    total = stacked.shape[0]
    big_states = np.repeat(stacked, y, axis=0)
    big_goals = np.tile(latents, (total, 1))
    values = np.asarray(value_fn(big_states, big_goals), dtype=np.float64).reshape(total, y)
    if not np.all(np.isfinite(values)):
        raise GraphBuildError("value function produced non-finite edge utilities")

    u_raw = np.zeros((y, y))
    counts = np.zeros(y)
    np.add.at(u_raw, owners_arr, values)
    np.add.at(counts, owners_arr, 1.0)
    u_raw /= counts[:, None]
    np.fill_diagonal(u_raw, 0.0)
    return u_raw


def propagate_utility(u_raw: np.ndarray, max_rounds: int | None = None) -> np.ndarray:
    """Best summed utility over any relay sequence (max-plus Bellman-Ford).

    Relaxation by repeated max-plus squaring, U <- max(U, U (x) U), which
    doubles the covered relay-path length per round; ceil(log2(Y-1)) + 1
    rounds reach the same fixed point as Y-1 single-edge rounds. With
    nonpositive utilities this equals the max over simple relay paths; if
    values still improve once the round budget is spent (a positive
    cycle), the current values are kept and a warning is emitted.
    """
    u = np.array(u_raw, dtype=np.float64)
    if not np.all(np.isfinite(u)):
        raise GraphBuildError("utility matrix has non-finite entries")
    y = u.shape[0]
    np.fill_diagonal(u, 0.0)
    if max_rounds is None:
        rounds = int(np.ceil(np.log2(max(y - 1, 1)))) + 1
    else:
        rounds = max_rounds
    changed = False
    for _ in range(max(rounds, 1)):
        relay = (u[:, :, None] + u[None, :, :]).max(axis=1)
        new = np.maximum(u, relay)
        changed = not np.array_equal(new, u)
        u = new
        if not changed:
            break
    if changed:
        relay = (u[:, :, None] + u[None, :, :]).max(axis=1)
        if not np.array_equal(np.maximum(u, relay), u):
            _warn_positive_cycle()
    return u


_positive_cycle_warned = False


def _warn_positive_cycle() -> None:
    global _positive_cycle_warned
    if _positive_cycle_warned:
        log.debug("positive relay cycle detected; clamping utility propagation")
        return
    _positive_cycle_warned = True
    log.warning(
        "positive relay cycle detected; clamping utility propagation "
        "(typical before the value function settles; further warnings at debug level)"
    )


def utility_softmax(row: np.ndarray) -> np.ndarray:
    """Max-shifted softmax of one utility row."""
    r = np.asarray(row, dtype=np.float64)
    if not np.all(np.isfinite(r)):
        raise GraphBuildError("softmax over non-finite utilities")
    shifted = r - r.max()
    e = np.exp(shifted)
    return e / e.sum()


def select_subgoal(graph: LandmarkGraph, current_index: int | None = None) -> int:
    """Balanced selection: argmin over candidates of (1 - P(utility)) * novelty."""
    i = graph.current_index if current_index is None else current_index
    cand = np.asarray([j for j in range(graph.size) if j != i])
    if cand.size == 0:
        raise GraphBuildError("graph has no candidate nodes besides the current one")
    probs = utility_softmax(graph.u_prop[i, cand])
    scores = (1.0 - probs) * graph.novelties()[cand]
    return int(cand[int(np.argmin(scores))])


def build_graph(
    store,
    encode,
    value_fn,
    table: CountTable,
    novelty_source,
    *,
    landmark_count: int,
    sample_size: int,
    current_state: np.ndarray,
    goal_state: np.ndarray | None,
    rng: np.random.Generator,
    built_at: int = 0,
) -> LandmarkGraph:
    """Assemble one latent landmark graph from a fresh state sample.

    `store` must provide ``sample_states(n, rng)`` over all stored states
    (sampling with replacement when fewer are stored). The current-state
    representation seeds the farthest-point pass and becomes the `current`
    node; the goal representation is appended when a goal state is given.
    """
    samples = store.sample_states(sample_size, rng)
    sample_latents = encode(samples)
    current_latent = encode(current_state[None, :])[0]

    fps_points = np.concatenate([current_latent[None, :], sample_latents], axis=0)
    picked = farthest_point_sample(fps_points, landmark_count + 1, current_latent)
    picked = picked[picked != 0][:landmark_count]

    nodes = [
        Landmark(sample_latents[i - 1].copy(), samples[i - 1].copy(), "sampled")
        for i in picked
    ]
    goal_index = None
    if goal_state is not None:
        goal_latent = encode(goal_state[None, :])[0]
        goal_index = len(nodes)
        nodes.append(Landmark(goal_latent, None, "goal"))
    current_index = len(nodes)
    nodes.append(Landmark(current_latent, current_state.copy(), "current"))

    latents = np.stack([n.latent for n in nodes])
    for node, key in zip(nodes, table.keys(latents)):
        node.novelty = novelty_source.value(int(key))

    u_raw = edge_utility(
        latents, [n.source_state for n in nodes], samples, sample_latents, value_fn
    )
    u_prop = propagate_utility(u_raw)
    return LandmarkGraph(nodes, u_raw, u_prop, current_index, goal_index, built_at)
