"""Build a latent landmark graph by hand and watch the selection balance.

Synthetic setup: latents on a line, a count table that has seen the left
half a lot and the right half rarely, and a value function preferring
short hops. Selection should favor the novel-but-reachable frontier.
"""

import numpy as np

from landmarkrl import (
    CountTable,
    build_graph,
    novelty,
    propagate_utility,
    record_episode,
    select_subgoal,
    utility_softmax,
)


class LineStore:
    """Minimal episode-buffer stand-in: states on a 1D line, y fixed."""

    def __init__(self, states):
        self.states = states

    def sample_states(self, n, rng):
        return self.states[rng.integers(0, self.states.shape[0], size=n)]


def encode(states):
    # Center the latents on the origin: the sign-projection hash slices the
    # plane into angular sectors around it, so an off-origin blob would
    # collapse into a couple of buckets.
    return np.atleast_2d(states)[:, :2] - np.array([5.0, 0.0])


def value_fn(states, goals):
    # Reaching nearby latents is cheap, distant ones expensive.
    return -np.linalg.norm(encode(states) - goals, axis=1)


rng = np.random.default_rng(0)
# Positions 0..10 on a line; the agent has wandered mostly on the left.
visited = np.concatenate([
    rng.uniform(0, 5, size=(400, 1)),
    rng.uniform(5, 10, size=(40, 1)),
])
states = np.concatenate([visited, rng.uniform(-0.5, 0.5, size=(440, 1))], axis=1)

table = CountTable(latent_dim=2, bits=8, rng=np.random.default_rng(1))
episodes = [states[i : i + 20] for i in range(0, 400, 20)]
for ep in episodes:
    record_episode(table, ep, encode, interval=4, gamma=0.9)

left_latent = encode(np.array([[1.0, 0.0]]))[0]
right_latent = encode(np.array([[9.0, 0.0]]))[0]
print("novelty left (well visited):",
      round(novelty(left_latent, episodes, table, encode, 4, 0.9), 1))
print("novelty right (frontier):  ",
      round(novelty(right_latent, episodes, table, encode, 4, 0.9), 1))

from landmarkrl import IncrementalNovelty, rebuild_occupancy

rebuild_occupancy(table, episodes, encode, 4, 0.9)
graph = build_graph(
    LineStore(states), encode, value_fn, table,
    novelty_source=IncrementalNovelty(table),
    landmark_count=6, sample_size=64,
    current_state=np.array([0.5, 0.0]),
    goal_state=np.array([9.5, 0.0]),
    rng=np.random.default_rng(2),
)

print(f"\ngraph: {graph.size} nodes ({graph.edge_count} directed edges)")
for i, node in enumerate(graph.nodes):
    mark = " <- current" if i == graph.current_index else (" <- goal" if i == graph.goal_index else "")
    print(f"  node {i}: z=({node.latent[0]:5.2f},{node.latent[1]:5.2f}) "
          f"kind={node.kind:7s} novelty={node.novelty:7.1f}{mark}")

row = graph.u_prop[graph.current_index]
probs = utility_softmax(np.delete(row, graph.current_index))
print("\ntransition probabilities from the current node:", np.round(probs, 3))
picked = select_subgoal(graph)
print(f"selected subgoal: node {picked} at z={np.round(graph.nodes[picked].latent, 2)}")
print("(novel right-side landmarks win while utility keeps the hop feasible)")

chain = np.array([
    [0.0, -1.0, -5.0],
    [-9.0, 0.0, -1.0],
    [-9.0, -9.0, 0.0],
])
print("\nrelay propagation turns the chain a->b->c into the better a->c route:")
print(propagate_utility(chain))
