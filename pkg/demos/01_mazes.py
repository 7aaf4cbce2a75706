"""Walk through the built-in maze environments.

Renders the two built-in layouts, runs a random policy, and shows the
collision and reward behavior.
"""

import numpy as np

from landmarkrl import make_maze
from landmarkrl.mazes import BUILTIN_MAZES


def render(maze, positions=()):
    spec = maze.spec
    chars = np.where(spec.walls, "#", ".").astype(object)
    for r, c in spec.start_cells:
        chars[r, c] = "S"
    chars[spec.goal_cell] = "G"
    for p in positions:
        r, c = spec.cell_of(p)
        if chars[r, c] not in ("S", "G"):
            chars[r, c] = "o"
    return "\n".join("".join(row) for row in chars)


for name in BUILTIN_MAZES:
    maze = make_maze(name)
    print(f"== {name}: {maze.spec.rows}x{maze.spec.cols} cells, "
          f"T={maze.spec.max_steps}, goal tolerance {maze.spec.goal_tolerance}")
    print(render(maze))
    print()

maze = make_maze("umaze")
obs, goal = maze.reset(seed=7, mode="train")
print("train start:", obs.position, "| goal (full observation):", goal.position)

rng = np.random.default_rng(0)
trail = [obs.position.copy()]
total = 0.0
for t in range(maze.spec.max_steps):
    result = maze.step(rng.uniform(-1, 1, size=2))
    trail.append(result.observation.position.copy())
    total += result.reward
    if result.done:
        break

print(f"random policy: {len(trail) - 1} steps, return {total}, "
      f"success={result.success}")
print("visited cells marked o:")
print(render(maze, trail))

obs, _ = maze.reset(seed=0, mode="eval")
print("\neval always starts at the hardest start cell:", obs.position)
wall_push = maze.step(np.array([-1.0, 0.0]))
print("pushing into the west wall clamps the position:", wall_push.observation.position)
