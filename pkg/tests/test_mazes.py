import numpy as np
import pytest

from landmarkrl.mazes import (
    BUILTIN_MAZES,
    Maze,
    MazeSpecError,
    Observation,
    make_maze,
    parse_maze_text,
)

SIMPLE = """
goal_tolerance = 0.4
max_steps = 50
max_action = 1.0
---
#####
#S.G#
#####
"""


def simple_maze():
    return Maze(parse_maze_text(SIMPLE))


class TestParsing:
    def test_builtins_parse_and_validate(self):
        for name in BUILTIN_MAZES:
            maze = make_maze(name)
            maze.spec.validate()
            assert maze.spec.name == name

    def test_header_values_applied(self):
        spec = parse_maze_text(SIMPLE)
        assert spec.goal_tolerance == 0.4
        assert spec.max_steps == 50
        assert spec.goal_cell == (1, 3)
        assert spec.start_cells == ((1, 1),)

    def test_unknown_header_key_rejected(self):
        with pytest.raises(MazeSpecError):
            parse_maze_text("bogus = 3\n---\n###\n#SG\n###")

    def test_missing_goal_rejected(self):
        with pytest.raises(MazeSpecError):
            parse_maze_text("---\n###\n#S#\n###")

    def test_missing_start_rejected(self):
        with pytest.raises(MazeSpecError):
            parse_maze_text("---\n###\n#G#\n###")

    def test_eval_start_is_geodesically_hardest(self):
        text = """
---
#######
#S...G#
#.#####
#S#####
#######
"""
        spec = parse_maze_text(text)
        # (3,1) is 2 wall-following cells below (1,1): farther from G by path.
        assert spec.eval_start_cell == (3, 1)

    def test_file_roundtrip(self, tmp_path):
        path = tmp_path / "m.maze"
        path.write_text(SIMPLE, encoding="utf-8")
        maze = make_maze(str(path))
        assert maze.spec.goal_cell == (1, 3)


class TestReset:
    def test_eval_reset_fixed(self):
        maze = make_maze("umaze")
        a, _ = maze.reset(seed=1, mode="eval")
        b, _ = maze.reset(seed=999, mode="eval")
        assert np.array_equal(a.position, b.position)
        assert np.all(a.velocity == 0.0)

    def test_train_reset_seed_deterministic(self):
        maze = make_maze("umaze")
        a, _ = maze.reset(seed=42, mode="train")
        b, _ = maze.reset(seed=42, mode="train")
        assert np.array_equal(a.position, b.position)

    def test_train_starts_always_inside_start_region(self):
        maze = make_maze("four_rooms")
        cells = set(maze.spec.start_cells)
        for seed in range(1000):
            obs, _ = maze.reset(seed=seed, mode="train")
            assert maze.spec.cell_of(obs.position) in cells
            assert not maze.spec.is_wall(*maze.spec.cell_of(obs.position))

    def test_goal_returned_as_full_observation(self):
        maze = make_maze("umaze")
        _, goal = maze.reset(seed=0, mode="train")
        assert isinstance(goal, Observation)
        assert np.array_equal(goal.position, maze.spec.goal_position)
        assert goal.vector().shape == (maze.observation_dim,)

    def test_empty_start_region_rejected(self):
        with pytest.raises(MazeSpecError, match="start"):
            parse_maze_text("---\n###\n#G#\n###")


class TestStep:
    def test_goal_reached_gives_zero_reward_success_done(self):
        maze = simple_maze()
        maze.reset(seed=0, mode="eval")
        maze._pos = maze.spec.goal_position.copy()
        result = maze.step(np.zeros(2))
        assert result.reward == 0.0
        assert result.success
        assert result.done

    def test_action_into_wall_clamps_at_boundary(self):
        maze = simple_maze()
        obs, _ = maze.reset(seed=0, mode="eval")
        result = maze.step(np.array([-1.0, 0.0]))  # west wall adjacent
        assert result.observation.position[0] == pytest.approx(1.0, abs=1e-5)
        assert result.observation.position[0] >= 1.0
        assert result.reward == -1.0

    def test_timeout_sets_done_without_success(self):
        maze = simple_maze()
        maze.reset(seed=0, mode="eval")
        result = None
        for _ in range(maze.spec.max_steps):
            result = maze.step(np.array([0.0, 0.0]))
        assert result.done
        assert not result.success
        assert result.reward == -1.0

    def test_action_magnitude_clipped(self):
        maze = simple_maze()
        obs, _ = maze.reset(seed=0, mode="eval")
        start = obs.position.copy()
        result = maze.step(np.array([0.0, 100.0]))
        moved = np.linalg.norm(result.observation.position - start)
        assert moved <= maze.spec.max_action + 1e-9

    def test_reward_iff_success_flag(self):
        maze = make_maze("umaze")
        maze.reset(seed=3, mode="train")
        rng = np.random.default_rng(5)
        for _ in range(200):
            r = maze.step(rng.uniform(-1, 1, size=2))
            assert (r.reward == 0.0) == r.success
            assert r.reward in (0.0, -1.0)
            if r.done:
                maze.reset(seed=int(rng.integers(1 << 30)), mode="train")


class TestInvariants:
    def test_never_inside_wall_over_many_random_steps(self):
        maze = make_maze("four_rooms")
        rng = np.random.default_rng(17)
        maze.reset(seed=0, mode="train")
        for i in range(100_000):
            r = maze.step(rng.uniform(-1.5, 1.5, size=2))
            cell = maze.spec.cell_of(r.observation.position)
            assert not maze.spec.is_wall(*cell), f"inside wall at step {i}: {r.observation.position}"
            if r.done:
                maze.reset(seed=i, mode="train")

    def test_cumulative_reward_bounds(self):
        maze = make_maze("umaze")
        rng = np.random.default_rng(2)
        maze.reset(seed=9, mode="train")
        total = 0.0
        steps = 0
        while True:
            r = maze.step(rng.uniform(-1, 1, size=2))
            total += r.reward
            steps += 1
            if r.done:
                break
        assert -maze.spec.max_steps <= total <= 0.0
        assert steps <= maze.spec.max_steps

    def test_same_seed_same_actions_bit_identical(self):
        actions = np.random.default_rng(8).uniform(-1, 1, size=(60, 2))

        def trajectory():
            maze = Maze(parse_maze_text(BUILTIN_MAZES["umaze"].replace("noise_dims = 0", "")))
            obs, _ = maze.reset(seed=77, mode="train")
            out = [obs.vector()]
            for a in actions:
                r = maze.step(a)
                out.append(r.observation.vector())
                if r.done:
                    break
            return np.stack(out)

        assert np.array_equal(trajectory(), trajectory())

    def test_noise_dims_deterministic_and_present(self):
        text = SIMPLE.replace("max_steps = 50", "max_steps = 50\nnoise_dims = 3")
        maze_a, maze_b = Maze(parse_maze_text(text)), Maze(parse_maze_text(text))
        obs_a, _ = maze_a.reset(seed=5, mode="train")
        obs_b, _ = maze_b.reset(seed=5, mode="train")
        assert obs_a.noise.shape == (3,)
        assert np.array_equal(obs_a.vector(), obs_b.vector())
        ra = maze_a.step(np.array([0.1, 0.0]))
        rb = maze_b.step(np.array([0.1, 0.0]))
        assert np.array_equal(ra.observation.vector(), rb.observation.vector())
