"""Run orchestration: training loop, evaluation, checkpoints, exports.

A run directory contains `config.cfg` (the effective configuration),
`episodes.jsonl` (one deterministic record per training episode),
`evals.jsonl` (periodic 10-episode evaluation records), `timing.jsonl`
(wall-clock sidecar, excluded from determinism guarantees) and
`checkpoint.npz` (everything needed to resume bit-exactly).
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import time
from pathlib import Path

import numpy as np

from .agent import Agent
from .config import ConfigError, RunConfig, parse_config, serialize_config
from .mazes import Maze, make_maze

log = logging.getLogger(__name__)

_CKPT_FORMAT = "landmarkrl-ckpt-v1"


class CheckpointError(Exception):
    """Missing, corrupt, or wrong-version checkpoint."""


def build_env(cfg: RunConfig) -> Maze:
    maze = make_maze(cfg.env)
    spec = maze.spec
    overrides = {}
    if cfg.max_steps > 0:
        overrides["max_steps"] = cfg.max_steps
    if cfg.goal_tolerance > 0:
        overrides["goal_tolerance"] = cfg.goal_tolerance
    if cfg.noise_dims > 0:
        overrides["noise_dims"] = cfg.noise_dims
    if overrides:
        maze = Maze(dataclasses.replace(spec, **overrides))
    return maze


def _json_line(record: dict) -> str:
    safe = {}
    for key, value in record.items():
        if isinstance(value, float) and not math.isfinite(value):
            value = None
        safe[key] = value
    return json.dumps(safe, sort_keys=True, separators=(",", ":")) + "\n"


def save_checkpoint(path, cfg: RunConfig, agent: Agent, harness_meta: dict) -> None:
    arrays, agent_meta = agent.to_state()
    meta = {
        "config": serialize_config(cfg),
        "agent": agent_meta,
        "harness": harness_meta,
    }
    payload = dict(arrays)
    payload["meta_json"] = np.asarray([json.dumps(meta, sort_keys=True)])
    payload["format"] = np.asarray([_CKPT_FORMAT])
    tmp = Path(path).with_suffix(".tmp.npz")
    np.savez(tmp, **payload)
    tmp.replace(path)


def load_checkpoint(path):
    """Returns (cfg, agent, harness_meta) rebuilt from a checkpoint file."""
    try:
        data = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    with data:
        if "format" not in data:
            raise CheckpointError(f"{path} is not a checkpoint (no version header)")
        fmt = str(np.asarray(data["format"])[0])
        if fmt != _CKPT_FORMAT:
            raise CheckpointError(f"unsupported checkpoint version {fmt!r} (want {_CKPT_FORMAT!r})")
        meta = json.loads(str(np.asarray(data["meta_json"])[0]))
        cfg = parse_config(meta["config"])
        agent = Agent(cfg, build_env(cfg), root_seed=cfg.seed)
        arrays = {key: data[key] for key in data.files}
        agent.load_state(arrays, meta["agent"])
    return cfg, agent, meta["harness"]


def _episode_record(agent: Agent, ep, episode_index: int) -> dict:
    decisions = ep.decisions
    teacher_fraction = (
        float(np.mean([d.used_teacher for d in decisions])) if decisions else 0.0
    )
    stats = agent.last_repr_stats
    return {
        "episode": episode_index,
        "env_steps": agent.env_steps,
        "success": bool(ep.success),
        "return": float(ep.env_rewards.sum()),
        "contrastive_loss": stats["contrastive"],
        "stability_loss": stats["stability"],
        "teacher_fraction": teacher_fraction,
        "p": agent.schedule.p,
        "graph_builds": agent.graph_builds,
    }


def train(cfg: RunConfig, out_dir, resume: bool = False) -> dict:
    cfg.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ckpt_path = out / "checkpoint.npz"

    if resume and ckpt_path.exists():
        cfg, agent, harness = load_checkpoint(ckpt_path)
        mode = "a"
        log.info("resuming run at %d env steps", agent.env_steps)
    else:
        agent = Agent(cfg, build_env(cfg), root_seed=cfg.seed)
        harness = {"evals_done": 0, "episode_index": 0}
        (out / "config.cfg").write_text(serialize_config(cfg), encoding="utf-8")
        mode = "w"

    episodes_log = open(out / "episodes.jsonl", mode, encoding="utf-8")
    evals_log = open(out / "evals.jsonl", mode, encoding="utf-8")
    timing_log = open(out / "timing.jsonl", mode, encoding="utf-8")

    def run_eval_point() -> None:
        rate, results = agent.evaluate(cfg.eval_episodes, cfg.eval_seed)
        evals_log.write(
            _json_line(
                {
                    "env_steps": agent.env_steps,
                    "success_rate": rate,
                    "successes": results,
                }
            )
        )
        evals_log.flush()

    try:
        while agent.env_steps < cfg.total_steps:
            t0 = time.perf_counter()
            ep_seed = int(agent.rngs["env"].integers(2**31 - 1))
            ep = agent.run_episode(ep_seed, "train")
            agent.scheduled_maintenance()
            harness["episode_index"] += 1
            episodes_log.write(_json_line(_episode_record(agent, ep, harness["episode_index"])))
            timing_log.write(
                _json_line(
                    {
                        "episode": harness["episode_index"],
                        "wall_clock_ms": (time.perf_counter() - t0) * 1000.0,
                    }
                )
            )
            while (harness["evals_done"] + 1) * cfg.eval_every_steps <= agent.env_steps:
                harness["evals_done"] += 1
                run_eval_point()
            if agent.env_steps // cfg.checkpoint_every_steps > harness.get("ckpts_done", 0):
                harness["ckpts_done"] = agent.env_steps // cfg.checkpoint_every_steps
                episodes_log.flush()
                save_checkpoint(ckpt_path, cfg, agent, harness)
        save_checkpoint(ckpt_path, cfg, agent, harness)
    finally:
        episodes_log.close()
        evals_log.close()
        timing_log.close()

    return {
        "env_steps": agent.env_steps,
        "episodes": harness["episode_index"],
        "out_dir": str(out),
    }


def evaluate(checkpoint_path, episodes: int, seed: int) -> dict:
    _, agent, _ = load_checkpoint(checkpoint_path)
    rate, results = agent.evaluate(episodes, seed)
    return {"success_rate": rate, "successes": results, "episodes": episodes}


def dump(checkpoint_path, what: str, out_path, count: int = 1) -> None:
    """Export latent trajectories, the last graph, or the count histogram."""
    _, agent, _ = load_checkpoint(checkpoint_path)
    out = Path(out_path)
    if what == "latent":
        episodes = list(agent.store.episodes)[-count:]
        if not episodes:
            raise ValueError("checkpoint holds no episodes to dump")
        d = agent.goal_dim
        header = "step,x,y," + ",".join(f"z_{i + 1}" for i in range(d))
        lines = [header]
        for ep in episodes:
            latents = agent.encode(ep.states)
            for t in range(ep.states.shape[0]):
                coords = ",".join(repr(float(v)) for v in latents[t])
                x, y = float(ep.states[t, 0]), float(ep.states[t, 1])
                lines.append(f"{t},{x!r},{y!r},{coords}")
        out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    elif what == "graph":
        graph = agent.last_graph
        if graph is None:
            raise ValueError("checkpoint holds no built graph")
        nodes = []
        for i, node in enumerate(graph.nodes):
            nodes.append(
                {
                    "index": i,
                    "kind": node.kind,
                    "latent": [float(v) for v in node.latent],
                    "novelty": float(node.novelty),
                    "source": None
                    if node.source_state is None
                    else [float(v) for v in node.source_state],
                }
            )
        edges = []
        for i in range(graph.size):
            for j in range(graph.size):
                if i == j:
                    continue
                edges.append(
                    {
                        "from": i,
                        "to": j,
                        "u_raw": float(graph.u_raw[i, j]),
                        "u_prop": float(graph.u_prop[i, j]),
                    }
                )
        doc = {
            "nodes": nodes,
            "edges": edges,
            "current_index": graph.current_index,
            "goal_index": graph.goal_index,
            "built_at": graph.built_at,
        }
        out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    elif what == "counts":
        table = agent.table
        lines = ["bucket,count"]
        for bucket in np.flatnonzero(table.counts):
            lines.append(f"{int(bucket)},{int(table.counts[bucket])}")
        out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unknown dump target {what!r} (want latent|graph|counts)")
