"""Run configuration: a flat key-value text format with a strict schema.

One `key = value` per line, `#` comments, unknown keys rejected. The
defaults carry the reference hyperparameters (subgoal interval 50,
latent dim 2, contrast scale 0.1 / power 1, stable fraction 0.3, 400
landmarks); the bundled desk-scale configs override them explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

_TRUE = ("1", "true", "yes", "on")
_FALSE = ("0", "false", "no", "off")


class ConfigError(ValueError):
    """Unparseable, unknown, or out-of-range configuration."""


@dataclass
class RunConfig:
    env: str = "umaze"
    seed: int = 0
    eval_seed: int = 100_000
    total_steps: int = 300_000
    max_steps: int = 0  # 0 = use the maze's own episode limit
    subgoal_interval: int = 50
    latent_dim: int = 2
    contrast_scale: float = 0.1
    contrast_power: int = 1
    contrast_eps: float = 1e-6
    stable_fraction: float = 0.3
    discount: float = 0.99
    temperature: float = 0.1
    student_temperature: float = 0.2
    landmark_count: int = 400
    graph_sample_size: int = 1000
    hash_bits: int = 16
    goal_tolerance: float = 0.0  # 0 = use the maze's own tolerance
    latent_goal_tolerance: float = 0.0  # 0 = auto (0.1 x latent diameter)
    episode_capacity: int = 500
    triplet_capacity: int = 10_000
    repr_every_episodes: int = 100
    repr_steps: int = 100
    repr_batch: int = 128
    low_batch: int = 128
    low_update_every: int = 1
    student_batch: int = 64
    warmup_steps: int = 1500
    lr_repr: float = 1e-3
    lr_q: float = 1e-3
    lr_uvfa: float = 1e-3
    lr_student: float = 1e-3
    hidden: str = "64,64"
    target_sync: int = 250
    her_fraction: float = 0.5
    novelty_mode: str = "exact"
    use_graphs: bool = True
    use_teacher: bool = True
    teacher_rule: str = "pseudocode"
    eval_every_steps: int = 10_000
    eval_episodes: int = 10
    checkpoint_every_steps: int = 100_000
    noise_dims: int = 0

    def hidden_dims(self) -> tuple[int, ...]:
        return tuple(int(x) for x in self.hidden.split(",") if x.strip())

    def validate(self) -> None:
        checks = [
            (self.total_steps >= 0, "total_steps must be >= 0"),
            (self.max_steps >= 0, "max_steps must be >= 0"),
            (self.subgoal_interval >= 1, "subgoal_interval must be >= 1"),
            (self.latent_dim >= 1, "latent_dim must be >= 1"),
            (self.contrast_scale > 0, "contrast_scale must be > 0"),
            (self.contrast_power >= 1, "contrast_power must be >= 1"),
            (self.contrast_eps > 0, "contrast_eps must be > 0"),
            (0.0 <= self.stable_fraction <= 1.0, "stable_fraction must lie in [0, 1]"),
            (0.0 <= self.discount < 1.0, "discount must lie in [0, 1)"),
            (self.temperature > 0, "temperature must be > 0"),
            (self.student_temperature > 0, "student_temperature must be > 0"),
            (self.landmark_count >= 1, "landmark_count must be >= 1"),
            (self.graph_sample_size >= 1, "graph_sample_size must be >= 1"),
            (1 <= self.hash_bits <= 24, "hash_bits must lie in [1, 24]"),
            (self.goal_tolerance >= 0, "goal_tolerance must be >= 0"),
            (self.latent_goal_tolerance >= 0, "latent_goal_tolerance must be >= 0"),
            (self.episode_capacity >= 1, "episode_capacity must be >= 1"),
            (self.triplet_capacity >= 1, "triplet_capacity must be >= 1"),
            (self.repr_every_episodes >= 1, "repr_every_episodes must be >= 1"),
            (self.repr_steps >= 1, "repr_steps must be >= 1"),
            (self.repr_batch >= 1, "repr_batch must be >= 1"),
            (self.low_batch >= 1, "low_batch must be >= 1"),
            (self.low_update_every >= 1, "low_update_every must be >= 1"),
            (self.student_batch >= 1, "student_batch must be >= 1"),
            (self.warmup_steps >= 0, "warmup_steps must be >= 0"),
            (self.lr_repr > 0, "lr_repr must be > 0"),
            (self.lr_q > 0, "lr_q must be > 0"),
            (self.lr_uvfa > 0, "lr_uvfa must be > 0"),
            (self.lr_student > 0, "lr_student must be > 0"),
            (self.target_sync >= 1, "target_sync must be >= 1"),
            (0.0 <= self.her_fraction <= 1.0, "her_fraction must lie in [0, 1]"),
            (self.novelty_mode in ("exact", "incremental"), "novelty_mode must be exact|incremental"),
            (self.teacher_rule in ("pseudocode", "text"), "teacher_rule must be pseudocode|text"),
            (self.eval_every_steps >= 1, "eval_every_steps must be >= 1"),
            (self.eval_episodes >= 0, "eval_episodes must be >= 0"),
            (self.checkpoint_every_steps >= 1, "checkpoint_every_steps must be >= 1"),
            (self.noise_dims >= 0, "noise_dims must be >= 0"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        try:
            dims = self.hidden_dims()
        except ValueError as exc:
            raise ConfigError(f"hidden must be a comma list of ints: {self.hidden!r}") from exc
        if not dims or any(d < 1 for d in dims):
            raise ConfigError("hidden layer sizes must be positive")


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _parse_value(name: str, text: str):
    kind = _FIELD_TYPES[name]
    raw = text.strip()
    if kind == "bool":
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ConfigError(f"bad boolean for {name!r}: {raw!r}")
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad {kind} for {name!r}: {raw!r}") from exc
    return raw


def parse_config(text: str) -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, value)
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def serialize_config(cfg: RunConfig) -> str:
    lines = []
    for f in sorted(fields(RunConfig), key=lambda f: f.name):
        value = getattr(cfg, f.name)
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
