"""Deterministic fan-out of one root seed into named substreams."""

from __future__ import annotations

import hashlib
import json

import numpy as np


def _name_tag(name: str) -> int:
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def substream(root_seed: int, name: str) -> np.random.Generator:
    """Generator for a named component, independent of all other names."""
    return np.random.default_rng(np.random.SeedSequence([int(root_seed), _name_tag(name)]))


def generator_state(rng: np.random.Generator) -> str:
    return json.dumps(rng.bit_generator.state, sort_keys=True)


def restore_generator(state_json: str) -> np.random.Generator:
    rng = np.random.default_rng(0)
    rng.bit_generator.state = json.loads(state_json)
    return rng
