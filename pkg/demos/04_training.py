"""Short end-to-end training run with evaluation and artifact dumps.

A scaled-down budget so the demo finishes in about a minute; see
configs/umaze_desk.cfg for the full desk-scale setup and the frontend/
package for rendering the dumped artifacts.
"""

import json
import tempfile
from pathlib import Path

from landmarkrl import RunConfig, dump, evaluate, train

cfg = RunConfig(
    env="umaze",
    seed=0,
    total_steps=12_000,
    subgoal_interval=10,
    landmark_count=20,
    graph_sample_size=96,
    warmup_steps=1000,
    repr_every_episodes=10,
    repr_steps=60,
    eval_every_steps=4000,
    eval_episodes=5,
    checkpoint_every_steps=100_000,
)
cfg.validate()

out = Path(tempfile.mkdtemp(prefix="landmarkrl-demo-"))
print(f"training {cfg.total_steps} steps on {cfg.env} -> {out}")
summary = train(cfg, out)
print("summary:", summary)

print("\neval curve (10-episode success averages during training):")
for line in (out / "evals.jsonl").read_text().splitlines():
    record = json.loads(line)
    bar = "#" * int(20 * record["success_rate"])
    print(f"  {record['env_steps']:>7} steps  {record['success_rate']:.2f} {bar}")

result = evaluate(out / "checkpoint.npz", episodes=5, seed=123)
print(f"\nfresh evaluation from the hardest start: {result['success_rate']:.2f}")

for what, name in (("latent", "latent.csv"), ("graph", "graph.json"), ("counts", "counts.csv")):
    dump(out / "checkpoint.npz", what, out / name)
    print(f"dumped {what} -> {out / name}")

print("\nrender the artifacts with the frontend package:")
print(f"  cd frontend && npm run plots -- curves {out} -o curves.svg")
print(f"  cd frontend && npm run plots -- latent {out / 'latent.csv'} -o latent.svg")
print(f"  cd frontend && npm run plots -- visits {out / 'counts.csv'} -o visits.svg")
