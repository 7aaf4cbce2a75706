"""Train the latent encoder on random-walk episodes and inspect it.

States one step apart should embed close together, states a subgoal
interval apart should embed far apart; the drift penalty keeps well-fit
triplets from moving between updates.
"""

import numpy as np

from landmarkrl import Adam, ReprFn, TripletBuffer, update_representation
from landmarkrl.agent import Episode


def random_walk_episode(rng, length=120, dim=4):
    steps = rng.standard_normal((length, dim)) * 0.15
    states = np.cumsum(np.concatenate([np.zeros((1, dim)), steps]), axis=0)
    n = states.shape[0] - 1
    return Episode(
        states=states,
        actions=np.zeros(n, dtype=np.int64),
        env_rewards=-np.ones(n),
        intrinsic_rewards=np.zeros(n),
        goals=np.zeros((n, 2)),
        success=False,
        decisions=[],
    )


rng = np.random.default_rng(3)
episodes = [random_walk_episode(rng) for _ in range(30)]

encoder = ReprFn(state_dim=4, latent_dim=2, hidden=(64, 64), rng=np.random.default_rng(0))
encoder.snapshot()
optimizer = Adam(encoder.net.params(), lr=1e-3)
buffer = TripletBuffer(capacity=5000)

interval = 10


def probe(tag):
    near, far = [], []
    for ep in episodes[:10]:
        z = encoder.encode(ep.states)
        near.append(np.linalg.norm(z[:-1] - z[1:], axis=1).mean())
        far.append(np.linalg.norm(z[:-interval] - z[interval:], axis=1).mean())
    print(f"{tag}: mean 1-step latent distance {np.mean(near):.3f}, "
          f"mean {interval}-step distance {np.mean(far):.3f}")


probe("before training")
for step in range(600):
    stats = update_representation(
        encoder, optimizer, episodes, buffer,
        offset=interval, scale=0.1, power=1, eps=1e-6,
        stable_fraction=0.3, batch_size=128, rng=rng,
    )
    if (step + 1) % 200 == 0:
        print(f"  step {step + 1}: contrastive {stats['contrastive']:.3f}, "
              f"stability {stats['stability']:.4f}, buffer {len(buffer)} triplets")
probe("after training")

print("\nthe temporal structure should now be visible: the far/near ratio is")
z = encoder.encode(episodes[0].states)
near = np.linalg.norm(z[:-1] - z[1:], axis=1).mean()
far = np.linalg.norm(z[:-interval] - z[interval:], axis=1).mean()
print(f"  {far / near:.1f}x (roughly the subgoal interval when well trained)")
