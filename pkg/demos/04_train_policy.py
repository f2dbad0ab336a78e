"""Training the two-action ask/recommend policy with deep Q-learning.

Simulated sessions stream transitions into the replay buffer; after each
episode the value network takes one RMSprop step per executed turn against
the periodically synced target network.  The per-episode return curve shows
the policy moving past its epsilon-greedy start.
"""

import numpy as np

from pathrec import DqnConfig
from pathrec.data import SyntheticSpec, generate_synthetic, split_interactions
from pathrec.embeddings import TrainConfig, train_embeddings
from pathrec.engine import train_policy

spec = SyntheticSpec(n_users=60, n_items=150, n_attributes=20,
                     attrs_per_item=(3, 5), interactions_per_user=10,
                     structure="two_level", n_domains=4,
                     domain_weights=(0.55, 0.25, 0.12, 0.08),
                     splitter_coverage=0.5, favored_bias=0.5, seed=11)
g, interactions = generate_synthetic(spec)
split = split_interactions(interactions, rng=np.random.default_rng(11))
emb, _ = train_embeddings(g, split.train, TrainConfig(epochs=2, dimension=16, seed=11))

cfg = DqnConfig(seed=11, lr=2e-4)
print(f"training on {len(split.validation)} validation interactions "
      f"(gamma={cfg.gamma}, batch={cfg.batch_size}, "
      f"target sync every {cfg.target_sync_every} episodes)")
net, returns = train_policy(g, emb, split.validation, cfg, 600,
                            np.random.default_rng(11))

print("\nper-episode return, smoothed over 50-episode windows:")
for start in range(0, 600, 50):
    window = returns[start:start + 50]
    bar = "#" * max(0, int((np.mean(window) + 0.5) * 30))
    print(f"  episodes {start:3d}-{start + 49:3d}  "
          f"mean return {np.mean(window):+.3f}  {bar}")
print(f"\nfirst-100 mean {np.mean(returns[:100]):+.3f}  "
      f"last-100 mean {np.mean(returns[-100:]):+.3f}")
