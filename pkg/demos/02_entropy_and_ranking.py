"""How a session scores items and picks the next question.

Starts a session from one attribute, ranks the candidate items with the
embedding model, and scores each candidate attribute with weighted entropy:
an attribute's probability mass is the sigmoid-score share of the candidate
items that carry it, and the best question is the one whose mass sits
farthest from both 0 and 1.
"""

import numpy as np

from pathrec import (
    EmbeddingTable,
    apply_accept_attribute,
    init_session,
    rank_attributes,
    rank_items,
    weighted_entropy,
)
from pathrec.data import SyntheticSpec, generate_synthetic

spec = SyntheticSpec(n_users=30, n_items=80, n_attributes=12,
                     attrs_per_item=(2, 4), interactions_per_user=6, seed=7)
g, interactions = generate_synthetic(spec)
rng = np.random.default_rng(7)
emb = EmbeddingTable(
    rng.normal(0, 0.4, (30, 8)),
    rng.normal(0, 0.4, (80, 8)),
    rng.normal(0, 0.4, (12, 8)),
)

user, target = interactions[0]
p0 = g.attributes_of_item(target)[0]
state = init_session(g, user, p0)
print(f"user {user} opens with attribute {p0}; "
      f"{len(state.candidate_items)} candidate items, "
      f"{len(state.candidate_attributes)} askable attributes")

print("\n-- top items by embedding score --")
for v, score in rank_items(g, emb, state)[:5]:
    print(f"  item {v:3d}  score {score:+.3f}")

print("\n-- askable attributes by weighted entropy --")
for p, ent in rank_attributes(g, emb, state)[:5]:
    same = weighted_entropy(g, emb, state, p)
    print(f"  attribute {p:3d}  entropy {ent:.4f} (scalar query agrees: {same:.4f})")

best = rank_attributes(g, emb, state)[0][0]
state = apply_accept_attribute(g, state, best)
print(f"\nuser accepts attribute {best}: path {state.path}, "
      f"candidates down to {len(state.candidate_items)}")
