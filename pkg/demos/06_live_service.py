"""Driving a live session over HTTP, the way the browser client does.

Starts the session service in-process on a random port, opens a session
from an attribute, answers the system's questions like a user anchored on a
hidden favorite item, and prints the explanation path that the accepted
recommendation earned.
"""

import json
import threading
import urllib.request

import numpy as np

from pathrec import DqnConfig, QNetwork
from pathrec.data import SyntheticSpec, generate_synthetic, split_interactions
from pathrec.embeddings import TrainConfig, train_embeddings
from pathrec.service import ServiceConfig, SessionService, serve

spec = SyntheticSpec(n_users=30, n_items=80, n_attributes=12,
                     attrs_per_item=(2, 4), interactions_per_user=6, seed=5)
g, interactions = generate_synthetic(spec)
split = split_interactions(interactions, rng=np.random.default_rng(5))
emb, _ = train_embeddings(g, split.train, TrainConfig(epochs=2, dimension=8, seed=5))
cfg = DqnConfig(seed=5)
net = QNetwork(cfg.state_dim, cfg.hidden, seed=5)

service = SessionService(
    g, emb, net,
    ServiceConfig(attribute_names={p: f"tag-{p}" for p in range(12)},
                  item_names={v: f"artist-{v}" for v in range(80)}),
)
server = serve(service, host="127.0.0.1", port=0)
threading.Thread(target=server.serve_forever, daemon=True).start()
base = f"http://127.0.0.1:{server.server_address[1]}"
print(f"service up at {base}")


def call(path, payload=None):
    data = json.dumps(payload).encode() if payload is not None else None
    req = urllib.request.Request(base + path, data=data,
                                 headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req) as resp:
        return json.loads(resp.read().decode())


# Hidden anchor: the user secretly wants this item and answers accordingly.
target = split.test[0][1]
target_attrs = set(g.attributes_of_item(target))
p0 = sorted(target_attrs)[0]
print(f"hidden favorite: artist-{target} with tags {sorted(target_attrs)}")

resp = call("/sessions", {"initial_attribute": p0})
sid, nonce = resp["session_id"], resp["nonce"]
for turn in range(1, 16):
    move = resp["move"]
    if move["kind"] == "ask":
        answer = move["attribute"]["id"] in target_attrs
        print(f"turn {turn:2d}  {move['prompt']:40s} -> {'yes' if answer else 'no'}")
    else:
        ids = [it["id"] for it in move["items"]]
        answer = target in ids
        print(f"turn {turn:2d}  recommends {ids} -> {'take it' if answer else 'none of these'}")
    resp = call(f"/sessions/{sid}/answer", {"accept": answer, "nonce": nonce})
    if "outcome" in resp:
        break
    nonce = resp["nonce"]

print(f"\noutcome: {resp['outcome']}")
print(f"path walked: {[p['name'] for p in resp['path']]}")
server.shutdown()
