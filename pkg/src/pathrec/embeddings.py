"""Latent vectors for users, items, and attributes, plus their offline training.

Scoring is two inner-product terms: an item's score against a user is
``u.v + sum_p v.p`` over the attributes the user has confirmed this session;
the attribute-affinity twin ``u.p + sum_pi p.pi`` exists only as a training
objective and is never used at inference.

Training is stochastic gradient descent on a pairwise log-sigmoid loss over
three sample pools: global item negatives (d1), candidate-set item negatives
(d2), and attribute negatives (d3).  Item and attribute tasks carry separate
learning rates; L2 decay is applied per sample to the touched rows.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .graph import HeteroGraph

EMBED_MAGIC = "CPR-EMB-1"


def sigmoid(x):
    """Numerically stable logistic function for scalars or arrays."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def neg_log_sigmoid(x) -> float:
    """-ln(sigmoid(x)) computed as log(1 + e^-x) without overflow."""
    return float(np.logaddexp(0.0, -x))


@dataclass
class EmbeddingTable:
    """One d-vector per user, item, and attribute (float64 throughout)."""

    user: np.ndarray
    item: np.ndarray
    attribute: np.ndarray

    @property
    def dimension(self) -> int:
        return self.user.shape[1]

    @classmethod
    def random_init(
        cls,
        counts: tuple[int, int, int],
        dimension: int = 64,
        scale: float = 0.01,
        seed: int = 0,
    ) -> "EmbeddingTable":
        # Small symmetric init keeps pairwise deltas away from sigmoid saturation.
        rng = np.random.default_rng(seed)
        n_users, n_items, n_attrs = counts
        return cls(
            user=rng.uniform(-scale, scale, size=(n_users, dimension)),
            item=rng.uniform(-scale, scale, size=(n_items, dimension)),
            attribute=rng.uniform(-scale, scale, size=(n_attrs, dimension)),
        )

    def user_vector(self, u: int | None) -> np.ndarray:
        """Row for user ``u``; ``None`` gives the cold-start mean of all users."""
        if u is None:
            return self.user.mean(axis=0)
        return self.user[u]

    def validate(self) -> None:
        d = self.dimension
        for name, arr in (("user", self.user), ("item", self.item), ("attribute", self.attribute)):
            if arr.ndim != 2 or arr.shape[1] != d:
                raise ValueError(f"{name} embeddings have shape {arr.shape}, expected (*, {d})")
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} embeddings contain non-finite entries")


@dataclass
class TrainConfig:
    l2: float = 0.001
    lr_item: float = 0.01
    lr_attr: float = 0.001
    epochs: int = 5
    dimension: int = 64
    init_scale: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.lr_item < 0 or self.lr_attr < 0 or self.l2 < 0:
            raise ValueError("rates must be non-negative")


class PairwiseItemSample(NamedTuple):
    user: int
    pos_item: int
    neg_item: int
    accepted: tuple[int, ...]
    source: str  # "d1" (global negative) or "d2" (candidate-set negative)


class PairwiseAttrSample(NamedTuple):
    user: int
    pos_attr: int
    neg_attr: int
    accepted: tuple[int, ...]


@dataclass
class TrainingCorpus:
    d1: list[PairwiseItemSample] = field(default_factory=list)
    d2: list[PairwiseItemSample] = field(default_factory=list)
    d3: list[PairwiseAttrSample] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.d1) + len(self.d2) + len(self.d3)


# -- scoring ----------------------------------------------------------------


def score_item(
    emb: EmbeddingTable, u: int | None, v: int, accepted: Iterable[int] = ()
) -> float:
    """u.v plus one v.p term per confirmed attribute."""
    q = emb.user_vector(u).copy()
    for p in accepted:
        q += emb.attribute[p]
    return float(emb.item[v] @ q)


def score_items_batch(
    emb: EmbeddingTable,
    u: int | None,
    item_ids: Sequence[int],
    accepted: Iterable[int] = (),
) -> np.ndarray:
    """Vectorized :func:`score_item` over ``item_ids``."""
    q = emb.user_vector(u).copy()
    for p in accepted:
        q += emb.attribute[p]
    return emb.item[np.asarray(item_ids, dtype=np.intp)] @ q


def score_attr_affinity(
    emb: EmbeddingTable, u: int | None, p: int, accepted: Iterable[int] = ()
) -> float:
    """u.p plus one p.pi term per confirmed attribute (training-time only)."""
    q = emb.user_vector(u).copy()
    for pi in accepted:
        q += emb.attribute[pi]
    return float(emb.attribute[p] @ q)


# -- corpus collection -------------------------------------------------------


def collect_training_corpus(
    g: HeteroGraph,
    interactions: Sequence[tuple[int, int]],
    rng: np.random.Generator,
) -> TrainingCorpus:
    """Replay anchored sessions over the training interactions to build d1/d2/d3.

    For each (user, item) pair, every attribute of the item is tried as the
    session opener; the remaining attributes are confirmed one by one in a
    seeded random order.  At each confirmed prefix we emit one global item
    negative, one candidate-set item negative (when the candidate pool has
    non-interacted items left), and one attribute negative per not-yet-
    confirmed attribute of the target.
    """
    interacted: dict[int, set[int]] = {}
    for u, v in interactions:
        interacted.setdefault(u, set()).add(v)
    all_items = set(range(g.item_count))
    all_attrs = set(range(g.attribute_count))

    corpus = TrainingCorpus()
    for u, v in interactions:
        target_attrs = g.attributes_of_item(v)
        if not target_attrs:
            warnings.warn(f"item {v} has no attributes; skipping interaction ({u}, {v})")
            continue
        non_interacted = np.array(sorted(all_items - interacted[u]), dtype=np.intp)
        attr_negatives = np.array(sorted(all_attrs - set(target_attrs)), dtype=np.intp)
        for p0 in target_attrs:
            rest = [p for p in target_attrs if p != p0]
            rng.shuffle(rest)
            accepted: list[int] = []
            cand: set[int] = set()
            for step, p in enumerate([p0] + rest):
                accepted.append(p)
                if step == 0:
                    cand = set(g.items_with_attribute(p))
                else:
                    cand.intersection_update(g.items_with_attribute(p))
                prefix = tuple(sorted(accepted))
                if non_interacted.size:
                    corpus.d1.append(
                        PairwiseItemSample(
                            u, v, int(rng.choice(non_interacted)), prefix, "d1"
                        )
                    )
                d2_pool = sorted(cand - interacted[u])
                if d2_pool:
                    corpus.d2.append(
                        PairwiseItemSample(
                            u, v, int(d2_pool[rng.integers(len(d2_pool))]), prefix, "d2"
                        )
                    )
                if attr_negatives.size:
                    for p_pos in target_attrs:
                        if p_pos in accepted:
                            continue
                        corpus.d3.append(
                            PairwiseAttrSample(
                                u, p_pos, int(rng.choice(attr_negatives)), prefix
                            )
                        )
    return corpus


# -- loss and gradients -------------------------------------------------------


def _item_delta(emb: EmbeddingTable, s: PairwiseItemSample) -> float:
    return score_item(emb, s.user, s.pos_item, s.accepted) - score_item(
        emb, s.user, s.neg_item, s.accepted
    )


def _attr_delta(emb: EmbeddingTable, s: PairwiseAttrSample) -> float:
    return score_attr_affinity(emb, s.user, s.pos_attr, s.accepted) - score_attr_affinity(
        emb, s.user, s.neg_attr, s.accepted
    )


def _touched_rows(corpus: TrainingCorpus) -> set[tuple[str, int]]:
    rows: set[tuple[str, int]] = set()
    for s in corpus.d1 + corpus.d2:
        rows.add(("user", s.user))
        rows.add(("item", s.pos_item))
        rows.add(("item", s.neg_item))
        rows.update(("attribute", p) for p in s.accepted)
    for s in corpus.d3:
        rows.add(("user", s.user))
        rows.add(("attribute", s.pos_attr))
        rows.add(("attribute", s.neg_attr))
        rows.update(("attribute", p) for p in s.accepted)
    return rows


def pairwise_loss(emb: EmbeddingTable, corpus: TrainingCorpus, l2: float = 0.0) -> float:
    """Sum of -ln(sigmoid(pos - neg)) over all samples, plus L2 on touched rows."""
    total = 0.0
    for s in corpus.d1 + corpus.d2:
        total += neg_log_sigmoid(_item_delta(emb, s))
    for s in corpus.d3:
        total += neg_log_sigmoid(_attr_delta(emb, s))
    if l2:
        tables = {"user": emb.user, "item": emb.item, "attribute": emb.attribute}
        for kind, idx in _touched_rows(corpus):
            row = tables[kind][idx]
            total += l2 * float(row @ row)
    return total


def pairwise_loss_grad(
    emb: EmbeddingTable, corpus: TrainingCorpus, l2: float = 0.0
) -> dict[str, np.ndarray]:
    """Analytic gradient of :func:`pairwise_loss` w.r.t. every embedding row."""
    grads = {
        "user": np.zeros_like(emb.user),
        "item": np.zeros_like(emb.item),
        "attribute": np.zeros_like(emb.attribute),
    }
    for s in corpus.d1 + corpus.d2:
        coef = -sigmoid(-_item_delta(emb, s))  # d/d(delta) of -ln(sigmoid(delta))
        u_vec = emb.user_vector(s.user)
        diff = emb.item[s.pos_item] - emb.item[s.neg_item]
        q = u_vec + sum((emb.attribute[p] for p in s.accepted), np.zeros(emb.dimension))
        grads["user"][s.user] += coef * diff
        grads["item"][s.pos_item] += coef * q
        grads["item"][s.neg_item] += -coef * q
        for p in s.accepted:
            grads["attribute"][p] += coef * diff
    for s in corpus.d3:
        coef = -sigmoid(-_attr_delta(emb, s))
        u_vec = emb.user_vector(s.user)
        diff = emb.attribute[s.pos_attr] - emb.attribute[s.neg_attr]
        q = u_vec + sum((emb.attribute[p] for p in s.accepted), np.zeros(emb.dimension))
        grads["user"][s.user] += coef * diff
        grads["attribute"][s.pos_attr] += coef * q
        grads["attribute"][s.neg_attr] += -coef * q
        for p in s.accepted:
            grads["attribute"][p] += coef * diff
    if l2:
        tables = {"user": emb.user, "item": emb.item, "attribute": emb.attribute}
        for kind, idx in _touched_rows(corpus):
            grads[kind][idx] += 2.0 * l2 * tables[kind][idx]
    return grads


# -- SGD ----------------------------------------------------------------------


def _apply_item_step(emb: EmbeddingTable, s: PairwiseItemSample, lr: float, l2: float) -> float:
    delta = _item_delta(emb, s)
    if not np.isfinite(delta):
        raise FloatingPointError(
            f"non-finite pairwise delta on item sample {s}; embeddings diverged"
        )
    coef = -sigmoid(-delta)
    u_vec = emb.user_vector(s.user)
    diff = emb.item[s.pos_item] - emb.item[s.neg_item]
    q = u_vec + sum((emb.attribute[p] for p in s.accepted), np.zeros(emb.dimension))
    emb.user[s.user] -= lr * (coef * diff + 2 * l2 * emb.user[s.user])
    emb.item[s.pos_item] -= lr * (coef * q + 2 * l2 * emb.item[s.pos_item])
    emb.item[s.neg_item] -= lr * (-coef * q + 2 * l2 * emb.item[s.neg_item])
    for p in s.accepted:
        emb.attribute[p] -= lr * (coef * diff + 2 * l2 * emb.attribute[p])
    return neg_log_sigmoid(delta)


def _apply_attr_step(emb: EmbeddingTable, s: PairwiseAttrSample, lr: float, l2: float) -> float:
    delta = _attr_delta(emb, s)
    if not np.isfinite(delta):
        raise FloatingPointError(
            f"non-finite pairwise delta on attribute sample {s}; embeddings diverged"
        )
    coef = -sigmoid(-delta)
    u_vec = emb.user_vector(s.user)
    diff = emb.attribute[s.pos_attr] - emb.attribute[s.neg_attr]
    q = u_vec + sum((emb.attribute[p] for p in s.accepted), np.zeros(emb.dimension))
    emb.user[s.user] -= lr * (coef * diff + 2 * l2 * emb.user[s.user])
    emb.attribute[s.pos_attr] -= lr * (coef * q + 2 * l2 * emb.attribute[s.pos_attr])
    emb.attribute[s.neg_attr] -= lr * (-coef * q + 2 * l2 * emb.attribute[s.neg_attr])
    for p in s.accepted:
        emb.attribute[p] -= lr * (coef * diff + 2 * l2 * emb.attribute[p])
    return neg_log_sigmoid(delta)


def sgd_epoch(
    emb: EmbeddingTable,
    corpus: TrainingCorpus,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> float:
    """One shuffled pass of per-sample SGD; returns the full loss afterwards."""
    tagged: list[tuple[str, object]] = [("item", s) for s in corpus.d1 + corpus.d2]
    tagged += [("attr", s) for s in corpus.d3]
    for i in rng.permutation(len(tagged)):
        task, s = tagged[i]
        if task == "item":
            _apply_item_step(emb, s, cfg.lr_item, cfg.l2)
        else:
            _apply_attr_step(emb, s, cfg.lr_attr, cfg.l2)
    return pairwise_loss(emb, corpus, cfg.l2)


def train_embeddings(
    g: HeteroGraph,
    interactions: Sequence[tuple[int, int]],
    cfg: TrainConfig,
) -> tuple[EmbeddingTable, list[float]]:
    """Corpus collection plus the full epoch loop; returns table and loss curve."""
    rng = np.random.default_rng(cfg.seed)
    corpus = collect_training_corpus(g, interactions, rng)
    emb = EmbeddingTable.random_init(
        (g.user_count, g.item_count, g.attribute_count),
        dimension=cfg.dimension,
        scale=cfg.init_scale,
        seed=cfg.seed,
    )
    curve = [sgd_epoch(emb, corpus, cfg, rng) for _ in range(cfg.epochs)]
    return emb, curve


# -- checkpointing -------------------------------------------------------------


def save_embeddings(path, emb: EmbeddingTable, cfg: TrainConfig | None = None) -> None:
    """Versioned binary container: magic line, JSON header, raw float64 rows."""
    emb.validate()
    header = {
        "dimension": emb.dimension,
        "users": emb.user.shape[0],
        "items": emb.item.shape[0],
        "attributes": emb.attribute.shape[0],
        "train_config": asdict(cfg) if cfg else None,
    }
    with open(path, "wb") as fh:
        fh.write(EMBED_MAGIC.encode() + b"\n")
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")).encode() + b"\n")
        for arr in (emb.user, emb.item, emb.attribute):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_embeddings(path) -> tuple[EmbeddingTable, dict | None]:
    with open(path, "rb") as fh:
        magic = fh.readline().rstrip(b"\n").decode()
        if magic != EMBED_MAGIC:
            raise ValueError(f"not an embedding checkpoint (magic {magic!r})")
        header = json.loads(fh.readline().decode())
        d = header["dimension"]
        arrays = []
        for count in (header["users"], header["items"], header["attributes"]):
            buf = fh.read(count * d * 8)
            arrays.append(np.frombuffer(buf, dtype="<f8").reshape(count, d).copy())
    emb = EmbeddingTable(*arrays)
    emb.validate()
    return emb, header.get("train_config")
