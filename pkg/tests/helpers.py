"""Independent oracles and small builders shared across the test suite.

Everything here is deliberately written from scratch against the raw edge
list, not against the package's adjacency index, so the tests check the
implementation rather than echo it.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np

from pathrec.graph import HeteroGraph, Relation, VertexKind, build_graph


def make_g0() -> HeteroGraph:
    """The small worked fixture: 1 user, items v1..v3, attributes p1..p3."""
    A, I, U = VertexKind.ATTRIBUTE, VertexKind.ITEM, VertexKind.USER
    edges = [
        (Relation.BELONG_TO, (I, 0), (A, 0)),   # v1 - p1
        (Relation.BELONG_TO, (I, 0), (A, 1)),   # v1 - p2
        (Relation.BELONG_TO, (I, 1), (A, 0)),   # v2 - p1
        (Relation.BELONG_TO, (I, 1), (A, 2)),   # v2 - p3
        (Relation.BELONG_TO, (I, 2), (A, 2)),   # v3 - p3
        (Relation.INTERACT, (U, 0), (I, 0)),    # u1 - v1
    ]
    return build_graph((1, 3, 3), edges)


def raw_neighbors(g: HeteroGraph) -> dict:
    """Adjacency rebuilt straight from the edge tuples (both directions)."""
    nbrs: dict = {}
    for _, a, b in g.edges:
        nbrs.setdefault(a, set()).add(b)
        nbrs.setdefault(b, set()).add(a)
    return nbrs


def bfs_adjacent_attributes(g: HeteroGraph, p: int) -> tuple[int, ...]:
    """Brute-force oracle: attributes at shortest distance exactly 2 from p,
    where some shortest path's intermediate vertex is not an attribute."""
    nbrs = raw_neighbors(g)
    start = (VertexKind.ATTRIBUTE, p)
    dist = {start: 0}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for nxt in nbrs.get(cur, ()):
            if nxt not in dist:
                dist[nxt] = dist[cur] + 1
                queue.append(nxt)
    found = []
    for q in range(g.attribute_count):
        if q == p:
            continue
        if dist.get((VertexKind.ATTRIBUTE, q)) != 2:
            continue
        mids = nbrs.get(start, set()) & nbrs.get((VertexKind.ATTRIBUTE, q), set())
        if any(mid[0] is not VertexKind.ATTRIBUTE for mid in mids):
            found.append(q)
    return tuple(sorted(found))


def random_graph(rng: np.random.Generator, max_vertices: int = 50) -> HeteroGraph:
    """Random small graph exercising all four relation kinds."""
    n_users = int(rng.integers(1, 6))
    n_attrs = int(rng.integers(1, 9))
    n_items = int(rng.integers(1, max(2, max_vertices - n_users - n_attrs)))
    A, I, U = VertexKind.ATTRIBUTE, VertexKind.ITEM, VertexKind.USER
    seen: set[frozenset] = set()
    records = []

    def add(rel, head, tail):
        if head == tail:
            return
        key = frozenset((head, tail))
        if key in seen:
            return
        seen.add(key)
        records.append((rel, head, tail))

    for v in range(n_items):
        k = int(rng.integers(0, min(4, n_attrs) + 1))
        for p in rng.choice(n_attrs, size=k, replace=False):
            add(Relation.BELONG_TO, (I, v), (A, int(p)))
    for u in range(n_users):
        k = int(rng.integers(0, min(4, n_items) + 1))
        for v in rng.choice(n_items, size=k, replace=False):
            add(Relation.INTERACT, (U, u), (I, int(v)))
        k = int(rng.integers(0, min(3, n_attrs) + 1))
        for p in rng.choice(n_attrs, size=k, replace=False):
            add(Relation.LIKE, (U, u), (A, int(p)))
        if n_users > 1 and rng.random() < 0.5:
            add(Relation.FRIEND, (U, u), (U, int(rng.integers(n_users))))

    return build_graph((n_users, n_items, n_attrs), records)


def entropy_oracle(g: HeteroGraph, emb, state, p: int) -> float:
    """Direct reimplementation of the weighted-entropy definition.

    Scores are recomputed element-wise with plain Python loops; the
    probability is the sigmoid mass of the covered candidates over the mass
    of all candidates.
    """
    def plain_score(v: int) -> float:
        u_vec = (
            emb.user[state.user]
            if state.user is not None
            else emb.user.mean(axis=0)
        )
        s = sum(float(a) * float(b) for a, b in zip(u_vec, emb.item[v]))
        for q in state.accepted:
            s += sum(float(a) * float(b) for a, b in zip(emb.item[v], emb.attribute[q]))
        return s

    def sig(x: float) -> float:
        if x >= 0:
            return 1.0 / (1.0 + math.exp(-x))
        e = math.exp(x)
        return e / (1.0 + e)

    covered = set(state.candidate_items) & set(g.items_with_attribute(p))
    if not covered:
        return 0.0
    if covered == set(state.candidate_items):
        return 0.0   # mathematically prob == 1: the boundary rule applies
    num = sum(sig(plain_score(v)) for v in sorted(covered))
    den = sum(sig(plain_score(v)) for v in state.candidate_items)
    prob = num / den
    if prob >= 1.0:
        return 0.0
    return -prob * math.log2(prob)


def replay_algorithm1(g: HeteroGraph, log) -> list[tuple[int, ...]]:
    """Minimal independent interpreter of the session update rules.

    Consumes an episode log and recomputes the candidate item set after each
    turn using only set intersections and subtractions on the raw edge list.
    """
    nbrs = raw_neighbors(g)

    def items_of(p: int) -> set[int]:
        return {
            v for kind, v in nbrs.get((VertexKind.ATTRIBUTE, p), set())
            if kind is VertexKind.ITEM
        }

    cand = items_of(log.initial_attribute)
    trace = []
    for rec in log.turns:
        if rec.action == "ask":
            if rec.answer == "accept":
                cand &= items_of(rec.payload[0])
        else:
            if rec.answer == "reject":
                cand -= set(rec.payload)
            else:
                trace.append(tuple(sorted(cand)))
                break
        trace.append(tuple(sorted(cand)))
    return trace
