"""Tripartite user-item-attribute graph and the structural queries the walker needs.

The graph is immutable once built.  Edges are undirected and come in four
relation kinds (user-item interactions, user-user friendships, user-attribute
likes, item-attribute memberships).  During reasoning only the presence of an
edge matters; relation kinds are kept for loading and validation.

All set-valued queries return sorted tuples so that downstream tie-breaking
is deterministic.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence


class VertexKind(enum.Enum):
    USER = "user"
    ITEM = "item"
    ATTRIBUTE = "attribute"


class Relation(enum.Enum):
    INTERACT = "interact"       # user -- item
    FRIEND = "friend"           # user -- user
    LIKE = "like"               # user -- attribute
    BELONG_TO = "belong_to"     # item -- attribute


# Endpoint kinds each relation may connect (unordered).
_RELATION_ENDPOINTS = {
    Relation.INTERACT: frozenset({VertexKind.USER, VertexKind.ITEM}),
    Relation.FRIEND: frozenset({VertexKind.USER}),
    Relation.LIKE: frozenset({VertexKind.USER, VertexKind.ATTRIBUTE}),
    Relation.BELONG_TO: frozenset({VertexKind.ITEM, VertexKind.ATTRIBUTE}),
}

_KIND_ORDER = {VertexKind.USER: 0, VertexKind.ITEM: 1, VertexKind.ATTRIBUTE: 2}

Vertex = tuple[VertexKind, int]
EdgeRecord = tuple[Relation, Vertex, Vertex]


class GraphBuildError(ValueError):
    """Raised when an edge record cannot be added to the graph."""


def _canonical(a: Vertex, b: Vertex) -> tuple[Vertex, Vertex]:
    ka, kb = _KIND_ORDER[a[0]], _KIND_ORDER[b[0]]
    return (a, b) if (ka, a[1]) <= (kb, b[1]) else (b, a)


@dataclass(frozen=True)
class HeteroGraph:
    """Immutable heterogeneous graph with per-kind adjacency indexes.

    Neighbor lists are sorted tuples, one per vertex, partitioned by the
    neighbor's kind.  Safe to share across threads.
    """

    user_count: int
    item_count: int
    attribute_count: int
    edges: tuple[EdgeRecord, ...]
    user_items: tuple[tuple[int, ...], ...]
    item_users: tuple[tuple[int, ...], ...]
    user_friends: tuple[tuple[int, ...], ...]
    user_attributes: tuple[tuple[int, ...], ...]
    attribute_users: tuple[tuple[int, ...], ...]
    item_attributes: tuple[tuple[int, ...], ...]
    attribute_items: tuple[tuple[int, ...], ...]
    _adjacent_cache: dict = field(default_factory=dict, repr=False, compare=False)

    # -- validation helpers -------------------------------------------------

    def _count(self, kind: VertexKind) -> int:
        if kind is VertexKind.USER:
            return self.user_count
        if kind is VertexKind.ITEM:
            return self.item_count
        return self.attribute_count

    def check_attribute(self, p: int) -> None:
        if not 0 <= p < self.attribute_count:
            raise IndexError(f"attribute index {p} out of range [0, {self.attribute_count})")

    def check_item(self, v: int) -> None:
        if not 0 <= v < self.item_count:
            raise IndexError(f"item index {v} out of range [0, {self.item_count})")

    def check_user(self, u: int) -> None:
        if not 0 <= u < self.user_count:
            raise IndexError(f"user index {u} out of range [0, {self.user_count})")

    # -- structural queries -------------------------------------------------

    def items_with_attribute(self, p: int) -> tuple[int, ...]:
        """Items carrying attribute ``p`` (the membership neighborhood)."""
        self.check_attribute(p)
        return self.attribute_items[p]

    def attributes_of_item(self, v: int) -> tuple[int, ...]:
        """Attributes attached to item ``v``."""
        self.check_item(v)
        return self.item_attributes[v]

    def adjacent_attributes(self, p: int) -> tuple[int, ...]:
        """Attributes reachable from ``p`` through one shared item or user.

        An attribute p' != p is adjacent when some item carries both p and
        p', or some user likes both.  This is graph distance exactly 2
        through a non-attribute vertex; results are cached (graph is
        immutable).
        """
        self.check_attribute(p)
        cached = self._adjacent_cache.get(p)
        if cached is not None:
            return cached
        found: set[int] = set()
        for v in self.attribute_items[p]:
            found.update(self.item_attributes[v])
        for u in self.attribute_users[p]:
            found.update(self.user_attributes[u])
        found.discard(p)
        result = tuple(sorted(found))
        self._adjacent_cache[p] = result
        return result


def candidate_items(g: HeteroGraph, accepted: Iterable[int]) -> tuple[int, ...]:
    """Items carrying every attribute in ``accepted`` (set intersection).

    A session always starts from a user-given attribute, so an empty
    accepted set is a caller error.
    """
    attrs = sorted(set(accepted))
    if not attrs:
        raise ValueError("accepted attribute set must be non-empty")
    for p in attrs:
        g.check_attribute(p)
    pool = set(g.items_with_attribute(attrs[0]))
    for p in attrs[1:]:
        pool.intersection_update(g.items_with_attribute(p))
        if not pool:
            break
    return tuple(sorted(pool))


def build_graph(
    vertex_counts: tuple[int, int, int],
    edge_records: Sequence[EdgeRecord],
) -> HeteroGraph:
    """Validate edge records and build the immutable adjacency index.

    ``vertex_counts`` is (users, items, attributes).  Rejected records raise
    :class:`GraphBuildError` naming the offending edge: out-of-range vertex,
    relation kind inconsistent with the endpoint kinds, self-loop, or a
    duplicate of an earlier edge.
    """
    n_users, n_items, n_attrs = vertex_counts
    if min(n_users, n_items, n_attrs) < 0:
        raise GraphBuildError(f"vertex counts must be non-negative, got {vertex_counts}")
    counts = {VertexKind.USER: n_users, VertexKind.ITEM: n_items, VertexKind.ATTRIBUTE: n_attrs}

    seen: set[tuple[Vertex, Vertex]] = set()
    canon_edges: list[EdgeRecord] = []
    nbrs: dict[tuple[VertexKind, VertexKind], dict[int, set[int]]] = {
        (VertexKind.USER, VertexKind.ITEM): {},
        (VertexKind.ITEM, VertexKind.USER): {},
        (VertexKind.USER, VertexKind.USER): {},
        (VertexKind.USER, VertexKind.ATTRIBUTE): {},
        (VertexKind.ATTRIBUTE, VertexKind.USER): {},
        (VertexKind.ITEM, VertexKind.ATTRIBUTE): {},
        (VertexKind.ATTRIBUTE, VertexKind.ITEM): {},
    }

    for rec in edge_records:
        rel, head, tail = rec
        for kind, idx in (head, tail):
            if not 0 <= idx < counts[kind]:
                raise GraphBuildError(f"edge {rec!r}: {kind.value} index {idx} out of range")
        if head == tail:
            raise GraphBuildError(f"edge {rec!r}: self-loop")
        got_kinds = frozenset({head[0], tail[0]})
        if got_kinds != _RELATION_ENDPOINTS[rel]:
            raise GraphBuildError(
                f"edge {rec!r}: relation {rel.value} cannot connect "
                f"{head[0].value} and {tail[0].value}"
            )
        a, b = _canonical(head, tail)
        if (a, b) in seen:
            raise GraphBuildError(f"edge {rec!r}: duplicate edge")
        seen.add((a, b))
        canon_edges.append((rel, a, b))
        nbrs[(a[0], b[0])].setdefault(a[1], set()).add(b[1])
        nbrs[(b[0], a[0])].setdefault(b[1], set()).add(a[1])

    def freeze(kind_pair: tuple[VertexKind, VertexKind], n: int) -> tuple[tuple[int, ...], ...]:
        table = nbrs[kind_pair]
        return tuple(tuple(sorted(table.get(i, ()))) for i in range(n))

    return HeteroGraph(
        user_count=n_users,
        item_count=n_items,
        attribute_count=n_attrs,
        edges=tuple(canon_edges),
        user_items=freeze((VertexKind.USER, VertexKind.ITEM), n_users),
        item_users=freeze((VertexKind.ITEM, VertexKind.USER), n_items),
        user_friends=freeze((VertexKind.USER, VertexKind.USER), n_users),
        user_attributes=freeze((VertexKind.USER, VertexKind.ATTRIBUTE), n_users),
        attribute_users=freeze((VertexKind.ATTRIBUTE, VertexKind.USER), n_attrs),
        item_attributes=freeze((VertexKind.ITEM, VertexKind.ATTRIBUTE), n_items),
        attribute_items=freeze((VertexKind.ATTRIBUTE, VertexKind.ITEM), n_attrs),
    )
