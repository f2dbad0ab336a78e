"""Session state plus the reasoning and transition rules of the graph walk.

A session tracks the confirmed attribute path, the rejected attributes and
items, and the two candidate sets it induces.  Items are scored with the
embedding model; candidate attributes are scored with weighted information
entropy, where each candidate item contributes its sigmoid-squashed score as
mass.  States are immutable; every transition returns a new state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from .embeddings import EmbeddingTable, score_items_batch, sigmoid
from .graph import HeteroGraph, candidate_items

# Largest value of -x * log2(x) on (0, 1], attained at x = 1/e.
MAX_WEIGHTED_ENTROPY = math.log2(math.e) / math.e


@dataclass(frozen=True)
class SessionState:
    """One conversation's bookkeeping; ``user=None`` means an anonymous session."""

    user: int | None
    path: tuple[int, ...]                  # confirmed attributes, chronological
    accepted: tuple[int, ...]              # same entries, sorted
    rejected_attributes: tuple[int, ...]
    rejected_items: tuple[int, ...]
    candidate_items: tuple[int, ...]
    candidate_attributes: tuple[int, ...]
    turn: int = 0


def validate_state(g: HeteroGraph, state: SessionState) -> None:
    """Assert every structural invariant; used by tests after each transition."""
    assert tuple(sorted(set(state.path))) == state.accepted
    assert not set(state.accepted) & set(state.rejected_attributes)
    full = set(candidate_items(g, state.accepted)) - set(state.rejected_items)
    assert set(state.candidate_items) <= full
    tip = state.path[-1]
    expected_cand = set(g.adjacent_attributes(tip)) - set(state.accepted) - set(
        state.rejected_attributes
    )
    assert set(state.candidate_attributes) == expected_cand
    assert state.turn >= 0
    for t in (
        state.accepted,
        state.rejected_attributes,
        state.rejected_items,
        state.candidate_items,
        state.candidate_attributes,
    ):
        assert list(t) == sorted(set(t))


def init_session(g: HeteroGraph, user: int | None, p0: int) -> SessionState:
    """Start a session from the user-given attribute ``p0``.

    The scenario assumes items carrying the stated preference exist, so an
    attribute with no items is rejected outright.
    """
    g.check_attribute(p0)
    items = g.items_with_attribute(p0)
    if not items:
        raise ValueError(f"attribute {p0} has no items; cannot anchor a session")
    cand_attrs = tuple(p for p in g.adjacent_attributes(p0) if p != p0)
    return SessionState(
        user=user,
        path=(p0,),
        accepted=(p0,),
        rejected_attributes=(),
        rejected_items=(),
        candidate_items=items,
        candidate_attributes=cand_attrs,
        turn=0,
    )


def rank_items(
    g: HeteroGraph, emb: EmbeddingTable, state: SessionState
) -> list[tuple[int, float]]:
    """Candidate items scored against the confirmed path, best first.

    Ties break toward the smaller item index so rankings are reproducible.
    """
    if not state.candidate_items:
        raise ValueError("no candidate items left; the session must end")
    scores = score_items_batch(emb, state.user, state.candidate_items, state.accepted)
    ranked = sorted(zip(state.candidate_items, scores), key=lambda t: (-t[1], t[0]))
    return [(int(v), float(s)) for v, s in ranked]


def _sigmoid_masses(
    g: HeteroGraph, emb: EmbeddingTable, state: SessionState
) -> tuple[dict[int, float], float]:
    """Sigmoid of every candidate item's score, and their total mass."""
    scores = score_items_batch(emb, state.user, state.candidate_items, state.accepted)
    masses = sigmoid(scores)
    by_item = {int(v): float(m) for v, m in zip(state.candidate_items, masses)}
    return by_item, float(np.sum(masses))


def _entropy_of_prob(prob: float) -> float:
    # Limit convention: x * log2(x) -> 0 as x -> 0 or stays 0 at x = 1.
    if prob <= 0.0 or prob >= 1.0:
        return 0.0
    return -prob * math.log2(prob)


def weighted_entropy(
    g: HeteroGraph, emb: EmbeddingTable, state: SessionState, p: int
) -> float:
    """Score-weighted entropy of candidate attribute ``p``.

    The probability mass of ``p`` is the sigmoid-score share of the candidate
    items carrying it.  Attributes receiving no mass, or all of it, score 0.
    """
    if p not in state.candidate_attributes:
        raise ValueError(f"attribute {p} is not a candidate in this state")
    if not state.candidate_items:
        raise ValueError("no candidate items; entropy undefined")
    by_item, total = _sigmoid_masses(g, emb, state)
    covered = set(state.candidate_items) & set(g.items_with_attribute(p))
    if not covered or len(covered) == len(state.candidate_items):
        # No message propagated, or full coverage: prob is exactly 0 or 1 by
        # construction, so sidestep summation-order float jitter around 1.
        return 0.0
    mass = sum(by_item[v] for v in sorted(covered))
    return _entropy_of_prob(mass / total)


def rank_attributes(
    g: HeteroGraph, emb: EmbeddingTable, state: SessionState
) -> list[tuple[int, float]]:
    """Candidate attributes by weighted entropy, best first, ties by index."""
    if not state.candidate_attributes:
        return []
    by_item, total = _sigmoid_masses(g, emb, state)
    cand = set(state.candidate_items)
    scored = []
    for p in state.candidate_attributes:
        covered = cand & set(g.items_with_attribute(p))
        if not covered or len(covered) == len(cand):
            scored.append((p, 0.0))
        else:
            mass = sum(by_item[v] for v in sorted(covered))
            scored.append((p, _entropy_of_prob(mass / total)))
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored


def apply_accept_attribute(g: HeteroGraph, state: SessionState, p: int) -> SessionState:
    """Walk to ``p``: extend the path, shrink candidates, re-derive askables."""
    if p not in state.candidate_attributes:
        raise ValueError(f"attribute {p} is not in the candidate set")
    path = state.path + (p,)
    accepted = tuple(sorted(set(state.accepted) | {p}))
    rejected_items = set(state.rejected_items)
    cand_items = tuple(
        v
        for v in state.candidate_items
        if v in set(g.items_with_attribute(p)) and v not in rejected_items
    )
    blocked = set(accepted) | set(state.rejected_attributes)
    cand_attrs = tuple(q for q in g.adjacent_attributes(p) if q not in blocked)
    return replace(
        state,
        path=path,
        accepted=accepted,
        candidate_items=cand_items,
        candidate_attributes=cand_attrs,
    )


def apply_reject_attribute(state: SessionState, p: int) -> SessionState:
    """Drop ``p`` from the askable pool; the walk stays where it is."""
    if p not in state.candidate_attributes:
        raise ValueError(f"attribute {p} is not in the candidate set")
    return replace(
        state,
        rejected_attributes=tuple(sorted(set(state.rejected_attributes) | {p})),
        candidate_attributes=tuple(q for q in state.candidate_attributes if q != p),
    )


def apply_reject_items(state: SessionState, items: Iterable[int]) -> SessionState:
    """Remove a rejected recommendation list from the candidate pool."""
    rejected = set(items)
    if not rejected <= set(state.candidate_items):
        extra = sorted(rejected - set(state.candidate_items))
        raise ValueError(f"items {extra} are not candidates and cannot be rejected")
    return replace(
        state,
        rejected_items=tuple(sorted(set(state.rejected_items) | rejected)),
        candidate_items=tuple(v for v in state.candidate_items if v not in rejected),
    )


def advance_turn(state: SessionState) -> SessionState:
    return replace(state, turn=state.turn + 1)
