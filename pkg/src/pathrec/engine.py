"""Full multi-round sessions: policies, the scripted user, and RL training.

A session runs up to ``max_turns`` turns.  Each turn the policy either asks
about one attribute or recommends a top-k item list; the responder (scripted
simulator or live human) accepts or rejects; the session state updates and
the turn is logged with its reward.  The scripted simulator is anchored by a
target item: it accepts exactly the attributes that item carries and accepts
a recommendation exactly when the list contains the item.

Two rule-based baselines are included: one recommends every turn, the other
asks maximum-entropy questions over the whole candidate pool until the pool
is small, ignoring the graph walk.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Protocol, Sequence

import numpy as np

from .embeddings import EmbeddingTable
from .graph import HeteroGraph
from .policy import (
    Action,
    DqnConfig,
    HistoryEvent,
    QNetwork,
    ReplayBuffer,
    RmsPropState,
    Transition,
    encode_state,
    select_action,
    sync_target,
    td_update,
)
from .session import (
    SessionState,
    _entropy_of_prob,
    advance_turn,
    apply_accept_attribute,
    apply_reject_attribute,
    apply_reject_items,
    init_session,
    rank_attributes,
    rank_items,
)


@dataclass(frozen=True)
class EpisodeSpec:
    """One session's anchor: (user, target, opening attribute) plus budgets."""

    user: int | None
    target_item: int | None
    initial_attribute: int
    k: int = 10
    max_turns: int = 15


def validate_spec(g: HeteroGraph, spec: EpisodeSpec) -> None:
    if spec.target_item is not None:
        if spec.initial_attribute not in g.attributes_of_item(spec.target_item):
            raise ValueError(
                f"opening attribute {spec.initial_attribute} is not on target "
                f"item {spec.target_item}"
            )
    if spec.k < 1 or spec.max_turns < 1:
        raise ValueError("k and max_turns must be at least 1")


class Responder(Protocol):
    def answer_attribute(self, p: int) -> bool: ...

    def answer_recommendation(self, items: Sequence[int]) -> bool: ...


def simulate_answer_attribute(g: HeteroGraph, spec: EpisodeSpec, p: int) -> bool:
    """The anchored user likes exactly the attributes of the target item."""
    return p in g.attributes_of_item(spec.target_item)


def simulate_answer_recommendation(spec: EpisodeSpec, items: Sequence[int]) -> bool:
    """The anchored user accepts a list exactly when it contains the target."""
    if len(items) > spec.k:
        raise ValueError(f"recommendation list of {len(items)} exceeds k={spec.k}")
    return spec.target_item in items


class SimulatedUser:
    """Responder whose preferences are anchored by the spec's target item."""

    def __init__(self, g: HeteroGraph, spec: EpisodeSpec):
        if spec.target_item is None:
            raise ValueError("simulated user needs a target item")
        self.g = g
        self.spec = spec

    def answer_attribute(self, p: int) -> bool:
        return simulate_answer_attribute(self.g, self.spec, p)

    def answer_recommendation(self, items: Sequence[int]) -> bool:
        return simulate_answer_recommendation(self.spec, items)


# -- policies -----------------------------------------------------------------


class Decision(NamedTuple):
    action: Action
    payload: tuple[int, ...]   # one attribute for ASK, an item list for REC
    graph_walk: bool = True    # False: baseline updates that skip the walk rules


class ScprPolicy:
    """Learned consultation: the value network picks ask vs recommend.

    Asking targets the top weighted-entropy candidate attribute; recommending
    presents the top-k scored items.  When asking is impossible or provably
    uninformative (no candidate attributes, or none with positive entropy:
    such questions cannot shrink the candidate pool) the decision is
    overridden to recommend and recorded as the executed action.  With
    ``explore`` set, actions are epsilon-greedy on an exponentially decaying
    schedule driven by an internal step counter.
    """

    def __init__(
        self,
        net: QNetwork,
        cfg: DqnConfig | None = None,
        rng: np.random.Generator | None = None,
        explore: bool = False,
        k: int = 10,
    ):
        self.net = net
        self.cfg = cfg or DqnConfig()
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.explore = explore
        self.k = k
        self.steps = 0

    def decide(
        self,
        g: HeteroGraph,
        emb: EmbeddingTable,
        state: SessionState,
        history: Sequence[HistoryEvent],
    ) -> Decision:
        s = encode_state(state, history, self.cfg.max_turns)
        epsilon = self.cfg.epsilon_at(self.steps) if self.explore else 0.0
        self.steps += 1
        action = select_action(self.net, s, epsilon, self.rng)
        if action is Action.ASK:
            ranked = rank_attributes(g, emb, state) if state.candidate_attributes else []
            if ranked and ranked[0][1] > 0.0:
                return Decision(Action.ASK, (ranked[0][0],), graph_walk=True)
            action = Action.REC
        top = rank_items(g, emb, state)[: min(len(state.candidate_items), self.k)]
        return Decision(Action.REC, tuple(v for v, _ in top), graph_walk=True)


class MaxEntropyPolicy:
    """Rule baseline: ask the max-entropy attribute over the candidate pool.

    Entropy here is unweighted (plain item counts) and the askable pool is
    every attribute present on a candidate item, with no graph restriction.
    Recommends once the pool is down to k items or no unasked attribute has
    positive entropy.
    """

    def __init__(self, k: int = 10):
        self.k = k

    def decide(self, g, emb, state: SessionState, history) -> Decision:
        if len(state.candidate_items) > self.k:
            blocked = set(state.accepted) | set(state.rejected_attributes)
            n = len(state.candidate_items)
            counts: dict[int, int] = {}
            for v in state.candidate_items:
                for p in g.attributes_of_item(v):
                    if p not in blocked:
                        counts[p] = counts.get(p, 0) + 1
            best, best_ent = None, 0.0
            for p in sorted(counts):
                ent = _entropy_of_prob(counts[p] / n)
                if ent > best_ent:
                    best, best_ent = p, ent
            if best is not None:
                return Decision(Action.ASK, (best,), graph_walk=False)
        top = rank_items(g, emb, state)[: min(len(state.candidate_items), self.k)]
        return Decision(Action.REC, tuple(v for v, _ in top), graph_walk=False)


class AbsGreedyPolicy:
    """Rule baseline: recommend the current top-k every single turn."""

    def __init__(self, k: int = 10):
        self.k = k

    def decide(self, g, emb, state: SessionState, history) -> Decision:
        top = rank_items(g, emb, state)[: min(len(state.candidate_items), self.k)]
        return Decision(Action.REC, tuple(v for v, _ in top), graph_walk=False)


def _accept_attribute_free(g: HeteroGraph, state: SessionState, p: int) -> SessionState:
    """Baseline accept: same set updates, minus the adjacency precondition."""
    g.check_attribute(p)
    if p in state.accepted:
        raise ValueError(f"attribute {p} was already accepted")
    accepted = tuple(sorted(set(state.accepted) | {p}))
    with_p = set(g.items_with_attribute(p))
    rejected = set(state.rejected_items)
    blocked = set(accepted) | set(state.rejected_attributes)
    return replace(
        state,
        path=state.path + (p,),
        accepted=accepted,
        candidate_items=tuple(
            v for v in state.candidate_items if v in with_p and v not in rejected
        ),
        candidate_attributes=tuple(q for q in g.adjacent_attributes(p) if q not in blocked),
    )


def _reject_attribute_free(state: SessionState, p: int) -> SessionState:
    return replace(
        state,
        rejected_attributes=tuple(sorted(set(state.rejected_attributes) | {p})),
        candidate_attributes=tuple(q for q in state.candidate_attributes if q != p),
    )


# -- episode loop ----------------------------------------------------------------


@dataclass
class TurnRecord:
    turn: int
    action: str                     # "ask" or "rec"
    payload: tuple[int, ...]
    answer: str                     # "accept" or "reject"
    reward: float
    candidates_after: tuple[int, ...] = ()


@dataclass
class EpisodeLog:
    user: int | None
    target_item: int | None
    initial_attribute: int
    k: int
    max_turns: int
    turns: list[TurnRecord] = field(default_factory=list)
    success: bool = False
    success_turn: int | None = None
    final_state: SessionState | None = None

    @property
    def turns_taken(self) -> int:
        """Turn count for averaging: the success turn, or the full budget."""
        return self.success_turn if self.success else self.max_turns

    @property
    def total_reward(self) -> float:
        return sum(t.reward for t in self.turns)


def ask_template(attribute_label: str) -> str:
    return f"Do you like {attribute_label}?"

def rec_template(item_labels: Sequence[str]) -> str:
    return f"How about: {', '.join(item_labels)}?"


class ResponderInconsistency(RuntimeError):
    """The responder accepted something incompatible with its own anchor."""


def execute_decision(
    g: HeteroGraph,
    state: SessionState,
    decision: Decision,
    accepted: bool,
    cfg: DqnConfig,
    k: int,
) -> tuple[SessionState, HistoryEvent | None, float, bool]:
    """Apply one answered move; shared by the episode loop and the live service.

    Returns the updated state, the history event to record (None on a
    successful recommendation, which ends the session), the turn's base
    reward, and the success flag.
    """
    if decision.action is Action.ASK:
        p = decision.payload[0]
        g.check_attribute(p)
        if accepted:
            new_state = (
                apply_accept_attribute(g, state, p)
                if decision.graph_walk
                else _accept_attribute_free(g, state, p)
            )
            return new_state, HistoryEvent.ASK_ACCEPTED, cfg.reward_ask_accept, False
        new_state = (
            apply_reject_attribute(state, p)
            if decision.graph_walk
            else _reject_attribute_free(state, p)
        )
        return new_state, HistoryEvent.ASK_REJECTED, cfg.reward_ask_reject, False
    items = decision.payload
    if not items or len(items) > k:
        raise ValueError(f"recommendation payload of {len(items)} items, k={k}")
    if not set(items) <= set(state.candidate_items):
        raise ValueError("recommended items must come from the candidate set")
    if accepted:
        return state, None, cfg.reward_rec_success, True
    return apply_reject_items(state, items), HistoryEvent.REC_REJECTED, cfg.reward_rec_fail, False


def run_episode(
    g: HeteroGraph,
    emb: EmbeddingTable,
    policy,
    spec: EpisodeSpec,
    responder: Responder,
    hooks: ReplayBuffer | None = None,
    cfg: DqnConfig | None = None,
) -> EpisodeLog:
    """Drive one full session; returns the per-turn log.

    With ``hooks`` set, each executed turn also lands in the replay buffer as
    a transition (state, executed action, reward, next state, done).  A
    session that exhausts the turn budget, or its candidate items, without a
    successful recommendation fails and the final reward additionally carries
    the quit penalty.
    """
    validate_spec(g, spec)
    cfg = cfg or DqnConfig(max_turns=spec.max_turns)
    state = init_session(g, spec.user, spec.initial_attribute)
    history: list[HistoryEvent] = []
    log = EpisodeLog(
        user=spec.user,
        target_item=spec.target_item,
        initial_attribute=spec.initial_attribute,
        k=spec.k,
        max_turns=spec.max_turns,
    )

    for t in range(1, spec.max_turns + 1):
        s_vec = encode_state(state, history, spec.max_turns) if hooks is not None else None
        decision = policy.decide(g, emb, state, history)

        if decision.action is Action.ASK:
            accepted = bool(responder.answer_attribute(decision.payload[0]))
        else:
            accepted = bool(responder.answer_recommendation(decision.payload))
        state, event, reward, succeeded = execute_decision(
            g, state, decision, accepted, cfg, spec.k
        )
        if event is not None:
            history.append(event)
        if succeeded:
            log.success = True
            log.success_turn = t
        if (
            event is HistoryEvent.ASK_ACCEPTED
            and spec.target_item is not None
            and spec.target_item not in state.candidate_items
        ):
            raise ResponderInconsistency(
                f"responder accepted attribute {decision.payload[0]} that target "
                f"item {spec.target_item} does not carry"
            )
        answer = "accept" if accepted else "reject"

        state = advance_turn(state)
        done = log.success or t == spec.max_turns or not state.candidate_items
        if done and not log.success:
            reward += cfg.reward_quit
        log.turns.append(
            TurnRecord(
                turn=t,
                action="ask" if decision.action is Action.ASK else "rec",
                payload=tuple(int(x) for x in decision.payload),
                answer=answer,
                reward=reward,
                candidates_after=state.candidate_items,
            )
        )
        if hooks is not None:
            s_next = None if done else encode_state(state, history, spec.max_turns)
            hooks.push(Transition(s_vec, decision.action, reward, s_next, done))
        if done:
            break

    log.final_state = state
    return log


def write_episode_logs(logs: Sequence[EpisodeLog], path) -> None:
    """JSON-lines export, one line per turn."""
    with open(path, "w", encoding="utf-8") as fh:
        for eid, log in enumerate(logs):
            for rec in log.turns:
                fh.write(
                    json.dumps(
                        {
                            "episode_id": eid,
                            "turn": rec.turn,
                            "action": rec.action,
                            "payload": list(rec.payload),
                            "answer": rec.answer,
                            "reward": rec.reward,
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )


# -- evaluation and training -------------------------------------------------------


def build_eval_specs(
    g: HeteroGraph,
    interactions: Sequence[tuple[int, int]],
    rng: np.random.Generator,
    k: int = 10,
    max_turns: int = 15,
) -> list[EpisodeSpec]:
    """One episode per interaction; the opener is a seeded uniform draw.

    Fixing the spec list up front lets every policy face identical episodes.
    """
    specs = []
    for u, v in interactions:
        attrs = g.attributes_of_item(v)
        if not attrs:
            continue
        p0 = int(attrs[rng.integers(len(attrs))])
        specs.append(EpisodeSpec(u, v, p0, k=k, max_turns=max_turns))
    return specs


def evaluate_policy(
    g: HeteroGraph,
    emb: EmbeddingTable,
    policy,
    specs: Sequence[EpisodeSpec],
    cfg: DqnConfig | None = None,
) -> list[EpisodeLog]:
    return [
        run_episode(g, emb, policy, spec, SimulatedUser(g, spec), cfg=cfg) for spec in specs
    ]


def train_policy(
    g: HeteroGraph,
    emb: EmbeddingTable,
    interactions: Sequence[tuple[int, int]],
    cfg: DqnConfig,
    episodes: int,
    rng: np.random.Generator,
    k: int = 10,
) -> tuple[QNetwork, list[float]]:
    """Deep Q-learning over simulated sessions drawn from ``interactions``.

    Episodes sample a (user, item) pair uniformly, open with a uniformly
    drawn attribute of the item, and run with epsilon-greedy exploration.
    After each episode one TD update runs per executed turn (once the buffer
    holds a full batch); the target network syncs on a fixed episode cadence.
    Returns the trained network and the per-episode reward totals.
    """
    usable = [(u, v) for u, v in interactions if g.attributes_of_item(v)]
    if not usable:
        raise ValueError("no usable interactions (items need at least one attribute)")
    net = QNetwork(cfg.state_dim, cfg.hidden, seed=cfg.seed)
    target = net.copy()
    buffer = ReplayBuffer(cfg.replay_capacity)
    opt = RmsPropState.for_network(net)
    policy = ScprPolicy(net, cfg, rng=rng, explore=True, k=k)
    curve: list[float] = []
    for ep in range(1, episodes + 1):
        u, v = usable[rng.integers(len(usable))]
        attrs = g.attributes_of_item(v)
        p0 = int(attrs[rng.integers(len(attrs))])
        spec = EpisodeSpec(u, v, p0, k=k, max_turns=cfg.max_turns)
        log = run_episode(g, emb, policy, spec, SimulatedUser(g, spec), hooks=buffer, cfg=cfg)
        for _ in log.turns:
            if len(buffer) >= cfg.batch_size:
                td_update(net, target, buffer.sample(cfg.batch_size, rng), cfg, opt)
        if ep % cfg.target_sync_every == 0:
            sync_target(net, target)
        curve.append(log.total_reward)
    return net, curve
