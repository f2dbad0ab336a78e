"""Two-action value network deciding whether to ask or to recommend.

The dialogue state is a fixed-width vector: a per-turn one-hot history block
(empty / ask-accepted / ask-rejected / recommendation-rejected) concatenated
with a one-hot bin for the candidate-pool size.  A two-layer feed-forward
network maps it to Q-values for the two actions; training is standard deep
Q-learning with an experience-replay ring buffer and a periodically synced
target network, optimized with RMSprop.
"""

from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .session import SessionState

POLICY_MAGIC = "CPR-POL-1"


class Action(enum.IntEnum):
    ASK = 0
    REC = 1


class HistoryEvent(enum.IntEnum):
    """Per-turn outcome written into the history block (0 is the empty slot)."""

    ASK_ACCEPTED = 1
    ASK_REJECTED = 2
    REC_REJECTED = 3


class RewardEvent(enum.Enum):
    REC_SUCCESS = "rec_success"
    REC_FAIL = "rec_fail"
    ASK_ACCEPT = "ask_accept"
    ASK_REJECT = "ask_reject"
    QUIT = "quit"


# Log-scale bins over |candidate items|: recommending gets easier as the pool
# shrinks, so resolution is concentrated at the small end.
CANDIDATE_BIN_UPPER = (1, 4, 8, 16, 32, 64, 256)  # last bin is 257+
N_CANDIDATE_BINS = len(CANDIDATE_BIN_UPPER) + 1
HISTORY_SLOT_WIDTH = 4


@dataclass
class DqnConfig:
    max_turns: int = 15
    hidden: int = 64
    batch_size: int = 128
    gamma: float = 0.999
    target_sync_every: int = 20
    replay_capacity: int = 50_000
    lr: float = 1e-4
    rms_decay: float = 0.99
    rms_eps: float = 1e-8
    eps_start: float = 0.9
    eps_end: float = 0.1
    eps_decay_steps: float = 1000.0
    reward_rec_success: float = 1.0
    reward_rec_fail: float = -0.1
    reward_ask_accept: float = 0.01
    reward_ask_reject: float = -0.1
    reward_quit: float = -0.3
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must be in (0, 1]")
        if self.batch_size > self.replay_capacity:
            raise ValueError("batch size cannot exceed the replay capacity")

    @property
    def state_dim(self) -> int:
        return HISTORY_SLOT_WIDTH * self.max_turns + N_CANDIDATE_BINS

    def epsilon_at(self, step: int) -> float:
        return self.eps_end + (self.eps_start - self.eps_end) * float(
            np.exp(-step / self.eps_decay_steps)
        )


def reward_for(event: RewardEvent, cfg: DqnConfig) -> float:
    return {
        RewardEvent.REC_SUCCESS: cfg.reward_rec_success,
        RewardEvent.REC_FAIL: cfg.reward_rec_fail,
        RewardEvent.ASK_ACCEPT: cfg.reward_ask_accept,
        RewardEvent.ASK_REJECT: cfg.reward_ask_reject,
        RewardEvent.QUIT: cfg.reward_quit,
    }[event]


def candidate_size_bin(n: int) -> int:
    for i, upper in enumerate(CANDIDATE_BIN_UPPER):
        if n <= upper:
            return i
    return N_CANDIDATE_BINS - 1


def encode_state(
    state: SessionState, history: Sequence[HistoryEvent], max_turns: int = 15
) -> np.ndarray:
    """Fixed-width dialogue-state vector: history one-hots then the size bin."""
    if len(history) > max_turns:
        raise ValueError(f"history has {len(history)} turns, budget is {max_turns}")
    vec = np.zeros(HISTORY_SLOT_WIDTH * max_turns + N_CANDIDATE_BINS)
    for slot, event in enumerate(history):
        vec[slot * HISTORY_SLOT_WIDTH + int(event)] = 1.0
    vec[HISTORY_SLOT_WIDTH * max_turns + candidate_size_bin(len(state.candidate_items))] = 1.0
    return vec


class QNetwork:
    """input -> hidden (rectified linear) -> 2 Q-values, all float64."""

    N_ACTIONS = 2

    def __init__(self, state_dim: int, hidden: int = 64, seed: int = 0):
        rng = np.random.default_rng(seed)
        bound1 = 1.0 / np.sqrt(state_dim)
        bound2 = 1.0 / np.sqrt(hidden)
        self.w1 = rng.uniform(-bound1, bound1, size=(state_dim, hidden))
        self.b1 = rng.uniform(-bound1, bound1, size=hidden)
        self.w2 = rng.uniform(-bound2, bound2, size=(hidden, self.N_ACTIONS))
        self.b2 = rng.uniform(-bound2, bound2, size=self.N_ACTIONS)
        assert self.w2.shape[1] == 2, "the action space is exactly ask/recommend"

    @property
    def state_dim(self) -> int:
        return self.w1.shape[0]

    def parameters(self) -> dict[str, np.ndarray]:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    def forward_batch(self, states: np.ndarray) -> np.ndarray:
        if states.shape[-1] != self.state_dim:
            raise ValueError(f"state dim {states.shape[-1]} != network input {self.state_dim}")
        hidden = np.maximum(states @ self.w1 + self.b1, 0.0)
        return hidden @ self.w2 + self.b2

    def copy(self) -> "QNetwork":
        clone = QNetwork.__new__(QNetwork)
        clone.w1 = self.w1.copy()
        clone.b1 = self.b1.copy()
        clone.w2 = self.w2.copy()
        clone.b2 = self.b2.copy()
        return clone


def q_values(net: QNetwork, s: np.ndarray) -> tuple[float, float]:
    q = net.forward_batch(s.reshape(1, -1))[0]
    return float(q[Action.ASK]), float(q[Action.REC])


def select_action(
    net: QNetwork, s: np.ndarray, epsilon: float, rng: np.random.Generator
) -> Action:
    """Epsilon-greedy over the two actions; greedy ties go to asking."""
    if epsilon > 0 and rng.random() < epsilon:
        return Action(int(rng.integers(QNetwork.N_ACTIONS)))
    q_ask, q_rec = q_values(net, s)
    return Action.REC if q_rec > q_ask else Action.ASK


class Transition(NamedTuple):
    state: np.ndarray
    action: Action
    reward: float
    next_state: np.ndarray | None  # None marks a terminal transition
    done: bool


class ReplayBuffer:
    """Fixed-capacity ring of transitions; oldest entries are evicted first."""

    def __init__(self, capacity: int = 50_000):
        self.capacity = capacity
        self._items: list[Transition] = []
        self._next = 0

    def push(self, t: Transition) -> None:
        if t.done and t.next_state is not None:
            raise ValueError("terminal transitions must carry no next state")
        if len(self._items) < self.capacity:
            self._items.append(t)
        else:
            self._items[self._next] = t
        self._next = (self._next + 1) % self.capacity

    def __len__(self) -> int:
        return len(self._items)

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        if batch_size > len(self._items):
            raise ValueError(f"cannot sample {batch_size} of {len(self._items)} transitions")
        idx = rng.choice(len(self._items), size=batch_size, replace=False)
        return [self._items[i] for i in idx]

    def oldest(self) -> Transition:
        if len(self._items) < self.capacity:
            return self._items[0]
        return self._items[self._next]


@dataclass
class RmsPropState:
    """Per-parameter squared-gradient running averages."""

    cache: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_network(cls, net: QNetwork) -> "RmsPropState":
        return cls({name: np.zeros_like(p) for name, p in net.parameters().items()})


def td_targets(
    target_net: QNetwork, batch: Sequence[Transition], gamma: float
) -> np.ndarray:
    """r + gamma * max_a Q_target(s', a); just r on terminal transitions."""
    y = np.array([t.reward for t in batch])
    live = [i for i, t in enumerate(batch) if not t.done]
    if live:
        nxt = np.stack([batch[i].next_state for i in live])
        y[live] += gamma * target_net.forward_batch(nxt).max(axis=1)
    return y


def td_loss_and_grads(
    net: QNetwork, target_net: QNetwork, batch: Sequence[Transition], gamma: float
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean squared TD error and its gradient by backpropagation."""
    states = np.stack([t.state for t in batch])
    actions = np.array([int(t.action) for t in batch])
    y = td_targets(target_net, batch, gamma)

    pre = states @ net.w1 + net.b1
    hidden = np.maximum(pre, 0.0)
    q = hidden @ net.w2 + net.b2
    taken = q[np.arange(len(batch)), actions]
    err = taken - y
    loss = float(np.mean(err**2))

    dq = np.zeros_like(q)
    dq[np.arange(len(batch)), actions] = 2.0 * err / len(batch)
    grads = {
        "w2": hidden.T @ dq,
        "b2": dq.sum(axis=0),
    }
    dhidden = (dq @ net.w2.T) * (pre > 0.0)
    grads["w1"] = states.T @ dhidden
    grads["b1"] = dhidden.sum(axis=0)
    return loss, grads


def td_update(
    net: QNetwork,
    target_net: QNetwork,
    batch: Sequence[Transition],
    cfg: DqnConfig,
    opt: RmsPropState | None = None,
) -> float:
    """One RMSprop step on the mean squared TD error; returns the pre-step loss."""
    if not batch:
        raise ValueError("empty batch")
    loss, grads = td_loss_and_grads(net, target_net, batch, cfg.gamma)
    if not np.isfinite(loss):
        raise FloatingPointError(f"non-finite TD loss {loss}")
    if opt is None:
        opt = RmsPropState.for_network(net)
    params = net.parameters()
    for name, g in grads.items():
        cache = opt.cache[name]
        cache *= cfg.rms_decay
        cache += (1.0 - cfg.rms_decay) * g * g
        params[name] -= cfg.lr * g / (np.sqrt(cache) + cfg.rms_eps)
    return loss


def sync_target(net: QNetwork, target_net: QNetwork) -> QNetwork:
    """Copy the online parameters into the target network."""
    target_net.w1[...] = net.w1
    target_net.b1[...] = net.b1
    target_net.w2[...] = net.w2
    target_net.b2[...] = net.b2
    return target_net


def save_policy(path, net: QNetwork, cfg: DqnConfig | None = None) -> None:
    header = {
        "state_dim": net.state_dim,
        "hidden": net.w1.shape[1],
        "config": asdict(cfg) if cfg else None,
    }
    with open(path, "wb") as fh:
        fh.write(POLICY_MAGIC.encode() + b"\n")
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")).encode() + b"\n")
        for arr in (net.w1, net.b1, net.w2, net.b2):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_policy(path) -> tuple[QNetwork, dict | None]:
    with open(path, "rb") as fh:
        magic = fh.readline().rstrip(b"\n").decode()
        if magic != POLICY_MAGIC:
            raise ValueError(f"not a policy checkpoint (magic {magic!r})")
        header = json.loads(fh.readline().decode())
        d, h = header["state_dim"], header["hidden"]
        net = QNetwork.__new__(QNetwork)
        shapes = {"w1": (d, h), "b1": (h,), "w2": (h, QNetwork.N_ACTIONS), "b2": (QNetwork.N_ACTIONS,)}
        for name, shape in shapes.items():
            buf = fh.read(int(np.prod(shape)) * 8)
            setattr(net, name, np.frombuffer(buf, dtype="<f8").reshape(shape).copy())
    return net, header.get("config")
