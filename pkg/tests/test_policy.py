import numpy as np
import pytest

from pathrec.policy import (
    Action,
    CANDIDATE_BIN_UPPER,
    DqnConfig,
    HistoryEvent,
    QNetwork,
    ReplayBuffer,
    RewardEvent,
    RmsPropState,
    Transition,
    candidate_size_bin,
    encode_state,
    load_policy,
    q_values,
    reward_for,
    save_policy,
    select_action,
    sync_target,
    td_loss_and_grads,
    td_targets,
    td_update,
)
from pathrec.session import SessionState


def dummy_state(n_candidates: int) -> SessionState:
    return SessionState(
        user=0,
        path=(0,),
        accepted=(0,),
        rejected_attributes=(),
        rejected_items=(),
        candidate_items=tuple(range(n_candidates)),
        candidate_attributes=(),
    )


class TestEncoding:
    def test_empty_history_size_37(self):
        vec = encode_state(dummy_state(37), [], max_turns=15)
        assert vec.shape == (68,)
        assert not vec[:60].any()
        # 37 falls in the 33..64 bin, the sixth of eight.
        assert vec[60 + 5] == 1.0 and vec[60:].sum() == 1.0

    def test_history_slots(self):
        history = [HistoryEvent.ASK_ACCEPTED, HistoryEvent.ASK_REJECTED]
        vec = encode_state(dummy_state(3), history, max_turns=15)
        assert vec[0 * 4 + 1] == 1.0
        assert vec[1 * 4 + 2] == 1.0
        assert vec[:60].sum() == 2.0

    def test_single_candidate_lowest_bin(self):
        vec = encode_state(dummy_state(1), [], max_turns=15)
        assert vec[60] == 1.0

    def test_history_longer_than_budget(self):
        with pytest.raises(ValueError):
            encode_state(dummy_state(1), [HistoryEvent.ASK_ACCEPTED] * 16, max_turns=15)

    def test_bin_boundaries(self):
        for upper, idx in zip(CANDIDATE_BIN_UPPER, range(7)):
            assert candidate_size_bin(upper) == idx
        assert candidate_size_bin(2) == 1
        assert candidate_size_bin(257) == 7
        assert candidate_size_bin(10_000) == 7

    def test_each_slot_at_most_one_hot(self):
        rng = np.random.default_rng(0)
        events = list(HistoryEvent)
        for _ in range(20):
            history = [events[i] for i in rng.integers(0, 3, size=rng.integers(0, 15))]
            vec = encode_state(dummy_state(int(rng.integers(1, 500))), history, max_turns=15)
            for slot in range(15):
                assert vec[slot * 4 : (slot + 1) * 4].sum() <= 1.0


class TestQNetwork:
    def test_zero_network_outputs_zero(self):
        net = QNetwork(68, hidden=4, seed=0)
        for p in net.parameters().values():
            p[...] = 0.0
        assert q_values(net, np.ones(68)) == (0.0, 0.0)

    def test_hand_computed_forward(self):
        net = QNetwork(2, hidden=1, seed=0)
        net.w1[...] = [[1.0], [0.5]]
        net.b1[...] = [0.25]
        net.w2[...] = [[2.0, -1.0]]
        net.b2[...] = [0.1, 0.2]
        s = np.array([2.0, 3.0])
        # pre = 2 + 1.5 + 0.25 = 3.75; q = (7.6, -3.55)
        q_ask, q_rec = q_values(net, s)
        assert q_ask == pytest.approx(3.75 * 2.0 + 0.1)
        assert q_rec == pytest.approx(3.75 * -1.0 + 0.2)

    def test_rectifier_clamps_negative_preactivation(self):
        net = QNetwork(1, hidden=1, seed=0)
        net.w1[...] = [[-5.0]]
        net.b1[...] = [0.0]
        net.w2[...] = [[1.0, 1.0]]
        net.b2[...] = [0.5, 0.5]
        assert q_values(net, np.array([1.0])) == (0.5, 0.5)

    def test_output_layer_linearity(self):
        net = QNetwork(3, hidden=4, seed=1)
        s = np.ones(3)
        base = np.array(q_values(net, s)) - net.b2
        net.w2 *= 2.0
        scaled = np.array(q_values(net, s)) - net.b2
        assert np.allclose(scaled, 2.0 * base)

    def test_dimension_mismatch(self):
        net = QNetwork(5, hidden=2, seed=0)
        with pytest.raises(ValueError):
            q_values(net, np.zeros(7))

    def test_action_space_is_two(self):
        net = QNetwork(10, hidden=3, seed=0)
        assert net.forward_batch(np.zeros((4, 10))).shape == (4, 2)


class TestSelectAction:
    def test_greedy_prefers_higher_q(self):
        net = QNetwork(2, hidden=1, seed=0)
        net.w1[...] = 0.0
        net.b1[...] = 0.0
        net.w2[...] = 0.0
        rng = np.random.default_rng(0)
        net.b2[...] = [0.3, 0.1]
        assert select_action(net, np.zeros(2), 0.0, rng) is Action.ASK
        net.b2[...] = [0.1, 0.3]
        assert select_action(net, np.zeros(2), 0.0, rng) is Action.REC

    def test_tie_goes_to_ask(self):
        net = QNetwork(2, hidden=1, seed=0)
        for p in net.parameters().values():
            p[...] = 0.0
        assert select_action(net, np.zeros(2), 0.0, np.random.default_rng(0)) is Action.ASK

    def test_full_exploration_reproducible(self):
        net = QNetwork(2, hidden=1, seed=0)
        draws1 = [
            select_action(net, np.zeros(2), 1.0, np.random.default_rng(7)) for _ in range(1)
        ]
        draws2 = [
            select_action(net, np.zeros(2), 1.0, np.random.default_rng(7)) for _ in range(1)
        ]
        assert draws1 == draws2

    def test_greedy_invariant_to_constant_shift(self):
        net = QNetwork(3, hidden=2, seed=2)
        s = np.ones(3)
        rng = np.random.default_rng(0)
        before = select_action(net, s, 0.0, rng)
        net.b2 += 123.4
        assert select_action(net, s, 0.0, rng) is before


class TestRewards:
    def test_reward_table(self):
        cfg = DqnConfig()
        assert reward_for(RewardEvent.REC_SUCCESS, cfg) == 1.0
        assert reward_for(RewardEvent.REC_FAIL, cfg) == -0.1
        assert reward_for(RewardEvent.ASK_ACCEPT, cfg) == 0.01
        assert reward_for(RewardEvent.ASK_REJECT, cfg) == -0.1
        assert reward_for(RewardEvent.QUIT, cfg) == -0.3

    def test_config_defaults(self):
        cfg = DqnConfig()
        assert cfg.batch_size == 128
        assert cfg.gamma == 0.999
        assert cfg.target_sync_every == 20
        assert cfg.replay_capacity == 50_000
        assert cfg.state_dim == 68

    def test_epsilon_schedule(self):
        cfg = DqnConfig()
        assert cfg.epsilon_at(0) == pytest.approx(0.9)
        assert cfg.epsilon_at(10_000) == pytest.approx(0.1, abs=1e-4)
        assert cfg.epsilon_at(1000) == pytest.approx(0.1 + 0.8 / np.e)

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            DqnConfig(gamma=0.0)
        with pytest.raises(ValueError):
            DqnConfig(batch_size=100, replay_capacity=50)


class TestReplayBuffer:
    def _t(self, i, done=False):
        return Transition(np.array([float(i)]), Action.ASK, 0.0, None if done else np.array([0.0]), done)

    def test_fifo_eviction_at_capacity(self):
        buf = ReplayBuffer(capacity=3)
        for i in range(5):
            buf.push(self._t(i, done=True))
        assert len(buf) == 3
        assert buf.oldest().state[0] == 2.0

    def test_never_exceeds_capacity(self):
        buf = ReplayBuffer(capacity=10)
        for i in range(100):
            buf.push(self._t(i, done=True))
            assert len(buf) <= 10

    def test_sample_without_enough_items(self):
        buf = ReplayBuffer(capacity=10)
        buf.push(self._t(0, done=True))
        with pytest.raises(ValueError):
            buf.sample(2, np.random.default_rng(0))

    def test_terminal_transition_must_drop_next_state(self):
        buf = ReplayBuffer(capacity=2)
        with pytest.raises(ValueError):
            buf.push(Transition(np.zeros(1), Action.REC, 0.0, np.zeros(1), True))


class TestTdUpdate:
    def _nets(self, dim=4, hidden=3, seed=0):
        net = QNetwork(dim, hidden=hidden, seed=seed)
        return net, net.copy()

    def _batch(self, rng, dim=4, n=6):
        batch = []
        for i in range(n):
            done = bool(rng.random() < 0.4)
            batch.append(
                Transition(
                    rng.normal(size=dim),
                    Action(int(rng.integers(2))),
                    float(rng.normal()),
                    None if done else rng.normal(size=dim),
                    done,
                )
            )
        return batch

    def test_gamma_zero_targets_are_rewards(self, rng):
        net, target = self._nets()
        batch = self._batch(rng)
        y = td_targets(target, batch, gamma=0.0)
        assert np.allclose(y, [t.reward for t in batch])

    def test_done_ignores_next_state(self, rng):
        net, target = self._nets()
        t = Transition(rng.normal(size=4), Action.REC, 0.7, None, True)
        assert td_targets(target, [t], gamma=0.999) == pytest.approx([0.7])

    def test_gradient_matches_finite_differences(self, rng):
        net, target = self._nets(seed=3)
        batch = self._batch(rng, n=5)
        _, grads = td_loss_and_grads(net, target, batch, gamma=0.9)
        h = 1e-5
        for name, param in net.parameters().items():
            flat = param.ravel()
            numeric = np.zeros_like(flat)
            for j in range(flat.size):
                orig = flat[j]
                flat[j] = orig + h
                up, _ = td_loss_and_grads(net, target, batch, gamma=0.9)
                flat[j] = orig - h
                down, _ = td_loss_and_grads(net, target, batch, gamma=0.9)
                flat[j] = orig
                numeric[j] = (up - down) / (2 * h)
            analytic = grads[name].ravel()
            denom = np.maximum(np.abs(analytic), np.abs(numeric))
            mask = denom > 1e-8
            if mask.any():
                assert (np.abs(analytic - numeric)[mask] / denom[mask]).max() < 1e-4

    def test_perfect_predictions_give_zero_loss_and_gradient(self, rng):
        net, target = self._nets(seed=5)
        s = rng.normal(size=4)
        q_ask, _ = q_values(net, s)
        t = Transition(s, Action.ASK, q_ask, None, True)
        loss, grads = td_loss_and_grads(net, target, [t], gamma=0.999)
        assert loss == pytest.approx(0.0, abs=1e-20)
        for garr in grads.values():
            assert np.abs(garr).max() == pytest.approx(0.0, abs=1e-12)

    def test_update_moves_toward_target(self, rng):
        net, target = self._nets(seed=6)
        batch = self._batch(rng, n=8)
        cfg = DqnConfig(lr=1e-2, batch_size=8, replay_capacity=100)
        opt = RmsPropState.for_network(net)
        losses = [td_update(net, target, batch, cfg, opt) for _ in range(60)]
        assert losses[-1] < losses[0]

    def test_empty_batch_rejected(self):
        net, target = self._nets()
        with pytest.raises(ValueError):
            td_update(net, target, [], DqnConfig())


class TestSyncTarget:
    def test_sync_copies_and_is_idempotent(self, rng):
        net = QNetwork(4, hidden=3, seed=1)
        target = QNetwork(4, hidden=3, seed=2)
        s = rng.normal(size=4)
        assert q_values(net, s) != q_values(target, s)
        sync_target(net, target)
        assert q_values(net, s) == q_values(target, s)
        sync_target(net, target)
        assert q_values(net, s) == q_values(target, s)

    def test_networks_diverge_after_updates(self, rng):
        net = QNetwork(4, hidden=3, seed=1)
        target = net.copy()
        batch = [Transition(rng.normal(size=4), Action.ASK, 1.0, None, True)]
        cfg = DqnConfig(lr=1e-2, batch_size=1, replay_capacity=10)
        td_update(net, target, batch, cfg)
        s = rng.normal(size=4)
        assert q_values(net, s) != q_values(target, s)


class TestPolicyCheckpoint:
    def test_round_trip(self, tmp_path):
        net = QNetwork(68, hidden=64, seed=9)
        cfg = DqnConfig()
        path = tmp_path / "pol.ckpt"
        save_policy(path, net, cfg)
        loaded, loaded_cfg = load_policy(path)
        for name in ("w1", "b1", "w2", "b2"):
            assert np.array_equal(getattr(loaded, name), getattr(net, name))
        assert loaded_cfg["gamma"] == 0.999
        assert path.read_bytes().startswith(b"CPR-POL-1\n")

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_bytes(b"WRONG\n{}\n")
        with pytest.raises(ValueError, match="magic"):
            load_policy(path)
