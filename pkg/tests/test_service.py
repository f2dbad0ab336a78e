import json
import threading
import urllib.request

import numpy as np
import pytest

from pathrec.embeddings import EmbeddingTable
from pathrec.engine import EpisodeSpec, ScprPolicy, run_episode
from pathrec.policy import DqnConfig, QNetwork
from pathrec.service import (
    ServiceConfig,
    ServiceError,
    SessionService,
    make_handler,
    serve,
)



class FakeClock:
    def __init__(self):
        self.now = 0.0

    def __call__(self):
        return self.now


def zero_net(cfg: DqnConfig) -> QNetwork:
    net = QNetwork(cfg.state_dim, cfg.hidden, seed=0)
    for p in net.parameters().values():
        p[...] = 0.0
    return net


@pytest.fixture
def service(g0):
    emb = EmbeddingTable(np.zeros((1, 2)), np.zeros((3, 2)), np.zeros((3, 2)))
    cfg = ServiceConfig(
        k=10,
        max_turns=15,
        attribute_names={0: "p1", 1: "p2", 2: "p3"},
        item_names={0: "v1", 1: "v2", 2: "v3"},
    )
    clock = FakeClock()
    svc = SessionService(g0, emb, zero_net(DqnConfig()), cfg, clock=clock)
    svc.test_clock = clock
    return svc


class TestSessionFlow:
    def test_create_returns_first_move(self, service):
        resp = service.create_session(0)
        assert resp["status"] == "awaiting_user"
        assert resp["move"]["kind"] == "ask"
        # Zero net ties toward asking; entropy ties break to the smaller id.
        assert resp["move"]["attribute"] == {"id": 1, "name": "p2"}
        assert resp["move"]["prompt"] == "Do you like p2?"
        assert resp["path"] == [{"id": 0, "name": "p1"}]
        assert resp["candidate_count"] == 2
        assert resp["nonce"]

    def test_distinct_session_ids(self, service):
        assert service.create_session(0)["session_id"] != service.create_session(0)["session_id"]

    def test_full_anchored_walk(self, service):
        # A human anchored on v2: rejects p2, accepts p3, accepts the list.
        created = service.create_session(0)
        sid, nonce = created["session_id"], created["nonce"]
        r1 = service.post_answer(sid, accept=False, nonce=nonce)
        assert r1["status"] == "awaiting_user"
        assert r1["move"]["kind"] == "ask"
        assert r1["move"]["attribute"]["id"] == 2
        assert r1["candidate_count"] == 2
        r2 = service.post_answer(sid, accept=True, nonce=r1["nonce"])
        assert r2["move"]["kind"] == "recommend"
        assert [it["id"] for it in r2["move"]["items"]] == [1]
        assert [p["id"] for p in r2["path"]] == [0, 2]
        r3 = service.post_answer(sid, accept=True, nonce=r2["nonce"])
        assert r3["status"] == "succeeded"
        assert r3["outcome"]["result"] == "success"
        assert [p["id"] for p in r3["outcome"]["explanation_path"]] == [0, 2]

    def test_accept_on_ask_extends_path(self, service):
        created = service.create_session(0)
        r = service.post_answer(created["session_id"], accept=True, nonce=created["nonce"])
        assert [p["id"] for p in r["path"]] == [0, 1]

    def test_turn_budget_failure(self, g0):
        emb = EmbeddingTable(np.zeros((1, 2)), np.zeros((3, 2)), np.zeros((3, 2)))
        cfg = ServiceConfig(k=10, max_turns=2)
        svc = SessionService(g0, emb, zero_net(DqnConfig(max_turns=2)), cfg)
        created = svc.create_session(0)
        sid, nonce = created["session_id"], created["nonce"]
        r1 = svc.post_answer(sid, accept=False, nonce=nonce)
        r2 = svc.post_answer(sid, accept=False, nonce=r1["nonce"])
        assert r2["status"] == "failed"
        assert r2["outcome"]["reason"] == "max_turns"

    def test_get_session_transcript(self, service):
        created = service.create_session(0)
        snap = service.get_session(created["session_id"])
        assert snap["status"] == "awaiting_user"
        assert len(snap["transcript"]) == 1
        service.post_answer(created["session_id"], accept=True, nonce=created["nonce"])
        snap = service.get_session(created["session_id"])
        kinds = [e["type"] for e in snap["transcript"]]
        assert kinds == ["move", "answer", "move"]
        assert len(snap["transcript"]) <= 2 * 15

    def test_terminal_status_persists(self, service):
        created = service.create_session(1)  # p2: single candidate item
        sid = created["session_id"]
        resp = service.post_answer(sid, accept=True, nonce=created["nonce"])
        while resp.get("status") == "awaiting_user":
            resp = service.post_answer(sid, accept=True, nonce=resp["nonce"])
        assert service.get_session(sid)["status"] == resp["status"]


class TestNonceSemantics:
    def test_repeat_answer_is_noop(self, service):
        created = service.create_session(0)
        sid, nonce = created["session_id"], created["nonce"]
        first = service.post_answer(sid, accept=True, nonce=nonce)
        replay = service.post_answer(sid, accept=True, nonce=nonce)
        assert replay is first or replay == first
        assert service.get_session(sid)["turn"] == 1

    def test_stale_nonce_conflicts(self, service):
        created = service.create_session(0)
        sid = created["session_id"]
        with pytest.raises(ServiceError) as err:
            service.post_answer(sid, accept=True, nonce="bogus")
        assert err.value.code == "stale_nonce" and err.value.status == 409

    def test_concurrent_double_post_single_transition(self, service):
        created = service.create_session(0)
        sid, nonce = created["session_id"], created["nonce"]
        results = []

        def post():
            results.append(service.post_answer(sid, accept=True, nonce=nonce))

        threads = [threading.Thread(target=post) for _ in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert service.get_session(sid)["turn"] == 1
        assert all(r == results[0] for r in results)


class TestServiceErrors:
    def test_unknown_attribute(self, service):
        with pytest.raises(ServiceError) as err:
            service.create_session(99)
        assert err.value.code == "unknown_attribute" and err.value.status == 404

    def test_attribute_without_items(self):
        from pathrec.graph import Relation, VertexKind, build_graph

        g = build_graph(
            (1, 1, 2),
            [(Relation.BELONG_TO, (VertexKind.ITEM, 0), (VertexKind.ATTRIBUTE, 0))],
        )
        emb = EmbeddingTable(np.zeros((1, 2)), np.zeros((1, 2)), np.zeros((2, 2)))
        svc = SessionService(g, emb, zero_net(DqnConfig()))
        with pytest.raises(ServiceError) as err:
            svc.create_session(1)
        assert err.value.code == "attribute_without_items" and err.value.status == 422

    def test_unknown_session(self, service):
        with pytest.raises(ServiceError) as err:
            service.get_session("deadbeef")
        assert err.value.code == "unknown_session" and err.value.status == 404

    def test_answer_to_finished_session_conflicts(self, service):
        created = service.create_session(1)
        sid = created["session_id"]
        resp = service.post_answer(sid, accept=True, nonce=created["nonce"])
        while resp.get("status") == "awaiting_user":
            resp = service.post_answer(sid, accept=True, nonce=resp["nonce"])
        with pytest.raises(ServiceError) as err:
            service.post_answer(sid, accept=True, nonce="whatever")
        assert err.value.code == "session_finished" and err.value.status == 409

    def test_expired_session_gone(self, service):
        created = service.create_session(0)
        service.test_clock.now += 10_000.0
        with pytest.raises(ServiceError) as err:
            service.get_session(created["session_id"])
        assert err.value.code == "session_expired" and err.value.status == 410


class TestAttributesListing:
    def test_search(self, service):
        all_attrs = service.list_attributes()
        assert len(all_attrs) == 3
        assert service.list_attributes("P2") == [{"id": 1, "name": "p2", "items": 1}]

    def test_counts(self, service):
        by_name = {a["name"]: a["items"] for a in service.list_attributes()}
        assert by_name == {"p1": 2, "p2": 1, "p3": 2}


class TestReplayEquivalence:
    def test_service_trace_matches_episode_loop(self, service, g0):
        # Drive the service with a fixed answer script, then replay the same
        # script through the batch loop and compare moves and candidates.
        answers = [False, True, True]
        created = service.create_session(0)
        sid, nonce = created["session_id"], created["nonce"]
        service_moves = [created["move"]]
        service_counts = []
        resp = None
        for a in answers:
            resp = service.post_answer(sid, accept=a, nonce=nonce)
            service_counts.append(resp["candidate_count"])
            if "move" in resp:
                service_moves.append(resp["move"])
                nonce = resp["nonce"]
        assert resp["status"] == "succeeded"

        class ScriptResponder:
            def __init__(self, answers):
                self.answers = list(answers)

            def answer_attribute(self, p):
                return self.answers.pop(0)

            def answer_recommendation(self, items):
                return self.answers.pop(0)

        emb = EmbeddingTable(np.zeros((1, 2)), np.zeros((3, 2)), np.zeros((3, 2)))
        cfg = DqnConfig()
        policy = ScprPolicy(zero_net(cfg), cfg, explore=False, k=10)
        spec = EpisodeSpec(user=None, target_item=None, initial_attribute=0)
        log = run_episode(g0, emb, policy, spec, ScriptResponder(answers), cfg=cfg)
        assert log.success and log.success_turn == 3
        for move, rec in zip(service_moves, log.turns):
            if move["kind"] == "ask":
                assert rec.action == "ask" and rec.payload == (move["attribute"]["id"],)
            else:
                assert rec.action == "rec"
                assert rec.payload == tuple(it["id"] for it in move["items"])
        assert service_counts == [len(t.candidates_after) for t in log.turns]


class TestHttpLayer:
    @pytest.fixture
    def server(self, service):
        srv = serve(service, host="127.0.0.1", port=0)
        thread = threading.Thread(target=srv.serve_forever, daemon=True)
        thread.start()
        yield f"http://127.0.0.1:{srv.server_address[1]}"
        srv.shutdown()

    def _request(self, url, payload=None, method=None):
        data = json.dumps(payload).encode() if payload is not None else None
        req = urllib.request.Request(
            url, data=data, method=method or ("POST" if data else "GET"),
            headers={"Content-Type": "application/json"},
        )
        try:
            with urllib.request.urlopen(req) as resp:
                return resp.status, json.loads(resp.read().decode())
        except urllib.error.HTTPError as err:
            return err.code, json.loads(err.read().decode())

    def test_healthz(self, server):
        status, body = self._request(f"{server}/healthz")
        assert status == 200 and body == {"status": "ok"}

    def test_meta_attributes_search(self, server):
        status, body = self._request(f"{server}/meta/attributes?q=p3")
        assert status == 200
        assert body["attributes"] == [{"id": 2, "name": "p3", "items": 2}]

    def test_session_round_trip(self, server):
        status, created = self._request(f"{server}/sessions", {"initial_attribute": 0})
        assert status == 200
        sid = created["session_id"]
        status, answered = self._request(
            f"{server}/sessions/{sid}/answer",
            {"accept": True, "nonce": created["nonce"]},
        )
        assert status == 200
        assert [p["id"] for p in answered["path"]] == [0, 1]
        status, snap = self._request(f"{server}/sessions/{sid}")
        assert status == 200 and snap["turn"] == 1

    def test_error_shape(self, server):
        status, body = self._request(f"{server}/sessions", {"initial_attribute": 42})
        assert status == 404
        assert body["code"] == "unknown_attribute" and "message" in body

    def test_missing_body_field(self, server):
        status, body = self._request(f"{server}/sessions", {})
        assert status == 400 and body["code"] == "bad_request"

    def test_unknown_route(self, server):
        status, body = self._request(f"{server}/nope")
        assert status == 404

    def test_static_serving(self, g0, tmp_path):
        emb = EmbeddingTable(np.zeros((1, 2)), np.zeros((3, 2)), np.zeros((3, 2)))
        static = tmp_path / "static"
        static.mkdir()
        (static / "index.html").write_text("<html>chat</html>")
        cfg = ServiceConfig(static_dir=str(static))
        svc = SessionService(g0, emb, zero_net(DqnConfig()), cfg)
        srv = serve(svc, host="127.0.0.1", port=0)
        thread = threading.Thread(target=srv.serve_forever, daemon=True)
        thread.start()
        try:
            url = f"http://127.0.0.1:{srv.server_address[1]}/"
            with urllib.request.urlopen(url) as resp:
                assert resp.status == 200
                assert b"chat" in resp.read()
        finally:
            srv.shutdown()
