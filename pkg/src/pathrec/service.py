"""Live conversation sessions over HTTP for human responders.

The service is a thin stateful shell: it holds per-session state and drives
the same decision and update code as the batch episode loop, one move per
posted answer.  Sessions are in-memory, expire after an idle timeout, and
serialize concurrent requests per session.  Double-posted answers are no-ops
thanks to a per-turn nonce echoed in every response.

Endpoints (JSON bodies, errors as ``{"code", "message"}``):

    POST /sessions                  {"initial_attribute": int, "user_id": int?}
    POST /sessions/{id}/answer      {"accept": bool, "nonce": str}
    GET  /sessions/{id}
    GET  /meta/attributes?q=...
    GET  /healthz
"""

from __future__ import annotations

import json
import re
import threading
import time
import uuid
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .embeddings import EmbeddingTable
from .engine import Decision, ScprPolicy, ask_template, execute_decision, rec_template
from .graph import HeteroGraph
from .policy import Action, DqnConfig, HistoryEvent, QNetwork
from .session import SessionState, advance_turn, init_session


class ServiceError(Exception):
    def __init__(self, code: str, message: str, status: int):
        super().__init__(message)
        self.code = code
        self.message = message
        self.status = status


@dataclass
class ServiceConfig:
    k: int = 10
    max_turns: int = 15
    idle_timeout: float = 1800.0
    attribute_names: dict[int, str] = field(default_factory=dict)
    item_names: dict[int, str] = field(default_factory=dict)
    static_dir: str | None = None


@dataclass
class LiveSession:
    session_id: str
    state: SessionState
    history: list[HistoryEvent]
    pending: Decision | None
    nonce: str
    status: str = "awaiting_user"      # awaiting_user | succeeded | failed | expired
    fail_reason: str | None = None
    accepted_item: int | None = None
    transcript: list[dict] = field(default_factory=list)
    consumed_nonce: str | None = None
    last_answer_response: dict | None = None
    last_touch: float = 0.0
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionService:
    """Framework-free core; the HTTP handler below is a thin adapter."""

    def __init__(
        self,
        g: HeteroGraph,
        emb: EmbeddingTable,
        net: QNetwork,
        cfg: ServiceConfig | None = None,
        dqn_cfg: DqnConfig | None = None,
        clock=time.monotonic,
    ):
        self.g = g
        self.emb = emb
        self.cfg = cfg or ServiceConfig()
        self.dqn_cfg = dqn_cfg or DqnConfig(max_turns=self.cfg.max_turns)
        self.policy = ScprPolicy(net, self.dqn_cfg, explore=False, k=self.cfg.k)
        self.clock = clock
        self._sessions: dict[str, LiveSession] = {}
        self._store_lock = threading.Lock()

    # -- helpers ------------------------------------------------------------

    def _attr_name(self, p: int) -> str:
        return self.cfg.attribute_names.get(p, f"attribute-{p}")

    def _item_name(self, v: int) -> str:
        return self.cfg.item_names.get(v, f"item-{v}")

    def _describe_move(self, decision: Decision) -> dict:
        if decision.action is Action.ASK:
            p = decision.payload[0]
            return {
                "kind": "ask",
                "attribute": {"id": p, "name": self._attr_name(p)},
                "prompt": ask_template(self._attr_name(p)),
            }
        items = [{"id": v, "name": self._item_name(v)} for v in decision.payload]
        return {
            "kind": "recommend",
            "items": items,
            "prompt": rec_template([it["name"] for it in items]),
        }

    def _path_view(self, state: SessionState) -> list[dict]:
        return [{"id": p, "name": self._attr_name(p)} for p in state.path]

    def _get(self, session_id: str) -> LiveSession:
        with self._store_lock:
            sess = self._sessions.get(session_id)
        if sess is None:
            raise ServiceError("unknown_session", f"no session {session_id!r}", 404)
        if self.clock() - sess.last_touch > self.cfg.idle_timeout:
            sess.status = "expired"
        if sess.status == "expired":
            raise ServiceError("session_expired", f"session {session_id!r} expired", 410)
        return sess

    def _next_move(self, sess: LiveSession) -> None:
        decision = self.policy.decide(self.g, self.emb, sess.state, sess.history)
        sess.pending = decision
        sess.nonce = uuid.uuid4().hex
        sess.transcript.append(
            {"type": "move", "turn": sess.state.turn + 1, **self._describe_move(decision)}
        )

    # -- operations -----------------------------------------------------------

    def create_session(self, initial_attribute: int, user_id: int | None = None) -> dict:
        try:
            self.g.check_attribute(int(initial_attribute))
        except (IndexError, TypeError, ValueError):
            raise ServiceError(
                "unknown_attribute", f"attribute {initial_attribute!r} does not exist", 404
            ) from None
        if user_id is not None:
            try:
                self.g.check_user(int(user_id))
            except IndexError:
                raise ServiceError("unknown_user", f"user {user_id!r} does not exist", 404) from None
        try:
            # Anonymous humans score against the cold-start mean user vector.
            state = init_session(self.g, user_id, int(initial_attribute))
        except ValueError as exc:
            raise ServiceError("attribute_without_items", str(exc), 422) from None
        sess = LiveSession(
            session_id=uuid.uuid4().hex,
            state=state,
            history=[],
            pending=None,
            nonce="",
            last_touch=self.clock(),
        )
        self._next_move(sess)
        with self._store_lock:
            self._sessions[sess.session_id] = sess
        return {
            "session_id": sess.session_id,
            "status": sess.status,
            "move": self._describe_move(sess.pending),
            "nonce": sess.nonce,
            "turn": sess.state.turn + 1,
            "path": self._path_view(sess.state),
            "candidate_count": len(sess.state.candidate_items),
        }

    def post_answer(self, session_id: str, accept: bool, nonce: str | None = None) -> dict:
        sess = self._get(session_id)
        with sess.lock:
            sess.last_touch = self.clock()
            if nonce is not None and nonce == sess.consumed_nonce:
                # Repeat of an answer we already processed: no-op replay.
                return sess.last_answer_response
            if sess.status != "awaiting_user":
                raise ServiceError(
                    "session_finished", f"session is {sess.status}; no answer expected", 409
                )
            if nonce is not None and nonce != sess.nonce:
                raise ServiceError("stale_nonce", "answer does not match the pending move", 409)

            decision = sess.pending
            state, event, reward, succeeded = execute_decision(
                self.g, sess.state, decision, bool(accept), self.dqn_cfg, self.cfg.k
            )
            if event is not None:
                sess.history.append(event)
            state = advance_turn(state)
            turn = state.turn
            done = succeeded or turn >= self.cfg.max_turns or not state.candidate_items
            if done and not succeeded:
                reward += self.dqn_cfg.reward_quit
            sess.transcript.append(
                {"type": "answer", "turn": turn, "accept": bool(accept), "reward": reward}
            )
            sess.state = state
            sess.consumed_nonce = sess.nonce
            sess.pending = None

            response: dict = {
                "session_id": sess.session_id,
                "turn": turn,
                "path": self._path_view(state),
                "candidate_count": len(state.candidate_items),
            }
            if succeeded:
                sess.status = "succeeded"
                if decision.action is Action.REC:
                    sess.accepted_item = decision.payload[0]
                response["status"] = sess.status
                response["outcome"] = {
                    "result": "success",
                    "explanation_path": self._path_view(state),
                }
            elif done:
                sess.status = "failed"
                sess.fail_reason = "max_turns" if turn >= self.cfg.max_turns else "no_candidates"
                response["status"] = sess.status
                response["outcome"] = {"result": "fail", "reason": sess.fail_reason}
            else:
                self._next_move(sess)
                response["status"] = sess.status
                response["move"] = self._describe_move(sess.pending)
                response["nonce"] = sess.nonce
            sess.last_answer_response = response
            return response

    def get_session(self, session_id: str) -> dict:
        sess = self._get(session_id)
        with sess.lock:
            sess.last_touch = self.clock()
            return {
                "session_id": sess.session_id,
                "status": sess.status,
                "fail_reason": sess.fail_reason,
                "turn": sess.state.turn,
                "path": self._path_view(sess.state),
                "candidate_count": len(sess.state.candidate_items),
                "transcript": list(sess.transcript),
            }

    def list_attributes(self, query: str = "") -> list[dict]:
        needle = query.strip().lower()
        out = []
        for p in range(self.g.attribute_count):
            name = self._attr_name(p)
            if needle and needle not in name.lower():
                continue
            out.append({"id": p, "name": name, "items": len(self.g.items_with_attribute(p))})
        return out


# -- HTTP adapter -----------------------------------------------------------------

_SESSION_ANSWER = re.compile(r"^/sessions/([0-9a-f]+)/answer$")
_SESSION_GET = re.compile(r"^/sessions/([0-9a-f]+)$")

_STATIC_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".json": "application/json",
}


def make_handler(service: SessionService):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet by default
            pass

        def _send_json(self, status: int, payload) -> None:
            body = json.dumps(payload).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _send_error(self, exc: ServiceError) -> None:
            self._send_json(exc.status, {"code": exc.code, "message": exc.message})

        def _read_body(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            if length == 0:
                return {}
            try:
                return json.loads(self.rfile.read(length).decode())
            except json.JSONDecodeError:
                raise ServiceError("bad_request", "request body is not valid JSON", 400) from None

        def _serve_static(self, path: str) -> bool:
            if service.cfg.static_dir is None:
                return False
            rel = "index.html" if path == "/" else path.lstrip("/")
            root = Path(service.cfg.static_dir).resolve()
            target = (root / rel).resolve()
            if not str(target).startswith(str(root)) or not target.is_file():
                return False
            body = target.read_bytes()
            self.send_response(200)
            self.send_header(
                "Content-Type", _STATIC_TYPES.get(target.suffix, "application/octet-stream")
            )
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
            return True

        def do_GET(self):
            parsed = urlparse(self.path)
            try:
                if parsed.path == "/healthz":
                    self._send_json(200, {"status": "ok"})
                elif parsed.path == "/meta/attributes":
                    q = parse_qs(parsed.query).get("q", [""])[0]
                    self._send_json(200, {"attributes": service.list_attributes(q)})
                elif m := _SESSION_GET.match(parsed.path):
                    self._send_json(200, service.get_session(m.group(1)))
                elif self._serve_static(parsed.path):
                    pass
                else:
                    self._send_json(404, {"code": "not_found", "message": parsed.path})
            except ServiceError as exc:
                self._send_error(exc)

        def do_POST(self):
            parsed = urlparse(self.path)
            try:
                body = self._read_body()
                if parsed.path == "/sessions":
                    if "initial_attribute" not in body:
                        raise ServiceError("bad_request", "initial_attribute is required", 400)
                    self._send_json(
                        200,
                        service.create_session(body["initial_attribute"], body.get("user_id")),
                    )
                elif m := _SESSION_ANSWER.match(parsed.path):
                    if "accept" not in body:
                        raise ServiceError("bad_request", "accept is required", 400)
                    self._send_json(
                        200,
                        service.post_answer(m.group(1), body["accept"], body.get("nonce")),
                    )
                else:
                    self._send_json(404, {"code": "not_found", "message": parsed.path})
            except ServiceError as exc:
                self._send_error(exc)

    return Handler


def serve(service: SessionService, host: str = "127.0.0.1", port: int = 8080) -> ThreadingHTTPServer:
    """Bind and return the server; caller runs serve_forever (or a thread does)."""
    return ThreadingHTTPServer((host, port), make_handler(service))
