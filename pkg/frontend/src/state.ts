// Pure view state: everything on screen is a fold over service responses.
// No recommendation logic lives here; the reducer only records what the
// service said, so a recorded response stream fully reconstructs the UI.

import type {
  AnswerResponse,
  CreateSessionResponse,
  Move,
  NamedId,
  Outcome,
} from "./types.js";

export interface ChatMessage {
  role: "system" | "user";
  move?: Move; // system bubbles carry the move they rendered
  text: string;
}

export interface SessionView {
  sessionId: string | null;
  status: "idle" | "awaiting_user" | "succeeded" | "failed";
  messages: ChatMessage[];
  path: NamedId[];
  candidateCount: number | null;
  turn: number;
  nonce: string | null;
  pendingMove: Move | null;
  outcome: Outcome | null;
  inFlight: boolean;
  error: string | null;
}

export function initialView(): SessionView {
  return {
    sessionId: null,
    status: "idle",
    messages: [],
    path: [],
    candidateCount: null,
    turn: 0,
    nonce: null,
    pendingMove: null,
    outcome: null,
    inFlight: false,
    error: null,
  };
}

function systemMessage(move: Move): ChatMessage {
  return { role: "system", move, text: move.prompt };
}

export function applyCreate(view: SessionView, resp: CreateSessionResponse): SessionView {
  return {
    ...view,
    sessionId: resp.session_id,
    status: "awaiting_user",
    messages: [systemMessage(resp.move)],
    path: resp.path,
    candidateCount: resp.candidate_count,
    turn: resp.turn,
    nonce: resp.nonce,
    pendingMove: resp.move,
    outcome: null,
    inFlight: false,
    error: null,
  };
}

export function applyAnswer(
  view: SessionView,
  accept: boolean,
  resp: AnswerResponse,
): SessionView {
  const pending = view.pendingMove;
  const answerText = pending?.kind === "recommend"
    ? (accept ? "Take it" : "None of these")
    : (accept ? "Yes" : "No");
  const messages = [...view.messages, { role: "user", text: answerText } as ChatMessage];
  if (resp.move) {
    messages.push(systemMessage(resp.move));
  }
  let status: SessionView["status"] = "awaiting_user";
  if (resp.status === "succeeded") status = "succeeded";
  else if (resp.status === "failed") status = "failed";
  return {
    ...view,
    status,
    messages,
    path: resp.path,
    candidateCount: resp.candidate_count,
    turn: resp.turn,
    nonce: resp.nonce ?? null,
    pendingMove: resp.move ?? null,
    outcome: resp.outcome ?? null,
    inFlight: false,
    error: null,
  };
}

export function applyInFlight(view: SessionView): SessionView {
  return { ...view, inFlight: true };
}

export function applyError(view: SessionView, message: string): SessionView {
  return { ...view, inFlight: false, error: message };
}
