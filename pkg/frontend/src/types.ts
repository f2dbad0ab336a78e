// Wire types for the session service JSON API.

export interface NamedId {
  id: number;
  name: string;
}

export interface AskMove {
  kind: "ask";
  attribute: NamedId;
  prompt: string;
}

export interface RecommendMove {
  kind: "recommend";
  items: NamedId[];
  prompt: string;
}

export type Move = AskMove | RecommendMove;

export interface Outcome {
  result: "success" | "fail";
  explanation_path?: NamedId[];
  reason?: string;
}

export interface CreateSessionResponse {
  session_id: string;
  status: string;
  move: Move;
  nonce: string;
  turn: number;
  path: NamedId[];
  candidate_count: number;
}

export interface AnswerResponse {
  session_id: string;
  turn: number;
  path: NamedId[];
  candidate_count: number;
  status: string;
  move?: Move;
  nonce?: string;
  outcome?: Outcome;
}

export interface AttributeInfo {
  id: number;
  name: string;
  items: number;
}

export interface ServiceErrorBody {
  code: string;
  message: string;
}
