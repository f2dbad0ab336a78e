// Thin fetch client for the session service; errors surface as ApiError
// with the service's machine-readable code.

import type {
  AnswerResponse,
  AttributeInfo,
  CreateSessionResponse,
  ServiceErrorBody,
} from "./types.js";

export class ApiError extends Error {
  constructor(public code: string, message: string, public status: number) {
    super(message);
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  let response: Response;
  try {
    response = await fetch(path, init);
  } catch {
    throw new ApiError("connection_failed", "cannot reach the session service", 0);
  }
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const err = body as ServiceErrorBody;
    throw new ApiError(err.code ?? "http_error", err.message ?? response.statusText, response.status);
  }
  return body as T;
}

export interface SessionApi {
  listAttributes(query: string): Promise<AttributeInfo[]>;
  createSession(attributeId: number): Promise<CreateSessionResponse>;
  postAnswer(sessionId: string, accept: boolean, nonce: string): Promise<AnswerResponse>;
}

export class HttpSessionApi implements SessionApi {
  constructor(private base: string = "") {}

  async listAttributes(query: string): Promise<AttributeInfo[]> {
    const q = query ? `?q=${encodeURIComponent(query)}` : "";
    const body = await request<{ attributes: AttributeInfo[] }>(
      `${this.base}/meta/attributes${q}`,
    );
    return body.attributes;
  }

  createSession(attributeId: number): Promise<CreateSessionResponse> {
    return request(`${this.base}/sessions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ initial_attribute: attributeId }),
    });
  }

  postAnswer(sessionId: string, accept: boolean, nonce: string): Promise<AnswerResponse> {
    return request(`${this.base}/sessions/${sessionId}/answer`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ accept, nonce }),
    });
  }
}
