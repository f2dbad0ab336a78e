// Session flows with the two safety rails the UI guarantees: one request in
// flight at a time, and each move's nonce is spent exactly once, so double
// clicks and repeated submissions cannot produce duplicate turns.

import type { SessionApi } from "./api.js";
import { ApiError } from "./api.js";
import {
  applyAnswer,
  applyCreate,
  applyError,
  applyInFlight,
  initialView,
  SessionView,
} from "./state.js";

export class SessionController {
  view: SessionView = initialView();
  private spentNonces = new Set<string>();

  constructor(
    private api: SessionApi,
    private onChange: (view: SessionView) => void = () => {},
  ) {}

  private update(view: SessionView): void {
    this.view = view;
    this.onChange(view);
  }

  reset(): void {
    this.spentNonces.clear();
    this.update(initialView());
  }

  async start(attributeId: number): Promise<void> {
    if (this.view.inFlight) return;
    this.update(applyInFlight(this.view));
    try {
      const resp = await this.api.createSession(attributeId);
      this.update(applyCreate(this.view, resp));
    } catch (err) {
      this.update(applyError(this.view, describe(err)));
    }
  }

  async answer(accept: boolean): Promise<void> {
    const { sessionId, nonce, status, inFlight } = this.view;
    if (inFlight || status !== "awaiting_user" || !sessionId || !nonce) return;
    if (this.spentNonces.has(nonce)) return;
    this.spentNonces.add(nonce);
    this.update(applyInFlight(this.view));
    try {
      const resp = await this.api.postAnswer(sessionId, accept, nonce);
      this.update(applyAnswer(this.view, accept, resp));
    } catch (err) {
      this.update(applyError(this.view, describe(err)));
    }
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) {
    return `${err.code}: ${err.message}`;
  }
  return String(err);
}
