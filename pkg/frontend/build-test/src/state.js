// Pure view state: everything on screen is a fold over service responses.
// No recommendation logic lives here; the reducer only records what the
// service said, so a recorded response stream fully reconstructs the UI.
export function initialView() {
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
function systemMessage(move) {
    return { role: "system", move, text: move.prompt };
}
export function applyCreate(view, resp) {
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
export function applyAnswer(view, accept, resp) {
    const pending = view.pendingMove;
    const answerText = pending?.kind === "recommend"
        ? (accept ? "Take it" : "None of these")
        : (accept ? "Yes" : "No");
    const messages = [...view.messages, { role: "user", text: answerText }];
    if (resp.move) {
        messages.push(systemMessage(resp.move));
    }
    let status = "awaiting_user";
    if (resp.status === "succeeded")
        status = "succeeded";
    else if (resp.status === "failed")
        status = "failed";
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
export function applyInFlight(view) {
    return { ...view, inFlight: true };
}
export function applyError(view, message) {
    return { ...view, inFlight: false, error: message };
}
