// Thin fetch client for the session service; errors surface as ApiError
// with the service's machine-readable code.
export class ApiError extends Error {
    constructor(code, message, status) {
        super(message);
        this.code = code;
        this.status = status;
    }
}
async function request(path, init) {
    let response;
    try {
        response = await fetch(path, init);
    }
    catch {
        throw new ApiError("connection_failed", "cannot reach the session service", 0);
    }
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
        const err = body;
        throw new ApiError(err.code ?? "http_error", err.message ?? response.statusText, response.status);
    }
    return body;
}
export class HttpSessionApi {
    constructor(base = "") {
        this.base = base;
    }
    async listAttributes(query) {
        const q = query ? `?q=${encodeURIComponent(query)}` : "";
        const body = await request(`${this.base}/meta/attributes${q}`);
        return body.attributes;
    }
    createSession(attributeId) {
        return request(`${this.base}/sessions`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ initial_attribute: attributeId }),
        });
    }
    postAnswer(sessionId, accept, nonce) {
        return request(`${this.base}/sessions/${sessionId}/answer`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ accept, nonce }),
        });
    }
}
