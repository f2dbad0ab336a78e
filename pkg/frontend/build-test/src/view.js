// The whole screen as a function of the session view.  Chat bubbles are
// system moves; user answers render as small marks, not bubbles; the
// explanation path is a chip row that grows with each accepted attribute.
import { h } from "./vdom.js";
export function render(view, attributes, handlers) {
    const children = [header(view)];
    if (view.error) {
        children.push(h("div", { class: "banner error" }, [view.error]));
    }
    if (view.status === "idle") {
        children.push(startScreen(attributes, handlers));
    }
    else {
        children.push(pathChips(view));
        children.push(chatLog(view));
        if (view.status === "awaiting_user") {
            children.push(controls(view, handlers));
        }
        else {
            children.push(terminalScreen(view, handlers));
        }
    }
    return h("div", { class: "app" }, children);
}
function header(view) {
    const bits = [h("h1", {}, ["pathrec chat"])];
    if (view.status !== "idle") {
        bits.push(h("span", { class: "status-banner " + view.status }, [view.status]));
        if (view.candidateCount !== null) {
            bits.push(h("span", { class: "candidate-count" }, [`${view.candidateCount} candidates left`]));
        }
    }
    return h("header", {}, bits);
}
function startScreen(attributes, handlers) {
    return h("div", { class: "screen start" }, [
        h("p", {}, ["Pick an attribute you like to open the conversation:"]),
        h("input", { class: "attr-search", placeholder: "search attributes" }, [], {
            input: (event) => {
                const target = event.target;
                handlers.search(target?.value ?? "");
            },
        }),
        h("ul", { class: "attr-list" }, attributes.map((attr) => h("li", {}, [
            h("button", { class: "attr-option", "data-id": String(attr.id) }, [`${attr.name} (${attr.items})`], { click: () => handlers.start(attr.id) }),
        ]))),
    ]);
}
function chatLog(view) {
    return h("div", { class: "chat" }, view.messages.map((msg) => msg.role === "system"
        ? h("div", { class: "bubble system" }, [msg.text])
        : h("div", { class: "answer user" }, [msg.text])));
}
function pathChips(view) {
    return h("div", { class: "path" }, [
        h("span", { class: "path-label" }, ["path:"]),
        ...view.path.map((p) => h("span", { class: "chip" }, [p.name])),
    ]);
}
function controls(view, handlers) {
    const disabled = view.inFlight ? "true" : "false";
    const isRec = view.pendingMove?.kind === "recommend";
    return h("div", { class: "controls" }, [
        h("button", { class: "accept", disabled }, [isRec ? "Take it" : "Yes"], { click: () => handlers.answer(true) }),
        h("button", { class: "reject", disabled }, [isRec ? "None of these" : "No"], { click: () => handlers.answer(false) }),
    ]);
}
function terminalScreen(view, handlers) {
    if (view.status === "succeeded") {
        const path = view.outcome?.explanation_path ?? view.path;
        return h("div", { class: "screen success" }, [
            h("p", {}, ["Recommendation accepted. The path that led here:"]),
            h("div", { class: "explanation" }, path.map((p) => h("span", { class: "chip" }, [p.name]))),
            againButton(handlers),
        ]);
    }
    const reason = view.outcome?.reason === "max_turns"
        ? "The 15-turn budget ran out before a recommendation landed."
        : "No candidates remain.";
    return h("div", { class: "screen failure" }, [
        h("p", {}, [reason]),
        againButton(handlers),
    ]);
}
function againButton(handlers) {
    return h("button", { class: "again" }, ["Start over"], { click: () => handlers.reset() });
}
