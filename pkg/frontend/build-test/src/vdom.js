// Minimal virtual nodes: the view renders to plain objects that tests can
// walk directly, and the browser mounts into real DOM.
export function h(tag, attrs = {}, children = [], on = {}) {
    return { tag, attrs, on, children };
}
export function mount(root, node) {
    root.replaceChildren(toDom(node));
}
function toDom(node) {
    if (typeof node === "string") {
        return document.createTextNode(node);
    }
    const el = document.createElement(node.tag);
    for (const [name, value] of Object.entries(node.attrs)) {
        if (name === "disabled") {
            if (value === "true")
                el.setAttribute("disabled", "");
        }
        else {
            el.setAttribute(name, value);
        }
    }
    for (const [event, handler] of Object.entries(node.on)) {
        el.addEventListener(event, handler);
    }
    for (const child of node.children) {
        el.appendChild(toDom(child));
    }
    return el;
}
// Test helpers: walk a virtual tree.
export function findAll(node, predicate) {
    const hits = [];
    const walk = (n) => {
        if (typeof n === "string")
            return;
        if (predicate(n))
            hits.push(n);
        n.children.forEach(walk);
    };
    walk(node);
    return hits;
}
export function byClass(node, className) {
    return findAll(node, (n) => (n.attrs["class"] ?? "").split(" ").includes(className));
}
export function textOf(node) {
    if (typeof node === "string")
        return node;
    return node.children.map(textOf).join("");
}
