// Minimal virtual nodes: the view renders to plain objects that tests can
// walk directly, and the browser mounts into real DOM.

export interface VNode {
  tag: string;
  attrs: Record<string, string>;
  on: Record<string, (event?: unknown) => void>;
  children: Array<VNode | string>;
}

export function h(
  tag: string,
  attrs: Record<string, string> = {},
  children: Array<VNode | string> = [],
  on: Record<string, (event?: unknown) => void> = {},
): VNode {
  return { tag, attrs, on, children };
}

export function mount(root: Element, node: VNode): void {
  root.replaceChildren(toDom(node));
}

function toDom(node: VNode | string): Node {
  if (typeof node === "string") {
    return document.createTextNode(node);
  }
  const el = document.createElement(node.tag);
  for (const [name, value] of Object.entries(node.attrs)) {
    if (name === "disabled") {
      if (value === "true") el.setAttribute("disabled", "");
    } else {
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

export function findAll(node: VNode, predicate: (n: VNode) => boolean): VNode[] {
  const hits: VNode[] = [];
  const walk = (n: VNode | string) => {
    if (typeof n === "string") return;
    if (predicate(n)) hits.push(n);
    n.children.forEach(walk);
  };
  walk(node);
  return hits;
}

export function byClass(node: VNode, className: string): VNode[] {
  return findAll(node, (n) => (n.attrs["class"] ?? "").split(" ").includes(className));
}

export function textOf(node: VNode | string): string {
  if (typeof node === "string") return node;
  return node.children.map(textOf).join("");
}
