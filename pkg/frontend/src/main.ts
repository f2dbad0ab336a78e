// Browser bootstrap: wire the controller to the DOM and keep the attribute
// search box fed from the service.

import { HttpSessionApi } from "./api.js";
import { SessionController } from "./controller.js";
import type { AttributeInfo } from "./types.js";
import { mount } from "./vdom.js";
import { Handlers, render } from "./view.js";

const api = new HttpSessionApi();
const root = document.getElementById("app")!;

let attributes: AttributeInfo[] = [];
let searchTimer: ReturnType<typeof setTimeout> | undefined;

const controller = new SessionController(api, draw);

const handlers: Handlers = {
  start: (id) => void controller.start(id),
  answer: (accept) => void controller.answer(accept),
  reset: () => controller.reset(),
  search: (query) => {
    clearTimeout(searchTimer);
    searchTimer = setTimeout(async () => {
      attributes = await api.listAttributes(query);
      draw();
    }, 150);
  },
};

function draw(): void {
  mount(root, render(controller.view, attributes, handlers));
}

(async () => {
  attributes = await api.listAttributes("");
  draw();
})();
