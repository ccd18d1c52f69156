// Bootstrap: store + controller + hash routing + re-render on change.

import { ApiClient } from "./api.js";
import { AppController } from "./controller.js";
import { createStore } from "./state.js";
import { renderApp } from "./views.js";

export function start(root: HTMLElement, baseUrl = ""): AppController {
  const store = createStore();
  const api = new ApiClient(baseUrl);
  const controller = new AppController(store, api);

  const routeFromHash = () => {
    const hash = location.hash.replace(/^#\//, "");
    if (hash === "history" || hash === "admin" || hash === "search") {
      store.dispatch({ type: "ROUTE_SET", route: hash });
      if (hash === "history") void controller.loadHistory();
    }
  };
  window.addEventListener("hashchange", routeFromHash);

  store.subscribe(() => renderApp(root, store.getState(), controller));
  renderApp(root, store.getState(), controller);
  return controller;
}

const rootElement = typeof document !== "undefined" ? document.getElementById("app") : null;
if (rootElement) {
  start(rootElement);
}
