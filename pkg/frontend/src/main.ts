import { ApiClient } from "./api.js";
import { installKeyboard } from "./keyboard.js";
import { QueueStore } from "./store.js";
import { render } from "./view.js";

function sessionId(): string {
  return `ui-${Date.now().toString(36)}-${Math.random().toString(36).slice(2, 8)}`;
}

export async function start(root: HTMLElement): Promise<QueueStore> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("service") ?? "http://127.0.0.1:8571";
  const annotator = params.get("annotator") ?? "expert";
  const api = new ApiClient(base);
  const store = new QueueStore(api, annotator, sessionId());
  store.subscribe(() => render(store, root));
  installKeyboard(store, document);

  await store.loadRelations();
  const requested = params.get("relation");
  const relation = requested ?? store.state.relations[0];
  if (relation) await store.loadQueue(relation);
  render(store, root);

  // keep the session timer and progress counters fresh
  setInterval(() => render(store, root), 1000);
  setInterval(() => {
    void store.refreshProgress().then(() => render(store, root));
  }, 15_000);
  return store;
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void start(document.getElementById("app") as HTMLElement);
}
