import type { QueueStore } from "./store.js";

/**
 * Keyboard-first annotation: arrows move the cursor, space toggles the
 * verdict checkbox, enter expands the sample sentences.  Keys are ignored
 * while typing in form controls.
 */
export function handleKey(store: QueueStore, event: KeyboardEvent): boolean {
  const target = event.target as HTMLElement | null;
  if (target && (target.tagName === "INPUT" || target.tagName === "SELECT" || target.tagName === "TEXTAREA")) {
    if (!(target instanceof HTMLInputElement && target.type === "checkbox")) return false;
  }
  switch (event.key) {
    case "ArrowDown":
    case "j":
      store.moveCursor(1);
      return true;
    case "ArrowUp":
    case "k":
      store.moveCursor(-1);
      return true;
    case " ":
      store.toggleCursorRow();
      return true;
    case "Enter": {
      const row = store.state.rows[store.state.cursor];
      if (row) store.toggleExpanded(row.sdp);
      return true;
    }
    default:
      return false;
  }
}

export function installKeyboard(store: QueueStore, doc: Document): void {
  doc.addEventListener("keydown", (event) => {
    if (handleKey(store, event)) event.preventDefault();
  });
}
