import type { QueueStore } from "./store.js";
import type { PatternRow, SampleSentence } from "./types.js";

/** Render a sample with the subject/object token spans highlighted. */
export function renderSample(sample: SampleSentence): HTMLElement {
  const container = document.createElement("div");
  container.className = "sample";
  const tokens = sample.text.split(" ");
  tokens.forEach((token, idx) => {
    const position = idx + 1;
    const inSubject = position >= sample.subject_span[0] && position <= sample.subject_span[1];
    const inObject = position >= sample.object_span[0] && position <= sample.object_span[1];
    let node: HTMLElement | Text;
    if (inSubject || inObject) {
      const mark = document.createElement("mark");
      mark.className = inSubject ? "subject" : "object";
      mark.textContent = token;
      node = mark;
    } else {
      node = document.createTextNode(token);
    }
    container.appendChild(node);
    if (idx < tokens.length - 1) container.appendChild(document.createTextNode(" "));
  });
  return container;
}

/** SDP rendered with visible directional arrows. */
export function renderSdp(sdp: string): HTMLElement {
  const span = document.createElement("span");
  span.className = "sdp";
  span.textContent = sdp.replace(/<-/g, " ← ").replace(/->/g, " → ");
  return span;
}

export function renderRow(store: QueueStore, row: PatternRow, index: number): HTMLElement {
  const tr = document.createElement("tr");
  tr.className = "pattern-row";
  tr.dataset.sdp = row.sdp;
  tr.dataset.rank = String(row.rank);
  if (index === store.state.cursor) tr.classList.add("cursor");

  const check = document.createElement("td");
  const box = document.createElement("input");
  box.type = "checkbox";
  box.checked = store.isChecked(row.sdp);
  box.addEventListener("change", () => store.toggleRow(row.sdp));
  check.appendChild(box);
  tr.appendChild(check);

  const rank = document.createElement("td");
  rank.className = "rank";
  rank.textContent = String(row.rank);
  tr.appendChild(rank);

  const confidence = document.createElement("td");
  confidence.className = "confidence";
  confidence.textContent = row.confidence.toFixed(2);
  tr.appendChild(confidence);

  const counts = document.createElement("td");
  counts.className = "counts";
  counts.textContent = `${row.pos_count}+ / ${row.neg_count}−`;
  tr.appendChild(counts);

  const sdpCell = document.createElement("td");
  sdpCell.appendChild(renderSdp(row.sdp));
  const toggle = document.createElement("button");
  toggle.className = "expand";
  toggle.type = "button";
  toggle.textContent = store.state.expanded.has(row.sdp) ? "hide sentences" : "show sentences";
  toggle.addEventListener("click", () => store.toggleExpanded(row.sdp));
  sdpCell.appendChild(toggle);
  if (store.state.expanded.has(row.sdp)) {
    for (const sample of row.sample_sentences) {
      sdpCell.appendChild(renderSample(sample));
    }
  }
  tr.appendChild(sdpCell);
  return tr;
}

function formatElapsed(seconds: number): string {
  const total = Math.floor(seconds);
  const minutes = Math.floor(total / 60);
  const rest = total % 60;
  return `${String(minutes).padStart(2, "0")}:${String(rest).padStart(2, "0")}`;
}

export function render(store: QueueStore, root: HTMLElement): void {
  const state = store.state;
  root.textContent = "";

  if (state.error) {
    const banner = document.createElement("div");
    banner.className = "error-banner";
    banner.setAttribute("role", "alert");
    banner.textContent = state.error;
    root.appendChild(banner);
    if (!state.loaded) return; // unreachable service: nothing actionable below
  }

  const header = document.createElement("header");
  const select = document.createElement("select");
  select.className = "relation-select";
  for (const relation of state.relations) {
    const option = document.createElement("option");
    option.value = relation;
    option.textContent = relation;
    option.selected = relation === state.relation;
    select.appendChild(option);
  }
  select.addEventListener("change", () => void store.loadQueue(select.value));
  header.appendChild(select);

  const timer = document.createElement("span");
  timer.className = "timer";
  timer.textContent = formatElapsed(store.elapsedSeconds());
  if (store.elapsedSeconds() > 300) timer.classList.add("over-budget");
  header.appendChild(timer);

  if (state.progress) {
    const progress = document.createElement("span");
    progress.className = "progress";
    progress.textContent =
      `${state.progress.labeled}/${state.progress.total} labeled ` +
      `(${state.progress.accepted} accepted, ${state.progress.rejected} rejected)`;
    header.appendChild(progress);
  }
  root.appendChild(header);

  if (!state.rows.length) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = state.relation
      ? `no patterns in the queue for ${state.relation}`
      : "pick a relation to start annotating";
    root.appendChild(empty);
    return;
  }

  const table = document.createElement("table");
  table.className = "queue";
  const body = document.createElement("tbody");
  state.rows.forEach((row, index) => body.appendChild(renderRow(store, row, index)));
  table.appendChild(body);
  root.appendChild(table);
}
