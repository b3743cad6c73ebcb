import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, type ChildProcess } from "node:child_process";

import { ApiClient } from "../src/api.js";
import { QueueStore } from "../src/store.js";

const PORT = Number(process.env.SLP_UI_TEST_PORT ?? 8763);
const BASE = `http://127.0.0.1:${PORT}`;
const RELATION = "per:test_relation";

let service: ChildProcess;

async function waitForService(): Promise<void> {
  const deadline = Date.now() + 20_000;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/relations`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error("annotation service did not come up");
}

beforeAll(async () => {
  service = spawn("python3", ["scripts/serve_fixture.py", "--port", String(PORT)], {
    cwd: process.cwd(),
    stdio: "ignore",
  });
  await waitForService();
}, 30_000);

afterAll(() => {
  service.kill();
});

function makeStore(session: string): QueueStore {
  return new QueueStore(new ApiClient(BASE), "expert", session);
}

describe("against a live service", () => {
  it("write-through: checking a box lands as ACCEPTED server-side", async () => {
    const store = makeStore("it-write");
    await store.loadQueue(RELATION);
    expect(store.state.loaded).toBe(true);
    const sdp = store.state.rows[4]!.sdp;
    store.toggleRow(sdp);
    expect(store.isChecked(sdp)).toBe(true); // optimistic
    await store.flush();
    const queue = (await (await fetch(`${BASE}/queue/${RELATION}`)).json()) as {
      patterns: { sdp: string; verdict: string }[];
    };
    expect(queue.patterns.find((p) => p.sdp === sdp)?.verdict).toBe("ACCEPTED");
  });

  it("page reload reproduces checkbox state from the journal", async () => {
    const first = makeStore("it-reload-a");
    await first.loadQueue(RELATION);
    const sdp = first.state.rows[7]!.sdp;
    first.toggleRow(sdp);
    await first.flush();

    const reloaded = makeStore("it-reload-b");
    await reloaded.loadQueue(RELATION);
    expect(reloaded.isChecked(sdp)).toBe(true);
    const checked = reloaded.state.rows.filter((r) => reloaded.isChecked(r.sdp)).map((r) => r.sdp);
    expect(checked).toContain(sdp);
  });

  it("rapid toggles settle on the last toggle, client and server", async () => {
    const store = makeStore("it-toggle");
    await store.loadQueue(RELATION);
    const sdp = store.state.rows[9]!.sdp;
    store.toggleRow(sdp); // ACCEPTED
    store.toggleRow(sdp); // REJECTED
    store.toggleRow(sdp); // ACCEPTED
    store.toggleRow(sdp); // REJECTED
    await store.flush();
    expect(store.isChecked(sdp)).toBe(false);
    expect(store.displayedVerdict(sdp)).toBe("REJECTED");
    const queue = (await (await fetch(`${BASE}/queue/${RELATION}`)).json()) as {
      patterns: { sdp: string; verdict: string }[];
    };
    expect(queue.patterns.find((p) => p.sdp === sdp)?.verdict).toBe("REJECTED");
  });

  it("progress reflects journal counts and reports session time", async () => {
    const store = makeStore("it-progress");
    await store.loadQueue(RELATION);
    expect(store.state.progress?.total).toBe(100);
    expect(store.state.progress!.labeled).toBeGreaterThan(0);
    expect(store.elapsedSeconds()).toBeGreaterThanOrEqual(0);
  });
});
