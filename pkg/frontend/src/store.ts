import { ApiClient, ServiceError } from "./api.js";
import type { PatternRow, Progress, Verdict } from "./types.js";

export interface TimerSync {
  serverElapsed: number; // seconds at sync time
  syncedAt: number;      // local clock (ms) at sync time
}

export interface AppState {
  relations: string[];
  relation: string | null;
  rows: PatternRow[]; // server rank order; never re-sorted client-side
  pending: Map<string, Verdict>; // optimistic overlay, keyed by sdp
  cursor: number;
  expanded: Set<string>;
  progress: Progress | null;
  timer: TimerSync | null;
  error: string | null;
  loaded: boolean;
}

export type Listener = (state: AppState) => void;

/**
 * Queue state: the displayed verdicts are a pure function of the last
 * server-acknowledged rows plus the optimistic overlay of in-flight
 * submissions.  Submissions for one row are chained so the journal
 * receives them in toggle order; only the acknowledgment of the latest
 * submission per row may settle the overlay.
 */
export class QueueStore {
  state: AppState = {
    relations: [],
    relation: null,
    rows: [],
    pending: new Map(),
    cursor: 0,
    expanded: new Set(),
    progress: null,
    timer: null,
    error: null,
    loaded: false,
  };

  private listeners: Listener[] = [];
  private chains = new Map<string, Promise<void>>();
  private sequence = new Map<string, number>();

  constructor(
    private readonly api: ApiClient,
    readonly annotatorId: string,
    readonly sessionId: string,
    private readonly now: () => number = () => Date.now(),
  ) {}

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  displayedVerdict(sdp: string): Verdict {
    const pending = this.state.pending.get(sdp);
    if (pending) return pending;
    const row = this.state.rows.find((r) => r.sdp === sdp);
    return row ? row.verdict : "UNLABELED";
  }

  isChecked(sdp: string): boolean {
    return this.displayedVerdict(sdp) === "ACCEPTED";
  }

  /** Seconds of annotation session time, extrapolated from the last sync. */
  elapsedSeconds(): number {
    const timer = this.state.timer;
    if (!timer) return 0;
    return timer.serverElapsed + (this.now() - timer.syncedAt) / 1000;
  }

  async loadRelations(): Promise<void> {
    try {
      this.state.relations = await this.api.relations();
      this.state.error = null;
    } catch (err) {
      this.state.error = err instanceof ServiceError ? err.message : String(err);
    }
    this.emit();
  }

  async loadQueue(relation: string, topK?: number): Promise<void> {
    try {
      const queue = await this.api.queue(relation, topK);
      this.state.relation = relation;
      this.state.rows = queue.patterns;
      this.state.pending = new Map();
      this.state.cursor = 0;
      this.state.expanded = new Set();
      this.state.error = null;
      this.state.loaded = true;
      await this.refreshProgress();
    } catch (err) {
      this.state.error = err instanceof ServiceError ? err.message : String(err);
      this.state.loaded = false;
    }
    this.emit();
  }

  async refreshProgress(): Promise<void> {
    if (!this.state.relation) return;
    try {
      const progress = await this.api.progress(this.state.relation);
      this.state.progress = progress;
      this.state.timer = { serverElapsed: progress.session_elapsed, syncedAt: this.now() };
    } catch {
      // progress is advisory; keep the queue usable
    }
  }

  moveCursor(delta: number): void {
    const n = this.state.rows.length;
    if (!n) return;
    this.state.cursor = Math.min(Math.max(this.state.cursor + delta, 0), n - 1);
    this.emit();
  }

  toggleExpanded(sdp: string): void {
    if (this.state.expanded.has(sdp)) this.state.expanded.delete(sdp);
    else this.state.expanded.add(sdp);
    this.emit();
  }

  /** Flip the checkbox under the cursor. */
  toggleCursorRow(): void {
    const row = this.state.rows[this.state.cursor];
    if (row) this.setVerdict(row.sdp, this.isChecked(row.sdp) ? "REJECTED" : "ACCEPTED");
  }

  toggleRow(sdp: string): void {
    this.setVerdict(sdp, this.isChecked(sdp) ? "REJECTED" : "ACCEPTED");
  }

  /**
   * Optimistic write-through: the checkbox flips immediately; the POST is
   * chained after any in-flight submission for the same row.  On failure
   * of the latest submission the overlay reverts to the server state.
   */
  setVerdict(sdp: string, verdict: Verdict): void {
    if (!this.state.relation || !this.state.loaded) return;
    if (verdict !== "ACCEPTED" && verdict !== "REJECTED") return;
    const relation = this.state.relation;
    const seq = (this.sequence.get(sdp) ?? 0) + 1;
    this.sequence.set(sdp, seq);
    this.state.pending.set(sdp, verdict);
    this.state.error = null;
    this.emit();

    const previous = this.chains.get(sdp) ?? Promise.resolve();
    const chained = previous.then(async () => {
      try {
        const ack = await this.api.submitVerdict({
          relation,
          sdp,
          verdict,
          annotator_id: this.annotatorId,
          session_id: this.sessionId,
        });
        if (this.sequence.get(sdp) !== seq) return; // superseded by a later toggle
        const row = this.state.rows.find((r) => r.sdp === sdp);
        if (row) row.verdict = ack.verdict;
        this.state.pending.delete(sdp);
      } catch (err) {
        if (this.sequence.get(sdp) !== seq) return;
        this.state.pending.delete(sdp); // revert to the server-acknowledged state
        this.state.error =
          `verdict for pattern not saved (${err instanceof Error ? err.message : String(err)}); ` +
          "toggle again to retry";
      }
      this.emit();
    });
    this.chains.set(sdp, chained);
  }

  /** Resolves when every in-flight submission has settled. */
  async flush(): Promise<void> {
    let stable = false;
    while (!stable) {
      const snapshot = [...this.chains.values()];
      await Promise.all(snapshot);
      const current = [...this.chains.values()];
      stable = current.length === snapshot.length && current.every((c) => snapshot.includes(c));
    }
  }
}
