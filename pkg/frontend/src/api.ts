import type { Progress, QueueResponse, Verdict, VerdictAck } from "./types.js";

export class ServiceError extends Error {
  constructor(message: string, readonly status?: number) {
    super(message);
  }
}

/** Thin typed client over the annotation service HTTP+JSON API. */
export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    } catch (err) {
      throw new ServiceError(`service unreachable: ${String(err)}`);
    }
    if (!response.ok) {
      let detail = `${response.status}`;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // keep the status text
      }
      throw new ServiceError(detail, response.status);
    }
    return (await response.json()) as T;
  }

  async relations(): Promise<string[]> {
    const body = await this.request<{ relations: string[] }>("/relations");
    return body.relations;
  }

  queue(relation: string, topK?: number): Promise<QueueResponse> {
    const suffix = topK ? `?top_k=${topK}` : "";
    return this.request<QueueResponse>(`/queue/${encodeURIComponent(relation)}${suffix}`);
  }

  progress(relation: string): Promise<Progress> {
    return this.request<Progress>(`/progress/${encodeURIComponent(relation)}`);
  }

  submitVerdict(body: {
    relation: string;
    sdp: string;
    verdict: Verdict;
    annotator_id: string;
    session_id: string;
  }): Promise<VerdictAck> {
    return this.request<VerdictAck>("/verdict", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }
}
