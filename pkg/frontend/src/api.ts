/** Typed client for the retrieval server. The fetch implementation is
 * injectable so tests can record or stub traffic. */

import type {
  CorpusSummary,
  FeedbackResponse,
  Label,
  PatchInfo,
  RankingResponse,
  SessionConfig,
  SessionCreated,
  SessionSummary,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, detail);
    }
    return response.json() as Promise<T>;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  corpusSummary(): Promise<CorpusSummary> {
    return this.request("/corpus");
  }

  corpusPatches(): Promise<PatchInfo[]> {
    return this.request("/corpus/patches");
  }

  createSession(queryId: number, config: SessionConfig): Promise<SessionCreated> {
    return this.post("/session", { query_id: queryId, ...config });
  }

  sendFeedback(
    sessionId: string,
    iteration: number,
    labels: Record<number, Label>,
  ): Promise<FeedbackResponse> {
    return this.post(`/session/${sessionId}/feedback`, { iteration, labels });
  }

  ranking(sessionId: string, limit?: number): Promise<RankingResponse> {
    const query = limit === undefined ? "" : `?limit=${limit}`;
    return this.request(`/session/${sessionId}/ranking${query}`);
  }

  sessionSummary(sessionId: string): Promise<SessionSummary> {
    return this.request(`/session/${sessionId}`);
  }

  thumbnailUrl(patchId: number): string {
    return `${this.baseUrl}/patch/${patchId}/thumbnail`;
  }
}
