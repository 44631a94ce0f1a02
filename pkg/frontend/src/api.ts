/** Typed client for the entityscout service. The UI talks to the server
 * through this module only; nothing here computes scores or metrics. */

import type {
  IndexInfo,
  LabelsResponse,
  SentencePayload,
  SessionSetup,
  SessionSnapshot,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    detail: string,
  ) {
    super(detail);
  }
}

/** 409: the server refused because session state moved on (pending
 * sentence mismatch or double-serve). The UI offers a session refresh. */
export class ConflictError extends ApiError {}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function fail(resp: Response): Promise<never> {
  let detail = `HTTP ${resp.status}`;
  try {
    const body = (await resp.json()) as { detail?: string };
    if (body.detail) detail = body.detail;
  } catch {
    /* non-JSON error body; keep the status text */
  }
  if (resp.status === 409) throw new ConflictError(resp.status, detail);
  throw new ApiError(resp.status, detail);
}

export class ApiClient {
  constructor(
    public baseUrl: string,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    if (!resp.ok && resp.status !== 204) await fail(resp);
    return resp;
  }

  async indexes(): Promise<IndexInfo[]> {
    const resp = await this.request("/indexes");
    return (await resp.json()) as IndexInfo[];
  }

  async createSession(setup: SessionSetup): Promise<string> {
    const resp = await this.request("/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        index_id: setup.indexId,
        class_name: setup.className,
        strategy: setup.strategy,
        seed_query: setup.seedQuery,
        seed: setup.seed,
      }),
    });
    const body = (await resp.json()) as { session_id: string };
    return body.session_id;
  }

  async sessionState(sessionId: string): Promise<SessionSnapshot> {
    const resp = await this.request(`/sessions/${sessionId}`);
    return (await resp.json()) as SessionSnapshot;
  }

  /** null means 204: every sentence is labeled, the session is complete. */
  async nextSentence(sessionId: string): Promise<SentencePayload | null> {
    const resp = await this.request(`/sessions/${sessionId}/next`);
    if (resp.status === 204) return null;
    return (await resp.json()) as SentencePayload;
  }

  async submitLabels(
    sessionId: string,
    sentenceId: number,
    labels: boolean[],
  ): Promise<LabelsResponse> {
    const resp = await this.request(`/sessions/${sessionId}/labels`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ sentence_id: sentenceId, labels }),
    });
    return (await resp.json()) as LabelsResponse;
  }

  async entities(sessionId: string, limit: number): Promise<string[]> {
    const resp = await this.request(`/sessions/${sessionId}/entities?limit=${limit}`);
    const body = (await resp.json()) as { entities: string[] };
    return body.entities;
  }

  async modelText(sessionId: string): Promise<string> {
    const resp = await this.request(`/sessions/${sessionId}/model`);
    return resp.text();
  }

  async exportText(sessionId: string): Promise<string> {
    const resp = await this.request(`/sessions/${sessionId}/export`);
    return resp.text();
  }

  exportUrl(sessionId: string): string {
    return `${this.baseUrl}/sessions/${sessionId}/export`;
  }
}
