/** Typed client for the review service. Every displayed fact originates from
 * these payloads; the client never invents labels. */

import type { DecisionPayload, FlagRecord, PageInput, QueueStats } from "./types.js";

export type DecisionResult =
  | { kind: "ok"; flag: FlagRecord }
  | { kind: "conflict"; message: string }
  | { kind: "invalid"; message: string };

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly token?: string,
  ) {}

  private headers(): Record<string, string> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    return headers;
  }

  async health(): Promise<{ status: string; model_version: string }> {
    const resp = await fetch(`${this.baseUrl}/health`);
    if (!resp.ok) throw new Error(`health check failed: ${resp.status}`);
    return resp.json();
  }

  async fetchQueue(limit?: number): Promise<FlagRecord[]> {
    const query = limit === undefined ? "" : `?limit=${limit}`;
    const resp = await fetch(`${this.baseUrl}/queue${query}`, { headers: this.headers() });
    if (!resp.ok) throw new Error(`queue fetch failed: ${resp.status}`);
    const body = (await resp.json()) as { flags: FlagRecord[] };
    return body.flags;
  }

  /** 200 / 409 / 422 are protocol outcomes the UI branches on; anything else
   * (including network failure) throws so the caller can show a retry banner. */
  async submitDecision(payload: DecisionPayload): Promise<DecisionResult> {
    const resp = await fetch(`${this.baseUrl}/decisions`, {
      method: "POST",
      headers: this.headers(),
      body: JSON.stringify(payload),
    });
    if (resp.status === 200) return { kind: "ok", flag: await resp.json() };
    const body = (await resp.json().catch(() => ({}))) as { error?: string };
    if (resp.status === 409) return { kind: "conflict", message: body.error ?? "already decided" };
    if (resp.status === 422) return { kind: "invalid", message: body.error ?? "invalid decision" };
    throw new Error(`decision failed: ${resp.status}`);
  }

  async fetchStats(): Promise<QueueStats> {
    const resp = await fetch(`${this.baseUrl}/stats`);
    if (!resp.ok) throw new Error(`stats fetch failed: ${resp.status}`);
    return resp.json();
  }

  async postDocuments(pages: PageInput[]): Promise<FlagRecord[]> {
    const resp = await fetch(`${this.baseUrl}/documents`, {
      method: "POST",
      headers: this.headers(),
      body: JSON.stringify({ pages }),
    });
    if (resp.status !== 201) throw new Error(`document post failed: ${resp.status}`);
    const body = (await resp.json()) as { flags: FlagRecord[] };
    return body.flags;
  }

  async fetchExport(): Promise<string> {
    const resp = await fetch(`${this.baseUrl}/export`, { headers: this.headers() });
    if (!resp.ok) throw new Error(`export failed: ${resp.status}`);
    return resp.text();
  }
}
