import type {
  DecisionRequest,
  DecisionResponse,
  ItemPayload,
  QueueEntry,
} from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

// Minimal fetch shape so tests can supply an in-process fake.
export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export class ApiClient {
  constructor(private fetchImpl: FetchLike, private base = "") {}

  private async request<T>(path: string, init?: Parameters<FetchLike>[1]): Promise<T> {
    const res = await this.fetchImpl(this.base + path, init);
    const body = (await res.json().catch(() => ({}))) as Record<string, unknown>;
    if (!res.ok) {
      const detail = typeof body.detail === "string" ? body.detail : `HTTP ${res.status}`;
      throw new ApiError(res.status, detail);
    }
    return body as T;
  }

  async getQueue(): Promise<QueueEntry[]> {
    const body = await this.request<{ items: QueueEntry[] }>("/queue");
    return body.items;
  }

  async getItem(qaId: string): Promise<ItemPayload> {
    return this.request<ItemPayload>(`/items/${encodeURIComponent(qaId)}`);
  }

  async postDecision(qaId: string, decision: DecisionRequest): Promise<DecisionResponse> {
    return this.request<DecisionResponse>(`/items/${encodeURIComponent(qaId)}/decision`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(decision),
    });
  }

  async getExport(): Promise<ItemPayload[]> {
    const body = await this.request<{ items: ItemPayload[] }>("/export");
    return body.items;
  }
}
