// Typed client for the /v1 session API.

export interface EntitySheet {
  id: string;
  label: string;
  description: string;
  types: { id: string; label: string }[];
  image: string | null;
}

export interface Excerpt {
  doc_id: string;
  title: string;
  text: string;
  score: number;
}

export type AnswerSource = "REASONING" | "SEARCH" | "NONE";

export interface AskResponse {
  turn: number;
  values: string[];
  value_labels: string[];
  short_text: string;
  long_text: string | null;
  confidence: number;
  source: AnswerSource;
  provenance_triples: string[][];
  query_debug: string;
  excerpts: Excerpt[];
  entity_sheets: EntitySheet[];
  clarification: string | null;
}

export interface HealthResponse {
  status: string;
  kb_stats: { entities: number; triples: number };
}

export type Reward = "CORRECT" | "INCORRECT";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  let detail = resp.statusText;
  try {
    const body = (await resp.json()) as { detail?: string };
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(resp.status, detail);
}

export class ConvKgClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: typeof fetch = globalThis.fetch.bind(globalThis),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as T;
  }

  async createSession(speakerId?: string): Promise<string> {
    const body = speakerId ? { speaker_id: speakerId } : {};
    const data = await this.request<{ session_id: string }>("/v1/session", {
      method: "POST",
      body: JSON.stringify(body),
    });
    return data.session_id;
  }

  ask(sessionId: string, text: string): Promise<AskResponse> {
    return this.request<AskResponse>(`/v1/session/${encodeURIComponent(sessionId)}/ask`, {
      method: "POST",
      body: JSON.stringify({ text }),
    });
  }

  async reward(sessionId: string, turn: number, reward: Reward): Promise<void> {
    await this.request<{ ok: boolean }>(`/v1/session/${encodeURIComponent(sessionId)}/reward`, {
      method: "POST",
      body: JSON.stringify({ turn, reward }),
    });
  }

  entity(id: string, lang?: string): Promise<EntitySheet> {
    const query = lang ? `?lang=${encodeURIComponent(lang)}` : "";
    return this.request<EntitySheet>(`/v1/entity/${encodeURIComponent(id)}${query}`);
  }

  health(): Promise<HealthResponse> {
    return this.request<HealthResponse>("/v1/health");
  }
}
