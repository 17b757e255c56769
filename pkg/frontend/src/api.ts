/**
 * Typed client for the advisor service. Every number the dashboard shows
 * comes through here; the UI performs no belief or scoring math of its own.
 */

export interface CampaignInfo {
  id: string;
  alternatives: number[][];
  mean: number[];
  precision: number[];
  n: number;
}

export interface Recommendation {
  chosen: number;
  scores: number[];
  pos_prob: number[];
}

export interface BeliefSummary {
  mean: number[];
  precision: number[];
  n: number;
}

export interface Implementation {
  alternative_id: number;
  probability: number;
}

export interface CreateCampaignRequest {
  lambda: number;
  seed: number;
  intercept: boolean;
  alternatives?: number[][];
  dataset_path?: string;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

async function parseError(res: Response): Promise<ApiError> {
  let detail = `HTTP ${res.status}`;
  try {
    const body = (await res.json()) as { error?: string };
    if (body && typeof body.error === "string") {
      detail = body.error;
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(res.status, detail);
}

export class AdvisorClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async getJson<T>(path: string): Promise<T> {
    const res = await this.fetchFn(`${this.base}${path}`, {
      headers: { Accept: "application/json" },
    });
    if (!res.ok) {
      throw await parseError(res);
    }
    return (await res.json()) as T;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const res = await this.fetchFn(`${this.base}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json", Accept: "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) {
      throw await parseError(res);
    }
    return (await res.json()) as T;
  }

  createCampaign(request: CreateCampaignRequest): Promise<{ id: string }> {
    return this.postJson("/campaigns", request);
  }

  getCampaign(id: string): Promise<CampaignInfo> {
    return this.getJson(`/campaigns/${encodeURIComponent(id)}`);
  }

  getRecommendation(id: string): Promise<Recommendation> {
    return this.getJson(`/campaigns/${encodeURIComponent(id)}/recommendation`);
  }

  getImplementation(id: string): Promise<Implementation> {
    return this.getJson(`/campaigns/${encodeURIComponent(id)}/implementation`);
  }

  postObservation(id: string, alternativeId: number, label: 1 | -1): Promise<BeliefSummary> {
    return this.postJson(`/campaigns/${encodeURIComponent(id)}/observations`, {
      alternative_id: alternativeId,
      label,
    });
  }
}
