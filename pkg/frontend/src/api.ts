import type {
  DiffResponse,
  GeojsonResponse,
  MetricsResponse,
  Mutation,
  ScenarioLog,
  ScenarioSummary,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(`service responded ${status}`);
  }
}

/** Raised on 409: metrics recompute pending, retry shortly. */
export class RecomputePending extends ApiError {}

/** Thin fetch wrapper around the scenario service. */
export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(`${this.baseUrl}${path}`, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    if (res.status === 409) {
      throw new RecomputePending(409, await res.json());
    }
    if (!res.ok) {
      let detail: unknown = null;
      try {
        detail = await res.json();
      } catch {
        detail = await res.text();
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  listScenarios(): Promise<ScenarioSummary[]> {
    return this.request("/scenarios");
  }

  createScenario(name: string, mutations?: Mutation[]): Promise<ScenarioSummary> {
    return this.request("/scenarios", {
      method: "POST",
      body: JSON.stringify(mutations ? { name, mutations } : { name }),
    });
  }

  getScenario(id: string): Promise<ScenarioSummary> {
    return this.request(`/scenarios/${id}`);
  }

  getLog(id: string): Promise<ScenarioLog> {
    return this.request(`/scenarios/${id}/log`);
  }

  postMutations(id: string, mutations: Mutation[]): Promise<ScenarioSummary> {
    return this.request(`/scenarios/${id}/mutations`, {
      method: "POST",
      body: JSON.stringify({ mutations }),
    });
  }

  getMetrics(id: string): Promise<MetricsResponse> {
    return this.request(`/scenarios/${id}/metrics`);
  }

  getGeojson(id: string): Promise<GeojsonResponse> {
    return this.request(`/scenarios/${id}/geojson`);
  }

  getDiff(id: string, against: string): Promise<DiffResponse> {
    return this.request(`/scenarios/${id}/diff?against=${encodeURIComponent(against)}`);
  }
}

export interface PollOptions {
  initialDelayMs?: number;
  maxDelayMs?: number;
  timeoutMs?: number;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

/** Retry fn with backoff while the service reports a pending recompute. */
export async function pollWhileRecomputing<T>(
  fn: () => Promise<T>,
  opts: PollOptions = {},
): Promise<T> {
  const sleep = opts.sleep ?? defaultSleep;
  const timeoutMs = opts.timeoutMs ?? 60_000;
  let delay = opts.initialDelayMs ?? 100;
  const maxDelay = opts.maxDelayMs ?? 2_000;
  const start = Date.now();
  for (;;) {
    try {
      return await fn();
    } catch (err) {
      if (!(err instanceof RecomputePending)) throw err;
      if (Date.now() - start > timeoutMs) throw err;
      await sleep(delay);
      delay = Math.min(delay * 1.5, maxDelay);
    }
  }
}
