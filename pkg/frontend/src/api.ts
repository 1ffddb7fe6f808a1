import type {
  Action,
  CreateSessionResult,
  LevelInfo,
  MetricsReport,
  Sample,
  StateView,
  Transport,
} from "./types.js";

/** Error raised for any non-2xx response, carrying the service's error code. */
export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
  }
}

async function raiseFor(response: Response): Promise<never> {
  let code = "http_error";
  let message = `${response.status} ${response.statusText}`;
  try {
    const body = await response.json();
    // FastAPI wraps error payloads in "detail"; validation errors are a list.
    const detail = body?.detail ?? body;
    if (typeof detail?.code === "string") code = detail.code;
    if (typeof detail?.message === "string") message = detail.message;
    else if (Array.isArray(detail)) {
      code = "validation_error";
      message = detail.map((d) => d?.msg ?? "").join("; ");
    }
  } catch {
    // non-JSON body, keep the status line
  }
  throw new ApiError(response.status, code, message);
}

/** fetch-backed transport; all the client's traffic goes through here. */
export class HttpTransport implements Transport {
  private readonly base: string;

  constructor(baseUrl: string) {
    this.base = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.base + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) await raiseFor(response);
    if (response.status === 204) return undefined as T;
    return (await response.json()) as T;
  }

  listLevels(): Promise<LevelInfo[]> {
    return this.request("GET", "/api/levels");
  }

  createSession(levelId: string, participantId: string): Promise<CreateSessionResult> {
    return this.request("POST", "/api/sessions", {
      level_id: levelId,
      participant_id: participantId,
    });
  }

  ackBriefing(sessionId: string): Promise<StateView> {
    return this.request("POST", `/api/sessions/${sessionId}/ack-briefing`);
  }

  postSamples(sessionId: string, samples: Sample[]): Promise<void> {
    return this.request("POST", `/api/sessions/${sessionId}/samples`, { samples });
  }

  postAction(sessionId: string, action: Action): Promise<StateView> {
    return this.request("POST", `/api/sessions/${sessionId}/actions`, action);
  }

  getState(sessionId: string): Promise<StateView> {
    return this.request("GET", `/api/sessions/${sessionId}`);
  }

  getMetrics(sessionId: string): Promise<MetricsReport> {
    return this.request("GET", `/api/sessions/${sessionId}/metrics`);
  }
}
