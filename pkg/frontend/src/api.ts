// Typed client for the session service. The UI talks to nothing else.

import type {
  HistoryEntry,
  QueryResponse,
  Recipient,
  StateResponse,
  StepResponse,
} from "./types.js";

export class ServiceError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

async function parseOrThrow<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // keep the status text
    }
    throw new ServiceError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return parseOrThrow<T>(response);
  }

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`);
    return parseOrThrow<T>(response);
  }

  scenes(): Promise<{ scenes: string[] }> {
    return this.get("/scenes");
  }

  createSession(scene: string): Promise<{ session_id: string; scene: string }> {
    return this.post("/sessions", { scene });
  }

  state(sessionId: string): Promise<StateResponse> {
    return this.get(`/sessions/${sessionId}/state`);
  }

  history(sessionId: string, since = 0): Promise<{ entries: HistoryEntry[] }> {
    return this.get(`/sessions/${sessionId}/history?since=${since}`);
  }

  postEvent(sessionId: string, eventText: string): Promise<StepResponse> {
    return this.post(`/sessions/${sessionId}/events`, { event: eventText });
  }

  step(sessionId: string, untilQuiescent = true): Promise<StepResponse> {
    return this.post(`/sessions/${sessionId}/step`, {
      until_quiescent: untilQuiescent,
    });
  }

  askWhy(
    sessionId: string,
    target: string | number,
    recipient: Recipient,
  ): Promise<QueryResponse> {
    return this.post(`/sessions/${sessionId}/query`, {
      kind: "why",
      target,
      recipient: { id: recipient, audience: recipient },
    });
  }

  askWhyCond(
    sessionId: string,
    condition: string,
    recipient: Recipient,
    followUp = false,
  ): Promise<QueryResponse> {
    return this.post(`/sessions/${sessionId}/query`, {
      kind: "whycond",
      condition,
      recipient: { id: recipient, audience: recipient },
      follow_up: followUp,
    });
  }

  askWhen(
    sessionId: string,
    pattern: string,
    horizon: number,
    recipient: Recipient,
  ): Promise<QueryResponse> {
    return this.post(`/sessions/${sessionId}/query`, {
      kind: "when",
      pattern,
      horizon,
      recipient: { id: recipient, audience: recipient },
    });
  }

  askQuestion(
    sessionId: string,
    question: string,
    recipient: Recipient,
  ): Promise<QueryResponse> {
    return this.post(`/sessions/${sessionId}/query`, {
      kind: "ask",
      question,
      recipient: { id: recipient, audience: recipient },
    });
  }

  subscribeUrl(sessionId: string): string {
    return `${this.baseUrl}/sessions/${sessionId}/subscribe`;
  }
}
