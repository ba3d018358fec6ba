import type { EventPage, LeafView, PendingQuestion, SessionSummary } from './types.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

/** The write-once rule: this exchange already has an answer. */
export class ConflictError extends ApiError {
  constructor(message: string) {
    super(message, 409);
  }
}

async function fail(response: Response): Promise<never> {
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { detail?: string };
    if (body.detail) detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  if (response.status === 409) throw new ConflictError(detail);
  throw new ApiError(detail, response.status);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path);
    if (!response.ok) await fail(response);
    return (await response.json()) as T;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
    if (!response.ok) await fail(response);
    return (await response.json()) as T;
  }

  createSession(requirement: string, mode: string): Promise<SessionSummary> {
    return this.postJson('/sessions', { requirement, mode });
  }

  getSession(sessionId: string): Promise<SessionSummary> {
    return this.getJson(`/sessions/${sessionId}`);
  }

  getPendingQuestions(sessionId: string): Promise<PendingQuestion[]> {
    return this.getJson(`/sessions/${sessionId}/questions?status=pending`);
  }

  postAnswer(
    sessionId: string,
    exchangeId: string,
    answer: string,
    source = 'stakeholder',
  ): Promise<unknown> {
    return this.postJson(`/sessions/${sessionId}/answers`, {
      exchange_id: exchangeId,
      answer,
      source,
    });
  }

  advance(sessionId: string): Promise<SessionSummary> {
    return this.postJson(`/sessions/${sessionId}/advance`, {});
  }

  getLeaves(sessionId: string): Promise<LeafView[]> {
    return this.getJson(`/sessions/${sessionId}/leaves`);
  }

  getEvents(sessionId: string, offset = 0, limit = 100): Promise<EventPage> {
    return this.getJson(`/sessions/${sessionId}/events?offset=${offset}&limit=${limit}`);
  }
}
