// Thin typed client over the booking service's HTTP API.

import type {
  CalendarEntry,
  Classification,
  ClassificationResponse,
  GuesthouseInfo,
  HistoryEntry,
  RequestForm,
  Session,
  Zone,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: unknown,
  ) {
    super(`API error ${status}`);
  }
}

export type SelectOutcome =
  | { outcome: "booked"; booking_id: string; proposal_id: string }
  | { outcome: "failed" | "error"; reason: string };

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private token: string | null = null;

  constructor(
    private baseUrl = "",
    private fetchImpl: FetchLike = (input, init) => globalThis.fetch(input, init),
  ) {}

  setToken(token: string | null): void {
    this.token = token;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json().catch(() => null);
    if (!response.ok) throw new ApiError(response.status, payload);
    return payload as T;
  }

  async login(principal: { user_id?: string; guesthouse_id?: string }, password: string): Promise<Session> {
    const got = await this.request<{ token: string; kind: "user" | "admin"; principal_id: string }>(
      "POST",
      "/api/login",
      { ...principal, password },
    );
    this.token = got.token;
    return { token: got.token, kind: got.kind, principalId: got.principal_id };
  }

  facilities(): Promise<string[]> {
    return this.request<{ facilities: string[] }>("GET", "/api/facilities").then((r) => r.facilities);
  }

  zones(): Promise<Zone[]> {
    return this.request<{ zones: Zone[] }>("GET", "/api/zones").then((r) => r.zones);
  }

  guesthouses(zoneId: string): Promise<GuesthouseInfo[]> {
    return this.request<{ guesthouses: GuesthouseInfo[] }>(
      "GET",
      `/api/zones/${encodeURIComponent(zoneId)}/guesthouses`,
    ).then((r) => r.guesthouses);
  }

  submitRequest(form: RequestForm): Promise<string> {
    return this.request<{ request_id: string }>("POST", "/api/requests", form).then(
      (r) => r.request_id,
    );
  }

  classification(requestId: string): Promise<ClassificationResponse> {
    return this.request<ClassificationResponse>(
      "GET",
      `/api/requests/${encodeURIComponent(requestId)}/classification`,
    );
  }

  /**
   * Book a proposal. The idempotency key makes retries and double-clicks
   * safe; transient network failures are retried with the same key.
   * Returns the outcome for 200 and 409 responses, throws otherwise.
   */
  async select(
    requestId: string,
    proposalId: string,
    idempotencyKey: string,
    retries = 2,
  ): Promise<SelectOutcome> {
    for (let attempt = 0; ; attempt++) {
      try {
        return await this.request<SelectOutcome>(
          "POST",
          `/api/requests/${encodeURIComponent(requestId)}/select`,
          { proposal_id: proposalId, idempotency_key: idempotencyKey },
        );
      } catch (err) {
        if (err instanceof ApiError) {
          if (err.status === 409) return err.body as SelectOutcome;
          throw err;
        }
        if (attempt >= retries) throw err; // network failure, retries exhausted
      }
    }
  }

  history(): Promise<HistoryEntry[]> {
    return this.request<{ entries: HistoryEntry[] }>("GET", "/api/users/me/history").then(
      (r) => r.entries,
    );
  }

  calendar(guesthouseId: string, from: string, to: string): Promise<CalendarEntry[]> {
    const path =
      `/api/guesthouses/${encodeURIComponent(guesthouseId)}/calendar` +
      `?from=${encodeURIComponent(from)}&to=${encodeURIComponent(to)}`;
    return this.request<{ entries: CalendarEntry[] }>("GET", path).then((r) => r.entries);
  }

  putCalendar(
    guesthouseId: string,
    entries: Array<{ date: string; type: string; free: number }>,
  ): Promise<{ applied: boolean }> {
    return this.request("PUT", `/api/guesthouses/${encodeURIComponent(guesthouseId)}/calendar`, {
      entries,
    });
  }

  putProfile(guesthouseId: string, delta: Record<string, unknown>): Promise<{ applied: boolean }> {
    return this.request("PUT", `/api/guesthouses/${encodeURIComponent(guesthouseId)}/profile`, delta);
  }
}

export type { Classification };
