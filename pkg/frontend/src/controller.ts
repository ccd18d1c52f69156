// Side-effect layer: talks to the API, dispatches into the store.

import { ApiClient, ApiError } from "./api.js";
import { Poller } from "./poll.js";
import type { Store } from "./state.js";
import { validateForm } from "./state.js";
import type { RequestForm } from "./types.js";

function errorText(err: unknown): string {
  if (err instanceof ApiError) {
    const body = err.body as { detail?: unknown } | null;
    if (body && body.detail) return String(body.detail);
    return `request failed (${err.status})`;
  }
  return String(err);
}

function randomKey(): string {
  const c = globalThis.crypto as Crypto | undefined;
  if (c && "randomUUID" in c) return c.randomUUID();
  return `key-${Date.now()}-${Math.random().toString(16).slice(2)}`;
}

export class AppController {
  private poller: Poller | null = null;
  // One idempotency key per (request, proposal) intent: a double-click or
  // a retry reuses it, so the server books at most once.
  private idempotencyKeys = new Map<string, string>();

  constructor(
    public store: Store,
    public api: ApiClient,
    private pollOptions: { initialMs?: number; factor?: number; maxMs?: number } = {},
  ) {}

  async login(principal: { user_id?: string; guesthouse_id?: string }, password: string): Promise<void> {
    try {
      const session = await this.api.login(principal, password);
      this.store.dispatch({ type: "SESSION_SET", session });
      if (session.kind === "user") await this.loadDirectory();
    } catch (err) {
      this.store.dispatch({ type: "LOGIN_FAILED", error: errorText(err) });
    }
  }

  async loadDirectory(): Promise<void> {
    const [zones, facilities] = await Promise.all([this.api.zones(), this.api.facilities()]);
    this.store.dispatch({ type: "DIRECTORY_LOADED", zones, facilities });
  }

  async submit(form: RequestForm): Promise<void> {
    const invalid = validateForm(form);
    if (invalid) {
      this.store.dispatch({ type: "FORM_INVALID", error: invalid });
      return;
    }
    this.store.dispatch({ type: "SUBMIT_STARTED" });
    let requestId: string;
    try {
      requestId = await this.api.submitRequest(form);
    } catch (err) {
      this.store.dispatch({ type: "SUBMIT_REJECTED", error: errorText(err) });
      return;
    }
    this.store.dispatch({ type: "SUBMIT_ACCEPTED", requestId });
    this.startClassificationPoll(requestId);
  }

  private startClassificationPoll(requestId: string): void {
    this.poller?.stop();
    this.poller = new Poller(async () => {
      const got = await this.api.classification(requestId);
      if (got.status === "pending") return false;
      if (got.classification) {
        this.store.dispatch({ type: "CLASSIFICATION_READY", classification: got.classification });
      }
      return true;
    }, this.pollOptions);
    this.poller.start();
  }

  async book(proposalId: string): Promise<void> {
    const search = this.store.getState().search;
    if (search.phase !== "classified") return; // no booking without a classification
    const requestId = search.requestId;
    this.store.dispatch({ type: "SELECT_STARTED", proposalId });
    const intent = `${requestId}:${proposalId}`;
    let key = this.idempotencyKeys.get(intent);
    if (!key) {
      key = randomKey();
      this.idempotencyKeys.set(intent, key);
    }
    try {
      const outcome = await this.api.select(requestId, proposalId, key);
      if (outcome.outcome === "booked") {
        this.store.dispatch({
          type: "SELECT_BOOKED",
          bookingId: outcome.booking_id,
          proposalId,
        });
      } else {
        this.idempotencyKeys.delete(intent);
        this.store.dispatch({ type: "SELECT_CONFLICT", reason: outcome.reason ?? "conflict" });
        await this.refreshClassification(requestId);
      }
    } catch (err) {
      this.idempotencyKeys.delete(intent);
      this.store.dispatch({ type: "SELECT_CONFLICT", reason: errorText(err) });
    }
  }

  async refreshClassification(requestId: string): Promise<void> {
    const got = await this.api.classification(requestId);
    if (got.status !== "pending" && got.classification) {
      this.store.dispatch({ type: "CLASSIFICATION_REFRESHED", classification: got.classification });
    }
  }

  async loadHistory(): Promise<void> {
    const entries = await this.api.history();
    this.store.dispatch({ type: "HISTORY_LOADED", entries });
  }

  async loadAdminGrid(guesthouseId: string, from: string, to: string): Promise<void> {
    try {
      const entries = await this.api.calendar(guesthouseId, from, to);
      this.store.dispatch({ type: "ADMIN_GRID_LOADED", guesthouseId, from, to, entries });
    } catch (err) {
      this.store.dispatch({ type: "ADMIN_GRID_FAILED", error: errorText(err) });
    }
  }

  async saveAdminGrid(): Promise<void> {
    const admin = this.store.getState().admin;
    if (!admin.guesthouseId) return;
    const entries = Object.entries(admin.edits).map(([key, free]) => {
      const [date, type] = key.split("|");
      return { date, type, free };
    });
    if (entries.length === 0) return;
    try {
      await this.api.putCalendar(admin.guesthouseId, entries);
      // Re-read so the grid reflects the server's view, not the edits.
      const fresh = await this.api.calendar(admin.guesthouseId, admin.from, admin.to);
      this.store.dispatch({ type: "ADMIN_SAVED", entries: fresh });
    } catch (err) {
      this.store.dispatch({ type: "ADMIN_SAVE_FAILED", error: errorText(err) });
    }
  }

  stop(): void {
    this.poller?.stop();
  }
}
