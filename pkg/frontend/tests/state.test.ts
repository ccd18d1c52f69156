import { describe, expect, it } from "vitest";

import { createStore, initialState, reducer, validateForm } from "../src/state.js";
import { classification, proposal, validForm } from "./helpers.js";

const session = { token: "t", kind: "user" as const, principalId: "u1" };

function classifiedState() {
  let state = initialState();
  state = reducer(state, { type: "SESSION_SET", session });
  state = reducer(state, { type: "SUBMIT_STARTED" });
  state = reducer(state, { type: "SUBMIT_ACCEPTED", requestId: "r-1" });
  state = reducer(state, {
    type: "CLASSIFICATION_READY",
    classification: classification([proposal("a", 59000, ["G1", "G3"]), proposal("b", 70000)]),
  });
  return state;
}

describe("search state machine", () => {
  it("walks submit -> pending -> classified -> booked", () => {
    let state = classifiedState();
    expect(state.search.phase).toBe("classified");
    state = reducer(state, { type: "SELECT_STARTED", proposalId: "a" });
    expect(state.search).toMatchObject({ phase: "classified", selecting: "a" });
    state = reducer(state, { type: "SELECT_BOOKED", bookingId: "bk-1", proposalId: "a" });
    expect(state.search).toMatchObject({ phase: "booked", bookingId: "bk-1" });
  });

  it("never allows booking without a received classification", () => {
    let state = initialState();
    state = reducer(state, { type: "SESSION_SET", session });
    const before = state.search;
    state = reducer(state, { type: "SELECT_STARTED", proposalId: "a" });
    expect(state.search).toBe(before);
    state = reducer(state, { type: "SUBMIT_STARTED" });
    state = reducer(state, { type: "SUBMIT_ACCEPTED", requestId: "r-1" });
    const pending = state.search;
    state = reducer(state, { type: "SELECT_STARTED", proposalId: "a" });
    expect(state.search).toBe(pending);
  });

  it("ignores a second selection for a different proposal while one is in flight", () => {
    let state = classifiedState();
    state = reducer(state, { type: "SELECT_STARTED", proposalId: "a" });
    state = reducer(state, { type: "SELECT_STARTED", proposalId: "b" });
    expect(state.search).toMatchObject({ selecting: "a" });
  });

  it("conflict clears the in-flight marker and records the reason inline", () => {
    let state = classifiedState();
    state = reducer(state, { type: "SELECT_STARTED", proposalId: "a" });
    state = reducer(state, { type: "SELECT_CONFLICT", reason: "hold-failed" });
    expect(state.search).toMatchObject({
      phase: "classified",
      selecting: null,
      conflict: "hold-failed",
    });
    const refreshed = classification([proposal("b", 70000)]);
    state = reducer(state, { type: "CLASSIFICATION_REFRESHED", classification: refreshed });
    expect(state.search).toMatchObject({ classification: refreshed });
  });

  it("a late classification does not clobber a booked stay", () => {
    let state = classifiedState();
    state = reducer(state, { type: "SELECT_BOOKED", bookingId: "bk-1", proposalId: "a" });
    state = reducer(state, {
      type: "CLASSIFICATION_READY",
      classification: classification([]),
    });
    expect(state.search.phase).toBe("booked");
  });
});

describe("form validation", () => {
  it("accepts a sensible form", () => {
    expect(validateForm(validForm())).toBeNull();
  });

  it("rejects missing dates, zero persons, zero rooms, capacity shortfalls", () => {
    expect(validateForm({ ...validForm(), arrival: "" })).toMatch(/dates/);
    expect(validateForm({ ...validForm(), persons: 0 })).toMatch(/person/);
    expect(
      validateForm({ ...validForm(), rooms: { single: 0, double: 0, triple: 0 } }),
    ).toMatch(/room/);
    expect(validateForm({ ...validForm(), persons: 5 })).toMatch(/sleep/);
    expect(
      validateForm({ ...validForm(), departure: "2026-06-30" }),
    ).toMatch(/after/);
  });
});

describe("admin grid state", () => {
  it("tracks edits and surfaces save errors inline", () => {
    let state = initialState();
    state = reducer(state, {
      type: "SESSION_SET",
      session: { token: "t", kind: "admin", principalId: "G2" },
    });
    expect(state.route).toBe("admin");
    expect(state.admin.guesthouseId).toBe("G2");
    state = reducer(state, {
      type: "ADMIN_GRID_LOADED",
      guesthouseId: "G2",
      from: "2026-07-01",
      to: "2026-07-03",
      entries: [
        { date: "2026-07-01", type: "double", free: 3, available: 2, booked: 1 },
      ],
    });
    state = reducer(state, { type: "ADMIN_EDIT", date: "2026-07-01", roomType: "double", value: 0 });
    expect(state.admin.edits).toEqual({ "2026-07-01|double": 0 });
    state = reducer(state, { type: "ADMIN_SAVE_FAILED", error: "1 double rooms are already booked" });
    expect(state.admin.saveError).toMatch(/already booked/);
    state = reducer(state, {
      type: "ADMIN_SAVED",
      entries: [{ date: "2026-07-01", type: "double", free: 2, available: 1, booked: 1 }],
    });
    expect(state.admin.edits).toEqual({});
    expect(state.admin.saveError).toBeNull();
  });
});

describe("store plumbing", () => {
  it("notifies subscribers on every dispatch", () => {
    const store = createStore();
    let calls = 0;
    const unsubscribe = store.subscribe(() => calls++);
    store.dispatch({ type: "ROUTE_SET", route: "history" });
    expect(store.getState().route).toBe("history");
    unsubscribe();
    store.dispatch({ type: "ROUTE_SET", route: "search" });
    expect(calls).toBe(1);
  });
});
