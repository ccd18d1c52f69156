// @vitest-environment node
//
// End-to-end: boots the real booking service (figure4 topology) and drives
// the UI layers against it over HTTP: search -> classification rendered in
// server order -> book (double-click books once) -> history; plus the admin
// grid surfacing a shrink-below-bookings 409 inline.

import { spawn, type ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { Window } from "happy-dom";

import { ApiClient } from "../src/api.js";
import { AppController } from "../src/controller.js";
import { createStore } from "../src/state.js";
import { renderAdminGrid, renderResults } from "../src/views.js";

const PORT = 8731 + Math.floor(Math.random() * 500);
const BASE = `http://127.0.0.1:${PORT}`;

let service: ChildProcess | null = null;

async function waitForHealth(timeoutMs = 20000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  let lastError: unknown = null;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/api/health`);
      if (response.ok) return;
    } catch (err) {
      lastError = err;
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  throw new Error(`service never became healthy: ${lastError}`);
}

function waitFor(predicate: () => boolean, timeoutMs = 15000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  return new Promise((resolve, reject) => {
    const tick = () => {
      if (predicate()) return resolve();
      if (Date.now() > deadline) return reject(new Error("condition never held"));
      setTimeout(tick, 50);
    };
    tick();
  });
}

beforeAll(async () => {
  const window = new Window();
  (globalThis as any).document = window.document;
  service = spawn(
    "python3",
    ["-m", "staybroker.service", "--topology", "figure4", "--port", String(PORT)],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  service.stderr?.on("data", () => {});
  await waitForHealth();
});

afterAll(() => {
  service?.kill("SIGTERM");
});

const weekRequest = {
  zone: null,
  persons: 2,
  arrival: "2026-07-01",
  departure: "2026-07-08",
  rooms: { single: 0, double: 1, triple: 0 },
  max_total_price: 100000,
  required_facilities: ["parking"],
};

describe("live end-to-end flow", () => {
  it("search, book via double-click, and history against the live service", async () => {
    const store = createStore();
    const api = new ApiClient(BASE);
    const controller = new AppController(store, api, { initialMs: 100 });

    await controller.login({ user_id: "u1" }, "pw-u1");
    expect(store.getState().session?.kind).toBe("user");

    await controller.submit(weekRequest);
    await waitFor(() => store.getState().search.phase === "classified");
    controller.stop();

    const search = store.getState().search;
    if (search.phase !== "classified") throw new Error("unreachable");
    const serverOrder = search.classification.proposals.map((p) => p.proposal_id);
    expect(search.classification.proposals).toHaveLength(2);
    expect(search.classification.proposals[0].legs.map((l) => l.guesthouse_id)).toEqual([
      "G1",
      "G3",
    ]);

    // The DOM must present exactly the server's order.
    const section = renderResults(store.getState(), controller);
    const domOrder = Array.from(section.querySelectorAll("li.proposal")).map((li) =>
      li.getAttribute("data-proposal"),
    );
    expect(domOrder).toEqual(serverOrder);

    // Double-click: two concurrent book calls, one booking.
    await Promise.all([controller.book(serverOrder[0]), controller.book(serverOrder[0])]);
    const booked = store.getState().search;
    expect(booked.phase).toBe("booked");
    const bookingId = booked.phase === "booked" ? booked.bookingId : "";

    await controller.loadHistory();
    const entries = store.getState().history;
    expect(entries).toHaveLength(2); // one classification entry, one booking entry
    expect(entries[0].outcome).toBe(bookingId);
    const bookedEntries = entries.filter((e) => e.outcome !== null);
    expect(bookedEntries).toHaveLength(1);
  }, 30000);

  it("admin shrink below bookings surfaces a 409 inline", async () => {
    const store = createStore();
    const api = new ApiClient(BASE);
    const controller = new AppController(store, api);

    await controller.login({ guesthouse_id: "G1" }, "admin-G1");
    expect(store.getState().session?.kind).toBe("admin");

    await controller.loadAdminGrid("G1", "2026-07-01", "2026-07-03");
    const grid = store.getState().admin;
    const booked = grid.entries.find((e) => e.date === "2026-07-01" && e.type === "double");
    expect(booked?.booked).toBe(1); // the previous test booked the G1 leg

    store.dispatch({ type: "ADMIN_EDIT", date: "2026-07-01", roomType: "double", value: 0 });
    await controller.saveAdminGrid();
    expect(store.getState().admin.saveError).toMatch(/booked/);

    const section = renderAdminGrid(store.getState(), controller);
    expect(section.querySelector("#admin-save-error")?.textContent).toMatch(/booked/);

    // A legal shrink (above the booked count) applies cleanly.
    store.dispatch({ type: "ADMIN_EDIT", date: "2026-07-01", roomType: "double", value: 2 });
    await controller.saveAdminGrid();
    expect(store.getState().admin.saveError).toBeNull();
    const fresh = store
      .getState()
      .admin.entries.find((e) => e.date === "2026-07-01" && e.type === "double");
    expect(fresh?.free).toBe(2);
    expect(fresh?.available).toBe(1);
  }, 30000);
});
