import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { Poller } from "../src/poll.js";

describe("Poller", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("polls until the tick reports done", async () => {
    let calls = 0;
    const poller = new Poller(async () => ++calls >= 3, { initialMs: 1000 });
    poller.start();
    await vi.advanceTimersByTimeAsync(0);
    expect(calls).toBe(1);
    await vi.advanceTimersByTimeAsync(1500);
    expect(calls).toBe(2);
    await vi.advanceTimersByTimeAsync(2250);
    expect(calls).toBe(3);
    await vi.advanceTimersByTimeAsync(60000);
    expect(calls).toBe(3); // done: no further ticks
  });

  it("backs off geometrically up to the cap", async () => {
    const stamps: number[] = [];
    const poller = new Poller(
      async () => {
        stamps.push(Date.now());
        return false;
      },
      { initialMs: 1000, factor: 2, maxMs: 3000 },
    );
    poller.start();
    await vi.advanceTimersByTimeAsync(0);
    await vi.advanceTimersByTimeAsync(2000);
    await vi.advanceTimersByTimeAsync(3000);
    await vi.advanceTimersByTimeAsync(3000);
    poller.stop();
    const gaps = stamps.slice(1).map((t, i) => t - stamps[i]);
    expect(gaps).toEqual([2000, 3000, 3000]);
  });

  it("keeps polling through tick failures", async () => {
    let calls = 0;
    const poller = new Poller(
      async () => {
        calls++;
        if (calls === 1) throw new Error("flaky");
        return true;
      },
      { initialMs: 500 },
    );
    poller.start();
    await vi.advanceTimersByTimeAsync(0);
    await vi.advanceTimersByTimeAsync(750);
    expect(calls).toBe(2);
  });

  it("stop() cancels pending ticks", async () => {
    let calls = 0;
    const poller = new Poller(async () => {
      calls++;
      return false;
    });
    poller.start();
    await vi.advanceTimersByTimeAsync(0);
    poller.stop();
    await vi.advanceTimersByTimeAsync(60000);
    expect(calls).toBe(1);
  });

  it("never overlaps a tick still in flight", async () => {
    let active = 0;
    let overlapped = false;
    const poller = new Poller(
      async () => {
        active++;
        if (active > 1) overlapped = true;
        await new Promise((resolve) => setTimeout(resolve, 5000));
        active--;
        return false;
      },
      { initialMs: 100 },
    );
    poller.start();
    await vi.advanceTimersByTimeAsync(0);
    await vi.advanceTimersByTimeAsync(200); // tick still sleeping
    await vi.advanceTimersByTimeAsync(10000);
    poller.stop();
    expect(overlapped).toBe(false);
  });
});
