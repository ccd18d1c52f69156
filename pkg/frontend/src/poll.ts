// Polling with backoff; concurrent ticks are deduplicated.

export interface PollOptions {
  initialMs?: number;
  factor?: number;
  maxMs?: number;
}

/**
 * Repeatedly calls `tick` until it resolves true (done) or stop() is
 * called. The interval starts at 1s and backs off geometrically. A tick
 * still in flight is never overlapped; tick failures keep polling.
 */
export class Poller {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inFlight = false;
  private stopped = false;
  private delay: number;

  constructor(
    private tick: () => Promise<boolean>,
    private options: PollOptions = {},
  ) {
    this.delay = options.initialMs ?? 1000;
  }

  start(): void {
    this.stopped = false;
    this.schedule(0);
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  private schedule(ms: number): void {
    if (this.stopped) return;
    this.timer = setTimeout(() => void this.fire(), ms);
  }

  private async fire(): Promise<void> {
    if (this.inFlight || this.stopped) return;
    this.inFlight = true;
    let done = false;
    try {
      done = await this.tick();
    } catch {
      done = false; // transient failure: keep polling
    } finally {
      this.inFlight = false;
    }
    if (done || this.stopped) return;
    const factor = this.options.factor ?? 1.5;
    const max = this.options.maxMs ?? 5000;
    this.delay = Math.min(Math.round(this.delay * factor), max);
    this.schedule(this.delay);
  }
}
