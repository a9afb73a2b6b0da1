/**
 * Dwell-based fixation capture: continuous hover over one icon cell for at
 * least the threshold emits exactly one fixation per hover episode.
 * Leaving the cell resets the timer; re-entering starts a new episode.
 * Pure timestamp logic so it is testable without a DOM.
 */

export interface DwellEvent {
  drone: number;
  attr: string;
  dwellMs: number;
}

type CellKey = string;

export class DwellTracker {
  private thresholdMs: number;
  private emit: (event: DwellEvent) => void;
  private current: { key: CellKey; drone: number; attr: string; since: number } | null = null;
  private fired = false;

  constructor(thresholdMs: number, emit: (event: DwellEvent) => void) {
    this.thresholdMs = thresholdMs;
    this.emit = emit;
  }

  enter(drone: number, attr: string, now: number): void {
    this.current = { key: `${drone}:${attr}`, drone, attr, since: now };
    this.fired = false;
  }

  leave(now: number): void {
    this.current = null;
    this.fired = false;
  }

  /** Clock tick (pointer move or rAF); fires at most once per episode. */
  poll(now: number): void {
    if (this.current === null || this.fired) return;
    const dwell = now - this.current.since;
    if (dwell >= this.thresholdMs) {
      this.fired = true;
      this.emit({
        drone: this.current.drone,
        attr: this.current.attr,
        dwellMs: Math.round(dwell),
      });
    }
  }
}
