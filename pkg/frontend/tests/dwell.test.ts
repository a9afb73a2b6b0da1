import { describe, expect, it } from "vitest";

import { DwellEvent, DwellTracker } from "../src/dwell.js";

function tracker(threshold = 250) {
  const events: DwellEvent[] = [];
  const t = new DwellTracker(threshold, (e) => events.push(e));
  return { t, events };
}

describe("DwellTracker", () => {
  it("hover past threshold emits exactly one fixation", () => {
    const { t, events } = tracker(250);
    t.enter(2, "battery", 1000);
    t.poll(1100);
    expect(events).toHaveLength(0);
    t.poll(1300); // 300 ms >= 250 ms
    expect(events).toEqual([{ drone: 2, attr: "battery", dwellMs: 300 }]);
  });

  it("leaving before threshold emits nothing", () => {
    const { t, events } = tracker(250);
    t.enter(0, "rotor", 0);
    t.poll(200);
    t.leave(200);
    t.poll(600);
    expect(events).toHaveLength(0);
  });

  it("continuous hover emits only once however long", () => {
    const { t, events } = tracker(250);
    t.enter(1, "wind_speed", 0);
    for (let now = 50; now <= 600; now += 50) t.poll(now);
    expect(events).toHaveLength(1);
    expect(events[0].dwellMs).toBeGreaterThanOrEqual(250);
  });

  it("re-entering starts a fresh episode", () => {
    const { t, events } = tracker(250);
    t.enter(1, "altitude", 0);
    t.poll(300);
    t.leave(310);
    t.enter(1, "altitude", 400);
    t.poll(700);
    expect(events).toHaveLength(2);
  });

  it("switching cells resets the timer", () => {
    const { t, events } = tracker(250);
    t.enter(0, "battery", 0);
    t.poll(200);
    t.enter(0, "rotor", 210); // moved to another cell before firing
    t.poll(400); // only 190 ms on rotor
    expect(events).toHaveLength(0);
    t.poll(470);
    expect(events).toEqual([{ drone: 0, attr: "rotor", dwellMs: 260 }]);
  });
});
