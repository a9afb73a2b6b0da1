import { describe, expect, it } from "vitest";

import { buildPanelModel, changedCells } from "../src/panel.js";
import { FrameMessage, N_ATTRS, N_PAIRS } from "../src/protocol.js";

function frame(overrides: Partial<FrameMessage> = {}): FrameMessage {
  return {
    type: "frame",
    tick: 1,
    att: Array(N_PAIRS).fill(2.0),
    hlt: Array(N_PAIRS).fill(0),
    score: 0,
    events: [],
    ...overrides,
  };
}

describe("buildPanelModel", () => {
  it("lays out four panels of eight cells in fixed order", () => {
    const model = buildPanelModel(frame());
    expect(model.panels).toHaveLength(4);
    for (const panel of model.panels) {
      expect(panel.cells).toHaveLength(8);
      expect(panel.cells.map((c) => c.attrName)).toEqual([
        "horizontal_velocity",
        "vertical_velocity",
        "altitude",
        "battery",
        "rotor",
        "wind_speed",
        "distance_to_target",
        "no_fly_zone",
      ]);
    }
  });

  it("marks no cell when nothing is highlighted", () => {
    const model = buildPanelModel(frame());
    expect(model.panels.flatMap((p) => p.cells).filter((c) => c.highlighted)).toHaveLength(0);
  });

  it("marks exactly the highlighted rotor icon", () => {
    const hlt = Array(N_PAIRS).fill(0);
    hlt[3 * N_ATTRS + 4] = 1; // drone 3, rotor
    const model = buildPanelModel(frame({ hlt }));
    const highlighted = model.panels.flatMap((p) => p.cells).filter((c) => c.highlighted);
    expect(highlighted).toHaveLength(1);
    expect(highlighted[0].drone).toBe(3);
    expect(highlighted[0].attrName).toBe("rotor");
  });

  it("flags critical pairs from the events list", () => {
    const model = buildPanelModel(frame({ events: [[1, "wind_speed"]] }));
    const critical = model.panels.flatMap((p) => p.cells).filter((c) => c.critical);
    expect(critical).toHaveLength(1);
    expect(critical[0].drone).toBe(1);
    expect(critical[0].attrName).toBe("wind_speed");
  });

  it("formats binary and continuous values", () => {
    const att = Array(N_PAIRS).fill(0);
    att[4] = 0; // drone 0 rotor off
    att[3] = 0.5; // drone 0 battery
    const model = buildPanelModel(frame({ att }));
    expect(model.panels[0].cells[4].text).toBe("OFF");
    expect(model.panels[0].cells[3].text).toBe("0.50");
  });
});

describe("changedCells", () => {
  it("two identical frames produce no visual diff", () => {
    const a = buildPanelModel(frame({ tick: 1 }));
    const b = buildPanelModel(frame({ tick: 2 }));
    expect(changedCells(a, b)).toHaveLength(0);
  });

  it("first frame touches every cell", () => {
    expect(changedCells(null, buildPanelModel(frame()))).toHaveLength(N_PAIRS);
  });

  it("only changed cells are returned", () => {
    const a = buildPanelModel(frame());
    const att = Array(N_PAIRS).fill(2.0);
    att[10] = 9.9;
    const b = buildPanelModel(frame({ att }));
    const diff = changedCells(a, b);
    expect(diff).toHaveLength(1);
    expect(diff[0].drone).toBe(1);
  });
});
