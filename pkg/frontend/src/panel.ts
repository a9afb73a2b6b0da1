/**
 * View model for the dashboard: four drone panels of eight icon cells.
 * Building a PanelModel is a pure function of the last frame; the client
 * never simulates or mutates values locally.
 */

import { ATTRS, formatValue } from "./attrs.js";
import { FrameMessage, N_ATTRS, N_DRONES } from "./protocol.js";

export interface IconCell {
  drone: number;
  attr: number;
  attrName: string;
  label: string;
  icon: string;
  value: number;
  text: string;
  highlighted: boolean;
  critical: boolean;
}

export interface DronePanel {
  drone: number;
  cells: IconCell[];
}

export interface PanelModel {
  tick: number;
  score: number;
  panels: DronePanel[];
}

export function buildPanelModel(frame: FrameMessage): PanelModel {
  const criticalSet = new Set(frame.events.map(([d, name]) => `${d}:${name}`));
  const panels: DronePanel[] = [];
  for (let d = 0; d < N_DRONES; d++) {
    const cells: IconCell[] = [];
    for (let a = 0; a < N_ATTRS; a++) {
      const flat = d * N_ATTRS + a;
      const meta = ATTRS[a];
      cells.push({
        drone: d,
        attr: a,
        attrName: meta.name,
        label: meta.label,
        icon: meta.icon,
        value: frame.att[flat],
        text: formatValue(a, frame.att[flat]),
        highlighted: frame.hlt[flat] === 1,
        critical: criticalSet.has(`${d}:${meta.name}`),
      });
    }
    panels.push({ drone: d, cells });
  }
  return { tick: frame.tick, score: frame.score, panels };
}

/** Stable diff of two models; rendering only touches changed cells. */
export function changedCells(prev: PanelModel | null, next: PanelModel): IconCell[] {
  if (prev === null) {
    return next.panels.flatMap((p) => p.cells);
  }
  const out: IconCell[] = [];
  for (let d = 0; d < next.panels.length; d++) {
    const a = prev.panels[d].cells;
    const b = next.panels[d].cells;
    for (let i = 0; i < b.length; i++) {
      if (
        a[i].text !== b[i].text ||
        a[i].highlighted !== b[i].highlighted ||
        a[i].critical !== b[i].critical
      ) {
        out.push(b[i]);
      }
    }
  }
  return out;
}
