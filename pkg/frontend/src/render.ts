/**
 * DOM renderer: four fixed panels of eight icon cells plus a decorative
 * map pane. Layout and icon order never change mid-session; only values,
 * highlight emphasis, and critical badges update.
 */

import { ATTRS } from "./attrs.js";
import { DwellTracker } from "./dwell.js";
import { changedCells, buildPanelModel, PanelModel } from "./panel.js";
import { FrameMessage, N_ATTRS, N_DRONES } from "./protocol.js";

export class DashboardView {
  private root: HTMLElement;
  private cellNodes: HTMLElement[][] = [];
  private valueNodes: HTMLElement[][] = [];
  private scoreNode: HTMLElement;
  private tickNode: HTMLElement;
  private statusNode: HTMLElement;
  private markerNodes: HTMLElement[] = [];
  private model: PanelModel | null = null;

  constructor(root: HTMLElement, dwell: DwellTracker) {
    this.root = root;
    root.innerHTML = "";
    const header = el("div", "dw-header");
    this.tickNode = el("span", "dw-tick", "tick 0");
    this.scoreNode = el("span", "dw-score", "score 0");
    this.statusNode = el("span", "dw-status", "connecting");
    header.append(this.tickNode, this.scoreNode, this.statusNode);
    root.append(header);

    const layout = el("div", "dw-layout");
    const panels = el("div", "dw-panels");
    for (let d = 0; d < N_DRONES; d++) {
      const panel = el("div", "dw-panel");
      panel.append(el("h3", "dw-panel-title", `Drone ${d}`));
      const grid = el("div", "dw-grid");
      const rowCells: HTMLElement[] = [];
      const rowValues: HTMLElement[] = [];
      for (let a = 0; a < N_ATTRS; a++) {
        const meta = ATTRS[a];
        const cell = el("div", "dw-cell");
        cell.dataset.drone = String(d);
        cell.dataset.attr = meta.name;
        const icon = el("div", "dw-icon", meta.icon);
        const label = el("div", "dw-label", meta.label);
        const value = el("div", "dw-value", "-");
        cell.append(icon, label, value);
        cell.addEventListener("mouseenter", () =>
          dwell.enter(d, meta.name, performance.now())
        );
        cell.addEventListener("mouseleave", () => dwell.leave(performance.now()));
        cell.addEventListener("mousemove", () => dwell.poll(performance.now()));
        grid.append(cell);
        rowCells.push(cell);
        rowValues.push(value);
      }
      panel.append(grid);
      panels.append(panel);
      this.cellNodes.push(rowCells);
      this.valueNodes.push(rowValues);
    }
    layout.append(panels, this.buildMapPane());
    root.append(layout);
  }

  /** Decorative context only; generates no fixation events. */
  private buildMapPane(): HTMLElement {
    const map = el("div", "dw-map");
    map.append(el("h3", "dw-panel-title", "Area map"));
    const field = el("div", "dw-map-field");
    for (let d = 0; d < N_DRONES; d++) {
      const marker = el("div", "dw-map-marker", `✈${d}`);
      field.append(marker);
      this.markerNodes.push(marker);
    }
    map.append(field);
    return map;
  }

  setStatus(text: string): void {
    this.statusNode.textContent = text;
  }

  renderFrame(frame: FrameMessage): void {
    const next = buildPanelModel(frame);
    for (const cell of changedCells(this.model, next)) {
      const node = this.cellNodes[cell.drone][cell.attr];
      this.valueNodes[cell.drone][cell.attr].textContent = cell.text;
      node.classList.toggle("dw-highlight", cell.highlighted);
      node.classList.toggle("dw-critical", cell.critical);
    }
    this.tickNode.textContent = `tick ${next.tick}`;
    this.scoreNode.textContent = `score ${next.score.toFixed(1)}`;
    for (let d = 0; d < N_DRONES; d++) {
      // marker drifts with position-derived attributes (decorative)
      const dist = frame.att[d * N_ATTRS + 6];
      const alt = frame.att[d * N_ATTRS + 2];
      this.markerNodes[d].style.left = `${5 + (dist / 2000) * 85}%`;
      this.markerNodes[d].style.top = `${10 + (d * 80) / N_DRONES - (alt / 150) * 8}%`;
    }
    this.model = next;
  }

  renderEnd(report: {
    score: number;
    ticks: number;
    highlights_shown: number;
    final_belief_distance: number | null;
  }): void {
    this.setStatus(
      `ended after ${report.ticks} ticks, score ${report.score.toFixed(1)}, ` +
        `${report.highlights_shown} highlights shown` +
        (report.final_belief_distance !== null
          ? `, final belief gap ${report.final_belief_distance.toFixed(1)}`
          : "")
    );
  }

  showError(text: string): void {
    const banner = el("div", "dw-error", text);
    this.root.prepend(banner);
  }
}

function el(tag: string, cls: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}
