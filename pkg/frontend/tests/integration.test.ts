/**
 * End-to-end protocol round trip against the real session service:
 * a headless client completes a human_user session, dwell capture emits
 * exactly one fixation, the belief update lands in the next frame's
 * state, and the final score equals the trace-recomputed reward sum.
 */

import { spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, readdirSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { DwellTracker } from "../src/dwell.js";
import {
  AckMessage,
  EndMessage,
  FrameMessage,
  N_ATTRS,
} from "../src/protocol.js";
import { SessionController, SocketLike } from "../src/session.js";

const WIND = 5; // canonical index of wind_speed

let server: ChildProcess;
let port = 0;
let traceDir = "";

function startServer(): Promise<number> {
  traceDir = mkdtempSync(join(tmpdir(), "dronewatch-it-"));
  server = spawn(
    "python3",
    [
      "-m", "dronewatch.cli", "serve",
      "--scenario", "default",
      "--policy", "rule",
      "--port", "0",
      "--tick-interval-ms", "2",
      "--seed", "5",
      "--out", traceDir,
    ],
    { stdio: ["ignore", "pipe", "pipe"] }
  );
  return new Promise((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("server did not start")), 15000);
    server.stdout!.on("data", (chunk: Buffer) => {
      const m = /listening on ws:\/\/[^:]+:(\d+)/.exec(chunk.toString());
      if (m) {
        clearTimeout(timer);
        resolve(Number(m[1]));
      }
    });
    server.stderr!.on("data", (chunk: Buffer) => process.stderr.write(chunk));
    server.on("exit", (code) => reject(new Error(`server exited early (${code})`)));
  });
}

function nodeSocket(url: string): Promise<SocketLike> {
  const ws = new WebSocket(url);
  let handler: (data: string) => void = () => {};
  ws.on("message", (data) => handler(data.toString()));
  const socket: SocketLike = {
    send: (data: string) => ws.send(data),
    close: () => ws.close(),
    set onmessage(fn: (data: string) => void) {
      handler = fn;
    },
  };
  return new Promise((resolve, reject) => {
    ws.on("open", () => resolve(socket));
    ws.on("error", reject);
  });
}

beforeAll(async () => {
  port = await startServer();
}, 20000);

afterAll(() => {
  server?.kill();
});

describe("human_user session round trip", () => {
  it(
    "completes with one fixation, a belief update, and a consistent score",
    async () => {
      const socket = await nodeSocket(`ws://127.0.0.1:${port}`);
      const frames: FrameMessage[] = [];
      const acks: AckMessage[] = [];
      let end: EndMessage | null = null;
      let resolveEnd: () => void = () => {};
      const done = new Promise<void>((resolve) => (resolveEnd = resolve));

      const controller = new SessionController(socket, {
        onFrame: (frame) => {
          frames.push(frame);
          driveDwell(frame);
        },
        onAck: (ack) => acks.push(ack),
        onEnd: (e) => {
          end = e;
          resolveEnd();
        },
      });

      // Headless hover: when the wind ramp is visibly underway, the cursor
      // parks on drone 0's wind icon for 300 simulated ms, then leaves.
      let fixationsSent = 0;
      const dwell = new DwellTracker(250, (ev) => {
        fixationsSent += 1;
        controller.reportFixation(ev.drone, ev.attr, ev.dwellMs);
      });
      let hoverClock = 0;
      let hovering = false;
      function driveDwell(frame: FrameMessage): void {
        if (frame.tick === 60 && !hovering) {
          hovering = true;
          dwell.enter(0, "wind_speed", hoverClock);
        }
        if (hovering) {
          hoverClock += 50;
          dwell.poll(hoverClock);
          if (hoverClock > 400) {
            dwell.leave(hoverClock);
            hovering = false;
          }
        }
      }

      controller.start("human_user", 5);
      await done;
      controller.close();

      // full session streamed
      expect(frames).toHaveLength(240);
      expect(fixationsSent).toBe(1);

      const applied = acks.filter((a) => a.code === "applied");
      expect(applied).toHaveLength(1);
      expect(applied[0].attr).toBe("wind_speed");

      // trace on disk: exactly one fixation event, belief updated next step
      const traceFile = readdirSync(traceDir).find((f) => f.endsWith(".jsonl"));
      expect(traceFile).toBeDefined();
      const records = readFileSync(join(traceDir, traceFile!), "utf-8")
        .trim()
        .split("\n")
        .map((l) => JSON.parse(l));
      const fixEvents = records.filter((r) => r.type === "fixation_event");
      expect(fixEvents).toHaveLength(1);
      const k = fixEvents[0].tick as number;
      const stepK = records.find((r) => r.type === "step" && r.step === k);
      const stepK1 = records.find((r) => r.type === "step" && r.step === k + 1);
      expect(stepK).toBeDefined();
      expect(stepK1).toBeDefined();
      // the proxy belief now carries the ground truth seen at fixation time
      expect(stepK1!.s_usr[0 * N_ATTRS + WIND]).toBeCloseTo(
        stepK!.s_att[0 * N_ATTRS + WIND],
        10
      );
      // before the fixation the belief was stale (ramp had drifted)
      expect(
        Math.abs(stepK!.s_usr[0 * N_ATTRS + WIND] - stepK!.s_att[0 * N_ATTRS + WIND])
      ).toBeGreaterThan(0.5);

      // score integrity: end report equals the trace-recomputed reward sum
      const steps = records.filter((r) => r.type === "step");
      expect(steps).toHaveLength(240);
      const recomputed = steps.reduce((acc, r) => acc + (r.reward as number), 0);
      expect(end).not.toBeNull();
      expect(end!.report.score).toBeCloseTo(recomputed, 9);
      expect(frames[frames.length - 1].score).toBeCloseTo(recomputed, 9);

      // render latency budget over the live 240-tick session
      const stats = controller.latency();
      expect(stats.frames).toBe(240);
      expect(stats.maxMs).toBeLessThan(100);
    },
    30000
  );
});
