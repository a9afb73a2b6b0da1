/**
 * Browser entry point. Configuration via query parameters:
 *   ?server=ws://127.0.0.1:8765&mode=human_user&seed=1&dwell=250
 */

import { DwellTracker } from "./dwell.js";
import { SessionMode } from "./protocol.js";
import { DashboardView } from "./render.js";
import { SessionController, SocketLike } from "./session.js";

function browserSocket(url: string): SocketLike & { onopen: (fn: () => void) => void } {
  const ws = new WebSocket(url);
  let handler: (data: string) => void = () => {};
  ws.onmessage = (ev) => handler(String(ev.data));
  return {
    send: (data: string) => ws.send(data),
    close: () => ws.close(),
    set onmessage(fn: (data: string) => void) {
      handler = fn;
    },
    onopen: (fn: () => void) => {
      ws.onopen = fn;
    },
  };
}

function boot(): void {
  const params = new URLSearchParams(window.location.search);
  const server = params.get("server") ?? "ws://127.0.0.1:8765";
  const mode = (params.get("mode") ?? "human_user") as SessionMode;
  const seed = Number(params.get("seed") ?? "0");
  const dwellMs = Number(params.get("dwell") ?? "250");

  const root = document.getElementById("dashboard");
  if (!root) throw new Error("missing #dashboard element");

  const socket = browserSocket(server);
  let controller: SessionController | null = null;
  const dwell = new DwellTracker(dwellMs, (ev) => {
    if (mode === "human_user") {
      controller?.reportFixation(ev.drone, ev.attr, ev.dwellMs);
    }
  });
  const view = new DashboardView(root, dwell);

  controller = new SessionController(socket, {
    onFrame: (frame) => view.renderFrame(frame),
    onAck: (ack) => {
      if (ack.code === "hello") view.setStatus(`session ${String(ack.session)} (${mode})`);
      if (!ack.ok && ack.code !== "below_threshold") {
        view.showError(`server rejected: ${ack.code}`);
      }
    },
    onEnd: (end) => view.renderEnd(end.report),
    onError: (err) => {
      view.showError(`protocol error: ${err.message}; session halted`);
    },
  });

  const pauseBtn = document.getElementById("pause");
  const resumeBtn = document.getElementById("resume");
  pauseBtn?.addEventListener("click", () => controller?.pause());
  resumeBtn?.addEventListener("click", () => controller?.resume());

  socket.onopen(() => controller?.start(mode, seed));
}

boot();
