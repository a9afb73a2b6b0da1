/**
 * Session controller: drives the session/1 protocol over an injected
 * socket. The transport is anything with send/onmessage/close (browser
 * WebSocket, node ws, or a test fake).
 */

import {
  AckMessage,
  ClientMessage,
  EndMessage,
  FrameMessage,
  parseServerMessage,
  serializeClientMessage,
  SessionMode,
} from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  set onmessage(handler: (data: string) => void);
}

export interface SessionCallbacks {
  onFrame?: (frame: FrameMessage, renderMs: number) => void;
  onAck?: (ack: AckMessage) => void;
  onEnd?: (end: EndMessage) => void;
  onError?: (err: Error) => void;
}

export interface LatencyStats {
  frames: number;
  maxMs: number;
  meanMs: number;
}

const FIXATION_BUFFER_MS = 5000;

export class SessionController {
  private socket: SocketLike;
  private callbacks: SessionCallbacks;
  private renderTimes: number[] = [];
  private now: () => number;
  private pendingFixations: { msg: ClientMessage; at: number }[] = [];
  paused = false;
  degraded = false;
  lastFrame: FrameMessage | null = null;
  end: EndMessage | null = null;

  constructor(socket: SocketLike, callbacks: SessionCallbacks, now?: () => number) {
    this.socket = socket;
    this.callbacks = callbacks;
    this.now = now ?? (() => performance.now());
    socket.onmessage = (data) => this.handleMessage(data);
  }

  start(mode: SessionMode, seed?: number): void {
    this.sendMessage({ type: "hello", mode, ...(seed !== undefined ? { seed } : {}) });
  }

  /**
   * Fixations survive a transport hiccup: failed sends are buffered and
   * retried on the next report for up to 5 s, after which the session is
   * marked degraded (stale fixations are dropped, not replayed).
   */
  reportFixation(drone: number, attr: string, dwellMs: number): void {
    const msg: ClientMessage = { type: "fixation", drone, attr, dwell_ms: dwellMs };
    const now = this.now();
    this.flushFixations(now);
    try {
      this.socket.send(serializeClientMessage(msg));
    } catch {
      this.pendingFixations.push({ msg, at: now });
    }
  }

  private flushFixations(now: number): void {
    const keep: { msg: ClientMessage; at: number }[] = [];
    for (const entry of this.pendingFixations) {
      if (now - entry.at > FIXATION_BUFFER_MS) {
        this.degraded = true;
        continue;
      }
      try {
        this.socket.send(serializeClientMessage(entry.msg));
      } catch {
        keep.push(entry);
      }
    }
    this.pendingFixations = keep;
  }

  pause(): void {
    this.paused = true;
    this.sendMessage({ type: "pause" });
  }

  resume(): void {
    this.paused = false;
    this.sendMessage({ type: "resume" });
  }

  close(): void {
    this.socket.close();
  }

  latency(): LatencyStats {
    const n = this.renderTimes.length;
    if (n === 0) return { frames: 0, maxMs: 0, meanMs: 0 };
    const total = this.renderTimes.reduce((a, b) => a + b, 0);
    return { frames: n, maxMs: Math.max(...this.renderTimes), meanMs: total / n };
  }

  private sendMessage(msg: ClientMessage): void {
    this.socket.send(serializeClientMessage(msg));
  }

  private handleMessage(data: string): void {
    let msg;
    try {
      msg = parseServerMessage(data);
    } catch (err) {
      this.callbacks.onError?.(err as Error);
      this.close();
      return;
    }
    if (msg.type === "frame") {
      const t0 = this.now();
      this.lastFrame = msg;
      this.callbacks.onFrame?.(msg, 0);
      this.renderTimes.push(this.now() - t0);
    } else if (msg.type === "ack") {
      this.callbacks.onAck?.(msg);
    } else {
      this.end = msg;
      this.callbacks.onEnd?.(msg);
    }
  }
}
