"""WebSocket adapter for live sessions (JSON text protocol, schema session/1).

One connection drives one session: the client opens with a hello naming
the mode, the server streams frame messages and answers fixation events
with acks.  Human sessions are paced at the session dt by default;
simulated ones run as fast as the loop allows.
"""

from __future__ import annotations

import asyncio
import itertools
import json
from pathlib import Path

from websockets.asyncio.server import serve as ws_serve
from websockets.exceptions import ConnectionClosed

from .session import MODES, Session, SessionError

_session_counter = itertools.count(1)


class SessionServer:
    def __init__(
        self,
        session_factory,
        tick_interval_s: float | None = None,
        trace_dir: str | Path | None = None,
    ):
        """``session_factory(session_id, mode, trace_path)`` builds a Session."""
        self.session_factory = session_factory
        self.tick_interval_s = tick_interval_s
        self.trace_dir = Path(trace_dir) if trace_dir else None

    async def handle(self, websocket) -> None:
        session: Session | None = None
        try:
            hello_raw = await websocket.recv()
            hello = _parse(hello_raw)
            if hello.get("type") != "hello" or hello.get("mode") not in MODES:
                await websocket.send(
                    json.dumps(
                        {"type": "ack", "ok": False, "code": "bad_hello", "detail": str(hello)}
                    )
                )
                return
            session_id = f"s{next(_session_counter):04d}"
            trace_path = (
                self.trace_dir / f"session_{session_id}.jsonl" if self.trace_dir else None
            )
            session = self.session_factory(session_id, hello, trace_path)
            await websocket.send(json.dumps(session.start()))

            reader = asyncio.create_task(self._read_loop(websocket, session))
            try:
                interval = self.tick_interval_s
                if interval is None:
                    interval = session.dt if session.mode == "human_user" else 0.0
                while not session.done:
                    if session.paused:
                        await asyncio.sleep(0.02)
                        continue
                    frame = session.tick()
                    await websocket.send(json.dumps(frame))
                    await asyncio.sleep(interval)
                await websocket.send(json.dumps(session.end_message()))
            finally:
                reader.cancel()
                try:
                    await reader
                except asyncio.CancelledError:
                    pass
        except ConnectionClosed:
            pass
        finally:
            if session is not None:
                session.close()

    async def _read_loop(self, websocket, session: Session) -> None:
        try:
            async for raw in websocket:
                try:
                    msg = _parse(raw)
                    ack = session.handle_message(msg)
                except (SessionError, ValueError) as exc:
                    ack = {"type": "ack", "ok": False, "code": "error", "detail": str(exc)}
                if ack is not None:
                    await websocket.send(json.dumps(ack))
        except ConnectionClosed:
            pass


def _parse(raw) -> dict:
    msg = json.loads(raw)
    if not isinstance(msg, dict):
        raise ValueError("messages must be JSON objects")
    return msg


async def serve_forever(
    session_factory,
    host: str = "127.0.0.1",
    port: int = 8765,
    tick_interval_s: float | None = None,
    trace_dir: str | Path | None = None,
    ready_event: asyncio.Event | None = None,
) -> None:
    server = SessionServer(session_factory, tick_interval_s, trace_dir)
    async with ws_serve(server.handle, host, port) as ws:
        if ready_event is not None:
            ready_event.set()
        bound_port = ws.sockets[0].getsockname()[1]
        print(f"session service listening on ws://{host}:{bound_port}", flush=True)
        await asyncio.get_running_loop().create_future()
