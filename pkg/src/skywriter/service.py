"""Streaming gesture service.

One WebSocket connection is one session. The client streams glove frames as
JSON text messages; the server runs the gate -> featurize -> classify ->
fly -> paint pipeline and pushes back state changes, the prediction, live
drone telemetry, and the finished painting.

Wire protocol (one JSON object per text frame):

  client -> server
    {"type": "imu", "t": f, "ax": f, "ay": f, "az": f, "flex": f}
    {"type": "config", "gate_threshold"?: f, "time_scale"?: f}

  server -> client
    {"type": "state", "mode": "idle" | "capturing" | "flying"}
    {"type": "prediction", "label": "S", "posteriors": [5 floats]}
    {"type": "drone_state", "t": f, "x": f, "y": f, "z": f, "led": [r, g, b], "lit": bool}
    {"type": "paint_done", "encoding": "ppm-base64", "data": "..."}   (inline mode)
    {"type": "paint_done", "encoding": "path", "data": "/some/file.ppm"}
    {"type": "error", "code": str, "detail": str}

Sessions are isolated; the trained model is shared read-only. A session's
flight streams from its own task, so simulation never stalls other sessions'
ingestion.
"""

from __future__ import annotations

import asyncio
import base64
import json
import math
import os
from dataclasses import dataclass, field

from websockets.asyncio.server import serve

from .forest import RandomForestModel, forest_predict, load_model
from .glyph import PaintFrame, letter_path
from .signal import (
    DEFAULT_GATE_THRESHOLD,
    DEFAULT_MIN_CAPTURE_LEN,
    FilterSpec,
    GestureCapture,
    ImuFrame,
    featurize,
)
from .simflight import ControllerGains, PaintCanvas, fly_path, ppm_bytes, render_exposure


@dataclass(frozen=True)
class ServiceConfig:
    port: int = 8777
    host: str = "127.0.0.1"
    model_path: str = "model.json"
    gate_threshold: float = DEFAULT_GATE_THRESHOLD
    min_capture_len: int = DEFAULT_MIN_CAPTURE_LEN
    frame: PaintFrame = PaintFrame()
    gains: ControllerGains = ControllerGains()
    speed: float = 0.5
    rate: float = 10.0
    time_scale: float = 1.0  # >1 streams telemetry faster than real time
    buffer_cap: int = 2000
    image_mode: str = "inline"  # "inline" (base64 in paint_done) or "path"
    image_dir: str = "."
    filter_spec: FilterSpec = FilterSpec()

    @classmethod
    def from_json(cls, path: str) -> "ServiceConfig":
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
        kwargs = dict(raw)
        if "frame" in kwargs:
            fr = kwargs["frame"]
            kwargs["frame"] = PaintFrame(
                center=tuple(fr.get("center", (0.0, 0.0, 1.5))),
                width=fr.get("width", 1.0),
                height=fr.get("height", 1.0),
            )
        if "gains" in kwargs:
            g = kwargs["gains"]
            kwargs["gains"] = ControllerGains(**g)
        return cls(**kwargs)


@dataclass(eq=False)  # identity semantics; sessions live in a set
class SessionState:
    id: str
    mode: str = "idle"  # idle -> capturing -> {idle, flying} -> idle
    buffer: list[ImuFrame] = field(default_factory=list)
    gate_threshold: float = DEFAULT_GATE_THRESHOLD
    time_scale: float = 1.0
    flight_task: asyncio.Task | None = None
    conn: object = None


def _finite(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _parse_imu(msg: dict) -> ImuFrame:
    for key in ("t", "ax", "ay", "az", "flex"):
        if not _finite(msg.get(key)):
            raise ValueError(f"field {key!r} missing or not finite")
    return ImuFrame(
        t=float(msg["t"]),
        accel=(float(msg["ax"]), float(msg["ay"]), float(msg["az"])),
        flex=float(msg["flex"]),
    )


class GestureServer:
    """Serves the wire protocol; one SessionState per connection."""

    def __init__(self, config: ServiceConfig, model: RandomForestModel | None = None):
        self.config = config
        self.model = model if model is not None else load_model(config.model_path)
        self._server = None
        self._sessions: set[SessionState] = set()
        self._next_id = 0

    async def start(self) -> None:
        self._server = await serve(self._handle, self.config.host, self.config.port)

    @property
    def port(self) -> int:
        return self._server.sockets[0].getsockname()[1]

    async def stop(self, flight_grace: float = 10.0) -> None:
        """Stop accepting, let in-flight paints finish (bounded), then close."""
        self._server.close(close_connections=False)
        flights = [s.flight_task for s in self._sessions if s.flight_task and not s.flight_task.done()]
        if flights:
            done, pending = await asyncio.wait(flights, timeout=flight_grace)
            for task in pending:
                task.cancel()
        for session in list(self._sessions):  # idle clients must not stall shutdown
            if session.conn is not None:
                await session.conn.close()
        await self._server.wait_closed()

    async def serve_forever(self) -> None:
        await self.start()
        try:
            await asyncio.get_running_loop().create_future()  # run until cancelled
        finally:
            await self.stop()

    # -- per-connection ----------------------------------------------------

    async def _handle(self, conn) -> None:
        self._next_id += 1
        session = SessionState(
            id=f"session-{self._next_id}",
            gate_threshold=self.config.gate_threshold,
            time_scale=self.config.time_scale,
            conn=conn,
        )
        self._sessions.add(session)
        try:
            async for raw in conn:
                await self._dispatch(session, conn, raw)
        finally:
            if session.flight_task and not session.flight_task.done():
                session.flight_task.cancel()
            self._sessions.discard(session)

    async def _send(self, conn, msg: dict) -> None:
        await conn.send(json.dumps(msg))

    async def _error(self, conn, code: str, detail: str) -> None:
        await self._send(conn, {"type": "error", "code": code, "detail": detail})

    async def _state(self, conn, session: SessionState) -> None:
        await self._send(conn, {"type": "state", "mode": session.mode})

    async def _dispatch(self, session: SessionState, conn, raw) -> None:
        if isinstance(raw, bytes):
            await self._error(conn, "bad_frame", "expected a text frame")
            return
        try:
            msg = json.loads(raw)
        except json.JSONDecodeError as e:
            await self._error(conn, "bad_frame", f"invalid JSON: {e.msg}")
            return
        if not isinstance(msg, dict) or "type" not in msg:
            await self._error(conn, "bad_frame", "message must be an object with a 'type'")
            return

        mtype = msg["type"]
        if mtype == "imu":
            await self._on_imu(session, conn, msg)
        elif mtype == "config":
            await self._on_config(session, conn, msg)
        else:
            await self._error(conn, "unknown_type", f"unsupported message type {mtype!r}")

    async def _on_config(self, session: SessionState, conn, msg: dict) -> None:
        if "gate_threshold" in msg:
            v = msg["gate_threshold"]
            if not _finite(v) or not 0.0 < v < 1.0:
                await self._error(conn, "bad_frame", "gate_threshold must be in (0, 1)")
                return
            session.gate_threshold = float(v)
        if "time_scale" in msg:
            v = msg["time_scale"]
            if not _finite(v) or v <= 0:
                await self._error(conn, "bad_frame", "time_scale must be positive")
                return
            session.time_scale = float(v)
        await self._state(conn, session)  # acknowledge with current mode

    async def _on_imu(self, session: SessionState, conn, msg: dict) -> None:
        try:
            frame = _parse_imu(msg)
        except ValueError as e:
            await self._error(conn, "bad_frame", str(e))
            return

        if session.mode == "flying":
            return  # consumed but ignored; one flight at a time

        clasped = frame.flex >= session.gate_threshold
        if session.mode == "idle":
            if clasped:
                session.buffer = [frame]
                session.mode = "capturing"
                await self._state(conn, session)
            return

        # capturing
        if clasped:
            if session.buffer and frame.t <= session.buffer[-1].t:
                await self._error(conn, "bad_frame", "timestamp not increasing; frame dropped")
                return
            session.buffer.append(frame)
            if len(session.buffer) >= self.config.buffer_cap:
                await self._finalize(session, conn)  # backpressure: force-close the capture
            return
        await self._finalize(session, conn)

    async def _finalize(self, session: SessionState, conn) -> None:
        buffer, session.buffer = session.buffer, []
        if len(buffer) < self.config.min_capture_len:
            session.mode = "idle"
            await self._error(
                conn,
                "capture_too_short",
                f"{len(buffer)} frames buffered, need {self.config.min_capture_len}",
            )
            await self._state(conn, session)
            return

        try:
            capture = GestureCapture(frames=tuple(buffer), source_id=session.id)
            features = featurize(capture, self.config.filter_spec)
            label, posteriors = forest_predict(self.model, features)
        except Exception as e:  # a bad capture must not take the session down
            session.mode = "idle"
            await self._error(conn, "classify_failed", str(e))
            await self._state(conn, session)
            return
        await self._send(
            conn,
            {"type": "prediction", "label": label, "posteriors": [float(p) for p in posteriors]},
        )
        session.mode = "flying"
        await self._state(conn, session)
        session.flight_task = asyncio.create_task(self._fly(session, conn, label))

    async def _fly(self, session: SessionState, conn, label: str) -> None:
        cfg = self.config
        try:
            path = letter_path(label, cfg.frame, cfg.speed, cfg.rate)
            trace, canvas = await asyncio.to_thread(self._simulate, path)
            stride = max(1, round(1.0 / (cfg.rate * cfg.gains.dt)))
            interval = (1.0 / cfg.rate) / session.time_scale
            for s in trace.states[::stride]:
                await self._send(
                    conn,
                    {
                        "type": "drone_state",
                        "t": s.t,
                        "x": s.position[0],
                        "y": s.position[1],
                        "z": s.position[2],
                        "led": list(s.led),
                        "lit": s.lit,
                    },
                )
                await asyncio.sleep(interval)
            await self._send(conn, self._paint_done(session, canvas))
        except asyncio.CancelledError:
            # shutdown grace expired mid-flight: tell the client, then bail
            try:
                await self._error(conn, "shutdown", "flight aborted by server shutdown")
            except Exception:
                pass
            raise
        except Exception as e:  # data errors must not kill the session
            await self._error(conn, "flight_failed", str(e))
        finally:
            session.mode = "idle"
            try:
                await self._state(conn, session)
            except Exception:
                pass  # connection already gone

    def _simulate(self, path):
        trace = fly_path(path, self.config.gains)
        canvas = render_exposure(trace, PaintCanvas.from_frame(self.config.frame))
        return trace, canvas

    def _paint_done(self, session: SessionState, canvas: PaintCanvas) -> dict:
        data = ppm_bytes(canvas)
        if self.config.image_mode == "path":
            os.makedirs(self.config.image_dir, exist_ok=True)
            out = os.path.join(self.config.image_dir, f"{session.id}.ppm")
            with open(out, "wb") as f:
                f.write(data)
            return {"type": "paint_done", "encoding": "path", "data": out}
        return {
            "type": "paint_done",
            "encoding": "ppm-base64",
            "data": base64.b64encode(data).decode("ascii"),
        }


def run_server(config: ServiceConfig) -> None:
    """Blocking entry point; serves until SIGINT/SIGTERM."""

    async def main() -> None:
        server = GestureServer(config)
        await server.start()
        print(json.dumps({"event": "listening", "host": config.host, "port": server.port}), flush=True)
        stop = asyncio.get_running_loop().create_future()

        import signal as _signal  # stdlib, not the package sibling

        loop = asyncio.get_running_loop()
        for sig in (_signal.SIGINT, _signal.SIGTERM):
            loop.add_signal_handler(sig, lambda: stop.done() or stop.set_result(None))
        try:
            await stop
        finally:
            await server.stop()

    asyncio.run(main())
