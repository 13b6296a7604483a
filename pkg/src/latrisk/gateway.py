"""Live operator sessions: a TCP gateway that streams scene frames and risk
maps to one console, measures real human decision latency, and feeds the
answers back into the simulation through the delayed-decision queue.

Transport: length-prefixed JSON messages (4-byte big-endian length, UTF-8
payload) over one duplex socket.  Risk grids travel base64-encoded in their
binary wire format.  The simulation loop and the connection handler talk
only through queues; the loop is the sole owner of world state.

Every message is appended to a JSON-lines session log; a logged session
replays to a bit-identical trajectory because all randomness derives from
the trial seed and the decision apply-times are recorded explicitly.
"""

from __future__ import annotations

import asyncio
import base64
import hashlib
import json
import time as _time
from dataclasses import dataclass, field

import numpy as np

from .licom import EgoTemplate, GridSpec, compute_licom, serialize_grid
from .scenarios import ScenarioConfig, TrialResult, TrialRunner, trial_seed
from .vqa import OperatorAnswer, parse_answer, validate_feasibility
from .vqa_actions import BRAKE, DecisionAction

PROTOCOL_VERSION = 1
_LEN_BYTES = 4
_MAX_MSG = 16 * 1024 * 1024


def encode_message(msg: dict) -> bytes:
    payload = json.dumps(msg, separators=(",", ":"), sort_keys=True).encode()
    return len(payload).to_bytes(_LEN_BYTES, "big") + payload


async def read_message(reader: asyncio.StreamReader) -> dict:
    header = await reader.readexactly(_LEN_BYTES)
    length = int.from_bytes(header, "big")
    if length > _MAX_MSG:
        raise ValueError("message too large")
    payload = await reader.readexactly(length)
    return json.loads(payload.decode())


@dataclass
class SessionConfig:
    scenario: ScenarioConfig = field(default_factory=lambda: ScenarioConfig(policy="live"))
    seed: int | None = None
    pace: float = 1.0
    frame_interval: float = 0.05
    network_delay: float = 0.05
    grid_extent: float = 80.0
    grid_resolution: float = 0.5
    grid_samples: int = 4000
    whatif_taus: tuple[float, ...] = (0.5, 1.0, 1.5, 2.0, 2.5)
    log_path: str | None = None

    def __post_init__(self):
        if self.scenario.policy != "live":
            raise ValueError("session scenario must use the live policy")
        if not (0.0 < self.pace <= 1.0):
            raise ValueError("pace must be in (0, 1]")


@dataclass
class LatencyRecord:
    query_id: str
    human: float
    network: float
    apply_at: float


class Session:
    """One live trial: paced stepping, query/answer bookkeeping, logging."""

    def __init__(self, config: SessionConfig):
        self.config = config
        seed = config.seed if config.seed is not None else trial_seed(
            config.scenario.master_seed, 0)
        self.seed = seed
        self.runner = TrialRunner(config.scenario, seed)
        self.frame_index = 0
        self.latencies: list[LatencyRecord] = []
        self.log: list[dict] = []
        self._armed_query_id: str | None = None
        self._presented: dict[str, float] = {}
        self._answered: set[str] = set()
        self._grid_rng = np.random.default_rng(
            np.random.SeedSequence(entropy=seed, spawn_key=(9,)))
        self._last_grid_b64: str | None = None

    # -- logging ------------------------------------------------------------

    def log_msg(self, direction: str, msg: dict) -> None:
        self.log.append({"dir": direction, "msg": msg})

    def dump_log(self) -> str:
        head = {
            "dir": "meta",
            "msg": {
                "config": json.loads(self.config.scenario.to_json()),
                "seed": self.seed,
                "pace": self.config.pace,
                "network_delay": self.config.network_delay,
                "version": PROTOCOL_VERSION,
            },
        }
        lines = [json.dumps(head, sort_keys=True)]
        lines += [json.dumps(entry, sort_keys=True) for entry in self.log]
        return "\n".join(lines) + "\n"

    # -- messages -----------------------------------------------------------

    def hello_message(self) -> dict:
        return {"type": "hello", "version": PROTOCOL_VERSION,
                "scenario": self.config.scenario.scenario, "seed": self.seed}

    def frame_message(self) -> dict:
        runner = self.runner
        ego = runner.ego_state()
        obs = runner.scene.obstacle_at(runner.time)
        traj = runner.scene.trajectory
        t = runner.time
        horizon = min(traj.end, t + 3.0)
        ts = np.linspace(t, horizon, 16)
        window = []
        for tt in ts:
            pose, _ = traj.sample(min(float(tt), traj.end))
            window.append([round(pose.x, 3), round(pose.y, 3)])
        msg = {
            "type": "frame",
            "index": self.frame_index,
            "time": round(t, 4),
            "ego": {"x": ego.pose.x, "y": ego.pose.y, "theta": ego.pose.theta,
                    "speed": ego.speed},
            "obstacles": [{"id": obs.id, "x": obs.pose.x, "y": obs.pose.y,
                           "theta": obs.pose.theta,
                           "half_length": obs.half_length,
                           "half_width": obs.half_width}],
            "trajectory": window,
        }
        if runner.open_query is not None and self._last_grid_b64 is not None:
            msg["grid"] = self._last_grid_b64
        self.frame_index += 1
        return msg

    def _make_grids(self) -> dict[str, str]:
        runner = self.runner
        cfg = self.config
        ego = runner.ego_state()
        spec = GridSpec.centered_on(ego.pose.x, ego.pose.y, extent=cfg.grid_extent,
                                    resolution=cfg.grid_resolution)
        template = EgoTemplate(
            state=ego,
            half_length=runner.config.ego_half_length,
            half_width=runner.config.ego_half_width,
            trajectory=runner.scene.trajectory,
        )
        grids = {}
        for tau in cfg.whatif_taus:
            grid = compute_licom(
                spec, template, runner.belief, runner._model, tau,
                runner.config.safety(), self._grid_rng,
                obstacle_half_length=runner.config.obstacle_half_length,
                obstacle_half_width=runner.config.obstacle_half_width,
                samples=cfg.grid_samples,
            )
            grids[f"{tau:.1f}"] = base64.b64encode(serialize_grid(grid)).decode()
        return grids

    def query_message(self) -> dict | None:
        """When the runner opened a query, build the wire message for it."""
        query = self.runner.pending_live_query
        if query is None or query.id in self._presented:
            return None
        grids = self._make_grids()
        expected = self.config.scenario.latency_model()
        expected_tau = (expected.human if isinstance(expected.human, float)
                        else expected.human[0]) + self.config.network_delay
        nearest = min(self.config.whatif_taus, key=lambda t: abs(t - expected_tau))
        self._last_grid_b64 = grids[f"{nearest:.1f}"]
        self._presented[query.id] = self.runner.time
        return {
            "type": "query",
            "id": query.id,
            "text": query.question,
            "options": list(query.options),
            "presented_at": round(self.runner.time, 4),
            "grids": grids,
            "default_tau": f"{nearest:.1f}",
        }

    def handle_answer(self, msg: dict) -> dict:
        """Validate an answer, enqueue its decision, and report the result."""
        qid = msg.get("id")
        runner = self.runner
        if qid in self._answered or qid not in self._presented:
            return {"type": "error", "code": "stale-query",
                    "detail": f"query {qid!r} is not open"}
        if runner.open_query is None or runner.open_query.id != qid:
            return {"type": "error", "code": "stale-query",
                    "detail": f"query {qid!r} is not open"}
        presented_at = self._presented[qid]
        answered_at = float(msg.get("answered_at", presented_at))
        human_wall = max(0.0, answered_at - presented_at)
        human_sim = human_wall * self.config.pace
        network = self.config.network_delay
        template = runner.config.template()
        try:
            answer = OperatorAnswer(query_id=qid, option=msg.get("option"),
                                    answered_at=answered_at)
            action = parse_answer(answer, runner.open_query, template)
        except ValueError as exc:
            return {"type": "error", "code": "bad-answer", "detail": str(exc)}
        check = validate_feasibility(action, runner.ego_state(), runner.scene.trajectory)
        if not check.accepted:
            action = DecisionAction(kind=BRAKE, deceleration=runner.config.brake_decel)
        latency = human_sim + network
        # a decision cannot act in the past: when the loop outruns the
        # theoretical apply time, it lands on the next step instead
        min_latency = (runner.k + 1) * runner.dt - presented_at
        latency = max(latency, min_latency)
        apply_at = runner.submit_decision(action, presented_at, latency, qid)
        runner.pending_live_query = None
        self._answered.add(qid)
        self.latencies.append(LatencyRecord(qid, human_sim, network, apply_at))
        return {"type": "applied", "id": qid, "apply_at": round(apply_at, 4),
                "human": round(human_sim, 6), "network": network}

    def end_message(self, result: TrialResult) -> dict:
        digest = hashlib.sha256(result.ego_poses.tobytes()).hexdigest()
        return {
            "type": "end",
            "result": {
                "collided": result.collided,
                "collision_time": result.collision_time,
                "end_reason": result.end_reason,
                "end_time": round(result.end_time, 4),
                "min_clearance": round(result.min_clearance, 6),
                "trajectory_sha256": digest,
                "steps": int(len(result.times)),
            },
        }

# ---------------------------------------------------------------------------
# async server
# ---------------------------------------------------------------------------

class GatewayServer:
    """One live session served over TCP to a single console.

    Two logical activities: the paced simulation task and the connection
    handler.  They communicate only through the outbound queues (control
    messages are never dropped, frames are) and the answer handoff on the
    session object.
    """

    def __init__(self, config: SessionConfig):
        self.config = config
        self.session = Session(config)
        self.control_q: asyncio.Queue = asyncio.Queue()
        self.frame_buf: list[dict] = []
        self.frame_drop_count = 0
        self.connected = asyncio.Event()
        self.finished = asyncio.Event()
        self.result: TrialResult | None = None
        self._writer: asyncio.StreamWriter | None = None
        self._wall0: float | None = None
        self._sim_task: asyncio.Task | None = None
        self._server: asyncio.base_events.Server | None = None

    # -- outbound -----------------------------------------------------------

    def send_control(self, msg: dict) -> None:
        self.session.log_msg("out", msg)
        self.control_q.put_nowait(msg)

    def push_frame(self, msg: dict) -> None:
        # frames are droppable: keep at most two pending
        if len(self.frame_buf) >= 2:
            self.frame_buf.pop(0)
            self.frame_drop_count += 1
        self.frame_buf.append(msg)

    async def _writer_loop(self, writer: asyncio.StreamWriter) -> None:
        try:
            while not (self.finished.is_set() and self.control_q.empty()
                       and not self.frame_buf):
                msg = None
                try:
                    msg = self.control_q.get_nowait()
                except asyncio.QueueEmpty:
                    if self.frame_buf:
                        msg = self.frame_buf.pop(0)
                if msg is None:
                    await asyncio.sleep(0.002)
                    continue
                writer.write(encode_message(msg))
                await writer.drain()
        except (ConnectionResetError, BrokenPipeError, asyncio.CancelledError):
            pass

    # -- simulation ----------------------------------------------------------

    async def _sim_loop(self) -> None:
        session = self.session
        runner = session.runner
        pace = self.config.pace
        frame_every = max(1, int(round(self.config.frame_interval / runner.dt)))
        self._wall0 = _time.monotonic()
        paused_wall = 0.0
        next_frame_k = 0
        while not runner.done():
            # fail-safe hold: a query needs a console before the sim moves on
            if runner.pending_live_query is not None and not self.connected.is_set():
                hold0 = _time.monotonic()
                await self.connected.wait()
                paused_wall += _time.monotonic() - hold0
            if runner.pending_live_query is not None and self.connected.is_set():
                # grid construction is presentation work: the pacing clock
                # holds so the scene the console sees is the scene at
                # presented_at
                hold0 = _time.monotonic()
                msg = session.query_message()
                paused_wall += _time.monotonic() - hold0
                if msg is not None:
                    self.send_control(msg)
            target = (_time.monotonic() - self._wall0 - paused_wall) * pace
            # when stepping falls behind the wall clock, re-anchor instead of
            # sprinting through the decision window
            max_ahead = 0.05
            if target - runner.time > max_ahead:
                paused_wall += (target - runner.time - max_ahead) / pace
                target = runner.time + max_ahead
            stepped = False
            burst = 0
            while runner.time <= target and not runner.done():
                runner.step()
                stepped = True
                burst += 1
                if runner.k >= next_frame_k:
                    if self.connected.is_set():
                        frame = session.frame_message()
                        session.log_msg("frame", {"index": frame["index"],
                                                  "time": frame["time"]})
                        self.push_frame(frame)
                    next_frame_k = runner.k + frame_every
                if runner.pending_live_query is not None or burst >= 10:
                    break
            if not stepped:
                await asyncio.sleep(0.002)
            else:
                await asyncio.sleep(0)
        self.result = runner.collect_result()
        end = session.end_message(self.result)
        self.send_control(end)
        self.finished.set()
        if self.config.log_path:
            with open(self.config.log_path, "w") as fh:
                fh.write(session.dump_log())

    # -- connection ----------------------------------------------------------

    async def _handle_client(self, reader: asyncio.StreamReader,
                             writer: asyncio.StreamWriter) -> None:
        if self.connected.is_set():
            writer.write(encode_message({"type": "error", "code": "busy",
                                         "detail": "session already has a console"}))
            await writer.drain()
            writer.close()
            return
        self._writer = writer
        # bounded buffering end to end: prefer dropping stale frames over
        # queueing seconds of them between the loop and the wire
        writer.transport.set_write_buffer_limits(high=8192)
        sock = writer.get_extra_info("socket")
        if sock is not None:
            import socket as _socket

            sock.setsockopt(_socket.SOL_SOCKET, _socket.SO_SNDBUF, 4096)
        hello = self.session.hello_message()
        self.session.log_msg("out", hello)
        writer.write(encode_message(hello))
        await writer.drain()
        # re-arm an open query for a (re)connecting console
        if self.session.runner.open_query is not None:
            q = self.session.runner.open_query
            self.session._presented.pop(q.id, None)
            self.session.runner.pending_live_query = q
        self.connected.set()
        writer_task = asyncio.create_task(self._writer_loop(writer))
        try:
            while not self.finished.is_set():
                try:
                    msg = await asyncio.wait_for(read_message(reader), timeout=0.05)
                except asyncio.TimeoutError:
                    continue
                except (asyncio.IncompleteReadError, ConnectionResetError):
                    break
                self.session.log_msg("in", msg)
                if msg.get("type") == "answer":
                    reply = self.session.handle_answer(msg)
                    self.send_control(reply)
                elif msg.get("type") == "hello":
                    pass
                else:
                    self.send_control({"type": "error", "code": "bad-type",
                                       "detail": str(msg.get("type"))})
            # flush the tail (end message) before closing
            await asyncio.wait_for(writer_task, timeout=5.0)
        except asyncio.TimeoutError:
            pass
        finally:
            self.connected.clear()
            writer_task.cancel()
            try:
                await writer.drain()
                writer.close()
            except Exception:
                pass

    async def start(self, host: str = "127.0.0.1", port: int = 0) -> tuple[str, int]:
        self._server = await asyncio.start_server(self._handle_client, host, port)
        self._sim_task = asyncio.create_task(self._sim_loop())
        addr = self._server.sockets[0].getsockname()
        return addr[0], addr[1]

    async def wait_finished(self) -> TrialResult:
        await self.finished.wait()
        await asyncio.sleep(0.05)
        return self.result

    async def close(self) -> None:
        if self._sim_task:
            self._sim_task.cancel()
        if self._server:
            self._server.close()
            await self._server.wait_closed()


def serve(config: SessionConfig, host: str = "127.0.0.1", port: int = 7707) -> None:
    """Run one live session to completion (blocking entry point)."""

    async def main():
        server = GatewayServer(config)
        bound_host, bound_port = await server.start(host, port)
        print(f"session gateway listening on {bound_host}:{bound_port}")
        result = await server.wait_finished()
        await server.close()
        print(f"session ended: {result.end_reason} at t={result.end_time:.2f} "
              f"collided={result.collided}")

    asyncio.run(main())


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------

def replay_session(log_text: str) -> TrialResult:
    """Re-run a logged session and return the reconstructed trial result.

    The log's meta line pins (config, seed); each applied message pins the
    exact decision schedule, so the rebuilt trajectory is bit-identical to
    the live one.
    """
    lines = [json.loads(line) for line in log_text.strip().splitlines()]
    meta = lines[0]
    if meta.get("dir") != "meta":
        raise ValueError("log does not start with a meta line")
    config = ScenarioConfig.from_json(json.dumps(meta["msg"]["config"]))
    seed = meta["msg"]["seed"]

    presented: dict[str, float] = {}
    answers: dict[str, dict] = {}
    applied: dict[str, dict] = {}
    for entry in lines[1:]:
        msg = entry.get("msg", {})
        if entry.get("dir") == "out" and msg.get("type") == "query":
            presented[msg["id"]] = msg["presented_at"]
        elif entry.get("dir") == "in" and msg.get("type") == "answer":
            answers[msg["id"]] = msg
        elif entry.get("dir") == "out" and msg.get("type") == "applied":
            applied[msg["id"]] = msg

    runner = TrialRunner(config, seed)
    template = config.template()
    while not runner.done():
        if runner.pending_live_query is not None:
            q = runner.pending_live_query
            if q.id in applied:
                ans = answers[q.id]
                answer = OperatorAnswer(query_id=q.id, option=ans.get("option"),
                                        answered_at=float(ans.get("answered_at", 0.0)))
                action = parse_answer(answer, q, template)
                check = validate_feasibility(action, runner.ego_state(),
                                             runner.scene.trajectory)
                if not check.accepted:
                    action = DecisionAction(kind=BRAKE,
                                            deceleration=config.brake_decel)
                t0 = presented[q.id]
                latency = applied[q.id]["apply_at"] - t0
                runner.submit_decision(action, t0, latency, q.id)
                runner.pending_live_query = None
            else:
                # unanswered query at session end: nothing more will apply
                runner.pending_live_query = None
        runner.step()
    return runner.collect_result()

# ---------------------------------------------------------------------------
# HTTP + WebSocket bridge for the browser console
# ---------------------------------------------------------------------------

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


def _ws_accept_key(key: str) -> str:
    import hashlib as _hashlib

    digest = _hashlib.sha1((key + _WS_GUID).encode()).digest()
    return base64.b64encode(digest).decode()


def ws_encode_text(payload: str) -> bytes:
    """One unmasked server->client text frame."""
    data = payload.encode()
    n = len(data)
    if n < 126:
        header = bytes([0x81, n])
    elif n < 65536:
        header = bytes([0x81, 126]) + n.to_bytes(2, "big")
    else:
        header = bytes([0x81, 127]) + n.to_bytes(8, "big")
    return header + data


async def ws_read_text(reader: asyncio.StreamReader) -> str | None:
    """Read one client frame; None on close.  Clients mask their frames."""
    while True:
        head = await reader.readexactly(2)
        opcode = head[0] & 0x0F
        masked = bool(head[1] & 0x80)
        length = head[1] & 0x7F
        if length == 126:
            length = int.from_bytes(await reader.readexactly(2), "big")
        elif length == 127:
            length = int.from_bytes(await reader.readexactly(8), "big")
        mask = await reader.readexactly(4) if masked else b"\x00" * 4
        data = bytearray(await reader.readexactly(length))
        if masked:
            for i in range(len(data)):
                data[i] ^= mask[i % 4]
        if opcode == 0x8:  # close
            return None
        if opcode == 0x9:  # ping: callers treat as no-op
            continue
        if opcode in (0x1, 0x2):
            return data.decode()


class HttpBridge:
    """Serves the console bundle and bridges /ws onto a live session.

    The WebSocket carries the same JSON messages as the TCP transport, one
    message per frame (the length prefix is the only thing WS replaces)."""

    def __init__(self, gateway: GatewayServer, static_root: str):
        self.gateway = gateway
        self.static_root = static_root
        self._server: asyncio.base_events.Server | None = None

    async def start(self, host: str, port: int) -> tuple[str, int]:
        self._server = await asyncio.start_server(self._handle, host, port)
        addr = self._server.sockets[0].getsockname()
        return addr[0], addr[1]

    async def close(self) -> None:
        if self._server:
            self._server.close()
            await self._server.wait_closed()

    async def _handle(self, reader: asyncio.StreamReader,
                      writer: asyncio.StreamWriter) -> None:
        try:
            request = await asyncio.wait_for(reader.readuntil(b"\r\n\r\n"), timeout=10.0)
        except (asyncio.TimeoutError, asyncio.IncompleteReadError):
            writer.close()
            return
        head = request.decode("latin-1")
        line = head.splitlines()[0]
        parts = line.split()
        if len(parts) < 2:
            writer.close()
            return
        method, path = parts[0], parts[1]
        headers = {}
        for row in head.splitlines()[1:]:
            if ":" in row:
                k, v = row.split(":", 1)
                headers[k.strip().lower()] = v.strip()

        if path == "/ws" and headers.get("upgrade", "").lower() == "websocket":
            await self._handle_ws(reader, writer, headers)
            return
        if method != "GET":
            writer.write(b"HTTP/1.1 405 Method Not Allowed\r\n\r\n")
            await writer.drain()
            writer.close()
            return
        await self._serve_static(path, writer)

    async def _serve_static(self, path: str, writer: asyncio.StreamWriter) -> None:
        from pathlib import Path

        root = Path(self.static_root).resolve()
        rel = "index.html" if path in ("/", "") else path.lstrip("/")
        target = (root / rel).resolve()
        if not str(target).startswith(str(root)) or not target.is_file():
            writer.write(b"HTTP/1.1 404 Not Found\r\n\r\nnot found")
        else:
            body = target.read_bytes()
            ctype = {
                ".html": "text/html", ".js": "text/javascript",
                ".css": "text/css", ".json": "application/json",
            }.get(target.suffix, "application/octet-stream")
            writer.write(
                f"HTTP/1.1 200 OK\r\nContent-Type: {ctype}\r\n"
                f"Content-Length: {len(body)}\r\nConnection: close\r\n\r\n".encode()
                + body
            )
        await writer.drain()
        writer.close()

    async def _handle_ws(self, reader: asyncio.StreamReader,
                         writer: asyncio.StreamWriter, headers: dict) -> None:
        key = headers.get("sec-websocket-key", "")
        accept = _ws_accept_key(key)
        writer.write(
            (
                "HTTP/1.1 101 Switching Protocols\r\n"
                "Upgrade: websocket\r\nConnection: Upgrade\r\n"
                f"Sec-WebSocket-Accept: {accept}\r\n\r\n"
            ).encode()
        )
        await writer.drain()
        gw = self.gateway
        if gw.connected.is_set():
            writer.write(ws_encode_text(json.dumps(
                {"type": "error", "code": "busy",
                 "detail": "session already has a console"})))
            await writer.drain()
            writer.close()
            return

        hello = gw.session.hello_message()
        gw.session.log_msg("out", hello)
        writer.write(ws_encode_text(json.dumps(hello, sort_keys=True)))
        await writer.drain()
        if gw.session.runner.open_query is not None:
            q = gw.session.runner.open_query
            gw.session._presented.pop(q.id, None)
            gw.session.runner.pending_live_query = q
        gw.connected.set()

        async def ws_writer_loop():
            try:
                while not (gw.finished.is_set() and gw.control_q.empty()
                           and not gw.frame_buf):
                    msg = None
                    try:
                        msg = gw.control_q.get_nowait()
                    except asyncio.QueueEmpty:
                        if gw.frame_buf:
                            msg = gw.frame_buf.pop(0)
                    if msg is None:
                        await asyncio.sleep(0.002)
                        continue
                    writer.write(ws_encode_text(json.dumps(msg, sort_keys=True)))
                    await writer.drain()
            except (ConnectionResetError, BrokenPipeError, asyncio.CancelledError):
                pass

        task = asyncio.create_task(ws_writer_loop())
        try:
            while not gw.finished.is_set():
                try:
                    text = await asyncio.wait_for(ws_read_text(reader), timeout=0.05)
                except asyncio.TimeoutError:
                    continue
                except (asyncio.IncompleteReadError, ConnectionResetError):
                    break
                if text is None:
                    break
                msg = json.loads(text)
                gw.session.log_msg("in", msg)
                if msg.get("type") == "answer":
                    gw.send_control(gw.session.handle_answer(msg))
            await asyncio.wait_for(task, timeout=5.0)
        except asyncio.TimeoutError:
            pass
        finally:
            gw.connected.clear()
            task.cancel()
            try:
                writer.close()
            except Exception:
                pass


def serve_with_console(config: SessionConfig, host: str = "127.0.0.1",
                       port: int = 7707, http_port: int | None = None,
                       static_root: str | None = None) -> None:
    """Run one live session over TCP, optionally bridging a browser console
    over HTTP/WebSocket from the same process."""

    async def main():
        server = GatewayServer(config)
        bound_host, bound_port = await server.start(host, port)
        print(f"session gateway listening on {bound_host}:{bound_port}")
        bridge = None
        if http_port is not None:
            root = static_root or "frontend"
            bridge = HttpBridge(server, root)
            bh, bp = await bridge.start(host, http_port)
            print(f"console bridge on http://{bh}:{bp}/ (ws at /ws)")
        result = await server.wait_finished()
        if bridge:
            await bridge.close()
        await server.close()
        print(f"session ended: {result.end_reason} at t={result.end_time:.2f} "
              f"collided={result.collided}")

    asyncio.run(main())
