"""Socket server exposing one environment per session over the framed-JSON
protocol. Dispatch is a pure function of (session, message), so the tests and
the golden-transcript fixture can drive it with or without sockets.
"""

from __future__ import annotations

import socket
import threading
import time
from typing import Optional

from ..constants import FRAME_SKIP
from ..env import Env, EnvConfig
from ..evaluate import ASuccessReport, SuiteAccumulator, a_success
from ..raster import BACKGROUND, PALETTE
from ..sim import BodyKind
from ..worldgen import Mode, PuzzleConfig, Task, make_puzzles, make_test_suite
from .protocol import (
    PROTOCOL_VERSION,
    ProtocolError,
    REQUEST_TYPES,
    encode_frame,
    encode_pixels,
    message,
    puzzle_config_from_wire,
    read_frame_bytes,
    decode_message,
)

IDLE_TIMEOUT = 600.0  # seconds without a frame before the session expires

_TASK_BY_INDEX = {int(t): t for t in Task}


class Session:
    """One client's state: an owned environment plus protocol bookkeeping."""

    def __init__(self, sid: str):
        self.id = sid
        self.last_seq = -1
        self.greeted = False
        self.env: Optional[Env] = None
        self.puzzle: Optional[PuzzleConfig] = None
        self.started = False
        self.send_pixels = True
        self.frame_skip = FRAME_SKIP
        self.reward_on = True
        # suite mode: fixed puzzle list scored by the shared accumulator
        self.suite = None
        self.suite_index = 0
        self.suite_agent = "human"
        self.acc: Optional[SuiteAccumulator] = None
        self.episode = None
        self.last_active = time.monotonic()


class Gateway:
    """Accepts connections and speaks the protocol; one thread per client.

    Session ids are a plain counter, so a fresh server given an identical
    request stream produces byte-identical replies.
    """

    def __init__(self, host: str = "127.0.0.1", port: int = 0,
                 idle_timeout: float = IDLE_TIMEOUT):
        self.idle_timeout = idle_timeout
        self._lock = threading.Lock()
        self._counter = 0
        self.sessions = {}
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host, port))
        self._sock.listen(16)
        self.address = self._sock.getsockname()
        self._threads = []
        self._running = False

    # -- session plumbing ----------------------------------------------------

    def open_session(self) -> Session:
        with self._lock:
            self._counter += 1
            s = Session("s%04d" % self._counter)
            self.sessions[s.id] = s
        return s

    def close_session(self, session: Session) -> None:
        with self._lock:
            self.sessions.pop(session.id, None)

    # -- serving ---------------------------------------------------------------

    def serve_forever(self) -> None:
        self._running = True
        while self._running:
            try:
                conn, _ = self._sock.accept()
            except OSError:
                break
            t = threading.Thread(target=self._serve_client, args=(conn,),
                                 daemon=True)
            t.start()
            self._threads.append(t)

    def start(self) -> threading.Thread:
        t = threading.Thread(target=self.serve_forever, daemon=True)
        t.start()
        # wait for the accept loop to come up
        while not self._running:
            time.sleep(0.001)
        return t

    def shutdown(self) -> None:
        self._running = False
        try:
            self._sock.close()
        except OSError:
            pass

    def _serve_client(self, conn: socket.socket) -> None:
        session = self.open_session()
        conn.settimeout(self.idle_timeout)
        try:
            while True:
                try:
                    body = read_frame_bytes(conn)
                except socket.timeout:
                    conn.sendall(encode_frame(message(
                        "bye", seq=session.last_seq + 1, session=session.id,
                        payload={"reason": "idle timeout"})))
                    return
                except ProtocolError as e:
                    # cannot resync a corrupted stream; close loudly
                    try:
                        conn.sendall(encode_frame(message(
                            "bye", seq=session.last_seq + 1,
                            session=session.id, payload={"reason": str(e)})))
                    except OSError:
                        pass
                    return
                if body is None:
                    return
                reply = self.handle_bytes(session, body)
                conn.sendall(encode_frame(reply))
                if reply["type"] == "bye":
                    return
        except OSError:
            pass
        finally:
            self.close_session(session)
            try:
                conn.close()
            except OSError:
                pass

    # -- dispatch ---------------------------------------------------------------

    def handle_bytes(self, session: Session, body: bytes) -> dict:
        """Decode one frame and dispatch; malformed frames get an error reply
        and the session survives."""
        try:
            msg = decode_message(body)
        except ProtocolError as e:
            return message("error", seq=session.last_seq + 1,
                           session=session.id, payload={"message": str(e)})
        return self.handle(session, msg)

    def handle(self, session: Session, msg: dict) -> dict:
        session.last_active = time.monotonic()
        seq = msg["seq"]
        mtype = msg["type"]

        def error(text: str) -> dict:
            return message("error", seq=seq, session=session.id,
                           payload={"message": text})

        if mtype not in REQUEST_TYPES:
            return error("unexpected message type: %r" % mtype)
        if seq <= session.last_seq:
            return error("sequence number must increase: %d after %d"
                         % (seq, session.last_seq))
        session.last_seq = seq
        if mtype != "hello" and not session.greeted:
            return error("hello first")

        try:
            handler = getattr(self, "_on_" + mtype)
            return handler(session, seq, msg["payload"])
        except ProtocolError as e:
            return error(str(e))
        except (ValueError, RuntimeError, KeyError, TypeError) as e:
            return error(str(e))

    # -- handlers -----------------------------------------------------------

    def _on_hello(self, session, seq, payload) -> dict:
        version = payload.get("version", PROTOCOL_VERSION)
        if version != PROTOCOL_VERSION:
            return message("error", seq=seq, session=session.id, payload={
                "message": "unsupported protocol version: %r" % (version,)})
        session.greeted = True
        return message("hello", seq=seq, session=session.id,
                       payload={"version": PROTOCOL_VERSION,
                                "session": session.id})

    def _on_configure(self, session, seq, payload) -> dict:
        applied = {}
        if "action_space" in payload:
            if payload["action_space"] != "full":
                raise ProtocolError("unsupported action space: %r"
                                    % (payload["action_space"],))
            applied["action_space"] = "full"
        if "skip_frame" in payload:
            session.frame_skip = FRAME_SKIP if payload["skip_frame"] else 1
            applied["skip_frame"] = bool(payload["skip_frame"])
            if session.env is not None:
                session.env.config.frame_skip = session.frame_skip
        if "turn_off_reward" in payload:
            session.reward_on = not payload["turn_off_reward"]
            applied["turn_off_reward"] = bool(payload["turn_off_reward"])
            if session.env is not None:
                session.env.config.extrinsic_reward_enabled = session.reward_on
        if "observation" in payload:
            session.send_pixels = bool(payload["observation"])
            applied["observation"] = session.send_pixels
        if "suite" in payload:
            applied["suite"] = self._enter_suite(session, payload["suite"])
        return message("result", seq=seq, session=session.id,
                       payload={"ok": True, "applied": applied})

    def _enter_suite(self, session, spec) -> dict:
        if not isinstance(spec, dict):
            raise ProtocolError("suite must be an object")
        task = _coerce_task(spec.get("task"))
        if task is None or task == Task.NONE:
            raise ProtocolError("suite needs a task")
        seed = int(spec.get("seed", 0))
        session.suite = make_test_suite(task, seed)
        session.suite_index = 0
        session.suite_agent = str(spec.get("agent", "human"))
        session.acc = SuiteAccumulator(task)
        session.episode = None
        session.puzzle = session.suite.puzzles[0]
        session.env = self._make_env(session, task)
        session.started = False
        return {"task": task.name.lower(), "seed": seed,
                "puzzles": len(session.suite.puzzles),
                "budget": session.acc.n}

    def _make_env(self, session, task: Task) -> Env:
        if task == Task.NONE:
            cfg = EnvConfig.for_sandbox(frame_skip=session.frame_skip)
        else:
            cfg = EnvConfig.for_task(task, frame_skip=session.frame_skip)
        cfg.extrinsic_reward_enabled = session.reward_on
        return Env(cfg)

    def _on_add_change_puzzle(self, session, seq, payload) -> dict:
        mode = payload.get("mode")
        if mode not in (0, 1):
            raise ProtocolError("mode must be 0 (sandbox) or 1 (task)")
        if mode == 0:
            if payload.get("task", 0) != 0:
                raise ProtocolError("sandbox mode has no task")
            cfg = puzzle_config_from_wire(payload.get("puzzle_config"),
                                          Mode.SANDBOX, Task.NONE)
            task = Task.NONE
        else:
            task = _coerce_task(payload.get("task"))
            if task is None or task == Task.NONE:
                raise ProtocolError("task must be 1-4")
            seed = int(payload.get("seed", 0))
            if payload.get("puzzle_config") is not None:
                cfg = puzzle_config_from_wire(payload["puzzle_config"],
                                              Mode.TASK, task)
            else:
                cfg = make_puzzles(task, seed, 1)[0]
        # leaving suite mode, if any
        session.suite = None
        session.acc = None
        session.episode = None
        session.puzzle = cfg
        session.env = self._make_env(session, task)
        session.started = False
        return message("result", seq=seq, session=session.id, payload={
            "ok": True, "mode": mode, "task": task.name.lower(),
            "seed": cfg.seed})

    def _observation_payload(self, session) -> dict:
        env = session.env
        payload = {
            "tick": int(env.world.tick),
            "aux": [float(v) for v in env.aux_state()],
        }
        if session.send_pixels:
            payload["pixels"] = encode_pixels(env.observe())
        return payload

    def _on_reset(self, session, seq, payload) -> dict:
        if session.env is None:
            raise ProtocolError("no puzzle configured")
        if session.suite is not None:
            session.puzzle = session.suite.puzzles[session.suite_index]
            session.episode = session.acc.episode()
        session.env.reset(puzzle=session.puzzle)
        session.started = True
        out = self._observation_payload(session)
        if session.suite is not None:
            out["puzzle_index"] = session.suite_index
        return message("observation", seq=seq, session=session.id,
                       payload=out)

    def _on_step(self, session, seq, payload) -> dict:
        if session.env is None or not session.started:
            raise ProtocolError("episode not started")
        if "action" not in payload:
            raise ProtocolError("step needs an action")
        result = session.env.step(int(payload["action"]))
        info = dict(result.info)
        info["collisions"] = [
            {"substep": int(e.substep), "a": int(e.a), "b": int(e.b),
             "impulse": float(e.impulse)}
            for e in info["collisions"]]
        out = {"reward": float(result.reward), "done": bool(result.done),
               "info": info}
        if session.send_pixels:
            out["pixels"] = encode_pixels(result.observation)
        if result.done:
            session.started = False
        if session.suite is not None and session.episode is not None:
            session.episode.record(result)
            if result.done:
                session.acc.add(session.episode)
                session.episode = None
                session.suite_index += 1
                if session.suite_index >= len(session.suite.puzzles):
                    out["report"] = self._suite_report(session)
                    session.suite = None
                    session.acc = None
                else:
                    out["next_puzzle"] = session.suite_index
        return message("result", seq=seq, session=session.id, payload=out)

    def _suite_report(self, session) -> dict:
        s = session.acc.s_vector()
        report = ASuccessReport(
            task=session.acc.task, n=session.acc.n, s=s, score=a_success(s),
            suite_seed=session.suite.suite_seed, agent=session.suite_agent)
        return report.to_dict()

    def _on_state_snapshot(self, session, seq, payload) -> dict:
        if session.env is None or session.env.world is None:
            raise ProtocolError("no world to snapshot")
        w = session.env.world
        bodies = []
        for i in range(len(w.kind)):
            kind = BodyKind(int(w.kind[i]))
            bodies.append({
                "id": i,
                "kind": kind.name.lower(),
                "shape": "box" if int(w.shape[i]) else "circle",
                "x": float(w.px[i]), "y": float(w.py[i]),
                "vx": float(w.vx[i]), "vy": float(w.vy[i]),
                "radius": float(w.radius[i]),
                "half_x": float(w.hx[i]), "half_y": float(w.hy[i]),
                "elevation": float(w.elev[i]),
            })
        palette = {k.name.lower(): list(v) for k, v in PALETTE.items()}
        return message("state_snapshot", seq=seq, session=session.id, payload={
            "tick": int(w.tick),
            "table_half_extent": float(w.table_half_extent),
            "bodies": bodies,
            "palette": palette,
            "background": list(BACKGROUND),
            "agent_index": int(w.agent_idx),
        })

    def _on_observation(self, session, seq, payload) -> dict:
        if session.env is None or session.env.world is None:
            raise ProtocolError("no world to observe")
        out = self._observation_payload(session)
        if not session.send_pixels:
            out["pixels"] = encode_pixels(session.env.observe())
        return message("observation", seq=seq, session=session.id,
                       payload=out)

    def _on_bye(self, session, seq, payload) -> dict:
        return message("bye", seq=seq, session=session.id,
                       payload={"reason": "goodbye"})


def _coerce_task(value) -> Optional[Task]:
    if isinstance(value, str):
        try:
            return Task[value.upper()]
        except KeyError:
            raise ProtocolError("unknown task: %r" % value)
    if isinstance(value, int) and value in _TASK_BY_INDEX:
        return _TASK_BY_INDEX[value]
    return None


def serve(host: str = "127.0.0.1", port: int = 7443,
          idle_timeout: float = IDLE_TIMEOUT) -> None:
    """Blocking entry point used by the command line."""
    gw = Gateway(host, port, idle_timeout)
    print("listening on %s:%d" % gw.address)
    gw.serve_forever()
