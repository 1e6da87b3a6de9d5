"""Wire format: 4-byte big-endian length prefix, then a UTF-8 JSON object
encoded canonically (sorted keys, compact separators). Canonical encoding is
what keeps recorded reply streams byte-stable across runs and languages.

Every message is {"type", "seq", "session", "payload"}; requests and replies
share the envelope, and a reply always echoes the request's seq.
"""

from __future__ import annotations

import base64
import json
import struct
from typing import Optional

import numpy as np

from ..worldgen import Mode, PuzzleConfig, Task

PROTOCOL_VERSION = "1"

#: Hard ceiling on frame payloads; a declared length beyond this is treated
#: as a corrupted stream, not a request.
MAX_FRAME = 16 * 1024 * 1024

MESSAGE_TYPES = frozenset({
    "hello", "configure", "add_change_puzzle", "reset", "step",
    "state_snapshot", "observation", "result", "error", "bye",
})

#: Request names the server accepts (the rest are reply-only).
REQUEST_TYPES = frozenset({
    "hello", "configure", "add_change_puzzle", "reset", "step",
    "state_snapshot", "observation", "bye",
})


class ProtocolError(ValueError):
    """A frame or message that violates the wire contract."""


def canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True,
                      separators=(",", ":")).encode("utf-8")


def message(type: str, seq: int, payload: Optional[dict] = None,
            session: Optional[str] = None) -> dict:
    return {"type": type, "seq": seq, "session": session,
            "payload": payload or {}}


def encode_frame(msg: dict) -> bytes:
    body = canonical_json(msg)
    if len(body) > MAX_FRAME:
        raise ProtocolError("frame too large: %d bytes" % len(body))
    return struct.pack(">I", len(body)) + body


def decode_message(body: bytes) -> dict:
    try:
        msg = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ProtocolError("malformed frame: %s" % e)
    if not isinstance(msg, dict):
        raise ProtocolError("malformed frame: payload is not an object")
    t = msg.get("type")
    if t not in MESSAGE_TYPES:
        raise ProtocolError("unknown message type: %r" % (t,))
    if not isinstance(msg.get("seq"), int):
        raise ProtocolError("missing sequence number")
    if not isinstance(msg.get("payload", {}), dict):
        raise ProtocolError("payload must be an object")
    msg.setdefault("payload", {})
    msg.setdefault("session", None)
    return msg


def recv_exact(sock, n: int) -> Optional[bytes]:
    """Read exactly n bytes; None on clean EOF at a frame boundary."""
    chunks = []
    got = 0
    while got < n:
        chunk = sock.recv(n - got)
        if not chunk:
            if got == 0:
                return None
            raise ProtocolError("truncated frame: %d of %d bytes" % (got, n))
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


def read_frame_bytes(sock) -> Optional[bytes]:
    header = recv_exact(sock, 4)
    if header is None:
        return None
    (size,) = struct.unpack(">I", header)
    if size > MAX_FRAME:
        raise ProtocolError("frame too large: %d bytes" % size)
    if size == 0:
        return b""
    return recv_exact(sock, size)


def encode_pixels(arr: np.ndarray) -> dict:
    return {
        "b64": base64.b64encode(np.ascontiguousarray(arr).tobytes()).decode(),
        "shape": list(arr.shape),
        "dtype": str(arr.dtype),
    }


def decode_pixels(payload: dict) -> np.ndarray:
    raw = base64.b64decode(payload["b64"])
    return np.frombuffer(raw, dtype=payload["dtype"]).reshape(payload["shape"])


# Appendix-style puzzle_config keys accepted on the wire, mapped onto the
# internal entity-kind vocabulary.
WIRE_COUNT_ALIASES = {
    "main_sphere": "agent",
    "touch_sphere": "goal_sphere_low",
    "high_value_target": "goal_sphere_high",
    "cube": "cube_light",
    "heavy_cube": "cube_heavy",
}
_NATIVE_KEYS = ("agent", "goal_sphere_low", "goal_sphere_high", "cube_heavy",
                "cube_light", "ramp", "danger_region")


def _wire_kind(key: str) -> str:
    if key in WIRE_COUNT_ALIASES:
        return WIRE_COUNT_ALIASES[key]
    if key in _NATIVE_KEYS:
        return key
    raise ProtocolError("unknown puzzle_config key: %r" % key)


def puzzle_config_from_wire(d: dict, mode: Mode, task: Task) -> PuzzleConfig:
    """Translate a wire puzzle_config (appendix aliases allowed, placement
    via "<kind>_i_j" keys) into a validated PuzzleConfig."""
    if not isinstance(d, dict):
        raise ProtocolError("puzzle_config must be an object")
    counts = {}
    placement = {}
    seed = 0
    half_extent = None
    for key, value in d.items():
        if key == "seed":
            seed = int(value)
        elif key == "table_half_extent":
            half_extent = float(value)
        elif key.endswith("_i_j"):
            kind = _wire_kind(key[: -len("_i_j")])
            cells = [[int(i), int(j)] for i, j in value]
            placement[kind] = cells
        else:
            counts[_wire_kind(key)] = int(value)
    kw = {} if half_extent is None else {"table_half_extent": half_extent}
    cfg = PuzzleConfig(mode=mode, task=task, counts=counts,
                       placement=placement or None, seed=seed, **kw)
    try:
        cfg.validate()
    except ValueError as e:
        raise ProtocolError(str(e))
    return cfg
