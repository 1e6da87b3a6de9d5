"""Blocking reference client for the framed-JSON protocol. Used by the
command line and the tests; doubles as the specification-by-example for
clients in other languages."""

from __future__ import annotations

import socket
from typing import Optional

import numpy as np

from .protocol import (
    PROTOCOL_VERSION,
    ProtocolError,
    decode_message,
    decode_pixels,
    encode_frame,
    message,
    read_frame_bytes,
)


class GatewayError(RuntimeError):
    """The server answered with an error reply."""


class GatewayClient:
    def __init__(self, host: str, port: int, timeout: float = 30.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.seq = -1
        self.session: Optional[str] = None

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- low level ----------------------------------------------------------

    def send_raw(self, frame: bytes) -> dict:
        """Ship pre-encoded bytes and read one reply; for protocol tests."""
        self.sock.sendall(frame)
        return self.read_reply()

    def read_reply(self) -> dict:
        body = read_frame_bytes(self.sock)
        if body is None:
            raise ProtocolError("server closed the connection")
        return decode_message(body)

    def request(self, mtype: str, _check: bool = True, **payload) -> dict:
        self.seq += 1
        msg = message(mtype, seq=self.seq, payload=payload,
                      session=self.session)
        reply = self.send_raw(encode_frame(msg))
        if _check and reply["type"] == "error":
            raise GatewayError(reply["payload"]["message"])
        return reply

    # -- protocol verbs ----------------------------------------------------

    def hello(self, version: str = PROTOCOL_VERSION) -> dict:
        reply = self.request("hello", version=version)
        self.session = reply["payload"]["session"]
        return reply["payload"]

    def configure(self, **settings) -> dict:
        return self.request("configure", **settings)["payload"]

    def add_change_puzzle(self, mode: int, task: int = 0,
                          puzzle_config: Optional[dict] = None,
                          seed: int = 0) -> dict:
        payload = {"mode": mode, "task": task, "seed": seed}
        if puzzle_config is not None:
            payload["puzzle_config"] = puzzle_config
        return self.request("add_change_puzzle", **payload)["payload"]

    def reset(self) -> dict:
        out = self.request("reset")["payload"]
        if "pixels" in out:
            out["pixels"] = decode_pixels(out["pixels"])
        return out

    def step(self, action: int) -> dict:
        out = self.request("step", action=action)["payload"]
        if "pixels" in out:
            out["pixels"] = decode_pixels(out["pixels"])
        return out

    def snapshot(self) -> dict:
        return self.request("state_snapshot")["payload"]

    def observation(self) -> np.ndarray:
        out = self.request("observation")["payload"]
        return decode_pixels(out["pixels"])

    def bye(self) -> dict:
        return self.request("bye")["payload"]
