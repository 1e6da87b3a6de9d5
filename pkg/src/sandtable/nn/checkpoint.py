"""Versioned binary checkpoint files for encoder (and optimizer) state.

Layout, all little-endian:

    magic  b"STEC"
    u32    format version (currently 1)
    u32    header length in bytes
    bytes  header: canonical JSON (sorted keys, compact separators) holding
           the encoder spec, training step, source run id, and an ordered
           parameter manifest [{name, shape}, ...]
    bytes  one raw <f8 blob per manifest entry, in manifest order
    u32    CRC-32 of every preceding byte (magic included)

Round-trips are bit-exact: parse(dump(x)) == x at the byte level.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

MAGIC = b"STEC"
VERSION = 1


@dataclass
class Checkpoint:
    spec: dict
    step: int
    source: str
    params: "Dict[str, np.ndarray]"
    extra: dict = field(default_factory=dict)

    def param_list(self) -> List[Tuple[str, np.ndarray]]:
        return list(self.params.items())


def _canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def dump_checkpoint_bytes(spec: dict, params: Sequence[Tuple[str, np.ndarray]],
                          step: int = 0, source: str = "",
                          extra: dict = None) -> bytes:
    manifest = [{"name": name, "shape": list(arr.shape)}
                for name, arr in params]
    header = _canonical_json({
        "spec": spec,
        "step": int(step),
        "source": source,
        "params": manifest,
        "extra": extra or {},
    })
    parts = [MAGIC, struct.pack("<II", VERSION, len(header)), header]
    for _, arr in params:
        parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def parse_checkpoint_bytes(data: bytes) -> Checkpoint:
    if len(data) < 16 or data[:4] != MAGIC:
        raise ValueError("not a checkpoint file")
    stored_crc = struct.unpack("<I", data[-4:])[0]
    if zlib.crc32(data[:-4]) & 0xFFFFFFFF != stored_crc:
        raise ValueError("checkpoint corrupted: checksum mismatch")
    version, header_len = struct.unpack("<II", data[4:12])
    if version != VERSION:
        raise ValueError("unsupported checkpoint version %d" % version)
    header = json.loads(data[12:12 + header_len].decode())
    offset = 12 + header_len
    params: Dict[str, np.ndarray] = {}
    for entry in header["params"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        blob = data[offset:offset + 8 * count]
        if len(blob) != 8 * count:
            raise ValueError("checkpoint corrupted: truncated blob for %s"
                             % entry["name"])
        params[entry["name"]] = np.frombuffer(blob, dtype="<f8").reshape(shape).copy()
        offset += 8 * count
    if offset != len(data) - 4:
        raise ValueError("checkpoint corrupted: trailing bytes")
    return Checkpoint(spec=header["spec"], step=header["step"],
                      source=header["source"], params=params,
                      extra=header.get("extra", {}))


def save_checkpoint(path, spec: dict, params: Sequence[Tuple[str, np.ndarray]],
                    step: int = 0, source: str = "", extra: dict = None):
    blob = dump_checkpoint_bytes(spec, params, step=step, source=source,
                                 extra=extra)
    with open(path, "wb") as fh:
        fh.write(blob)


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        return parse_checkpoint_bytes(fh.read())
