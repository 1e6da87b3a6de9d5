from .client import GatewayClient, GatewayError
from .protocol import (
    MAX_FRAME,
    MESSAGE_TYPES,
    PROTOCOL_VERSION,
    ProtocolError,
    decode_message,
    decode_pixels,
    encode_frame,
    encode_pixels,
    message,
    puzzle_config_from_wire,
)
from .server import Gateway, IDLE_TIMEOUT, Session, serve

__all__ = [
    "Gateway",
    "GatewayClient",
    "GatewayError",
    "IDLE_TIMEOUT",
    "MAX_FRAME",
    "MESSAGE_TYPES",
    "PROTOCOL_VERSION",
    "ProtocolError",
    "Session",
    "decode_message",
    "decode_pixels",
    "encode_frame",
    "encode_pixels",
    "message",
    "puzzle_config_from_wire",
    "serve",
]
