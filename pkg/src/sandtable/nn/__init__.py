from .adam import Adam
from .checkpoint import (
    Checkpoint,
    dump_checkpoint_bytes,
    load_checkpoint,
    parse_checkpoint_bytes,
    save_checkpoint,
)
from .layers import Conv2d, Dense, Encoder, EncoderSpec, orthogonal
from .tensor import Tensor

__all__ = [
    "Adam",
    "Checkpoint",
    "Conv2d",
    "Dense",
    "Encoder",
    "EncoderSpec",
    "Tensor",
    "dump_checkpoint_bytes",
    "load_checkpoint",
    "orthogonal",
    "parse_checkpoint_bytes",
    "save_checkpoint",
]
