"""Binary checkpoint serialization.

Layout (all integers little-endian):

    magic  "WVPT"              4 bytes
    u32    format version
    u32    JSON config byte length
    bytes  UTF-8 JSON config block
    u32    tensor count
    per tensor, lexicographic by name:
        u16   name length
        bytes name (UTF-8)
        u8    dtype code (0 = little-endian float32)
        u8    rank
        u32   dims[rank]
        bytes raw data

The JSON block carries the model config, a train-config echo, loss
weights, the epoch counter and scalar optimizer state; model parameter
tensors are stored under ``model/`` names and optimizer state tensors
under ``opt/`` names. Serialization is canonical (sorted keys, sorted
tensor names), so save -> load -> save round-trips bit-exactly.
"""

from __future__ import annotations

import json
import struct
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .losses import LossWeights
from .model import ModelConfig, WavePaint, parameter_store

__all__ = [
    "Checkpoint",
    "save_checkpoint",
    "load_checkpoint",
    "write_tensor_file",
    "read_tensor_file",
    "CheckpointError",
    "CheckpointMagicError",
    "CheckpointVersionError",
    "CheckpointTruncatedError",
    "CheckpointShapeError",
]

MAGIC = b"WVPT"
VERSION = 1
DTYPE_F32 = 0


class CheckpointError(Exception):
    """Base class for checkpoint format problems."""


class CheckpointMagicError(CheckpointError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointTruncatedError(CheckpointError):
    pass


class CheckpointShapeError(CheckpointError):
    pass


@dataclass
class Checkpoint:
    """Everything needed to resume training or run inference."""

    model_config: ModelConfig
    params: "OrderedDict[str, np.ndarray]"  # model parameter store, float32
    epoch: int = 0
    loss_weights: LossWeights = field(default_factory=LossWeights)
    train_config: dict | None = None
    optimizer_kind: str | None = None  # "adamw" | "sgd" | None
    optimizer_scalars: dict = field(default_factory=dict)  # e.g. per-param step counts
    opt_tensors: "OrderedDict[str, np.ndarray]" = field(default_factory=OrderedDict)

    @classmethod
    def from_model(cls, model: WavePaint, **kwargs) -> "Checkpoint":
        params = OrderedDict(
            (k, v.numpy().astype(np.float32, copy=False)) for k, v in parameter_store(model).items()
        )
        return cls(model_config=model.cfg, params=params, **kwargs)


def expected_shape_table(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Model tensor names and shapes implied by a config."""
    model = WavePaint(cfg)
    return {k: tuple(v.shape) for k, v in parameter_store(model).items()}


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    """Write a checkpoint atomically (write-temp + rename)."""
    config = {
        "version": VERSION,
        "model": ckpt.model_config.to_dict(),
        "train": ckpt.train_config,
        "loss": ckpt.loss_weights.to_dict(),
        "epoch": ckpt.epoch,
        "optimizer": {"kind": ckpt.optimizer_kind, "scalars": ckpt.optimizer_scalars},
    }
    tensors = {}
    for name, arr in ckpt.params.items():
        tensors["model/" + name] = arr
    for name, arr in ckpt.opt_tensors.items():
        tensors["opt/" + name] = arr
    write_tensor_file(path, config, tensors)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointTruncatedError(
                f"file truncated: wanted {n} bytes at offset {self.pos}, have {len(self.data)}"
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u8(self) -> int:
        return self.take(1)[0]


def write_tensor_file(path, config: dict, tensors) -> None:
    """Write an arbitrary (JSON config, named float32 tensors) container.

    Same wire layout as checkpoints; also used for externally supplied
    feature-extractor weights.
    """
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", VERSION)
    cfg = json.dumps(config, sort_keys=True, separators=(",", ":")).encode("utf-8")
    out += struct.pack("<I", len(cfg))
    out += cfg
    out += struct.pack("<I", len(tensors))
    for name in sorted(tensors):
        arr = np.ascontiguousarray(np.asarray(tensors[name], dtype="<f4"))
        if not np.isfinite(arr).all():
            raise CheckpointError(f"tensor {name!r} contains non-finite values")
        nb = name.encode("utf-8")
        out += struct.pack("<H", len(nb))
        out += nb
        out += struct.pack("<BB", DTYPE_F32, arr.ndim)
        out += struct.pack(f"<{arr.ndim}I", *arr.shape)
        out += arr.tobytes()
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(bytes(out))
    tmp.replace(path)


def read_tensor_file(path):
    """Parse a tensor container; returns (config dict, name -> float32 array)."""
    data = Path(path).read_bytes()
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise CheckpointMagicError(f"bad magic in {path}")
    version = r.u32()
    if version != VERSION:
        raise CheckpointVersionError(f"unsupported version {version} (expected {VERSION})")
    cfg_len = r.u32()
    try:
        cfg = json.loads(r.take(cfg_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"malformed config block: {e}") from e
    count = r.u32()
    tensors: "OrderedDict[str, np.ndarray]" = OrderedDict()
    prev_name = None
    for _ in range(count):
        name = r.take(r.u16()).decode("utf-8")
        if prev_name is not None and name <= prev_name:
            raise CheckpointError(f"tensor names out of lexicographic order at {name!r}")
        prev_name = name
        dtype = r.u8()
        if dtype != DTYPE_F32:
            raise CheckpointError(f"unknown dtype code {dtype} for tensor {name!r}")
        rank = r.u8()
        dims = struct.unpack(f"<{rank}I", r.take(4 * rank)) if rank else ()
        n = int(np.prod(dims, dtype=np.int64)) if rank else 1
        raw = r.take(4 * n)
        tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(dims).copy()
    if r.pos != len(data):
        raise CheckpointError(f"{len(data) - r.pos} trailing bytes after tensor table")
    return cfg, tensors


def load_checkpoint(path, expected_config: ModelConfig | None = None) -> Checkpoint:
    """Read and validate a checkpoint file.

    Validates magic, version, and the tensor shape table against the model
    config (the embedded one, or ``expected_config`` when given). Raises a
    distinct error class per failure mode.
    """
    cfg, tensors = read_tensor_file(path)

    model_config = ModelConfig.from_dict(cfg["model"])
    if expected_config is not None and model_config != expected_config:
        raise CheckpointShapeError(
            f"checkpoint config {model_config} does not match expected {expected_config}"
        )

    params = OrderedDict()
    opt_tensors = OrderedDict()
    for name, arr in tensors.items():
        if name.startswith("model/"):
            params[name[len("model/") :]] = arr
        elif name.startswith("opt/"):
            opt_tensors[name[len("opt/") :]] = arr
        else:
            raise CheckpointError(f"tensor {name!r} outside model/ and opt/ namespaces")

    expected = expected_shape_table(model_config)
    if set(expected) != set(params):
        missing = sorted(set(expected) - set(params))
        extra = sorted(set(params) - set(expected))
        raise CheckpointShapeError(
            f"parameter names do not match config: missing={missing[:5]} extra={extra[:5]}"
        )
    for name, shape in expected.items():
        if tuple(params[name].shape) != shape:
            raise CheckpointShapeError(
                f"shape mismatch for {name!r}: file has {tuple(params[name].shape)}, "
                f"config implies {shape}"
            )

    opt = cfg.get("optimizer") or {}
    return Checkpoint(
        model_config=model_config,
        params=params,
        epoch=int(cfg.get("epoch", 0)),
        loss_weights=LossWeights.from_dict(cfg["loss"]),
        train_config=cfg.get("train"),
        optimizer_kind=opt.get("kind"),
        optimizer_scalars=opt.get("scalars") or {},
        opt_tensors=opt_tensors,
    )


def build_model(ckpt: Checkpoint) -> WavePaint:
    """Instantiate the network and load the checkpoint's parameters."""
    from .model import load_parameter_store

    model = WavePaint(ckpt.model_config)
    load_parameter_store(model, {k: torch.from_numpy(v.copy()) for k, v in ckpt.params.items()})
    return model
