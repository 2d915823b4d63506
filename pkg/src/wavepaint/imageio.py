"""PNG decode/encode between files, bytes and float arrays.

Images travel as (H, W, 3) float32 in [0, 1]; masks as (H, W, 1) float32
in {0, 1} with 1 = known. PNG is the only codec (lossless, mask-exact).
"""

from __future__ import annotations

import base64
import io
from pathlib import Path

import numpy as np
from PIL import Image

__all__ = [
    "load_image",
    "save_image",
    "load_mask",
    "save_mask",
    "decode_image_png",
    "encode_image_png",
    "decode_mask_png",
    "encode_mask_png",
    "b64_to_bytes",
    "bytes_to_b64",
]


def load_image(path) -> np.ndarray:
    with Image.open(path) as im:
        rgb = im.convert("RGB")
        return np.asarray(rgb, dtype=np.float32) / 255.0


def save_image(path, arr: np.ndarray):
    Image.fromarray(_to_u8(arr)).save(Path(path), format="PNG")


def _to_u8(arr: np.ndarray) -> np.ndarray:
    if arr.dtype == np.uint8:
        return arr
    return np.clip(np.rint(np.asarray(arr) * 255.0), 0, 255).astype(np.uint8)


def load_mask(path) -> np.ndarray:
    """Read a mask PNG (0 = hole, 255 = known); grays threshold at 128."""
    with Image.open(path) as im:
        gray = np.asarray(im.convert("L"))
    return (gray >= 128).astype(np.float32)[:, :, None]


def save_mask(path, mask: np.ndarray):
    Path(path).write_bytes(encode_mask_png(mask))


def decode_image_png(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as im:
        return np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0


def decode_image_png_u8(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def encode_image_png(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(_to_u8(arr)).save(buf, format="PNG")
    return buf.getvalue()


def decode_mask_png(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as im:
        gray = np.asarray(im.convert("L"))
    return (gray >= 128).astype(np.float32)[:, :, None]


def encode_mask_png(mask: np.ndarray) -> bytes:
    m = np.asarray(mask)
    if m.ndim == 3:
        m = m[:, :, 0]
    gray = np.where(m >= 0.5, 255, 0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(gray, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def b64_to_bytes(payload: str) -> bytes:
    return base64.b64decode(payload, validate=True)


def bytes_to_b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")
