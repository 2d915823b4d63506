"""Checkpoint loading and whole-image inpainting for the CLI and service.

Images whose dimensions violate the network's divisibility requirement are
reflect-padded to the next valid size (padded pixels marked known), run
through the network, and cropped back; the final composite happens in
uint8 space so known pixels of the output are byte-identical to the input.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .checkpoint import Checkpoint, build_model, load_checkpoint
from .losses import LossWeights
from .model import ModelConfig, WavePaint

__all__ = ["LoadedModel", "load_model", "inpaint_u8", "InferenceError"]


class InferenceError(ValueError):
    pass


@dataclass
class LoadedModel:
    model: WavePaint
    config: ModelConfig
    loss_weights: LossWeights
    model_id: str
    epoch: int = 0

    def summary(self) -> dict:
        return {
            "model": self.model_id,
            "modules": self.config.modules,
            "blocks_per_module": self.config.blocks_per_module,
            "embed_dim": self.config.embed_dim,
            "dwt_level": self.config.dwt_level,
            "use_depthconv": self.config.use_depthconv,
            "epoch": self.epoch,
        }


def load_model(ckpt_path) -> LoadedModel:
    ckpt: Checkpoint = load_checkpoint(ckpt_path)
    model = build_model(ckpt)
    model.eval()
    return LoadedModel(
        model=model,
        config=ckpt.model_config,
        loss_weights=ckpt.loss_weights,
        model_id=Path(ckpt_path).stem,
        epoch=ckpt.epoch,
    )


def _pad_reflect(arr: np.ndarray, divisor: int):
    h, w = arr.shape[:2]
    ph = (-h) % divisor
    pw = (-w) % divisor
    if ph == 0 and pw == 0:
        return arr, (0, 0)
    if ph >= h or pw >= w:
        raise InferenceError(
            f"image {h}x{w} too small to pad to a multiple of {divisor}"
        )
    widths = ((0, ph), (0, pw)) + ((0, 0),) * (arr.ndim - 2)
    return np.pad(arr, widths, mode="reflect"), (ph, pw)


def inpaint_u8(lm: LoadedModel, image_u8: np.ndarray, mask_u8: np.ndarray):
    """Inpaint an (H, W, 3) uint8 image with an (H, W) uint8 mask (0=hole, 255=known).

    Returns ((H, W, 3) uint8 composite, elapsed milliseconds). Known pixels
    of the output equal the input bytes exactly.
    """
    if image_u8.ndim != 3 or image_u8.shape[2] != 3:
        raise InferenceError(f"expected (H, W, 3) image, got shape {image_u8.shape}")
    if mask_u8.shape[:2] != image_u8.shape[:2]:
        raise InferenceError(
            f"image/mask dims differ: {image_u8.shape[:2]} vs {mask_u8.shape[:2]}"
        )

    known = mask_u8 >= 128
    x = image_u8.astype(np.float32) / 255.0
    m = known.astype(np.float32)

    d = lm.config.min_divisor
    x_pad, _ = _pad_reflect(x, d)
    m_pad, _ = _pad_reflect(m, d)  # reflected mask stays binary; pad cropped away below

    t0 = time.perf_counter()
    with torch.no_grad():
        xt = torch.from_numpy(x_pad).permute(2, 0, 1).unsqueeze(0)
        mt = torch.from_numpy(m_pad).unsqueeze(0).unsqueeze(0)
        pred = lm.model(xt, mt)
    elapsed_ms = (time.perf_counter() - t0) * 1000.0

    h, w = image_u8.shape[:2]
    y = pred.squeeze(0).permute(1, 2, 0).numpy()[:h, :w, :]
    fill_u8 = np.clip(np.rint(np.clip(y, 0.0, 1.0) * 255.0), 0, 255).astype(np.uint8)
    out = np.where(known[:, :, None], image_u8, fill_u8)
    return out, elapsed_ms
