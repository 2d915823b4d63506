"""Hybrid training loss and reconstruction/perceptual distances.

All functions accept channels-last arrays, either a single image (H, W, C)
or a batch (N, H, W, C). They run on numpy arrays (returning floats) and on
torch tensors (returning 0-dim tensors, keeping the autograd graph), so the
same definitions serve both evaluation and training.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch

from .model import composite

__all__ = [
    "LossWeights",
    "IdentityExtractor",
    "l1_loss",
    "l2_loss",
    "lpips_distance",
    "hybrid_loss",
    "hybrid_loss_terms",
    "psnr",
]


@dataclass(frozen=True)
class LossWeights:
    """Mixing weights: total = (1 - alpha) * L1 + alpha * L2 + lpips_weight * LPIPS.

    Neither weight has a canonical published value; both are mandatory
    config fields echoed into every checkpoint. alpha defaults to 0.5
    (an arbitrary midpoint) and lpips_weight to 1.
    """

    alpha: float = 0.5
    lpips_weight: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.lpips_weight < 0.0:
            raise ValueError(f"lpips_weight must be >= 0, got {self.lpips_weight}")

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "lpips_weight": self.lpips_weight}

    @classmethod
    def from_dict(cls, d: dict) -> "LossWeights":
        return cls(**d)


class IdentityExtractor:
    """Feature extractor whose single layer is the image itself.

    The default for tests and desk-scale runs; real perceptual backbones
    plug in through the same interface (callable returning a list of
    channels-last feature tensors, plus per-layer weights).
    """

    layer_weights = (1.0,)

    def __call__(self, image):
        return [image]


def _pair(a, b):
    """Promote a pair of images to torch tensors; remember if a graph is wanted."""
    want_tensor = isinstance(a, torch.Tensor) or isinstance(b, torch.Tensor)
    ta = a if isinstance(a, torch.Tensor) else torch.as_tensor(np.asarray(a))
    tb = b if isinstance(b, torch.Tensor) else torch.as_tensor(np.asarray(b), dtype=ta.dtype)
    if ta.shape != tb.shape:
        raise ValueError(f"shape mismatch: {tuple(ta.shape)} vs {tuple(tb.shape)}")
    return ta, tb, want_tensor


def _ret(value: torch.Tensor, want_tensor: bool):
    return value if want_tensor else float(value)


def l1_loss(a, b):
    """Mean absolute error over all elements."""
    ta, tb, wt = _pair(a, b)
    return _ret((ta - tb).abs().mean(), wt)


def l2_loss(a, b):
    """Mean squared error over all elements."""
    ta, tb, wt = _pair(a, b)
    return _ret((ta - tb).square().mean(), wt)


def _unit_normalize(feat: torch.Tensor, eps: float = 1e-10) -> torch.Tensor:
    # Unit norm along the channel (last) axis, guarded for zero vectors.
    norm = feat.square().sum(dim=-1, keepdim=True).sqrt()
    return feat / (norm + eps)


def lpips_distance(a, b, fx=None):
    """Perceptual distance over an injectable feature extractor.

    Per layer: unit-normalize features along the channel axis, take the
    squared difference, sum over channels and average over positions; the
    weighted layer terms are summed.
    """
    if fx is None:
        fx = IdentityExtractor()
    ta, tb, wt = _pair(a, b)
    total = None
    for weight, fa, fb in zip(fx.layer_weights, fx(ta), fx(tb)):
        diff = _unit_normalize(fa) - _unit_normalize(fb)
        term = weight * diff.square().sum(dim=-1).mean()
        total = term if total is None else total + term
    return _ret(total, wt)


def hybrid_loss(pred, target, m, w: LossWeights | None = None, fx=None):
    """Weighted training objective on the composited prediction.

    The raw prediction is composited with the target through the mask
    first (known pixels pass through untouched), then
    (1 - alpha) * L1 + alpha * L2 + lpips_weight * LPIPS is evaluated over
    the full image.
    """
    total, _, _, _ = hybrid_loss_terms(pred, target, m, w, fx)
    return total


def hybrid_loss_terms(pred, target, m, w: LossWeights | None = None, fx=None):
    """As :func:`hybrid_loss`, also returning the raw (l1, l2, lpips) terms."""
    if w is None:
        w = LossWeights()
    tp, tt, wt = _pair(pred, target)
    tm = m if isinstance(m, torch.Tensor) else torch.as_tensor(np.asarray(m), dtype=tp.dtype)
    comp = composite(tt, tm, tp)
    t1 = l1_loss(comp, tt)
    t2 = l2_loss(comp, tt)
    tp_ = lpips_distance(comp, tt, fx)
    total = (1.0 - w.alpha) * t1 + w.alpha * t2 + w.lpips_weight * tp_
    if wt:
        return total, t1, t2, tp_
    return float(total), float(t1), float(t2), float(tp_)


def psnr(a, b):
    """10*log10(1/MSE) for [0, 1]-range images; math.inf when the pair is identical."""
    mse = l2_loss(a, b)
    mse = float(mse)
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)
