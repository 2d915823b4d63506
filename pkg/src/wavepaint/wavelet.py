"""Orthonormal 2D Haar discrete wavelet transform (single- and multi-level).

The transform is the parameter-free downsampling token-mixer used throughout
the network. Per 2x2 input block [[a, b], [c, d]] and per channel:

    ll = (a + b + c + d) / 2      approximation
    lh = (a + b - c - d) / 2      horizontal detail
    hl = (a - b + c - d) / 2      vertical detail
    hh = (a - b - c + d) / 2      diagonal detail

The 1/2 scaling makes the transform orthonormal, so total energy (sum of
squares) is conserved exactly and the inverse is the transpose of the same
block formulas. Subband channel-stacking order is (ll, lh, hl, hh)
everywhere in this package; checkpoint compatibility depends on it.

Inputs must have even spatial dimensions (the network only ever feeds
power-of-two feature maps, so no padding logic is provided).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

__all__ = [
    "SubbandSet",
    "dwt2_haar",
    "idwt2_haar",
    "dwt2_multilevel",
    "idwt2_multilevel",
    "haar_dwt_nchw",
    "haar_idwt_nchw",
]


def haar_dwt_nchw(x: torch.Tensor):
    """Single-level Haar DWT on a batched (N, C, H, W) tensor.

    Returns the four subbands (ll, lh, hl, hh), each (N, C, H/2, W/2).
    Differentiable; this is the code path the network uses.
    """
    if x.dim() != 4:
        raise ValueError(f"expected (N, C, H, W) tensor, got shape {tuple(x.shape)}")
    h, w = x.shape[-2], x.shape[-1]
    if h % 2 != 0 or w % 2 != 0:
        raise ValueError(f"spatial dims must be even for Haar DWT, got {h}x{w}")
    a = x[..., 0::2, 0::2]
    b = x[..., 0::2, 1::2]
    c = x[..., 1::2, 0::2]
    d = x[..., 1::2, 1::2]
    ll = (a + b + c + d) / 2
    lh = (a + b - c - d) / 2
    hl = (a - b + c - d) / 2
    hh = (a - b - c + d) / 2
    return ll, lh, hl, hh


def haar_idwt_nchw(ll: torch.Tensor, lh: torch.Tensor, hl: torch.Tensor, hh: torch.Tensor):
    """Exact inverse of :func:`haar_dwt_nchw` on (N, C, H/2, W/2) subbands."""
    shapes = {tuple(t.shape) for t in (ll, lh, hl, hh)}
    if len(shapes) != 1:
        raise ValueError(f"subband shapes must match, got {sorted(shapes)}")
    a = (ll + lh + hl + hh) / 2
    b = (ll + lh - hl - hh) / 2
    c = (ll - lh + hl - hh) / 2
    d = (ll - lh - hl + hh) / 2
    n, ch, hh_, ww = ll.shape
    out = ll.new_empty((n, ch, hh_ * 2, ww * 2))
    out[..., 0::2, 0::2] = a
    out[..., 0::2, 1::2] = b
    out[..., 1::2, 0::2] = c
    out[..., 1::2, 1::2] = d
    return out


@dataclass(frozen=True)
class SubbandSet:
    """One level of 2D-DWT output: approximation plus three detail bands.

    Each band has shape (H/2, W/2, C) for an (H, W, C) input (single-channel
    inputs yield (H/2, W/2) bands). All four bands share one shape.
    """

    ll: np.ndarray
    lh: np.ndarray
    hl: np.ndarray
    hh: np.ndarray

    def __post_init__(self):
        shapes = {b.shape for b in self.bands}
        if len(shapes) != 1:
            raise ValueError(f"subband shapes must match, got {sorted(shapes)}")

    @property
    def bands(self):
        return self.ll, self.lh, self.hl, self.hh

    def energy(self) -> float:
        """Total energy (sum of squares) over all four bands."""
        return float(sum(np.sum(np.square(b, dtype=np.float64)) for b in self.bands))


def _validate_image(x: np.ndarray, divisor: int):
    if x.ndim not in (2, 3):
        raise ValueError(f"expected (H, W) or (H, W, C) array, got shape {x.shape}")
    h, w = x.shape[0], x.shape[1]
    if h % divisor != 0 or w % divisor != 0:
        raise ValueError(f"spatial dims must be divisible by {divisor}, got {h}x{w}")
    if not np.isfinite(x).all():
        raise ValueError("input contains non-finite values")


def _to_nchw(x: np.ndarray) -> torch.Tensor:
    arr = x if x.ndim == 3 else x[:, :, None]
    t = torch.as_tensor(np.ascontiguousarray(arr))
    return t.permute(2, 0, 1).unsqueeze(0)


def _from_nchw(t: torch.Tensor, squeeze: bool) -> np.ndarray:
    arr = t.squeeze(0).permute(1, 2, 0).numpy()
    return arr[:, :, 0] if squeeze else arr


def dwt2_haar(x: np.ndarray) -> SubbandSet:
    """Single-level orthonormal Haar DWT of an (H, W, C) or (H, W) array.

    Requires even H and W and finite values. Channels transform
    independently.
    """
    x = np.asarray(x)
    _validate_image(x, divisor=2)
    squeeze = x.ndim == 2
    bands = haar_dwt_nchw(_to_nchw(x))
    return SubbandSet(*(_from_nchw(b, squeeze) for b in bands))


def idwt2_haar(s: SubbandSet) -> np.ndarray:
    """Reconstruct the (H, W, C) array from one level of subbands."""
    squeeze = s.ll.ndim == 2
    out = haar_idwt_nchw(*(_to_nchw(np.asarray(b)) for b in s.bands))
    return _from_nchw(out, squeeze)


def dwt2_multilevel(x: np.ndarray, level: int) -> list[SubbandSet]:
    """Cascade of Haar decompositions; entry l decomposes entry (l-1)'s ll band.

    Requires H and W divisible by 2**level. Entry 0 decomposes x itself.
    """
    if level < 1:
        raise ValueError(f"level must be >= 1, got {level}")
    x = np.asarray(x)
    _validate_image(x, divisor=2**level)
    pyramid = []
    current = x
    for _ in range(level):
        s = dwt2_haar(current)
        pyramid.append(s)
        current = s.ll
    return pyramid


def idwt2_multilevel(pyramid: list[SubbandSet]) -> np.ndarray:
    """Invert :func:`dwt2_multilevel` by reconstructing bottom-up."""
    if not pyramid:
        raise ValueError("empty subband pyramid")
    ll = pyramid[-1].ll
    for s in reversed(pyramid):
        ll = idwt2_haar(SubbandSet(ll, s.lh, s.hl, s.hh))
    return ll
