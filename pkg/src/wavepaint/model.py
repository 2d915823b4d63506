"""WavePaint network: Wave modules built from wavelet token-mixing blocks.

Dataflow per Wave module (input H x W x 3 plus a binary mask):

    concat mask (4ch) -> stride-2 conv (C, half res) -> N WaveMix blocks
    -> depthwise conv stage -> concat entry-conv skip (2C) -> decoder
    upsample (C/2, full res) -> concat module input (C/2+3) -> 3x3 conv
    (3ch) -> residual add of the module input.

The full network masks the input (hole pixels zeroed), chains M such
modules (re-concatenating the full-resolution mask each time) and returns
the raw, unclamped prediction. Compositing back onto the known pixels is a
separate step so known pixels are never touched by the network output.

Mask convention everywhere: 1 = known pixel, 0 = hole.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, asdict

import numpy as np
import torch
import torch.nn as nn

from .wavelet import haar_dwt_nchw

__all__ = [
    "ModelConfig",
    "WaveMixBlock",
    "DepthConv",
    "Decoder",
    "WaveModule",
    "WavePaint",
    "composite",
    "count_parameters",
    "parameter_store",
    "load_parameter_store",
    "zero_parameters",
]


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters.

    embed_dim must be divisible by 4 (channel reduction before the DWT) and
    by 2 (the decoder emits embed_dim/2 channels).
    """

    modules: int = 2
    blocks_per_module: int = 4
    embed_dim: int = 128
    dwt_level: int = 1
    use_depthconv: bool = True
    depthconv_residual: bool = False
    mlp_mult: int = 2

    def __post_init__(self):
        if self.modules < 1:
            raise ValueError(f"modules must be >= 1, got {self.modules}")
        if self.blocks_per_module < 1:
            raise ValueError(f"blocks_per_module must be >= 1, got {self.blocks_per_module}")
        if self.embed_dim < 4 or self.embed_dim % 4 != 0:
            raise ValueError(f"embed_dim must be a positive multiple of 4, got {self.embed_dim}")
        if self.dwt_level not in (1, 2, 3):
            raise ValueError(f"dwt_level must be in {{1, 2, 3}}, got {self.dwt_level}")
        if self.mlp_mult < 1:
            raise ValueError(f"mlp_mult must be >= 1, got {self.mlp_mult}")

    @property
    def min_divisor(self) -> int:
        """Input dims must be divisible by this (stride-2 entry conv + DWT cascade)."""
        return 2 ** (self.dwt_level + 1)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


def _check_channels(x: torch.Tensor, expected: int, where: str):
    if x.dim() != 4:
        raise ValueError(f"{where}: expected (N, C, H, W) tensor, got shape {tuple(x.shape)}")
    if x.shape[1] != expected:
        raise ValueError(f"{where}: expected {expected} channels, got {x.shape[1]}")


class WaveMixBlock(nn.Module):
    """Multi-resolution token-mixing block.

    Pointwise channel reduction to C/4, a Haar DWT cascade, then per level:
    concatenate the level's four subbands (back to C channels), a two-layer
    pointwise MLP with GELU, and upsampling of deeper levels back to half
    the block resolution (transposed conv, kernel = stride = 2**(l-1); the
    first level is already there). Level outputs are summed, upsampled to
    the block resolution with a stride-2 transposed conv, batch-normalized
    and added to the residual input.
    """

    def __init__(self, dim: int, dwt_level: int = 1, mlp_mult: int = 2):
        super().__init__()
        if dim % 4 != 0:
            raise ValueError(f"block dim must be divisible by 4, got {dim}")
        self.dim = dim
        self.dwt_level = dwt_level
        self.reduce = nn.Conv2d(dim, dim // 4, 1)
        self.mlps = nn.ModuleList()
        self.level_up = nn.ModuleList()
        for level in range(1, dwt_level + 1):
            self.mlps.append(
                nn.Sequential(
                    nn.Conv2d(dim, dim * mlp_mult, 1),
                    nn.GELU(),
                    nn.Conv2d(dim * mlp_mult, dim, 1),
                )
            )
            if level == 1:
                self.level_up.append(nn.Identity())
            else:
                k = 2 ** (level - 1)
                self.level_up.append(nn.ConvTranspose2d(dim, dim, k, stride=k))
        self.up = nn.ConvTranspose2d(dim, dim, 4, stride=2, padding=1)
        self.norm = nn.BatchNorm2d(dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        _check_channels(x, self.dim, "WaveMixBlock")
        h, w = x.shape[-2], x.shape[-1]
        d = 2**self.dwt_level
        if h % d != 0 or w % d != 0:
            raise ValueError(f"WaveMixBlock: dims must be divisible by {d}, got {h}x{w}")
        y = self.reduce(x)
        acc = None
        for level in range(self.dwt_level):
            ll, lh, hl, hh = haar_dwt_nchw(y)
            mixed = self.mlps[level](torch.cat([ll, lh, hl, hh], dim=1))
            mixed = self.level_up[level](mixed)
            acc = mixed if acc is None else acc + mixed
            y = ll
        return self.norm(self.up(acc)) + x


class DepthConv(nn.Module):
    """Depthwise 5x5 convolution followed by GELU and batch-norm."""

    def __init__(self, dim: int, kernel_size: int = 5, residual: bool = False):
        super().__init__()
        self.dim = dim
        self.residual = residual
        self.conv = nn.Conv2d(dim, dim, kernel_size, padding=kernel_size // 2, groups=dim)
        self.act = nn.GELU()
        self.norm = nn.BatchNorm2d(dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        _check_channels(x, self.dim, "DepthConv")
        y = self.norm(self.act(self.conv(x)))
        return y + x if self.residual else y


class Decoder(nn.Module):
    """Transposed-conv upsampler: (H/2, W/2, 2C) -> (H, W, C/2), then batch-norm."""

    def __init__(self, dim: int):
        super().__init__()
        self.dim = dim
        self.up = nn.ConvTranspose2d(2 * dim, dim // 2, 4, stride=2, padding=1)
        self.norm = nn.BatchNorm2d(dim // 2)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        _check_channels(x, 2 * self.dim, "Decoder")
        return self.norm(self.up(x))


class WaveModule(nn.Module):
    """One Wave module: the repeating unit of the network."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        c = cfg.embed_dim
        self.cfg = cfg
        self.entry = nn.Conv2d(4, c, 3, stride=2, padding=1)
        self.blocks = nn.ModuleList(
            WaveMixBlock(c, cfg.dwt_level, cfg.mlp_mult) for _ in range(cfg.blocks_per_module)
        )
        self.depthconv = (
            DepthConv(c, residual=cfg.depthconv_residual) if cfg.use_depthconv else None
        )
        self.decoder = Decoder(c)
        self.exit = nn.Conv2d(c // 2 + 3, 3, 3, padding=1)

    def _validate(self, x_in: torch.Tensor, m: torch.Tensor):
        _check_channels(x_in, 3, "WaveModule")
        _check_channels(m, 1, "WaveModule mask")
        if x_in.shape[-2:] != m.shape[-2:] or x_in.shape[0] != m.shape[0]:
            raise ValueError(
                f"image/mask shapes inconsistent: {tuple(x_in.shape)} vs {tuple(m.shape)}"
            )
        d = self.cfg.min_divisor
        h, w = x_in.shape[-2], x_in.shape[-1]
        if h % d != 0 or w % d != 0:
            raise ValueError(f"WaveModule: dims must be divisible by {d}, got {h}x{w}")

    def forward(self, x_in: torch.Tensor, m: torch.Tensor) -> torch.Tensor:
        out, _ = self._forward(x_in, m, trace=False)
        return out

    def forward_with_trace(self, x_in, m):
        """Forward pass that also returns every intermediate feature map."""
        return self._forward(x_in, m, trace=True)

    def _forward(self, x_in, m, trace):
        self._validate(x_in, m)
        x0 = torch.cat([x_in, m], dim=1)
        x1 = self.entry(x0)
        x2 = x1
        for block in self.blocks:
            x2 = block(x2)
        x3 = self.depthconv(x2) if self.depthconv is not None else x2
        x4 = torch.cat([x3, x1], dim=1)
        x5 = self.decoder(x4)
        x6 = torch.cat([x5, x_in], dim=1)
        x7 = self.exit(x6)
        out = x7 + x_in
        steps = None
        if trace:
            steps = {
                "x0": x0, "x1": x1, "x2": x2, "x3": x3,
                "x4": x4, "x5": x5, "x6": x6, "x7": x7, "out": out,
            }
        return out, steps


class WavePaint(nn.Module):
    """Chain of M Wave modules over a masked image.

    forward(x, m) zeroes hole pixels of x, feeds the result through the
    module chain (each module sees the full-resolution mask again) and
    returns the raw prediction, unclamped so residual gradients stay clean.
    """

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.wave_modules = nn.ModuleList(WaveModule(cfg) for _ in range(cfg.modules))

    def forward(self, x: torch.Tensor, m: torch.Tensor) -> torch.Tensor:
        h = x * m
        for module in self.wave_modules:
            h = module(h, m)
        return h


def composite(x, m, y_hat):
    """Fill holes of x with the clamped prediction: y = x*m + clamp(y_hat, 0, 1)*(1-m).

    Implemented as a per-pixel select so known pixels of the result are
    bit-identical to x. Works on numpy channels-last arrays and on torch
    NCHW tensors alike (the mask broadcasts over channels).
    """
    if isinstance(x, torch.Tensor) or isinstance(y_hat, torch.Tensor):
        if x.shape[-2:] != y_hat.shape[-2:]:
            raise ValueError(f"shape mismatch: {tuple(x.shape)} vs {tuple(y_hat.shape)}")
        return torch.where(m >= 0.5, x, torch.clamp(y_hat, 0.0, 1.0))
    x = np.asarray(x)
    y_hat = np.asarray(y_hat)
    m = np.asarray(m)
    if x.shape != y_hat.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y_hat.shape}")
    return np.where(m >= 0.5, x, np.clip(y_hat, 0.0, 1.0))


def count_parameters(cfg: ModelConfig) -> int:
    """Exact count of trainable scalars (batch-norm running statistics excluded)."""
    model = WavePaint(cfg)
    return sum(p.numel() for p in model.parameters() if p.requires_grad)


def parameter_store(model: nn.Module) -> "OrderedDict[str, torch.Tensor]":
    """Named tensors of the model, lexicographic by name.

    Includes batch-norm running statistics (needed for inference) but not
    the num_batches_tracked counters, which the fixed-momentum batch-norm
    never consults.
    """
    state = model.state_dict()
    store = OrderedDict()
    for name in sorted(state):
        if name.endswith("num_batches_tracked"):
            continue
        t = state[name].detach().cpu()
        if not torch.isfinite(t).all():
            raise ValueError(f"parameter store tensor {name!r} contains non-finite values")
        store[name] = t
    return store


def load_parameter_store(model: nn.Module, store) -> None:
    """Load tensors produced by :func:`parameter_store` back into a model."""
    current = model.state_dict()
    expected = {k for k in current if not k.endswith("num_batches_tracked")}
    got = set(store)
    if expected != got:
        missing = sorted(expected - got)
        extra = sorted(got - expected)
        raise ValueError(f"parameter store mismatch: missing={missing[:5]} extra={extra[:5]}")
    for name, value in store.items():
        t = torch.as_tensor(np.asarray(value)) if not isinstance(value, torch.Tensor) else value
        if tuple(t.shape) != tuple(current[name].shape):
            raise ValueError(
                f"shape mismatch for {name!r}: {tuple(t.shape)} vs {tuple(current[name].shape)}"
            )
        with torch.no_grad():
            current[name].copy_(t)


def zero_parameters(model: nn.Module) -> nn.Module:
    """Zero every learnable weight in place (reduces the network to the identity)."""
    with torch.no_grad():
        for p in model.parameters():
            p.zero_()
    return model
