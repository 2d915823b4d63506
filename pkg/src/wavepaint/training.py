"""Training: data pipeline, AdamW-then-SGD schedule, checkpointing.

Reproducibility contract: a fixed (seed, dataset, config) triple gives an
identical loss trajectory on the same platform, and resuming from an
epoch-k checkpoint reproduces the exact loss sequence of an uninterrupted
run. All per-epoch randomness (shuffle order, mask kinds, mask seeds, flip
decisions) is drawn from a generator derived from (seed, epoch), never from
global state.
"""

from __future__ import annotations

import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .checkpoint import Checkpoint, save_checkpoint
from .losses import IdentityExtractor, LossWeights, hybrid_loss_terms
from .masks import MASK_KINDS, default_policy, generate_mask
from .model import ModelConfig, WavePaint, load_parameter_store

logger = logging.getLogger(__name__)

__all__ = [
    "AdamWParams",
    "SGDParams",
    "TrainConfig",
    "TrainingError",
    "NonFiniteLossError",
    "ImageFolderDataset",
    "train_step",
    "run_training",
]

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".webp"}


class TrainingError(Exception):
    pass


class NonFiniteLossError(TrainingError):
    """Raised when a step produces a NaN/inf loss; the update is not applied."""


@dataclass(frozen=True)
class AdamWParams:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01


@dataclass(frozen=True)
class SGDParams:
    lr: float = 0.001
    momentum: float = 0.9


@dataclass(frozen=True)
class TrainConfig:
    image_dir: str = ""
    image_size: int = 64
    batch_size: int = 4
    total_epochs: int = 10
    sgd_tail_epochs: int = 50  # clipped to <= total_epochs
    adamw: AdamWParams = field(default_factory=AdamWParams)
    sgd: SGDParams = field(default_factory=SGDParams)
    mask_weights: dict = field(default_factory=lambda: {"narrow": 1.0, "medium": 1.0, "wide": 1.0})
    seed: int = 0
    checkpoint_every: int = 1
    out_dir: str = "runs"
    augment_flip: bool = True

    def __post_init__(self):
        if self.image_size <= 0 or self.batch_size <= 0 or self.total_epochs < 0:
            raise ValueError("image_size, batch_size must be positive; total_epochs >= 0")
        if self.sgd_tail_epochs < 0:
            raise ValueError(f"sgd_tail_epochs must be >= 0, got {self.sgd_tail_epochs}")
        if self.adamw.lr <= 0 or self.sgd.lr <= 0:
            raise ValueError("learning rates must be > 0")
        if self.checkpoint_every < 1:
            raise ValueError(f"checkpoint_every must be >= 1, got {self.checkpoint_every}")
        for kind in self.mask_weights:
            if kind not in MASK_KINDS:
                raise ValueError(f"unknown mask kind {kind!r} in mask_weights")

    @property
    def effective_tail(self) -> int:
        return min(self.sgd_tail_epochs, self.total_epochs)

    def optimizer_kind_for_epoch(self, epoch: int) -> str:
        return "adamw" if epoch < self.total_epochs - self.effective_tail else "sgd"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if isinstance(d.get("adamw"), dict):
            d["adamw"] = AdamWParams(**d["adamw"])
        if isinstance(d.get("sgd"), dict):
            d["sgd"] = SGDParams(**d["sgd"])
        return cls(**d)


class ImageFolderDataset:
    """Sorted directory listing decoded to [0, 1] RGB at a fixed square size."""

    def __init__(self, image_dir, image_size: int):
        self.image_size = image_size
        root = Path(image_dir)
        if not root.is_dir():
            raise TrainingError(f"image directory not found: {image_dir}")
        self.paths = sorted(p for p in root.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
        self.skipped = 0

    def __len__(self):
        return len(self.paths)

    def load(self, index: int, flip: bool = False) -> np.ndarray | None:
        """Decode one image; returns None (and counts it) when unreadable."""
        try:
            with Image.open(self.paths[index]) as im:
                rgb = im.convert("RGB").resize(
                    (self.image_size, self.image_size), Image.Resampling.BILINEAR
                )
        except Exception:
            self.skipped += 1
            return None
        arr = np.asarray(rgb, dtype=np.float32) / 255.0
        if flip:
            arr = arr[:, ::-1, :].copy()
        return arr


def make_optimizer(kind: str, model: torch.nn.Module, cfg: TrainConfig) -> torch.optim.Optimizer:
    if kind == "adamw":
        p = cfg.adamw
        return torch.optim.AdamW(
            model.parameters(),
            lr=p.lr,
            betas=(p.beta1, p.beta2),
            eps=p.eps,
            weight_decay=p.weight_decay,
        )
    if kind == "sgd":
        p = cfg.sgd
        return torch.optim.SGD(model.parameters(), lr=p.lr, momentum=p.momentum)
    raise ValueError(f"unknown optimizer kind {kind!r}")


def train_step(model, optimizer, batch, weights: LossWeights, extractor=None) -> dict:
    """One forward/backward/update on a (images, masks) batch.

    images: (N, 3, H, W) in [0, 1]; masks: (N, 1, H, W) binary. The loss is
    the hybrid objective on the composited prediction. A non-finite loss
    aborts the step (no parameter update) and raises NonFiniteLossError.

    Returns the scalar loss and its raw terms.
    """
    if extractor is None:
        extractor = IdentityExtractor()
    images, masks = batch
    model.train()
    pred = model(images, masks)
    # Losses operate channels-last.
    total, t1, t2, tlp = hybrid_loss_terms(
        pred.permute(0, 2, 3, 1),
        images.permute(0, 2, 3, 1),
        masks.permute(0, 2, 3, 1),
        weights,
        extractor,
    )
    if not torch.isfinite(total):
        raise NonFiniteLossError(f"non-finite loss {float(total.detach())!r}; step aborted")
    optimizer.zero_grad(set_to_none=True)
    total.backward()
    optimizer.step()
    return {
        "loss": float(total.detach()),
        "l1": float(t1.detach()),
        "l2": float(t2.detach()),
        "lpips": float(tlp.detach()),
    }


def _epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, epoch]))


def _normalized_mask_weights(cfg: TrainConfig):
    kinds = [k for k in MASK_KINDS if cfg.mask_weights.get(k, 0.0) > 0.0]
    if not kinds:
        raise TrainingError("mask_weights selects no mask kind")
    w = np.array([cfg.mask_weights[k] for k in kinds], dtype=np.float64)
    return kinds, np.cumsum(w / w.sum())


def _pick_kind(rng, kinds, cum_probs) -> str:
    # Inverse-CDF draw; stable across numpy versions, unlike Generator.choice.
    u = rng.random()
    return kinds[min(int(np.searchsorted(cum_probs, u, side="right")), len(kinds) - 1)]


# --- optimizer state <-> named tensors ---------------------------------------


def _param_names(model) -> list[str]:
    return [name for name, _ in model.named_parameters()]


def export_optimizer_state(optimizer, model):
    """Flatten optimizer state into (named float32 arrays, scalar dict)."""
    names = _param_names(model)
    params = [p for _, p in model.named_parameters()]
    tensors: "OrderedDict[str, np.ndarray]" = OrderedDict()
    scalars: dict = {}
    for name, p in zip(names, params):
        state = optimizer.state.get(p, {})
        for key, value in state.items():
            if isinstance(value, torch.Tensor) and value.dim() > 0:
                tensors[f"{name}.{key}"] = value.detach().cpu().numpy().astype(np.float32)
            elif isinstance(value, torch.Tensor):
                scalars[f"{name}.{key}"] = float(value)
            elif value is not None:
                scalars[f"{name}.{key}"] = float(value)
    return tensors, scalars


def restore_optimizer_state(optimizer, model, tensors, scalars):
    """Inverse of :func:`export_optimizer_state` (after one optimizer rebuild)."""
    lookup = dict(model.named_parameters())
    for full, arr in tensors.items():
        name, key = full.rsplit(".", 1)
        optimizer.state[lookup[name]][key] = torch.from_numpy(np.asarray(arr)).clone()
    for full, value in (scalars or {}).items():
        name, key = full.rsplit(".", 1)
        if key == "step":
            optimizer.state[lookup[name]][key] = torch.tensor(float(value))
        else:
            optimizer.state[lookup[name]][key] = value


# --- full run -----------------------------------------------------------------


def _checkpoint_from(model, cfg, weights, epoch, optimizer, kind) -> Checkpoint:
    opt_tensors, opt_scalars = export_optimizer_state(optimizer, model)
    ckpt = Checkpoint.from_model(
        model,
        epoch=epoch,
        loss_weights=weights,
        train_config=cfg.to_dict(),
        optimizer_kind=kind,
        optimizer_scalars=opt_scalars,
    )
    ckpt.opt_tensors = opt_tensors
    return ckpt


def run_training(
    cfg: TrainConfig,
    mcfg: ModelConfig,
    weights: LossWeights | None = None,
    extractor=None,
    resume: Checkpoint | None = None,
) -> Checkpoint:
    """Run the full schedule; returns the final checkpoint.

    Epochs [0, total - tail) use AdamW; epochs [total - tail, total) use SGD
    with fresh momentum state. Checkpoints go to cfg.out_dir (atomic
    writes), per-epoch means to cfg.out_dir/metrics.log, one line per epoch:
    ``epoch<TAB>split<TAB>loss<TAB>l1<TAB>l2<TAB>lpips``.
    """
    weights = weights or LossWeights()
    extractor = extractor or IdentityExtractor()

    dataset = ImageFolderDataset(cfg.image_dir, cfg.image_size)
    if len(dataset) == 0:
        raise TrainingError(f"no images found in {cfg.image_dir}")
    if cfg.image_size % mcfg.min_divisor != 0:
        raise TrainingError(
            f"image_size {cfg.image_size} not divisible by {mcfg.min_divisor} "
            f"(model dwt_level={mcfg.dwt_level})"
        )

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics_path = out_dir / "metrics.log"

    torch.manual_seed(cfg.seed)
    model = WavePaint(mcfg)

    start_epoch = 0
    if resume is not None:
        if resume.model_config != mcfg:
            raise TrainingError("resume checkpoint was built for a different model config")
        load_parameter_store(model, {k: torch.from_numpy(v.copy()) for k, v in resume.params.items()})
        start_epoch = resume.epoch
        logger.info("resuming at epoch %d", start_epoch)

    kinds, kind_cum = _normalized_mask_weights(cfg)
    policies = {k: default_policy(k) for k in kinds}

    optimizer = None
    current_kind = None
    final = None
    for epoch in range(start_epoch, cfg.total_epochs):
        kind = cfg.optimizer_kind_for_epoch(epoch)
        if kind != current_kind:
            optimizer = make_optimizer(kind, model, cfg)
            if resume is not None and epoch == start_epoch and resume.optimizer_kind == kind:
                restore_optimizer_state(optimizer, model, resume.opt_tensors, resume.optimizer_scalars)
            logger.info("epoch %d: optimizer switch -> %s", epoch, kind)
            current_kind = kind

        rng = _epoch_rng(cfg.seed, epoch)
        order = rng.permutation(len(dataset))
        sums = {"loss": 0.0, "l1": 0.0, "l2": 0.0, "lpips": 0.0}
        batches = 0
        for lo in range(0, len(order), cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            batch_kind = _pick_kind(rng, kinds, kind_cum)
            images, masks = [], []
            for i in idx:
                flip = cfg.augment_flip and bool(rng.random() < 0.5)
                mask_seed = int(rng.integers(0, 2**31 - 1))
                arr = dataset.load(int(i), flip=flip)
                if arr is None:
                    continue
                images.append(arr)
                masks.append(generate_mask(policies[batch_kind], cfg.image_size, cfg.image_size, mask_seed))
            if not images:
                continue
            x = torch.from_numpy(np.stack(images)).permute(0, 3, 1, 2).contiguous()
            m = torch.from_numpy(np.stack(masks)).permute(0, 3, 1, 2).contiguous()
            stats = train_step(model, optimizer, (x, m), weights, extractor)
            for key in sums:
                sums[key] += stats[key]
            batches += 1

        if batches == 0:
            raise TrainingError("all images unreadable; nothing to train on")
        means = {k: v / batches for k, v in sums.items()}
        with metrics_path.open("a") as fh:
            fh.write(
                f"{epoch}\ttrain\t{means['loss']:.8f}\t{means['l1']:.8f}"
                f"\t{means['l2']:.8f}\t{means['lpips']:.8f}\n"
            )
        logger.info("epoch %d [%s] loss %.6f", epoch, kind, means["loss"])

        done = epoch + 1
        if done % cfg.checkpoint_every == 0 or done == cfg.total_epochs:
            final = _checkpoint_from(model, cfg, weights, done, optimizer, kind)
            save_checkpoint(out_dir / f"epoch_{done:04d}.wvpt", final)

    if dataset.skipped:
        logger.warning("skipped %d unreadable images", dataset.skipped)
    if final is None:
        # No epoch ran (total_epochs == start_epoch); still emit a checkpoint.
        optimizer = optimizer or make_optimizer(
            cfg.optimizer_kind_for_epoch(max(cfg.total_epochs - 1, 0)), model, cfg
        )
        final = _checkpoint_from(model, cfg, weights, start_epoch, optimizer, current_kind)
    return final
