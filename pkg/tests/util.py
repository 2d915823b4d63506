"""Shared test helpers: finite-difference gradient oracle and tiny fixtures."""

import numpy as np
import torch


def central_difference_grad(loss_fn, param: torch.Tensor, indices, step: float = 1e-4):
    """Central finite-difference d(loss)/d(param[idx]) for the given flat indices.

    loss_fn is re-evaluated from scratch per probe; param is mutated in
    place and restored. Everything runs in the tensor's own dtype (use
    float64 models for tight tolerances).
    """
    grads = []
    flat = param.data.view(-1)
    with torch.no_grad():
        for idx in indices:
            orig = flat[idx].item()
            flat[idx] = orig + step
            loss_plus = float(loss_fn())
            flat[idx] = orig - step
            loss_minus = float(loss_fn())
            flat[idx] = orig
            grads.append((loss_plus - loss_minus) / (2.0 * step))
    return np.array(grads)


def relative_error(a: float, b: float, floor: float = 1e-6) -> float:
    return abs(a - b) / max(abs(a), abs(b), floor)


def make_test_image(h: int, w: int, channels: int = 3) -> np.ndarray:
    """Deterministic smooth synthetic image in [0, 1] (gradients + waves)."""
    yy, xx = np.mgrid[0:h, 0:w]
    yy = yy / max(h - 1, 1)
    xx = xx / max(w - 1, 1)
    chans = [yy, xx, 0.5 + 0.5 * np.sin(6.0 * yy) * np.cos(6.0 * xx)]
    img = np.stack(chans[:channels], axis=-1).astype(np.float32)
    return np.clip(img, 0.0, 1.0)
