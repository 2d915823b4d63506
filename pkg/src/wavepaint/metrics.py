"""Frechet distance over feature statistics (FID-style) and helpers.

The metric formula is implemented over arbitrary N x d feature matrices;
what produces the features is the caller's business (a pluggable extractor,
so acceptance never depends on downloaded backbone weights).
"""

from __future__ import annotations

import logging

import numpy as np
import torch

logger = logging.getLogger(__name__)

__all__ = ["fid", "pooled_features"]

_EPS = 1e-6


def _sqrtm_psd(mat: np.ndarray) -> np.ndarray:
    """Matrix square root of a symmetric PSD matrix via eigendecomposition."""
    vals, vecs = np.linalg.eigh(mat)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def _covariance(feat: np.ndarray) -> np.ndarray:
    if feat.shape[0] < 2:
        return np.zeros((feat.shape[1], feat.shape[1]))
    return np.atleast_2d(np.cov(feat, rowvar=False))


def fid(feat_a, feat_b) -> float:
    """Frechet distance between Gaussian fits of two feature matrices.

    ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2}), with the matrix
    square root taken through the symmetrized product
    S_a^{1/2} S_b S_a^{1/2} for numerical stability. Sample counts below
    d + 1 leave the covariance estimate degenerate; in that case a diagonal
    regularization eps*I (eps = 1e-6) is applied to both and reported via a
    logged warning. The result is clamped at >= 0.
    """
    a = np.asarray(feat_a, dtype=np.float64)
    b = np.asarray(feat_b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"expected N x d feature matrices, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"feature dims differ: {a.shape[1]} vs {b.shape[1]}")
    d = a.shape[1]

    mu_a, mu_b = a.mean(axis=0), b.mean(axis=0)
    cov_a, cov_b = _covariance(a), _covariance(b)

    degenerate = a.shape[0] < d + 1 or b.shape[0] < d + 1
    if not degenerate:
        min_eig = min(np.linalg.eigvalsh(cov_a).min(), np.linalg.eigvalsh(cov_b).min())
        scale = max(1.0, abs(cov_a).max(), abs(cov_b).max())
        degenerate = min_eig < -1e-8 * scale
    if degenerate:
        logger.warning(
            "degenerate covariance (N=%d, M=%d, d=%d): applying %.0e * I regularization",
            a.shape[0], b.shape[0], d, _EPS,
        )
        cov_a = cov_a + _EPS * np.eye(d)
        cov_b = cov_b + _EPS * np.eye(d)

    sqrt_a = _sqrtm_psd(cov_a)
    inner = sqrt_a @ cov_b @ sqrt_a
    inner = (inner + inner.T) / 2.0
    tr_sqrt = float(np.sqrt(np.clip(np.linalg.eigvalsh(inner), 0.0, None)).sum())

    mean_term = float(np.sum((mu_a - mu_b) ** 2))
    value = mean_term + float(np.trace(cov_a) + np.trace(cov_b)) - 2.0 * tr_sqrt
    return max(value, 0.0)


def pooled_features(images, fx=None) -> np.ndarray:
    """Spatially mean-pooled extractor features, one row per image.

    Used by the evaluation report to build the N x d matrices fed to
    :func:`fid`; with the identity extractor each row is the per-channel
    mean of the image.
    """
    from .losses import IdentityExtractor

    if fx is None:
        fx = IdentityExtractor()
    rows = []
    for img in images:
        t = img if isinstance(img, torch.Tensor) else torch.as_tensor(np.asarray(img))
        feats = fx(t)
        pooled = [f.mean(dim=tuple(range(f.dim() - 1))) for f in feats]
        rows.append(torch.cat(pooled).detach().cpu().numpy())
    return np.stack(rows, axis=0)
