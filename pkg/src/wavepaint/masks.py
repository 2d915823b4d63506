"""Deterministic, seedable narrow / medium / wide mask generation.

Holes are drawn as random polyline brush strokes (a random walk whose
per-segment turn angle is uniform in +/-60 degrees and segment length
uniform in [w/16, w/4] px) thickened by a disc, plus axis-aligned boxes.
Candidates are rejection-resampled up to 16 times until hole coverage
lands inside the policy's target range.

Rasterization is integer-only (Bresenham lines, integer disc offsets), so
a fixed (policy, h, w, seed) reproduces the same mask bit for bit across
runs and platforms.

Convention: mask value 1 = known pixel, 0 = hole. PNG export is 8-bit
single channel, 0 = hole, 255 = known.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, asdict

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "MaskPolicy",
    "MaskResult",
    "default_policy",
    "generate_mask",
    "generate_mask_detailed",
    "MASK_KINDS",
]

MASK_KINDS = ("narrow", "medium", "wide")

MAX_RESAMPLES = 16

# Brush widths are calibrated at this reference resolution and scaled
# proportionally for other sizes.
REFERENCE_SIZE = 256


@dataclass(frozen=True)
class MaskPolicy:
    """Stroke/box sampling ranges for one mask-severity class.

    All integer ranges are inclusive on both ends; coverage is the target
    fraction of hole pixels.
    """

    kind: str
    stroke_count_range: tuple[int, int]
    brush_width_range_px: tuple[int, int]
    vertex_count_range: tuple[int, int]
    box_count_range: tuple[int, int]
    box_size_frac_range: tuple[float, float]
    target_coverage_range: tuple[float, float]

    def __post_init__(self):
        for name in (
            "stroke_count_range",
            "brush_width_range_px",
            "vertex_count_range",
            "box_count_range",
            "box_size_frac_range",
            "target_coverage_range",
        ):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} must be ordered, got ({lo}, {hi})")
        lo, hi = self.target_coverage_range
        if not (0.0 < lo and hi < 1.0):
            raise ValueError(f"target_coverage_range must lie inside (0, 1), got ({lo}, {hi})")

    def to_dict(self) -> dict:
        return asdict(self)


_DEFAULTS = {
    "narrow": MaskPolicy(
        kind="narrow",
        stroke_count_range=(1, 4),
        brush_width_range_px=(5, 15),
        vertex_count_range=(4, 12),
        box_count_range=(0, 0),
        box_size_frac_range=(0.0, 0.0),
        target_coverage_range=(0.01, 0.10),
    ),
    "medium": MaskPolicy(
        kind="medium",
        stroke_count_range=(1, 4),
        brush_width_range_px=(15, 35),
        vertex_count_range=(4, 12),
        box_count_range=(0, 1),
        box_size_frac_range=(0.10, 0.25),
        target_coverage_range=(0.10, 0.30),
    ),
    "wide": MaskPolicy(
        kind="wide",
        stroke_count_range=(1, 3),
        brush_width_range_px=(30, 70),
        vertex_count_range=(4, 12),
        box_count_range=(0, 2),
        box_size_frac_range=(0.20, 0.40),
        target_coverage_range=(0.30, 0.60),
    ),
}


def default_policy(kind: str) -> MaskPolicy:
    """Built-in policy for a mask kind ('narrow', 'medium' or 'wide').

    The exact upstream evaluation-protocol hyperparameters are not public;
    these defaults are explicit approximations kept in one place so a user
    with the published settings can override them field by field.
    """
    try:
        return _DEFAULTS[kind]
    except KeyError:
        raise ValueError(f"unknown mask kind {kind!r}, expected one of {MASK_KINDS}") from None


@dataclass(frozen=True)
class MaskResult:
    """Mask plus generation diagnostics."""

    mask: np.ndarray  # (H, W, 1) float32, values in {0, 1}
    coverage: float  # fraction of hole pixels
    attempts: int
    coverage_ok: bool  # True when coverage landed inside the target range


def _iround(v: float) -> int:
    return int(math.floor(v + 0.5))


def _bresenham(y0: int, x0: int, y1: int, x1: int):
    """Integer points of the line segment, midpoint-rule Bresenham, vectorized."""
    dy, dx = y1 - y0, x1 - x0
    ady, adx = abs(dy), abs(dx)
    if adx >= ady:
        n = adx
        k = np.arange(n + 1)
        xs = x0 + np.sign(dx) * k
        ys = y0 + np.sign(dy) * ((2 * k * ady + adx) // (2 * adx)) if adx else np.full(1, y0)
    else:
        n = ady
        k = np.arange(n + 1)
        ys = y0 + np.sign(dy) * k
        xs = x0 + np.sign(dx) * ((2 * k * adx + ady) // (2 * ady))
    return np.asarray(ys, dtype=np.int64), np.asarray(xs, dtype=np.int64)


def _disc_offsets(radius: int):
    r = max(0, radius)
    span = np.arange(-r, r + 1)
    dy, dx = np.meshgrid(span, span, indexing="ij")
    keep = dy * dy + dx * dx <= r * r
    return dy[keep], dx[keep]


def _stamp(hole: np.ndarray, ys, xs, radius: int):
    """Mark disc neighborhoods of the given line points as holes."""
    h, w = hole.shape
    dy, dx = _disc_offsets(radius)
    yy = np.clip(ys[:, None] + dy[None, :], 0, h - 1).ravel()
    xx = np.clip(xs[:, None] + dx[None, :], 0, w - 1).ravel()
    hole[yy, xx] = True


def _draw_candidate(policy: MaskPolicy, h: int, w: int, rng: np.random.Generator) -> np.ndarray:
    hole = np.zeros((h, w), dtype=bool)
    scale = min(h, w) / REFERENCE_SIZE

    n_strokes = int(rng.integers(policy.stroke_count_range[0], policy.stroke_count_range[1] + 1))
    for _ in range(n_strokes):
        width = int(rng.integers(policy.brush_width_range_px[0], policy.brush_width_range_px[1] + 1))
        radius = max(1, _iround(width * scale) // 2)
        n_vertices = int(rng.integers(policy.vertex_count_range[0], policy.vertex_count_range[1] + 1))
        y = int(rng.integers(0, h))
        x = int(rng.integers(0, w))
        angle = float(rng.uniform(0.0, 2.0 * math.pi))
        for _ in range(max(1, n_vertices - 1)):
            angle += float(rng.uniform(-math.pi / 3.0, math.pi / 3.0))
            length = float(rng.uniform(w / 16.0, w / 4.0))
            y2 = min(max(_iround(y + length * math.sin(angle)), 0), h - 1)
            x2 = min(max(_iround(x + length * math.cos(angle)), 0), w - 1)
            ys, xs = _bresenham(y, x, y2, x2)
            _stamp(hole, ys, xs, radius)
            y, x = y2, x2

    if policy.box_count_range[1] > 0:
        n_boxes = int(rng.integers(policy.box_count_range[0], policy.box_count_range[1] + 1))
        for _ in range(n_boxes):
            bh = max(1, _iround(float(rng.uniform(*policy.box_size_frac_range)) * h))
            bw = max(1, _iround(float(rng.uniform(*policy.box_size_frac_range)) * w))
            top = int(rng.integers(0, max(1, h - bh + 1)))
            left = int(rng.integers(0, max(1, w - bw + 1)))
            hole[top : top + bh, left : left + bw] = True

    return hole


def generate_mask_detailed(policy: MaskPolicy, h: int, w: int, seed: int) -> MaskResult:
    """Generate a mask and report coverage diagnostics.

    Resamples up to 16 candidates; if none lands inside the target coverage
    range, the closest attempt is returned with coverage_ok=False and a
    logged warning.
    """
    if h < 32 or w < 32:
        raise ValueError(f"mask dims must be >= 32, got {h}x{w}")
    lo, hi = policy.target_coverage_range
    rng = np.random.Generator(np.random.PCG64(seed))

    best = None
    best_dist = math.inf
    attempts = 0
    for attempts in range(1, MAX_RESAMPLES + 1):
        hole = _draw_candidate(policy, h, w, rng)
        coverage = float(hole.mean())
        if lo <= coverage <= hi:
            best, best_cov, best_dist = hole, coverage, 0.0
            break
        dist = (lo - coverage) if coverage < lo else (coverage - hi)
        if dist < best_dist:
            best, best_cov, best_dist = hole, coverage, dist

    ok = best_dist == 0.0
    if not ok:
        logger.warning(
            "mask coverage %.4f outside target [%.3f, %.3f] after %d resamples (kind=%s)",
            best_cov, lo, hi, MAX_RESAMPLES, policy.kind,
        )
    # Invariant: at least one hole and one known pixel.
    if not best.any():
        best[h // 2, w // 2] = True
    if best.all():
        best[0, 0] = False

    mask = np.where(best, 0.0, 1.0).astype(np.float32)[:, :, None]
    return MaskResult(mask=mask, coverage=float(best.mean()), attempts=attempts, coverage_ok=ok)


def generate_mask(policy: MaskPolicy, h: int, w: int, seed: int) -> np.ndarray:
    """(H, W, 1) float32 binary mask; 1 = known, 0 = hole. Deterministic per seed."""
    return generate_mask_detailed(policy, h, w, seed).mask
