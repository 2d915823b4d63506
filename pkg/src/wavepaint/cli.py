"""Command-line front door.

Subcommands: train, infer, eval, genmask, serve. `infer` can also act as a
thin client against a running service via --server. All failures exit
nonzero with a one-line diagnostic on stderr.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import imageio
from .inference import load_model, inpaint_u8
from .losses import IdentityExtractor, LossWeights, l1_loss, l2_loss, lpips_distance, psnr
from .masks import MASK_KINDS, default_policy, generate_mask
from .metrics import fid, pooled_features
from .model import ModelConfig
from .service import configure_logging, create_app
from .training import TrainConfig, TrainingError, run_training

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".webp"}


class CliError(click.ClickException):
    pass


@click.group()
def cli():
    """Wavelet-token-mixing image inpainting toolkit."""
    configure_logging()


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="JSON run config")
def train(config_path):
    """Train a model from a JSON config with `model`, `train` and `loss` sections."""
    path = Path(config_path)
    if not path.is_file():
        raise CliError(f"missing file: {path}")
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise CliError(f"malformed config {path}: {e}")
    try:
        mcfg = ModelConfig.from_dict(cfg.get("model", {}))
        tcfg = TrainConfig.from_dict(cfg.get("train", {}))
        weights = LossWeights.from_dict(cfg.get("loss", {}))
    except (TypeError, ValueError) as e:
        raise CliError(f"malformed config {path}: {e}")
    try:
        final = run_training(tcfg, mcfg, weights)
    except TrainingError as e:
        raise CliError(str(e))
    click.echo(f"trained {final.epoch} epochs -> {Path(tcfg.out_dir).resolve()}")


@cli.command()
@click.option("--ckpt", type=click.Path(), default=None, help="checkpoint file")
@click.option("--image", "image_path", required=True, type=click.Path())
@click.option("--mask", "mask_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--server", default=None, help="inpaint via a running service instead of a local checkpoint")
def infer(ckpt, image_path, mask_path, out_path, server):
    """Inpaint one image with one mask."""
    for p in (image_path, mask_path):
        if not Path(p).is_file():
            raise CliError(f"missing file: {p}")
    if (ckpt is None) == (server is None):
        raise CliError("exactly one of --ckpt or --server is required")

    if server is not None:
        _infer_remote(server, image_path, mask_path, out_path)
        return

    if not Path(ckpt).is_file():
        raise CliError(f"missing file: {ckpt}")
    lm = _load(ckpt)
    image_u8 = (imageio.load_image(image_path) * 255).astype(np.uint8)
    mask_u8 = (imageio.load_mask(mask_path)[:, :, 0] * 255).astype(np.uint8)
    try:
        out_u8, elapsed = inpaint_u8(lm, image_u8, mask_u8)
    except ValueError as e:
        raise CliError(str(e))
    imageio.save_image(out_path, out_u8)
    click.echo(f"wrote {out_path} ({elapsed:.1f} ms)")


def _infer_remote(server, image_path, mask_path, out_path):
    import urllib.error
    import urllib.request

    payload = json.dumps(
        {
            "image": imageio.bytes_to_b64(Path(image_path).read_bytes()),
            "mask": imageio.bytes_to_b64(Path(mask_path).read_bytes()),
        }
    ).encode("utf-8")
    req = urllib.request.Request(
        server.rstrip("/") + "/v1/inpaint",
        data=payload,
        headers={"Content-Type": "application/json"},
    )
    try:
        with urllib.request.urlopen(req) as resp:
            body = json.loads(resp.read().decode("utf-8"))
    except urllib.error.URLError as e:
        raise CliError(f"server request failed: {e}")
    Path(out_path).write_bytes(imageio.b64_to_bytes(body["image"]))
    click.echo(f"wrote {out_path} ({body.get('timing_ms', 0):.1f} ms, remote)")


def _load(ckpt):
    from .checkpoint import CheckpointError

    try:
        return load_model(ckpt)
    except CheckpointError as e:
        raise CliError(f"bad checkpoint {ckpt}: {e}")


def _fmt(value: float) -> str:
    return "exact" if math.isinf(value) else f"{value:.6f}"


@cli.command(name="eval")
@click.option("--ckpt", required=True, type=click.Path())
@click.option("--dir", "image_dir", required=True, type=click.Path())
@click.option("--mask-kind", type=click.Choice(MASK_KINDS), default="medium", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--report", "report_path", required=True, type=click.Path())
def eval_cmd(ckpt, image_dir, mask_kind, seed, report_path):
    """Inpaint every image in a directory with generated masks; write a metrics report."""
    if not Path(ckpt).is_file():
        raise CliError(f"missing file: {ckpt}")
    root = Path(image_dir)
    if not root.is_dir():
        raise CliError(f"missing directory: {image_dir}")
    paths = sorted(p for p in root.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not paths:
        raise CliError(f"no images in {image_dir}")

    lm = _load(ckpt)
    policy = default_policy(mask_kind)
    fx = IdentityExtractor()

    rows = []
    originals = []
    results = []
    for i, p in enumerate(paths):
        image_u8 = (imageio.load_image(p) * 255).astype(np.uint8)
        h, w = image_u8.shape[:2]
        mask = generate_mask(policy, h, w, seed + i)
        mask_u8 = (mask[:, :, 0] * 255).astype(np.uint8)
        out_u8, _ = inpaint_u8(lm, image_u8, mask_u8)
        a = out_u8.astype(np.float32) / 255.0
        b = image_u8.astype(np.float32) / 255.0
        rows.append(
            (p.name, l1_loss(a, b), l2_loss(a, b), lpips_distance(a, b, fx), psnr(a, b))
        )
        originals.append(b)
        results.append(a)

    feat_a = pooled_features(results, fx)
    feat_b = pooled_features(originals, fx)
    aggregate_fid = fid(feat_a, feat_b)

    lines = ["file\tl1\tl2\tlpips\tpsnr"]
    for name, v1, v2, vp, vpsnr in rows:
        lines.append(f"{name}\t{v1:.6f}\t{v2:.6f}\t{vp:.6f}\t{_fmt(vpsnr)}")
    lines.append("")
    lines.append("# aggregate")
    lines.append(f"images\t{len(rows)}")
    lines.append(f"mask_kind\t{mask_kind}")
    lines.append(f"mean_l1\t{np.mean([r[1] for r in rows]):.6f}")
    lines.append(f"mean_l2\t{np.mean([r[2] for r in rows]):.6f}")
    lines.append(f"mean_lpips\t{np.mean([r[3] for r in rows]):.6f}")
    lines.append(f"fid\t{aggregate_fid:.6f}")
    Path(report_path).write_text("\n".join(lines) + "\n")
    click.echo(f"evaluated {len(rows)} images -> {report_path}")


@cli.command()
@click.option("--kind", type=click.Choice(MASK_KINDS), required=True)
@click.option("--height", type=int, required=True)
@click.option("--width", type=int, required=True)
@click.option("--seed", type=int, required=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def genmask(kind, height, width, seed, out_path):
    """Generate a deterministic mask PNG (0 = hole, 255 = known)."""
    try:
        mask = generate_mask(default_policy(kind), height, width, seed)
    except ValueError as e:
        raise CliError(str(e))
    imageio.save_mask(out_path, mask)
    click.echo(f"wrote {out_path} (coverage {1.0 - float(mask.mean()):.3f})")


@cli.command()
@click.option("--ckpt", required=True, type=click.Path())
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--static-dir", type=click.Path(), default=None, help="built web UI directory")
@click.option("--workers", type=int, default=2, show_default=True, help="bounded inference pool size")
def serve(ckpt, port, host, static_dir, workers):
    """Run the HTTP inference service."""
    import uvicorn

    if not Path(ckpt).is_file():
        raise CliError(f"missing file: {ckpt}")
    from .checkpoint import CheckpointError

    try:
        app = create_app(ckpt_path=ckpt, static_dir=static_dir, workers=workers)
    except CheckpointError as e:
        raise CliError(f"bad checkpoint {ckpt}: {e}")
    uvicorn.run(app, host=host, port=port)


def main():
    try:
        cli(standalone_mode=False)
    except click.ClickException as e:
        click.echo(f"error: {e.format_message()}", err=True)
        sys.exit(e.exit_code if e.exit_code else 1)
    except click.Abort:
        sys.exit(130)
    except Exception as e:  # one-line diagnostic, nonzero exit
        click.echo(f"error: {e}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
