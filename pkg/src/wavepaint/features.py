"""Convolutional feature extractor with externally supplied weights.

Plugs into the same injectable-extractor interface as IdentityExtractor
(callable returning a list of channels-last feature tensors, plus
layer_weights). Weights travel in the checkpoint tensor container, so
"real" perceptual metrics never require network downloads: anyone holding
pretrained backbone convolutions can convert them offline and load them
here.

Container schema: JSON block {"kind": "conv_feature_extractor",
"strides": [s_0, ...], "layer_weights": [w_0, ...]}; tensors named
"layers/<i>/weight" (out, in, k, k) and "layers/<i>/bias" (out,).
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F

from .checkpoint import CheckpointError, read_tensor_file, write_tensor_file

__all__ = ["ConvFeatureExtractor", "save_feature_extractor", "load_feature_extractor"]

KIND = "conv_feature_extractor"


class ConvFeatureExtractor:
    """Fixed conv stack; features are taken after every layer's ReLU."""

    def __init__(self, weights, biases, strides, layer_weights=None):
        if not weights or len(weights) != len(biases) or len(weights) != len(strides):
            raise ValueError("need matching, non-empty weight/bias/stride lists")
        self.weights = [torch.as_tensor(np.asarray(w, dtype=np.float32)) for w in weights]
        self.biases = [torch.as_tensor(np.asarray(b, dtype=np.float32)) for b in biases]
        self.strides = [int(s) for s in strides]
        self.layer_weights = tuple(
            float(w) for w in (layer_weights if layer_weights is not None else [1.0] * len(weights))
        )
        if len(self.layer_weights) != len(self.weights):
            raise ValueError("layer_weights length must match layer count")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.dim() != 4 or b.dim() != 1 or w.shape[0] != b.shape[0]:
                raise ValueError(f"layer {i}: weight {tuple(w.shape)} / bias {tuple(b.shape)}")

    def __call__(self, image):
        t = image if isinstance(image, torch.Tensor) else torch.as_tensor(np.asarray(image))
        squeeze = t.dim() == 3
        if squeeze:
            t = t.unsqueeze(0)
        x = t.permute(0, 3, 1, 2)  # channels-last in, NCHW inside
        feats = []
        for w, b, s in zip(self.weights, self.biases, self.strides):
            pad = w.shape[-1] // 2
            x = F.relu(F.conv2d(x, w.to(x.dtype), b.to(x.dtype), stride=s, padding=pad))
            f = x.permute(0, 2, 3, 1)
            feats.append(f.squeeze(0) if squeeze else f)
        return feats


def save_feature_extractor(path, fx: ConvFeatureExtractor) -> None:
    config = {
        "kind": KIND,
        "strides": fx.strides,
        "layer_weights": list(fx.layer_weights),
    }
    tensors = {}
    for i, (w, b) in enumerate(zip(fx.weights, fx.biases)):
        tensors[f"layers/{i:02d}/weight"] = w.numpy()
        tensors[f"layers/{i:02d}/bias"] = b.numpy()
    write_tensor_file(path, config, tensors)


def load_feature_extractor(path) -> ConvFeatureExtractor:
    config, tensors = read_tensor_file(path)
    if config.get("kind") != KIND:
        raise CheckpointError(f"not a feature-extractor container: kind={config.get('kind')!r}")
    strides = config["strides"]
    weights, biases = [], []
    for i in range(len(strides)):
        try:
            weights.append(tensors[f"layers/{i:02d}/weight"])
            biases.append(tensors[f"layers/{i:02d}/bias"])
        except KeyError as e:
            raise CheckpointError(f"missing tensor for layer {i}: {e}") from e
    return ConvFeatureExtractor(weights, biases, strides, config.get("layer_weights"))
