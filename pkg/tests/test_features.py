"""Pluggable conv feature extractor: container round trip, LPIPS integration."""

import numpy as np
import pytest
import torch

from wavepaint.checkpoint import CheckpointError
from wavepaint.features import (
    ConvFeatureExtractor,
    load_feature_extractor,
    save_feature_extractor,
)
from wavepaint.losses import lpips_distance
from wavepaint.metrics import fid, pooled_features


@pytest.fixture
def fx(rng):
    w1 = rng.normal(size=(4, 3, 3, 3)).astype(np.float32) * 0.3
    b1 = rng.normal(size=4).astype(np.float32) * 0.1
    w2 = rng.normal(size=(6, 4, 3, 3)).astype(np.float32) * 0.3
    b2 = rng.normal(size=6).astype(np.float32) * 0.1
    return ConvFeatureExtractor([w1, w2], [b1, b2], strides=[1, 2], layer_weights=[1.0, 0.5])


class TestExtractor:
    def test_feature_shapes(self, fx, rng):
        img = rng.random((16, 16, 3)).astype(np.float32)
        feats = fx(img)
        assert len(feats) == 2
        assert tuple(feats[0].shape) == (16, 16, 4)
        assert tuple(feats[1].shape) == (8, 8, 6)

    def test_batched_input(self, fx, rng):
        imgs = torch.rand(2, 16, 16, 3)
        feats = fx(imgs)
        assert tuple(feats[0].shape) == (2, 16, 16, 4)

    def test_deterministic(self, fx, rng):
        img = rng.random((8, 8, 3)).astype(np.float32)
        a = fx(img)
        b = fx(img)
        for fa, fb in zip(a, b):
            assert torch.equal(fa, fb)

    def test_validation(self, rng):
        w = rng.normal(size=(4, 3, 3, 3)).astype(np.float32)
        b = rng.normal(size=4).astype(np.float32)
        with pytest.raises(ValueError):
            ConvFeatureExtractor([], [], [])
        with pytest.raises(ValueError):
            ConvFeatureExtractor([w], [b], [1], layer_weights=[1.0, 2.0])
        with pytest.raises(ValueError):
            ConvFeatureExtractor([w], [rng.normal(size=5).astype(np.float32)], [1])


class TestContainer:
    def test_save_load_roundtrip(self, fx, tmp_path, rng):
        path = tmp_path / "fx.wvpt"
        save_feature_extractor(path, fx)
        loaded = load_feature_extractor(path)
        assert loaded.strides == fx.strides
        assert loaded.layer_weights == fx.layer_weights
        img = rng.random((16, 16, 3)).astype(np.float32)
        for fa, fb in zip(fx(img), loaded(img)):
            assert torch.equal(fa, fb)

    def test_wrong_kind_rejected(self, tmp_path):
        from wavepaint.checkpoint import write_tensor_file

        path = tmp_path / "notfx.wvpt"
        write_tensor_file(path, {"kind": "something_else"}, {})
        with pytest.raises(CheckpointError, match="not a feature-extractor"):
            load_feature_extractor(path)


class TestMetricIntegration:
    def test_lpips_with_conv_features(self, fx, rng):
        a = rng.random((16, 16, 3)).astype(np.float32)
        b = rng.random((16, 16, 3)).astype(np.float32)
        assert lpips_distance(a, a, fx) == pytest.approx(0.0, abs=1e-12)
        d_ab = lpips_distance(a, b, fx)
        assert d_ab > 0
        assert d_ab == pytest.approx(lpips_distance(b, a, fx), rel=1e-6)

    def test_fid_over_conv_features(self, fx, rng):
        group_a = [rng.random((16, 16, 3)).astype(np.float32) for _ in range(12)]
        group_b = [rng.random((16, 16, 3)).astype(np.float32) * 0.5 for _ in range(12)]
        fa = pooled_features(group_a, fx)
        fb = pooled_features(group_b, fx)
        assert fa.shape == (12, 10)  # 4 + 6 channels pooled
        assert fid(fa, fa) == pytest.approx(0.0, abs=1e-9)
        assert fid(fa, fb) > 0
