"""HTTP service: endpoints, error codes, concurrency determinism, known pixels."""

import base64
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
import torch
from fastapi.testclient import TestClient

from wavepaint import imageio
from wavepaint.checkpoint import Checkpoint, save_checkpoint
from wavepaint.model import ModelConfig, WavePaint
from wavepaint.service import create_app

from util import make_test_image


@pytest.fixture(scope="module")
def ckpt_path(tmp_path_factory):
    torch.manual_seed(9)
    model = WavePaint(ModelConfig(modules=1, blocks_per_module=1, embed_dim=8))
    path = tmp_path_factory.mktemp("svc") / "model.wvpt"
    save_checkpoint(path, Checkpoint.from_model(model, epoch=2))
    return path


@pytest.fixture(scope="module")
def client(ckpt_path):
    app = create_app(ckpt_path=ckpt_path)
    with TestClient(app) as c:
        yield c


def encode_request(image, mask):
    return {
        "image": imageio.bytes_to_b64(imageio.encode_image_png(image)),
        "mask": imageio.bytes_to_b64(imageio.encode_mask_png(mask)),
    }


class TestHealth:
    def test_before_model_load_503(self):
        app = create_app(ckpt_path=None)
        with TestClient(app) as c:
            assert c.get("/v1/health").status_code == 503

    def test_after_load_reports_config(self, client):
        res = client.get("/v1/health")
        assert res.status_code == 200
        body = res.json()
        assert body["status"] == "ok"
        assert body["model"] == "model"
        assert body["config"]["embed_dim"] == 8
        assert body["config"]["epoch"] == 2


class TestInpaint:
    def test_all_known_mask_roundtrips_bytes(self, client):
        img = make_test_image(64, 64)
        res = client.post("/v1/inpaint", json=encode_request(img, np.ones((64, 64, 1))))
        assert res.status_code == 200
        body = res.json()
        out = imageio.decode_image_png_u8(imageio.b64_to_bytes(body["image"]))
        expected = (np.clip(np.rint(img * 255), 0, 255)).astype(np.uint8)
        assert np.array_equal(out, expected)
        assert body["timing_ms"] > 0
        assert body["model"] == "model"

    def test_known_pixels_bitwise_with_holes(self, client):
        img = make_test_image(64, 64)
        mask = np.ones((64, 64, 1), np.float32)
        mask[10:30, 15:45, 0] = 0.0
        res = client.post("/v1/inpaint", json=encode_request(img, mask))
        assert res.status_code == 200
        out = imageio.decode_image_png_u8(imageio.b64_to_bytes(res.json()["image"]))
        src = (np.clip(np.rint(img * 255), 0, 255)).astype(np.uint8)
        known = np.broadcast_to(mask >= 0.5, out.shape)
        assert np.array_equal(out[known], src[known])
        assert not np.array_equal(out, src)

    def test_non_divisible_dims_padded_invisibly(self, client):
        img = make_test_image(50, 46)
        mask = np.ones((50, 46, 1), np.float32)
        mask[20:35, 10:30, 0] = 0.0
        res = client.post("/v1/inpaint", json=encode_request(img, mask))
        assert res.status_code == 200
        out = imageio.decode_image_png_u8(imageio.b64_to_bytes(res.json()["image"]))
        assert out.shape == (50, 46, 3)
        src = (np.clip(np.rint(img * 255), 0, 255)).astype(np.uint8)
        known = np.broadcast_to(mask >= 0.5, out.shape)
        assert np.array_equal(out[known], src[known])

    def test_dim_mismatch_400(self, client):
        img = make_test_image(64, 64)
        res = client.post("/v1/inpaint", json=encode_request(img, np.ones((32, 32, 1))))
        assert res.status_code == 400
        assert "dims" in res.json()["detail"]

    def test_bad_base64_400(self, client):
        res = client.post("/v1/inpaint", json={"image": "!!!not-base64!!!", "mask": "alsobad"})
        assert res.status_code == 400

    def test_not_png_400(self, client):
        junk = imageio.bytes_to_b64(b"this is not a png")
        res = client.post("/v1/inpaint", json={"image": junk, "mask": junk})
        assert res.status_code == 400

    def test_payload_above_cap_413(self, ckpt_path):
        app = create_app(ckpt_path=ckpt_path, max_request_bytes=1024)
        with TestClient(app) as c:
            img = make_test_image(64, 64)
            res = c.post("/v1/inpaint", json=encode_request(img, np.ones((64, 64, 1))))
            assert res.status_code == 413

    def test_model_not_loaded_503(self):
        app = create_app(ckpt_path=None)
        with TestClient(app) as c:
            img = make_test_image(64, 64)
            res = c.post("/v1/inpaint", json=encode_request(img, np.ones((64, 64, 1))))
            assert res.status_code == 503

    def test_concurrent_identical_requests_identical_images(self, client):
        img = make_test_image(64, 64)
        mask = np.ones((64, 64, 1), np.float32)
        mask[24:40, 24:40, 0] = 0.0
        payload = encode_request(img, mask)

        def call(_):
            res = client.post("/v1/inpaint", json=payload)
            assert res.status_code == 200
            return res.json()["image"]

        with ThreadPoolExecutor(max_workers=8) as pool:
            images = list(pool.map(call, range(8)))
        assert len(set(images)) == 1


class TestStatic:
    def test_fallback_page(self, client):
        res = client.get("/")
        assert res.status_code == 200
        assert "wavepaint" in res.text

    def test_static_dir_mounted(self, ckpt_path, tmp_path):
        ui = tmp_path / "ui"
        ui.mkdir()
        (ui / "index.html").write_text("<html><body>painter</body></html>")
        app = create_app(ckpt_path=ckpt_path, static_dir=ui)
        with TestClient(app) as c:
            res = c.get("/")
            assert res.status_code == 200
            assert "painter" in res.text


class TestRequestValidation:
    def test_missing_fields_422(self, client):
        assert client.post("/v1/inpaint", json={"image": "aGk="}).status_code == 422

    def test_base64_expansion_base(self):
        # payload cap applies to the encoded payload, before decode
        raw = b"x" * 300
        assert len(base64.b64encode(raw)) == 400
