"""API contract tests, run against a deterministic test backend.

These pin the wire behavior (shapes, ordering, determinism, status codes)
without needing model downloads; the same properties are re-checked against
the real checkpoints in test_live.py when those are available.
"""
from __future__ import annotations

import base64
import io
import random
import threading
import time

import pytest
from fastapi.testclient import TestClient
from PIL import Image

from embedder_service import HashBackend, create_app


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app(backend=HashBackend(dim=16))) as c:
        yield c


def embed(client, payloads, modality="text", keys=None, expect=200):
    keys = keys or [f"k{i}" for i in range(len(payloads))]
    body = {
        "modality": modality,
        "items": [{"key": k, "payload": p} for k, p in zip(keys, payloads)],
    }
    response = client.post("/v1/embed", json=body)
    assert response.status_code == expect, response.text
    return response.json()


def png_bytes(color) -> str:
    img = Image.new("RGB", (4, 4), color)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def test_health_reports_models_and_dim(client):
    report = client.get("/health").json()
    assert report["status"] == "ok"
    assert report["model_id"].startswith("deterministic-hash")
    assert report["dim"] == 16
    assert report["models"]["image"]["dim"] == 16


def test_single_text_item_shape(client):
    reply = embed(client, ["rock"])
    assert reply["dim"] == 16
    assert len(reply["vectors"]) == 1
    assert reply["vectors"][0]["key"] == "k0"
    assert len(reply["vectors"][0]["vec"]) == reply["dim"]


def test_health_dim_matches_embed_dim(client):
    assert client.get("/health").json()["dim"] == embed(client, ["x"])["dim"]


def test_identical_request_identical_vectors(client):
    first = embed(client, ["rock", "岩", "ロック"])
    second = embed(client, ["rock", "岩", "ロック"])
    assert first == second


def test_determinism_and_order_over_randomized_batches(client):
    pool = ["rock", "岩", "ロック", "tienda de acampar", "先生", "emparedado"] + [
        f"word-{i}" for i in range(40)
    ]
    reference = {p: embed(client, [p])["vectors"][0]["vec"] for p in pool}

    rng = random.Random(20240901)
    for trial in range(100):
        batch = [rng.choice(pool) for _ in range(rng.randint(1, 64))]
        keys = [f"t{trial}-{i}" for i in range(len(batch))]
        reply = embed(client, batch, keys=keys)
        assert [v["key"] for v in reply["vectors"]] == keys  # order preserved
        for payload, entry in zip(batch, reply["vectors"]):
            assert entry["vec"] == reference[payload]  # identical payload, identical vector


def test_empty_items_is_400(client):
    assert client.post("/v1/embed", json={"modality": "text", "items": []}).status_code == 400


def test_malformed_body_is_400(client):
    assert client.post("/v1/embed", json={"modality": "smell"}).status_code == 400
    response = client.post(
        "/v1/embed",
        content=b"{not json",
        headers={"Content-Type": "application/json"},
    )
    assert response.status_code == 400


def test_oversize_batch_is_413(client):
    embed(client, [f"w{i}" for i in range(65)], expect=413)


def test_unknown_model_is_400(client):
    body = {
        "modality": "text",
        "items": [{"key": "k", "payload": "x"}],
        "model": "some-other-model",
    }
    response = client.post("/v1/embed", json=body)
    assert response.status_code == 400
    assert "not served" in response.json()["detail"]


def test_image_embedding_deterministic(client):
    red = png_bytes((200, 20, 20))
    reply = embed(client, [red, red], modality="image")
    assert reply["model_id"].startswith("deterministic-hash-image")
    assert reply["vectors"][0]["vec"] == reply["vectors"][1]["vec"]
    other = embed(client, [png_bytes((20, 200, 20))], modality="image")
    assert other["vectors"][0]["vec"] != reply["vectors"][0]["vec"]


def test_undecodable_image_is_422(client):
    reply = embed(client, ["!!!not base64!!!"], modality="image", expect=422)
    assert "undecodable image" in reply["detail"]
    not_an_image = base64.b64encode(b"plain text bytes").decode("ascii")
    embed(client, [not_an_image], modality="image", expect=422)


def test_failed_model_load_is_503():
    def broken():
        raise RuntimeError("checkpoint missing")

    with TestClient(create_app(backend_factory=broken)) as c:
        for _ in range(100):
            if not c.get("/health").json().get("detail", "").startswith("loading"):
                break
            time.sleep(0.01)
        health = c.get("/health")
        assert health.status_code == 503
        assert "checkpoint missing" in health.json()["detail"]
        body = {"modality": "text", "items": [{"key": "k", "payload": "x"}]}
        assert c.post("/v1/embed", json=body).status_code == 503


def test_warmup_is_503_until_loaded():
    release = threading.Event()

    def slow():
        release.wait(timeout=10)
        return HashBackend(dim=8)

    with TestClient(create_app(backend_factory=slow)) as c:
        first = c.get("/health")
        assert first.status_code == 503
        assert "loading" in first.json()["detail"]
        release.set()
        for _ in range(200):
            if c.get("/health").status_code == 200:
                break
            time.sleep(0.01)
        final = c.get("/health")
        assert final.status_code == 200
        assert final.json()["dim"] == 8
