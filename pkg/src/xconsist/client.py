"""HTTP client for the embedding provider, plus store-filling fetch helpers.

Wire protocol (client side of the embedder service contract):

  POST {base}/v1/embed
    request:  {"modality": "text"|"image", "items": [{"key": str, "payload": str}, ...]}
              text payloads are raw strings; image payloads are base64 bytes
    response: {"model_id": str, "dim": int, "vectors": [{"key": str, "vec": [...]}, ...]}
              one vector per item, same order
  GET {base}/health -> {"status": ..., "model_id": ..., "dim": ...}

Requests are batched (default 64 items) and retried with exponential backoff
(default 3 attempts) on transport failures and 5xx responses.
"""
from __future__ import annotations

import base64
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .errors import InputError, ProviderError
from .store import EmbeddingKey, EmbeddingStore

DEFAULT_BATCH_SIZE = 64
DEFAULT_MAX_ATTEMPTS = 3


@dataclass
class EmbedderClient:
    base_url: str
    batch_size: int = DEFAULT_BATCH_SIZE
    max_attempts: int = DEFAULT_MAX_ATTEMPTS
    backoff_s: float = 0.5
    timeout_s: float = 120.0
    session: requests.Session = field(default_factory=requests.Session)

    def health(self) -> dict:
        try:
            resp = self.session.get(f"{self.base_url}/health", timeout=self.timeout_s)
        except requests.RequestException as exc:
            raise ProviderError(f"provider unreachable at {self.base_url}: {exc}")
        if resp.status_code != 200:
            raise ProviderError(f"provider unhealthy: HTTP {resp.status_code}")
        return resp.json()

    def _post_batch(self, modality: str, items: list[dict]) -> dict:
        url = f"{self.base_url}/v1/embed"
        body = {"modality": modality, "items": items}
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                time.sleep(self.backoff_s * 2 ** (attempt - 1))
            try:
                resp = self.session.post(url, json=body, timeout=self.timeout_s)
            except requests.RequestException as exc:
                last_error = exc
                continue
            if resp.status_code >= 500:
                last_error = ProviderError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                continue
            if resp.status_code != 200:
                # 4xx will not improve on retry
                raise ProviderError(
                    f"provider rejected request: HTTP {resp.status_code}: {resp.text[:200]}"
                )
            return resp.json()
        raise ProviderError(
            f"provider failed after {self.max_attempts} attempts: {last_error}"
        )

    def embed(self, modality: str, items: list[tuple[str, str]]) -> tuple[str, int, list[list[float]]]:
        """Embed (key, payload) items, batching transparently.

        Returns (model_id, dim, vectors) with vectors in request order.
        """
        if not items:
            raise InputError("embed called with an empty item list")
        model_id: str | None = None
        dim: int | None = None
        vectors: list[list[float]] = []
        for start in range(0, len(items), self.batch_size):
            batch = items[start : start + self.batch_size]
            payload = [{"key": k, "payload": p} for k, p in batch]
            reply = self._post_batch(modality, payload)
            try:
                got_model = reply["model_id"]
                got_dim = int(reply["dim"])
                got_vectors = reply["vectors"]
            except (KeyError, TypeError) as exc:
                raise ProviderError(f"malformed provider response: missing {exc}")
            if len(got_vectors) != len(batch):
                raise ProviderError(
                    f"provider returned {len(got_vectors)} vectors for a {len(batch)}-item batch"
                )
            for (key, _), entry in zip(batch, got_vectors):
                if entry.get("key") != key:
                    raise ProviderError(
                        f"provider response out of order: expected key {key!r}, got {entry.get('key')!r}"
                    )
            if model_id is None:
                model_id, dim = got_model, got_dim
            elif (got_model, got_dim) != (model_id, dim):
                raise ProviderError(
                    f"provider changed identity mid-run: {model_id}/{dim} -> {got_model}/{got_dim}"
                )
            vectors.extend(entry["vec"] for entry in got_vectors)
        assert model_id is not None and dim is not None
        return model_id, dim, vectors


def _merge(store: EmbeddingStore, model_id: str, dim: int,
           keys: list[EmbeddingKey], vectors: list[list[float]]) -> int:
    if store.dim is not None and dim != store.dim:
        raise ProviderError(f"provider dim {dim} disagrees with store dim {store.dim}")
    if store.extractor_id and store.extractor_id != model_id:
        raise ProviderError(
            f"provider model {model_id!r} disagrees with store extractor {store.extractor_id!r}"
        )
    store.extractor_id = model_id
    for key, vec in zip(keys, vectors):
        store.put(key, vec)
    return len(keys)


def fetch_text_embeddings(
    client: EmbedderClient,
    store: EmbeddingStore,
    surfaces: list[tuple[EmbeddingKey, str]],
) -> int:
    """Fetch one text vector per (key, surface) pair into the store.

    Returns the number of entries written.
    """
    if not surfaces:
        raise InputError("no text surfaces to embed")
    items = [(str(key), surface) for key, surface in surfaces]
    model_id, dim, vectors = client.embed("text", items)
    return _merge(store, model_id, dim, [k for k, _ in surfaces], vectors)


def fetch_image_embeddings(
    client: EmbedderClient,
    store: EmbeddingStore,
    images: list[tuple[EmbeddingKey, str | Path]],
) -> int:
    """Fetch one image vector per (key, image file) pair into the store.

    Image bytes are base64-encoded on the wire. Returns the number of entries
    written.
    """
    if not images:
        raise InputError("no images to embed")
    items: list[tuple[str, str]] = []
    for key, img_path in images:
        try:
            raw = Path(img_path).read_bytes()
        except OSError as exc:
            raise InputError(f"unreadable image file {img_path}: {exc}")
        items.append((str(key), base64.b64encode(raw).decode("ascii")))
    model_id, dim, vectors = client.embed("image", items)
    return _merge(store, model_id, dim, [k for k, _ in images], vectors)
