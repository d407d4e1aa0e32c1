"""Encoder backends for the embedding service.

The production backend wraps two sentence-transformers checkpoints sharing the
CLIP ViT-B/32 embedding space: a multilingual text encoder and the CLIP image
encoder. Checkpoints can be pinned to exact revisions via environment
variables; whatever was actually loaded is reported in the per-modality model
ids, so clients can trust the provenance they record.

Environment:
    EMBEDDER_TEXT_MODEL      (default sentence-transformers/clip-ViT-B-32-multilingual-v1)
    EMBEDDER_IMAGE_MODEL     (default sentence-transformers/clip-ViT-B-32)
    EMBEDDER_TEXT_REVISION   (optional commit hash to pin)
    EMBEDDER_IMAGE_REVISION  (optional commit hash to pin)

``HashBackend`` is a test-only stand-in that derives vectors from SHA-256 of
the payload; its model ids are unmistakably synthetic. It exists so the HTTP
contract can be exercised without model downloads, never as a substitute for
real embeddings.
"""
from __future__ import annotations

import hashlib
import os

import numpy as np
from PIL import Image

DEFAULT_TEXT_MODEL = "sentence-transformers/clip-ViT-B-32-multilingual-v1"
DEFAULT_IMAGE_MODEL = "sentence-transformers/clip-ViT-B-32"


class SentenceTransformerBackend:
    """Real text/image encoders, loaded in deterministic eval mode."""

    def __init__(
        self,
        text_model: str = DEFAULT_TEXT_MODEL,
        image_model: str = DEFAULT_IMAGE_MODEL,
        text_revision: str | None = None,
        image_revision: str | None = None,
    ) -> None:
        import torch
        from sentence_transformers import SentenceTransformer

        torch.set_grad_enabled(False)
        self._text = SentenceTransformer(text_model, revision=text_revision, device="cpu")
        self._image = SentenceTransformer(image_model, revision=image_revision, device="cpu")
        self._text.eval()
        self._image.eval()
        self.text_model_id = text_model + (f"@{text_revision}" if text_revision else "")
        self.image_model_id = image_model + (f"@{image_revision}" if image_revision else "")
        self.text_dim = int(self._text.get_sentence_embedding_dimension())
        probe = self._image.encode([Image.new("RGB", (8, 8))], convert_to_numpy=True)
        self.image_dim = int(probe.shape[1])

    def encode_text(self, texts: list[str]) -> np.ndarray:
        return np.asarray(
            self._text.encode(texts, convert_to_numpy=True, batch_size=32, show_progress_bar=False),
            dtype=np.float64,
        )

    def encode_images(self, images: list[Image.Image]) -> np.ndarray:
        return np.asarray(
            self._image.encode(images, convert_to_numpy=True, batch_size=16, show_progress_bar=False),
            dtype=np.float64,
        )


def backend_from_env() -> SentenceTransformerBackend:
    return SentenceTransformerBackend(
        text_model=os.environ.get("EMBEDDER_TEXT_MODEL", DEFAULT_TEXT_MODEL),
        image_model=os.environ.get("EMBEDDER_IMAGE_MODEL", DEFAULT_IMAGE_MODEL),
        text_revision=os.environ.get("EMBEDDER_TEXT_REVISION") or None,
        image_revision=os.environ.get("EMBEDDER_IMAGE_REVISION") or None,
    )


def _digest_vector(digest: bytes, dim: int) -> list[float]:
    stretched = digest
    while len(stretched) < 4 * dim:
        stretched += hashlib.sha256(stretched).digest()
    return [int.from_bytes(stretched[4 * i : 4 * i + 4], "big") / 2**32 - 0.5 for i in range(dim)]


class HashBackend:
    """Deterministic synthetic encoder for contract tests. Not a real model."""

    def __init__(self, dim: int = 64) -> None:
        self.dim = dim
        self.text_model_id = f"deterministic-hash-text-{dim}"
        self.image_model_id = f"deterministic-hash-image-{dim}"
        self.text_dim = dim
        self.image_dim = dim

    def encode_text(self, texts: list[str]) -> np.ndarray:
        return np.array(
            [_digest_vector(hashlib.sha256(t.encode("utf-8")).digest(), self.dim) for t in texts]
        )

    def encode_images(self, images: list[Image.Image]) -> np.ndarray:
        rows = []
        for img in images:
            digest = hashlib.sha256(img.size.__repr__().encode() + img.tobytes()).digest()
            rows.append(_digest_vector(digest, self.dim))
        return np.array(rows)
