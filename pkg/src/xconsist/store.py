"""Typed storage and JSONL persistence for text/image embedding vectors.

Vectors are stored exactly as produced by the extractor -- never renormalized
on ingestion -- so provenance is preserved; cosine similarity normalizes at
computation time. One store holds vectors of a single dimension from a single
extractor.

File format: first line is a header ``{"dim": D, "extractor_id": "..."}``,
then one JSON object per entry:
``{"concept": ..., "language": ..., "variant": "original|corrected|pseudo:K",
"modality": "text|image", "index": i, "vec": [...]}``. Components are written
with full decimal round-trip, so save/load is lossless. Later lines override
earlier ones for the same key (append-friendly).
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError
from .ioutil import atomic_write_text


class Modality(enum.Enum):
    TEXT = "text"
    IMAGE = "image"

    @classmethod
    def parse(cls, tag: str) -> "Modality":
        for member in cls:
            if member.value == tag:
                return member
        raise InputError(f"unknown modality {tag!r} (expected 'text' or 'image')")


@dataclass(frozen=True)
class EmbeddingKey:
    """Address of one vector: (concept, language, variant, modality, index).

    ``index`` is the image sample position within a population; text keys
    always use index 0.
    """

    concept: str
    language: str
    variant: str
    modality: Modality
    index: int = 0

    def __post_init__(self) -> None:
        if self.index < 0:
            raise InputError(f"embedding index must be >= 0, got {self.index}")
        if self.modality is Modality.TEXT and self.index != 0:
            raise InputError(f"text keys must have index 0, got {self.index}")

    def __str__(self) -> str:
        return f"{self.concept}|{self.language}|{self.variant}|{self.modality.value}|{self.index}"

    def sort_key(self) -> tuple[str, str, str, str, int]:
        return (self.concept, self.language, self.variant, self.modality.value, self.index)


def text_key(concept: str, language: str, variant: str = "original") -> EmbeddingKey:
    return EmbeddingKey(concept, language, variant, Modality.TEXT, 0)


def image_key(concept: str, language: str, variant: str, index: int) -> EmbeddingKey:
    return EmbeddingKey(concept, language, variant, Modality.IMAGE, index)


def _check_vector(vec) -> np.ndarray:
    arr = np.asarray(vec, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InputError(f"embedding vector must be a non-empty 1-D array, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise InputError("embedding vector contains NaN or Inf components")
    return arr


@dataclass
class EmbeddingStore:
    """In-memory map of EmbeddingKey -> vector with a uniform dimension.

    ``dim`` is None for a brand-new store and is fixed by the first put.
    ``extractor_id`` names the model that produced the vectors; it is set by
    the provider client on first fetch. Reads are safe concurrently; mutation
    requires exclusive access.
    """

    dim: int | None = None
    extractor_id: str = ""
    entries: dict[EmbeddingKey, np.ndarray] = field(default_factory=dict)

    def put(self, key: EmbeddingKey, vec) -> None:
        arr = _check_vector(vec)
        if self.dim is None:
            self.dim = arr.size
        elif arr.size != self.dim:
            raise InputError(
                f"dimension mismatch: store dim {self.dim}, vector dim {arr.size} (key {key})"
            )
        self.entries[key] = arr

    def get(self, key: EmbeddingKey) -> np.ndarray | None:
        return self.entries.get(key)

    def __contains__(self, key: EmbeddingKey) -> bool:
        return key in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def keys(self):
        return self.entries.keys()

    def population_keys(self, concept: str, language: str, variant: str) -> list[EmbeddingKey]:
        """Image keys under one (concept, language, variant) prefix, sorted by index."""
        found = [
            k
            for k in self.entries
            if k.modality is Modality.IMAGE
            and (k.concept, k.language, k.variant) == (concept, language, variant)
        ]
        found.sort(key=lambda k: k.index)
        return found


def save_store(store: EmbeddingStore, path: str | Path) -> None:
    """Persist to JSONL. Entries are written in sorted key order, so output is
    deterministic for a given store state."""
    if store.dim is None:
        raise InputError("cannot save a store whose dimension is not yet known")
    lines = [json.dumps({"dim": store.dim, "extractor_id": store.extractor_id}, ensure_ascii=False)]
    for key in sorted(store.entries, key=EmbeddingKey.sort_key):
        vec = store.entries[key]
        lines.append(
            json.dumps(
                {
                    "concept": key.concept,
                    "language": key.language,
                    "variant": key.variant,
                    "modality": key.modality.value,
                    "index": key.index,
                    "vec": [float(x) for x in vec],
                },
                ensure_ascii=False,
            )
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_store(path: str | Path) -> EmbeddingStore:
    path = Path(path)
    try:
        text = path.read_bytes().decode("utf-8")
    except FileNotFoundError:
        raise InputError(f"store file not found: {path}")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise InputError(f"{path}: empty store file (header line required)")

    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} line 1: malformed header: {exc}")
    if not isinstance(header, dict) or "dim" not in header:
        raise InputError(f"{path} line 1: header must be an object with a 'dim' field")
    dim = header["dim"]
    if not isinstance(dim, int) or dim <= 0:
        raise InputError(f"{path} line 1: dim must be a positive integer, got {dim!r}")
    store = EmbeddingStore(dim=dim, extractor_id=str(header.get("extractor_id", "")))

    for lineno, line in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path} line {lineno}: malformed entry: {exc}")
        try:
            key = EmbeddingKey(
                concept=obj["concept"],
                language=obj["language"],
                variant=obj["variant"],
                modality=Modality.parse(obj["modality"]),
                index=int(obj["index"]),
            )
            vec = _check_vector(obj["vec"])
        except KeyError as exc:
            raise InputError(f"{path} line {lineno}: missing field {exc}")
        if vec.size != dim:
            raise InputError(
                f"{path} line {lineno}: mixed dimensions (header dim {dim}, entry dim {vec.size})"
            )
        store.entries[key] = vec
    return store
