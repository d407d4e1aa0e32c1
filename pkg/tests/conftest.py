from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from xconsist.inventory import load_corrections, load_inventory
from xconsist.store import EmbeddingStore, image_key, text_key

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def inventory_path() -> Path:
    return DATA_DIR / "inventory_v1.tsv"


@pytest.fixture(scope="session")
def corrections_path() -> Path:
    return DATA_DIR / "corrections.tsv"


@pytest.fixture(scope="session")
def removals_path() -> Path:
    return DATA_DIR / "removals.txt"


@pytest.fixture()
def inventory_v1(inventory_path):
    return load_inventory(inventory_path)


@pytest.fixture()
def corrections_v1(inventory_path, corrections_path):
    return load_corrections(corrections_path, load_inventory(inventory_path))


def unit_at(cos_value: float) -> np.ndarray:
    """2-D unit vector whose cosine against (1, 0) is cos_value."""
    theta = math.acos(cos_value)
    return np.array([math.cos(theta), math.sin(theta)], dtype=np.float64)


def plant_stores(
    corrections,
    source_language: str = "en",
    n: int = 9,
    slope: float = 1.5,
    intercept: float = 0.01,
    sem_lo: float = -0.06,
    sem_hi: float = 0.10,
) -> tuple[EmbeddingStore, EmbeddingStore, list[float]]:
    """Build text and image stores where correction i has a planted
    delta_sem s_i and delta_xc = slope * s_i + intercept, exactly.

    Text embeddings sit at cosine 0.3 (original) and 0.3 + s_i (corrected)
    against the source axis; image populations are n identical copies at
    cosine 0.2 (original prompt) and 0.2 + delta_xc (corrected prompt) against
    the source population on the axis.
    """
    ordered = sorted(corrections, key=lambda c: (c.concept, c.language))
    text = EmbeddingStore()
    images = EmbeddingStore()
    planted = []
    denom = max(1, len(ordered) - 1)
    for i, corr in enumerate(ordered):
        s = sem_lo + (sem_hi - sem_lo) * i / denom
        t = slope * s + intercept
        planted.append(s)

        text.put(text_key(corr.concept, source_language, "original"), np.array([1.0, 0.0]))
        text.put(text_key(corr.concept, corr.language, "original"), unit_at(0.3))
        text.put(text_key(corr.concept, corr.language, "corrected"), unit_at(0.3 + s))

        for j in range(n):
            images.put(
                image_key(corr.concept, source_language, "original", j), np.array([1.0, 0.0])
            )
            images.put(image_key(corr.concept, corr.language, "original", j), unit_at(0.2))
            images.put(image_key(corr.concept, corr.language, "corrected", j), unit_at(0.2 + t))
    return text, images, planted
