"""Measurement core: cosine similarity, cross-consistency, correction deltas.

Cross-consistency scores one concept in one test language by comparing the
population of images generated from its prompt against the population
generated from the source-language prompt: the mean cosine similarity over
all cross-population pairs,

    X = (1 / (n_t * n_s)) * sum_i sum_j cos(test_i, source_j)

with populations of n_t and n_s feature vectors. For equal-size populations
this is the usual 1/n^2 double sum. Identical populations of identical unit
vectors score exactly 1.0.

A correction's image-domain impact is the difference of two such scores
(corrected-prompt population vs. original-prompt population, both against the
same source population). Its text-domain significance is the analogous
difference of text-embedding cosines against the source surface.

The pairwise sum is accumulated with math.fsum (exact compensated summation):
individual populations are tiny, but downstream statistics aggregate
thousands of scores and benefit from deterministic, fully-accurate terms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, MissingEmbeddingsError
from .inventory import ConceptInventory, CorrectionRecord, ErrorType
from .store import EmbeddingStore, Modality, text_key


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two nonzero vectors, clamped to [-1, 1].

    Clamping absorbs the ~1e-16 excursions floating rounding can produce;
    downstream statistics assume the closed interval.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1:
        raise InputError("cosine_similarity expects 1-D vectors")
    if a.shape != b.shape:
        raise InputError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise InputError("cosine similarity is undefined for zero-norm vectors")
    value = float(np.dot(a, b)) / (na * nb)
    return min(1.0, max(-1.0, value))


class ImagePopulation:
    """The feature vectors of the images generated from one prompt.

    Rows of ``matrix`` are the per-sample vectors, ordered by sample index.
    All rows share a dimension and have nonzero norm.
    """

    def __init__(self, concept: str, language: str, variant: str, vectors) -> None:
        matrix = np.asarray(vectors, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] < 1:
            raise InputError(
                f"population {concept}|{language}|{variant} must have >= 1 vectors, "
                f"got shape {matrix.shape}"
            )
        if not np.isfinite(matrix).all():
            raise InputError(f"population {concept}|{language}|{variant} has non-finite components")
        norms = np.linalg.norm(matrix, axis=1)
        if (norms == 0.0).any():
            raise InputError(f"population {concept}|{language}|{variant} has a zero-norm vector")
        self.concept = concept
        self.language = language
        self.variant = variant
        self.matrix = matrix
        self._unit = matrix / norms[:, None]

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


def population_from_store(
    store: EmbeddingStore, concept: str, language: str, variant: str
) -> ImagePopulation:
    """Collect the image vectors under one key prefix, requiring dense indices 0..n-1."""
    keys = store.population_keys(concept, language, variant)
    if not keys:
        raise MissingEmbeddingsError([f"{concept}|{language}|{variant} [image population]"])
    indices = [k.index for k in keys]
    if indices != list(range(len(keys))):
        raise InputError(
            f"population {concept}|{language}|{variant} has non-dense sample indices {indices}"
        )
    return ImagePopulation(concept, language, variant, [store.entries[k] for k in keys])


def cross_consistency(pop_test: ImagePopulation, pop_source: ImagePopulation) -> float:
    """Mean pairwise cosine between two populations; symmetric in its arguments."""
    if pop_test.dim != pop_source.dim:
        raise InputError(f"dimension mismatch: {pop_test.dim} vs {pop_source.dim}")
    cosines = np.clip(pop_test._unit @ pop_source._unit.T, -1.0, 1.0)
    total = math.fsum(cosines.ravel().tolist())
    return total / (pop_test.size * pop_source.size)


def delta_xc(
    pop_original: ImagePopulation,
    pop_corrected: ImagePopulation,
    pop_source: ImagePopulation,
) -> float:
    """Change in cross-consistency when the corrected-prompt population replaces
    the original-prompt population, both scored against the same source population."""
    return cross_consistency(pop_corrected, pop_source) - cross_consistency(
        pop_original, pop_source
    )


def delta_sem(e_source, e_original, e_corrected) -> float:
    """Change in text-embedding similarity to the source surface under a correction.

    Operates on embeddings of the bare concept surfaces, not templated prompts.
    """
    return cosine_similarity(e_source, e_corrected) - cosine_similarity(e_source, e_original)


@dataclass(frozen=True)
class ConceptResult:
    """Per-concept scoring outcome for one model and one correction (or one
    pseudocorrection sample, in which case ``error_types`` is empty and
    ``donor_concept``/``sample_index`` identify the sample)."""

    concept: str
    language: str
    model_id: str
    original: str
    corrected: str
    xc_original: float
    xc_corrected: float
    delta_xc: float
    delta_sem: float
    error_types: frozenset[ErrorType] = field(default_factory=frozenset)
    donor_concept: str | None = None
    sample_index: int | None = None


def _missing_text(store: EmbeddingStore, key) -> list[str]:
    return [] if key in store else [f"{key} [text]"]


def score_concepts(
    inv: ConceptInventory,
    corrections: list[CorrectionRecord],
    image_store: EmbeddingStore,
    text_store: EmbeddingStore,
    model_id: str,
) -> list[ConceptResult]:
    """Score every correction for one model.

    Requires, per correction: image populations for the source-language
    original prompt, the test-language original prompt, and the test-language
    corrected prompt; text embeddings for the source, original, and corrected
    surfaces. All missing keys are reported together before any scoring.
    Output is ordered by (concept, language).
    """
    src = inv.source_language
    ordered = sorted(corrections, key=lambda c: (c.concept, c.language))

    missing: list[str] = []
    for corr in ordered:
        for concept, lang, variant in (
            (corr.concept, src, "original"),
            (corr.concept, corr.language, "original"),
            (corr.concept, corr.language, "corrected"),
        ):
            if not image_store.population_keys(concept, lang, variant):
                missing.append(f"{concept}|{lang}|{variant} [image population]")
        missing += _missing_text(text_store, text_key(corr.concept, src, "original"))
        missing += _missing_text(text_store, text_key(corr.concept, corr.language, "original"))
        missing += _missing_text(text_store, text_key(corr.concept, corr.language, "corrected"))
    if missing:
        raise MissingEmbeddingsError(sorted(set(missing)))

    results = []
    for corr in ordered:
        pop_source = population_from_store(image_store, corr.concept, src, "original")
        pop_original = population_from_store(image_store, corr.concept, corr.language, "original")
        pop_corrected = population_from_store(image_store, corr.concept, corr.language, "corrected")
        xc_orig = cross_consistency(pop_original, pop_source)
        xc_corr = cross_consistency(pop_corrected, pop_source)
        dsem = delta_sem(
            text_store.get(text_key(corr.concept, src, "original")),
            text_store.get(text_key(corr.concept, corr.language, "original")),
            text_store.get(text_key(corr.concept, corr.language, "corrected")),
        )
        results.append(
            ConceptResult(
                concept=corr.concept,
                language=corr.language,
                model_id=model_id,
                original=corr.original,
                corrected=corr.corrected,
                xc_original=xc_orig,
                xc_corrected=xc_corr,
                delta_xc=xc_corr - xc_orig,
                delta_sem=dsem,
                error_types=corr.error_types,
            )
        )
    return results
