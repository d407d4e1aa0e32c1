"""Pseudocorrection simulation: manufacture synthetic translation errors.

Real correction candidates are scarce, so we simulate a larger set: each
concept in a language is assigned k "pseudo-original" translations drawn from
the other concepts' translations in that language, and its own true
translation plays the correction. Evaluating these samples reuses the
existing original-prompt image populations (the pseudo-original population for
concept c with donor d is exactly d's original population), so no new image
generation is required.

Sampling discipline: donors are drawn uniformly without replacement from the
other concepts of the same language, excluding donors whose surface equals the
target's correct surface (a homograph donor would make the "error" a no-op and
corrupt the correlation analysis). The per-concept RNG stream is a PCG64
generator seeded from SHA-256(seed, language, concept), so results are
independent of concept iteration order and of changes to other languages'
cells, and reproduce exactly for a fixed (inventory, language, k, seed).

Samples serialize to TSV with columns:
``concept  language  sample_index  donor_concept  pseudo_original  corrected``.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError, MissingEmbeddingsError
from .inventory import ConceptInventory
from .ioutil import atomic_write_text
from .similarity import (
    ConceptResult,
    cross_consistency,
    delta_sem,
    population_from_store,
)
from .store import EmbeddingStore, text_key

DEFAULT_SAMPLES_PER_CONCEPT = 10

SAMPLES_HEADER = ("concept", "language", "sample_index", "donor_concept", "pseudo_original", "corrected")


@dataclass(frozen=True)
class PseudoCorrectionSample:
    """One synthetic error: ``concept`` wrongly given ``donor_concept``'s
    translation, to be "corrected" back to its own true translation."""

    concept: str
    language: str
    donor_concept: str
    pseudo_original: str
    corrected: str
    sample_index: int

    def __post_init__(self) -> None:
        if self.donor_concept == self.concept:
            raise InputError(f"pseudocorrection donor equals target concept {self.concept!r}")
        if self.pseudo_original == self.corrected:
            raise InputError(
                f"pseudocorrection for {self.concept}/{self.language} is a no-op "
                f"(donor surface equals the correct surface {self.corrected!r})"
            )
        if self.sample_index < 0:
            raise InputError(f"sample_index must be >= 0, got {self.sample_index}")


def _concept_rng(seed: int, language: str, concept: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{language}\x1f{concept}".encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 8], "big") for i in range(0, 32, 8)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed & (2**64 - 1), *words])))


def generate_pseudocorrections(
    inv: ConceptInventory,
    language: str,
    k: int = DEFAULT_SAMPLES_PER_CONCEPT,
    seed: int = 0,
) -> list[PseudoCorrectionSample]:
    """Draw exactly k distinct donors for every active concept of ``language``.

    Total sample count is (number of active concepts) * k. Raises when the
    language is unknown or is the source language, or when a concept has fewer
    than k eligible donors.
    """
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    if language not in inv.languages:
        raise InputError(f"language {language!r} not in inventory")
    if language == inv.source_language:
        raise InputError(f"cannot pseudocorrect the source language {language!r}")

    concepts = [c for c in sorted(inv.active_concepts()) if inv.surface(c, language) is not None]
    if len(concepts) < k + 1:
        raise InputError(
            f"k={k} needs at least {k + 1} concepts with a {language!r} translation, "
            f"found {len(concepts)}"
        )

    samples: list[PseudoCorrectionSample] = []
    for concept in concepts:
        corrected = inv.surface(concept, language)
        donors = [
            d for d in concepts if d != concept and inv.surface(d, language) != corrected
        ]
        if len(donors) < k:
            raise InputError(
                f"k={k} exceeds the {len(donors)} eligible donors for {concept!r} in {language!r}"
            )
        rng = _concept_rng(seed, language, concept)
        chosen = rng.choice(len(donors), size=k, replace=False)
        for j, donor_idx in enumerate(chosen):
            donor = donors[int(donor_idx)]
            samples.append(
                PseudoCorrectionSample(
                    concept=concept,
                    language=language,
                    donor_concept=donor,
                    pseudo_original=inv.surface(donor, language),
                    corrected=corrected,
                    sample_index=j,
                )
            )
    return samples


def save_samples(samples: list[PseudoCorrectionSample], path: str | Path) -> None:
    lines = ["\t".join(SAMPLES_HEADER)]
    for s in samples:
        lines.append(
            "\t".join(
                [s.concept, s.language, str(s.sample_index), s.donor_concept, s.pseudo_original, s.corrected]
            )
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_samples(path: str | Path) -> list[PseudoCorrectionSample]:
    path = Path(path)
    try:
        text = path.read_bytes().decode("utf-8")
    except FileNotFoundError:
        raise InputError(f"samples file not found: {path}")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or tuple(lines[0].split("\t")) != SAMPLES_HEADER:
        raise InputError(f"{path}: expected header {list(SAMPLES_HEADER)}")
    samples = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split("\t")
        if len(parts) != len(SAMPLES_HEADER):
            raise InputError(f"{path} line {lineno}: expected {len(SAMPLES_HEADER)} cells")
        concept, language, idx, donor, pseudo_original, corrected = parts
        try:
            samples.append(
                PseudoCorrectionSample(
                    concept=concept,
                    language=language,
                    donor_concept=donor,
                    pseudo_original=pseudo_original,
                    corrected=corrected,
                    sample_index=int(idx),
                )
            )
        except (ValueError, InputError) as exc:
            raise InputError(f"{path} line {lineno}: {exc}")
    return samples


def evaluate_pseudocorrections(
    samples: list[PseudoCorrectionSample],
    image_store: EmbeddingStore,
    text_store: EmbeddingStore,
    model_id: str,
    source_language: str = "en",
) -> list[ConceptResult]:
    """Score pseudocorrection samples exactly like real corrections.

    The donor's original translation plays the erroneous surface and the
    concept's own original translation plays the correction, so all required
    populations and text embeddings are ``original``-variant entries:

      images: (concept, source, original), (donor, language, original),
              (concept, language, original)
      text:   (concept, source, original), (donor, language, original),
              (concept, language, original)

    Missing keys are reported exhaustively before any scoring. Results carry
    empty error-type sets and are ordered by (concept, language, sample_index).
    """
    ordered = sorted(samples, key=lambda s: (s.concept, s.language, s.sample_index))

    missing: list[str] = []
    for s in ordered:
        for concept, lang in (
            (s.concept, source_language),
            (s.donor_concept, s.language),
            (s.concept, s.language),
        ):
            if not image_store.population_keys(concept, lang, "original"):
                missing.append(f"{concept}|{lang}|original [image population]")
            if text_key(concept, lang, "original") not in text_store:
                missing.append(f"{concept}|{lang}|original|text|0 [text]")
    if missing:
        raise MissingEmbeddingsError(sorted(set(missing)))

    results = []
    for s in ordered:
        pop_source = population_from_store(image_store, s.concept, source_language, "original")
        pop_original = population_from_store(image_store, s.donor_concept, s.language, "original")
        pop_corrected = population_from_store(image_store, s.concept, s.language, "original")
        xc_orig = cross_consistency(pop_original, pop_source)
        xc_corr = cross_consistency(pop_corrected, pop_source)
        dsem = delta_sem(
            text_store.get(text_key(s.concept, source_language, "original")),
            text_store.get(text_key(s.donor_concept, s.language, "original")),
            text_store.get(text_key(s.concept, s.language, "original")),
        )
        results.append(
            ConceptResult(
                concept=s.concept,
                language=s.language,
                model_id=model_id,
                original=s.pseudo_original,
                corrected=s.corrected,
                xc_original=xc_orig,
                xc_corrected=xc_corr,
                delta_xc=xc_corr - xc_orig,
                delta_sem=dsem,
                error_types=frozenset(),
                donor_concept=s.donor_concept,
                sample_index=s.sample_index,
            )
        )
    return results
