from __future__ import annotations

import math

import pytest

from conftest import unit_at
from xconsist.errors import InputError, MissingEmbeddingsError
from xconsist.inventory import ConceptInventory
from xconsist.pseudo import (
    PseudoCorrectionSample,
    evaluate_pseudocorrections,
    generate_pseudocorrections,
    load_samples,
    save_samples,
)
from xconsist.similarity import cosine_similarity
from xconsist.store import EmbeddingStore, image_key, text_key


def toy_inventory(cells: dict[tuple[str, str], str], languages=("en", "t")) -> ConceptInventory:
    concepts = sorted({c for c, _ in cells})
    full = {}
    for concept in concepts:
        for lang in languages:
            surface = cells.get((concept, lang), f"{concept}.{lang}")
            full[(concept, lang, "original")] = surface
    return ConceptInventory(
        version="v1",
        source_language=languages[0],
        languages=tuple(languages),
        concept_order=tuple(concepts),
        cells=full,
    )


class TestGeneration:
    def test_fixture_count(self, inventory_v1):
        samples = generate_pseudocorrections(inventory_v1, "de", k=10, seed=7)
        assert len(samples) == 1930  # 193 concepts x 10 donors

    def test_per_concept_counts_and_distinct_donors(self, inventory_v1):
        samples = generate_pseudocorrections(inventory_v1, "he", k=10, seed=7)
        by_concept: dict[str, list[PseudoCorrectionSample]] = {}
        for s in samples:
            by_concept.setdefault(s.concept, []).append(s)
        assert len(by_concept) == 193
        for group in by_concept.values():
            assert [s.sample_index for s in group] == list(range(10))
            donors = [s.donor_concept for s in group]
            assert len(set(donors)) == 10

    def test_two_concepts_forced_donor(self):
        inv = toy_inventory({("dog", "t"): "hund", ("cat", "t"): "katze"})
        samples = generate_pseudocorrections(inv, "t", k=1, seed=0)
        assert {(s.concept, s.donor_concept) for s in samples} == {("dog", "cat"), ("cat", "dog")}
        assert all(s.pseudo_original != s.corrected for s in samples)

    def test_same_seed_identical_different_seed_differs(self, inventory_v1):
        a = generate_pseudocorrections(inventory_v1, "id", k=10, seed=123)
        b = generate_pseudocorrections(inventory_v1, "id", k=10, seed=123)
        c = generate_pseudocorrections(inventory_v1, "id", k=10, seed=124)
        assert a == b
        assert a != c

    def test_unrelated_cell_change_does_not_move_samples(self, inventory_v1):
        baseline = generate_pseudocorrections(inventory_v1, "de", k=5, seed=9)
        cells = dict(inventory_v1.cells)
        cells[("dog", "he", "original")] = "something else entirely"
        touched = ConceptInventory(
            version=inventory_v1.version,
            source_language=inventory_v1.source_language,
            languages=inventory_v1.languages,
            concept_order=inventory_v1.concept_order,
            cells=cells,
        )
        assert generate_pseudocorrections(touched, "de", k=5, seed=9) == baseline

    def test_k_exceeding_donors_rejected(self):
        inv = toy_inventory({("a", "t"): "x", ("b", "t"): "y", ("c", "t"): "z"})
        with pytest.raises(InputError, match="k=3"):
            generate_pseudocorrections(inv, "t", k=3, seed=0)

    def test_unknown_language_rejected(self, inventory_v1):
        with pytest.raises(InputError, match="not in inventory"):
            generate_pseudocorrections(inventory_v1, "fr", k=2, seed=0)

    def test_source_language_rejected(self, inventory_v1):
        with pytest.raises(InputError, match="source language"):
            generate_pseudocorrections(inventory_v1, "en", k=2, seed=0)

    def test_homograph_donors_excluded(self):
        # y shares x's surface, so it can never donate to x (the pseudo-error
        # would be a no-op); z is the only eligible donor.
        inv = toy_inventory({("x", "t"): "same", ("y", "t"): "same", ("z", "t"): "other"})
        for seed in range(20):
            samples = generate_pseudocorrections(inv, "t", k=1, seed=seed)
            donor_for_x = next(s.donor_concept for s in samples if s.concept == "x")
            assert donor_for_x == "z"

    def test_donor_distribution_uniform_at_three_sigma(self):
        # Fixed seed sweep: each eligible donor's frequency stays within 3
        # standard deviations of the uniform expectation.
        cells = {(c, "t"): f"w{c}" for c in "abcde"}
        inv = toy_inventory(cells)
        trials = 2000
        counts: dict[str, int] = {c: 0 for c in "bcde"}
        for seed in range(trials):
            samples = generate_pseudocorrections(inv, "t", k=1, seed=seed)
            donor = next(s.donor_concept for s in samples if s.concept == "a")
            counts[donor] += 1
        p = 1 / 4
        sigma = math.sqrt(trials * p * (1 - p))
        for donor, count in counts.items():
            assert abs(count - trials * p) <= 3 * sigma, (donor, count)

    def test_sample_invariants_enforced(self):
        with pytest.raises(InputError, match="donor equals target"):
            PseudoCorrectionSample("eye", "id", "eye", "guru", "mata", 0)
        with pytest.raises(InputError, match="no-op"):
            PseudoCorrectionSample("eye", "id", "teacher", "mata", "mata", 0)


class TestSamplesIO:
    def test_round_trip(self, inventory_v1, tmp_path):
        samples = generate_pseudocorrections(inventory_v1, "id", k=3, seed=5)
        path = tmp_path / "samples.tsv"
        save_samples(samples, path)
        assert load_samples(path) == samples

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("nope\n", encoding="utf-8")
        with pytest.raises(InputError, match="expected header"):
            load_samples(path)

    def test_noop_row_rejected_on_load(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text(
            "concept\tlanguage\tsample_index\tdonor_concept\tpseudo_original\tcorrected\n"
            "eye\tid\t0\tteacher\tmata\tmata\n",
            encoding="utf-8",
        )
        with pytest.raises(InputError, match="line 2.*no-op"):
            load_samples(path)


def worked_example_stores() -> tuple[EmbeddingStore, EmbeddingStore]:
    # eye/teacher in Indonesian, with distinguishable planted angles
    text = EmbeddingStore()
    text.put(text_key("eye", "en", "original"), unit_at(1.0))       # source axis
    text.put(text_key("teacher", "id", "original"), unit_at(0.2))   # guru
    text.put(text_key("eye", "id", "original"), unit_at(0.7))       # mata
    images = EmbeddingStore()
    for concept, lang, c in (
        ("eye", "en", 1.0),
        ("teacher", "id", 0.1),
        ("eye", "id", 0.9),
    ):
        for i in range(3):
            images.put(image_key(concept, lang, "original", i), unit_at(c))
    return text, images


class TestEvaluation:
    def test_worked_example_uses_donor_and_own_surfaces(self):
        text, images = worked_example_stores()
        sample = PseudoCorrectionSample(
            concept="eye",
            language="id",
            donor_concept="teacher",
            pseudo_original="guru",
            corrected="mata",
            sample_index=0,
        )
        [result] = evaluate_pseudocorrections([sample], images, text, "toy-model")
        e_eye_en = text.get(text_key("eye", "en", "original"))
        e_guru = text.get(text_key("teacher", "id", "original"))
        e_mata = text.get(text_key("eye", "id", "original"))
        expected_sem = cosine_similarity(e_eye_en, e_mata) - cosine_similarity(e_eye_en, e_guru)
        assert result.delta_sem == pytest.approx(expected_sem, abs=1e-15)
        assert result.xc_original == pytest.approx(0.1, abs=1e-12)
        assert result.xc_corrected == pytest.approx(0.9, abs=1e-12)
        assert result.delta_xc == result.xc_corrected - result.xc_original
        assert result.error_types == frozenset()
        assert result.original == "guru"
        assert result.corrected == "mata"
        assert result.donor_concept == "teacher"

    def test_missing_keys_reported_exhaustively(self):
        text, images = worked_example_stores()
        del text.entries[text_key("eye", "id", "original")]
        for key in images.population_keys("teacher", "id", "original"):
            del images.entries[key]
        sample = PseudoCorrectionSample("eye", "id", "teacher", "guru", "mata", 0)
        with pytest.raises(MissingEmbeddingsError) as err:
            evaluate_pseudocorrections([sample], images, text, "m")
        assert len(err.value.missing) == 2

    def test_restoring_true_translation_never_hurts(self, inventory_v1):
        # When the model "knows" the language (test population == source
        # population), the correction back to the true translation is optimal:
        # every sample's impact is >= 0.
        inv = inventory_v1
        samples = generate_pseudocorrections(inv, "de", k=3, seed=1)[:60]
        concepts = {s.concept for s in samples} | {s.donor_concept for s in samples}
        text = EmbeddingStore()
        images = EmbeddingStore()
        for rank, concept in enumerate(sorted(concepts)):
            c = 0.1 + 0.8 * rank / max(1, len(concepts) - 1)
            text.put(text_key(concept, "en", "original"), unit_at(1.0))
            text.put(text_key(concept, "de", "original"), unit_at(c))
            for i in range(2):
                images.put(image_key(concept, "en", "original", i), unit_at(c))
                images.put(image_key(concept, "de", "original", i), unit_at(c))
        results = evaluate_pseudocorrections(samples, images, text, "fluent-model")
        assert len(results) == len(samples)
        for r in results:
            assert r.xc_corrected == pytest.approx(1.0, abs=1e-12)
            assert r.delta_xc >= -1e-12
            assert r.delta_xc == r.xc_corrected - r.xc_original
