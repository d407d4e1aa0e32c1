from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xconsist.errors import InputError
from xconsist.store import (
    EmbeddingKey,
    EmbeddingStore,
    Modality,
    image_key,
    load_store,
    save_store,
    text_key,
)


def test_put_get_round_trip():
    store = EmbeddingStore()
    key = text_key("rock", "ja")
    store.put(key, [0.1, 0.2, 0.3])
    assert np.array_equal(store.get(key), np.array([0.1, 0.2, 0.3]))
    assert key in store
    assert len(store) == 1


def test_get_missing_is_none_not_error():
    store = EmbeddingStore()
    assert store.get(text_key("rock", "ja")) is None


def test_first_put_fixes_dimension():
    store = EmbeddingStore()
    store.put(text_key("a", "en"), np.zeros(511) + 1.0)
    assert store.dim == 511
    with pytest.raises(InputError, match="dimension mismatch"):
        store.put(text_key("b", "en"), np.ones(512))


def test_last_put_wins():
    store = EmbeddingStore()
    key = text_key("a", "en")
    store.put(key, [1.0, 0.0])
    store.put(key, [0.0, 1.0])
    assert np.array_equal(store.get(key), np.array([0.0, 1.0]))


def test_nonfinite_vector_rejected():
    store = EmbeddingStore()
    with pytest.raises(InputError, match="NaN or Inf"):
        store.put(text_key("a", "en"), [1.0, float("nan")])


def test_text_key_index_must_be_zero():
    with pytest.raises(InputError, match="index 0"):
        EmbeddingKey("a", "en", "original", Modality.TEXT, 3)


def test_negative_index_rejected():
    with pytest.raises(InputError, match=">= 0"):
        image_key("a", "en", "original", -1)


def test_population_keys_sorted_by_index():
    store = EmbeddingStore()
    for i in (2, 0, 1):
        store.put(image_key("rock", "ja", "corrected", i), [float(i + 1), 0.0])
    keys = store.population_keys("rock", "ja", "corrected")
    assert [k.index for k in keys] == [0, 1, 2]
    assert store.population_keys("rock", "ja", "original") == []


def test_save_load_round_trip(tmp_path):
    store = EmbeddingStore(extractor_id="test-extractor")
    store.put(text_key("rock", "ja"), [0.1, -1e-300, 3.141592653589793])
    store.put(image_key("rock", "ja", "original", 0), [1.0, 2.0, 3.0])
    store.put(image_key("岩", "ja", "corrected", 1), [9.9, 8.8, 7.7])
    path = tmp_path / "store.jsonl"
    save_store(store, path)
    loaded = load_store(path)
    assert loaded.dim == store.dim
    assert loaded.extractor_id == "test-extractor"
    assert loaded.entries.keys() == store.entries.keys()
    for key, vec in store.entries.items():
        assert np.array_equal(loaded.entries[key], vec)


def test_save_requires_known_dim(tmp_path):
    with pytest.raises(InputError, match="dimension is not yet known"):
        save_store(EmbeddingStore(), tmp_path / "x.jsonl")


def test_header_only_file_is_empty_store(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text('{"dim": 8, "extractor_id": "m"}\n', encoding="utf-8")
    store = load_store(path)
    assert store.dim == 8
    assert len(store) == 0


def test_truly_empty_file_rejected(tmp_path):
    path = tmp_path / "zero.jsonl"
    path.write_text("", encoding="utf-8")
    with pytest.raises(InputError, match="header line required"):
        load_store(path)


def test_mixed_dimensions_rejected(tmp_path):
    path = tmp_path / "mixed.jsonl"
    path.write_text(
        '{"dim": 2, "extractor_id": "m"}\n'
        '{"concept": "a", "language": "en", "variant": "original", "modality": "text", "index": 0, "vec": [1.0, 2.0]}\n'
        '{"concept": "b", "language": "en", "variant": "original", "modality": "text", "index": 0, "vec": [1.0, 2.0, 3.0]}\n',
        encoding="utf-8",
    )
    with pytest.raises(InputError, match="line 3: mixed dimensions"):
        load_store(path)


def test_malformed_line_reported_with_number(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"dim": 2, "extractor_id": "m"}\nnot json\n', encoding="utf-8")
    with pytest.raises(InputError, match="line 2: malformed entry"):
        load_store(path)


def test_duplicate_key_in_file_last_wins(tmp_path):
    line = '{"concept": "a", "language": "en", "variant": "original", "modality": "text", "index": 0, "vec": [%s, 0.0]}'
    path = tmp_path / "dup.jsonl"
    path.write_text(
        '{"dim": 2, "extractor_id": "m"}\n' + line % "1.0" + "\n" + line % "2.0" + "\n",
        encoding="utf-8",
    )
    store = load_store(path)
    assert len(store) == 1
    assert store.get(text_key("a", "en"))[0] == 2.0


def test_pseudo_variant_keys_round_trip(tmp_path):
    store = EmbeddingStore()
    store.put(image_key("eye", "id", "pseudo:3", 0), [0.5, 0.5])
    path = tmp_path / "p.jsonl"
    save_store(store, path)
    assert image_key("eye", "id", "pseudo:3", 0) in load_store(path)


finite_components = st.floats(
    allow_nan=False, allow_infinity=False, min_value=-1e12, max_value=1e12
)


@settings(max_examples=50, deadline=None)
@given(
    vectors=st.lists(
        st.lists(finite_components, min_size=4, max_size=4),
        min_size=1,
        max_size=8,
    )
)
def test_round_trip_is_identity_property(tmp_path_factory, vectors):
    store = EmbeddingStore(extractor_id="prop")
    for i, vec in enumerate(vectors):
        store.put(image_key("c", "en", "original", i), vec)
    path = tmp_path_factory.mktemp("prop") / "store.jsonl"
    save_store(store, path)
    loaded = load_store(path)
    for key, vec in store.entries.items():
        assert np.array_equal(loaded.entries[key], vec)
