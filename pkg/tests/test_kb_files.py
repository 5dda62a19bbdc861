import numpy as np
import pytest

from pairlink import EmbeddingStore, KbStats
from pairlink.exceptions import KbFormatError, KbValidationError, MissingEntityError


def test_kb_from_tsv(kb):
    assert kb.total_entities == 1000
    assert kb.pages("Paris").tolist() == [1, 2, 3, 4, 5]
    assert kb.pages("Hilton_Hotels").tolist() == [8, 9, 10]
    assert kb.pages("Lonely").size == 0
    assert kb.prior("Paris", "Paris") == 0.7
    assert kb.prior("Hilton", "Paris_Hilton") == 0.3
    assert kb.prior("Paris", "France") is None
    assert kb.prior("Nowhere", "Paris") is None


def test_kb_missing_entity(kb):
    with pytest.raises(MissingEntityError) as excinfo:
        kb.pages("Atlantis")
    assert "Atlantis" in str(excinfo.value)
    # Also a KeyError for callers that only know the builtin
    with pytest.raises(KeyError):
        kb.pages("Atlantis")


def test_kb_inlinks_are_read_only(kb):
    with pytest.raises(ValueError):
        kb.pages("Paris")[0] = 42


@pytest.mark.parametrize(
    "text,error,where",
    [
        ("NUM_ENTITY 10\n", KbFormatError, "Line 1"),
        ("NUM_ENTITIES ten\n", KbFormatError, "Line 1"),
        ("NUM_ENTITIES 0\n", KbFormatError, "Line 1"),
        ("NUM_ENTITIES 10\nA\t1,x\n", KbFormatError, "Line 2"),
        ("NUM_ENTITIES 10\nA\t1\tB\n", KbFormatError, "Line 2"),
        ("NUM_ENTITIES 10\nA\t3,2\n", KbValidationError, "Line 2"),
        ("NUM_ENTITIES 10\nA\t1,1\n", KbValidationError, "Line 2"),
        ("NUM_ENTITIES 10\nA\t1\nB\t2\nA\t3\n", KbValidationError, "Line 4"),
        ("NUM_ENTITIES 10\nPRIOR\ts\tA\n", KbFormatError, "Line 2"),
        ("NUM_ENTITIES 10\nPRIOR\ts\tA\thigh\n", KbFormatError, "Line 2"),
        ("NUM_ENTITIES 10\nA\t1\nPRIOR\ts\tA\t1.5\n", KbValidationError, "Line 3"),
    ],
)
def test_kb_from_tsv_errors_name_the_line(text, error, where):
    with pytest.raises(error, match=where):
        KbStats.from_tsv(text)


def test_kb_priors_of_a_surface_may_not_exceed_one():
    text = "NUM_ENTITIES 10\nPRIOR\ts\tA\t0.6\nPRIOR\ts\tB\t0.6\n"
    with pytest.raises(KbValidationError, match="sum above 1"):
        KbStats.from_tsv(text)


def test_kb_unsorted_inlinks_rejected_on_construction():
    with pytest.raises(ValueError):
        KbStats(total_entities=10, inlinks={"A": [3, 1]})


def test_kb_tsv_round_trip(kb, tmp_path):
    assert KbStats.from_tsv(kb.to_tsv()) == kb

    kb.save(tmp_path / "copy.tsv")
    assert KbStats.open(tmp_path / "copy.tsv") == kb
    # single \n at end of file
    assert (tmp_path / "copy.tsv").read_text().endswith("0.8\n")


@pytest.mark.parametrize("ext", [".json", ".yaml", ".toml"])
def test_kb_serialization_to_disk(kb, tmp_path, ext):
    filename = tmp_path / f"kb{ext}"
    kb.save(filename)
    assert KbStats.open(filename) == kb


def test_embeddings_from_text(embeddings):
    assert embeddings.dim == 3
    assert len(embeddings) == 8
    assert "Paris" in embeddings
    assert "Atlantis" not in embeddings
    assert embeddings.vector("Texas").tolist() == [0.2, 0.0, 1.0]
    assert embeddings.norm("Paris") == pytest.approx(np.sqrt(1.04))
    assert set(embeddings.vectors) == set(embeddings.ids)


def test_embeddings_missing_and_zero_vectors(embeddings):
    with pytest.raises(MissingEntityError, match="no embedding"):
        embeddings.row("Atlantis")
    with pytest.raises(MissingEntityError, match="zero-norm"):
        embeddings.row("Zero")


@pytest.mark.parametrize(
    "text,error,where",
    [
        ("", KbFormatError, "Line 1"),
        ("three 3\nA 1 2 3\n", KbFormatError, "Line 1"),
        ("1 0\n", KbFormatError, "Line 1"),
        ("2 3\nA 1 2 3\nB 1 2\n", KbValidationError, "Line 3"),
        ("1 2\nA 1 b\n", KbFormatError, "Line 2"),
        ("3 2\nA 1 0\nB 0 1\n", KbValidationError, "announces 3"),
    ],
)
def test_embeddings_from_text_errors(text, error, where):
    with pytest.raises(error, match=where):
        EmbeddingStore.from_text(text)


def test_embeddings_need_a_nonzero_vector():
    with pytest.raises(ValueError):
        EmbeddingStore.from_text("1 2\nA 0.0 0.0\n")


def test_embeddings_duplicate_ids_rejected():
    with pytest.raises(ValueError):
        EmbeddingStore(dim=2, ids=["A", "A"], matrix=[[1.0, 0.0], [0.0, 1.0]])


def test_embeddings_text_round_trip_keeps_full_precision(tmp_path):
    emb = EmbeddingStore(
        dim=2, ids=["A", "B"], matrix=[[0.1 + 0.2, 1 / 3], [2.5e-17, -7.0]]
    )
    assert EmbeddingStore.from_text(emb.to_text()) == emb
    assert np.array_equal(EmbeddingStore.from_text(emb.to_text()).matrix, emb.matrix)

    emb.save(tmp_path / "emb.vec")
    assert EmbeddingStore.open(tmp_path / "emb.vec") == emb
    emb.save(tmp_path / "emb.json")
    assert EmbeddingStore.open(tmp_path / "emb.json") == emb
