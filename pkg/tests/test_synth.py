import pytest

from pairlink import (
    EmbeddingStore,
    KbStats,
    Shape,
    SynthSpec,
    read_corpus,
    synth_corpus,
)
from pairlink.exceptions import ContractViolation
from pairlink.synth import DISTRACTOR_DIM, gold_components, write_synth


@pytest.mark.parametrize(
    "shape,n,expected",
    [
        (Shape.dense, 3, [[0], [0], [0]]),
        (Shape.chain, 3, [[0, 1], [1, 2], [2, 3]]),
        (Shape.tree, 3, [[0], [0, 1], [0, 2]]),
        (Shape.forest, 4, [[0], [0], [1], [1]]),
        (Shape.forest, 5, [[0], [0], [1], [1, 2], [2]]),
        (Shape.forest, 3, [[0], [0, 1], [1]]),
        (Shape.forest, 1, [[0]]),
    ],
)
def test_gold_components(shape, n, expected):
    assert gold_components(shape, n) == expected


def test_gold_components_need_an_entity():
    with pytest.raises(ContractViolation):
        gold_components("chain", 0)


def test_synth_corpus_layout():
    spec = SynthSpec(shape=Shape.tree, docs=3, mentions=4, candidates=5)
    data = synth_corpus(spec, seed=1)
    assert [inst.doc_id for inst in data.corpus] == [
        "synth-0000",
        "synth-0001",
        "synth-0002",
    ]
    for inst in data.corpus:
        assert inst.n == 4
        for mention in inst.mentions:
            assert len(mention.candidates) == 5
            assert mention.gold_position() is not None
            for c in mention.candidates:
                assert c.entity in data.embeddings
                assert data.kb.pages(c.entity).size > 0
    # tree with 4 entities needs 4 gold components
    assert data.embeddings.dim == 4 + DISTRACTOR_DIM


def test_synth_corpus_is_deterministic():
    spec = SynthSpec(shape=Shape.forest, docs=4, mentions=5, noise=0.3)
    assert synth_corpus(spec, seed=5) == synth_corpus(spec, seed=5)
    assert synth_corpus(spec, seed=5) != synth_corpus(spec, seed=6)


def test_clean_gold_outranks_every_distractor():
    data = synth_corpus(SynthSpec(docs=5, mentions=6, candidates=6), seed=2)
    for inst in data.corpus:
        for mention in inst.mentions:
            gold_phi = mention.candidates[mention.gold_position()].phi
            others = [c.phi for c in mention.candidates if c.entity != mention.gold]
            assert gold_phi > max(others)


def test_priors_match_the_kb():
    data = synth_corpus(SynthSpec(docs=2, mentions=3, candidates=4), seed=4)
    for inst in data.corpus:
        for mention in inst.mentions:
            priors = [c.prior for c in mention.candidates]
            assert sum(priors) == pytest.approx(1.0)
            for c in mention.candidates:
                assert data.kb.prior(mention.surface, c.entity) == c.prior


def test_synth_dimension():
    spec = SynthSpec(shape=Shape.chain, docs=1, mentions=4, dim=8)
    assert synth_corpus(spec, seed=0).embeddings.dim == 8 + DISTRACTOR_DIM
    with pytest.raises(ContractViolation, match="at least 5"):
        synth_corpus(spec.model_copy(update={"dim": 3}), seed=0)


def test_write_synth_round_trip(tmp_path):
    data = synth_corpus(SynthSpec(docs=3, mentions=4, noise=0.5), seed=8)
    paths = write_synth(data, tmp_path / "out")
    assert sorted(paths) == ["corpus", "embeddings", "kb"]
    assert read_corpus(paths["corpus"]) == data.corpus
    assert KbStats.open(paths["kb"]) == data.kb
    assert EmbeddingStore.open(paths["embeddings"]) == data.embeddings


def test_synth_files_fixture(synth_files):
    corpus = read_corpus(synth_files["corpus"])
    assert len(corpus) == 6
    assert all(inst.n == 5 for inst in corpus)
