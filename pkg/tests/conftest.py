from pathlib import Path

import numpy as np
import pytest

from pairlink import (
    CoherenceMeasure,
    EmbeddingStore,
    KbStats,
    MeasureKind,
    Shape,
    SynthSpec,
    read_corpus,
    synth_corpus,
)
from pairlink.synth import write_synth


@pytest.fixture
def test_data_dir():
    """Test data directory Path"""
    return Path(__file__).parent / "data"


@pytest.fixture
def kb(test_data_dir):
    return KbStats.open(test_data_dir / "kb.tsv")


@pytest.fixture
def embeddings(test_data_dir):
    return EmbeddingStore.open(test_data_dir / "embeddings.txt")


@pytest.fixture
def corpus(test_data_dir):
    return read_corpus(test_data_dir / "corpus.jsonl")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def synth():
    """Function that returns a synthetic corpus and its EES measure."""

    def _create_synth(shape=Shape.dense, docs=10, mentions=6, candidates=4, **kw):
        spec = SynthSpec(
            shape=shape, docs=docs, mentions=mentions, candidates=candidates, **kw
        )
        data = synth_corpus(spec, seed=7)
        psi = CoherenceMeasure(MeasureKind.ees, emb=data.embeddings)
        return data, psi

    return _create_synth


@pytest.fixture
def synth_files(tmp_path):
    """Synthetic corpus files written with the CLI layout."""
    data = synth_corpus(SynthSpec(shape=Shape.dense, docs=6, mentions=5), seed=3)
    return write_synth(data, tmp_path / "synth")
