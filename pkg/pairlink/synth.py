"""Synthetic corpora whose gold entities realize a chosen coherence shape.

Each gold entity is built from a few shared components. A component is one basis
vector of the gold embedding subspace and one block of inlink pages, so two gold
entities are related under EES, NJS and WLM exactly when they share a component.
Distractor candidates live in a separate embedding subspace and draw inlinks from
a separate page pool, so they never relate to gold entities.
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np

from .exceptions import ContractViolation
from .helper_types import EntityId
from .models import (
    Candidate,
    EmbeddingStore,
    KbStats,
    LinkingInstance,
    Mention,
    Shape,
    SynthCorpus,
    SynthSpec,
    write_corpus,
)
from .utils import doc_rng

__all__ = [
    "gold_components",
    "synth_corpus",
    "write_synth",
    "CORPUS_FILE",
    "KB_FILE",
    "EMBEDDINGS_FILE",
]

logger = logging.getLogger(__name__)

CORPUS_FILE = "corpus.jsonl"
KB_FILE = "kb.tsv"
EMBEDDINGS_FILE = "embeddings.txt"

BLOCK_SIZE = 5
"""Inlink pages contributed by one gold component."""

DISTRACTOR_DIM = 32
"""Dimension of the embedding subspace shared by distractors."""

DISTRACTOR_POOL = 40
"""Pages per document from which distractor inlinks are drawn."""


def gold_components(shape: Union[Shape, str], n: int) -> list[list[int]]:
    """Components of each of `n` gold entities for a coherence shape.

    - dense: every entity has component 0.
    - chain: entity i has components i and i + 1.
    - tree: a star; entity 0 has component 0 and leaf l has 0 and l.
    - forest: entities 2p and 2p + 1 share component p. For odd n the last three
      entities form a chain.
    """
    shape = Shape(shape)
    if n < 1:
        raise ContractViolation("A document needs at least one gold entity.")
    if shape == Shape.dense:
        return [[0] for _ in range(n)]
    if shape == Shape.chain:
        return [[i, i + 1] for i in range(n)]
    if shape == Shape.tree:
        return [[0]] + [[0, leaf] for leaf in range(1, n)]
    if n == 1:
        return [[0]]
    paired = n if n % 2 == 0 else n - 3
    components = [[i // 2] for i in range(paired)]
    if n % 2:
        q = paired // 2
        components += [[q], [q, q + 1], [q + 1]]
    return components


def _phi_ranges(noise: float) -> tuple[tuple[float, float], tuple[float, float]]:
    gold = (0.85 - 0.6 * noise, 1.0)
    distractor = (0.0, 0.25 + 0.75 * noise)
    return gold, distractor


def synth_corpus(spec: SynthSpec, seed: int) -> SynthCorpus:
    """Generate a corpus with matching KB statistics and embeddings.

    Output depends only on `spec` and `seed`. Gold phi exceeds every distractor
    phi when `spec.noise` is 0.

    Raises:
        ContractViolation: If `spec.dim` is nonzero but smaller than the number
            of components the shape needs.
    """
    shapes = [gold_components(spec.shape, spec.mentions) for _ in range(spec.docs)]
    needed = 1 + max(c for comps in shapes[0] for c in comps)
    if spec.dim and spec.dim < needed:
        raise ContractViolation(
            f"Shape {spec.shape.value} with {spec.mentions} mentions needs a gold "
            f"subspace of at least {needed} dimensions, got {spec.dim}."
        )
    gold_dim = spec.dim or needed
    dim = gold_dim + DISTRACTOR_DIM
    gold_range, distractor_range = _phi_ranges(spec.noise)

    corpus: list[LinkingInstance] = []
    inlinks: dict[EntityId, np.ndarray] = {}
    priors: dict[str, dict[EntityId, float]] = {}
    ids: list[EntityId] = []
    rows: list[np.ndarray] = []
    next_page = 1

    for d, components in enumerate(shapes):
        doc_id = f"synth-{d:04d}"
        rng = doc_rng(seed, doc_id)
        blocks = {
            c: np.arange(next_page + c * BLOCK_SIZE, next_page + (c + 1) * BLOCK_SIZE)
            for c in range(needed)
        }
        next_page += needed * BLOCK_SIZE
        pool = np.arange(next_page, next_page + DISTRACTOR_POOL)
        next_page += DISTRACTOR_POOL

        mentions = []
        for i, comps in enumerate(components):
            gold = f"{doc_id}/g{i}"
            vec = np.zeros(dim)
            vec[comps] = 1.0
            ids.append(gold)
            rows.append(vec)
            inlinks[gold] = np.concatenate([blocks[c] for c in comps])

            gold_at = int(rng.integers(spec.candidates))
            candidates = []
            for c in range(spec.candidates):
                if c == gold_at:
                    candidates.append(
                        Candidate(entity=gold, phi=float(rng.uniform(*gold_range)))
                    )
                    continue
                entity = f"{doc_id}/m{i}c{c}"
                vec = np.zeros(dim)
                vec[gold_dim:] = rng.standard_normal(DISTRACTOR_DIM)
                ids.append(entity)
                rows.append(vec)
                size = int(rng.integers(3, 9))
                inlinks[entity] = np.sort(rng.choice(pool, size=size, replace=False))
                candidates.append(
                    Candidate(entity=entity, phi=float(rng.uniform(*distractor_range)))
                )

            surface = f"{doc_id}/s{i}"
            total = sum(c.phi for c in candidates)
            priors[surface] = {c.entity: c.phi / total for c in candidates}
            candidates = [
                c.model_copy(update={"prior": priors[surface][c.entity]})
                for c in candidates
            ]
            mentions.append(
                Mention(index=i, surface=surface, gold=gold, candidates=candidates)
            )
        corpus.append(LinkingInstance(doc_id=doc_id, mentions=mentions))

    kb = KbStats(
        total_entities=next_page - 1 + len(ids), inlinks=inlinks, priors=priors
    )
    embeddings = EmbeddingStore(dim=dim, ids=ids, matrix=np.vstack(rows))
    logger.info(
        "Generated %d %s documents, %d entities, embedding dimension %d",
        spec.docs,
        spec.shape.value,
        len(ids),
        dim,
    )
    return SynthCorpus(corpus=corpus, kb=kb, embeddings=embeddings)


def write_synth(data: SynthCorpus, output_dir: Union[Path, str]) -> dict[str, Path]:
    """Write the corpus, KB statistics and embeddings into `output_dir`.

    Returns:
        The written paths keyed by `corpus`, `kb` and `embeddings`.
    """
    output_dir = Path(output_dir)
    paths = {
        "corpus": output_dir / CORPUS_FILE,
        "kb": output_dir / KB_FILE,
        "embeddings": output_dir / EMBEDDINGS_FILE,
    }
    write_corpus(data.corpus, paths["corpus"])
    data.kb.save(paths["kb"])
    data.embeddings.save(paths["embeddings"])
    return paths
