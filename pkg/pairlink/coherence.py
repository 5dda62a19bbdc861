"""Pairwise coherence between entities.

Four measures are supported: the link-based WLM and NJS over inlink sets, EES
over embeddings, and their combination (mean of NJS and EES). All values lie in
[0, 1] and are symmetric in their arguments.
"""

import logging
import math
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import Callable, Optional, Protocol, Union

import numpy as np

from .exceptions import ContractViolation, MissingEntityError
from .helper_types import EntityId
from .models import EmbeddingStore, KbStats, MeasureKind

__all__ = [
    "Coherence",
    "CoherenceMeasure",
    "TableCoherence",
    "load_kb_stats",
    "load_embeddings",
    "wlm",
    "njs",
    "ees",
    "combined",
    "wlm_formula",
    "njs_formula",
    "cosine",
    "fresh",
]

logger = logging.getLogger(__name__)


class Coherence(Protocol):
    """Anything that scores a pair of entities in [0, 1]."""

    def __call__(self, e1: EntityId, e2: EntityId) -> float: ...


def fresh(psi: Coherence) -> Coherence:
    """Copy of `psi` with its own empty cache, or `psi` itself if it keeps none."""
    make_fresh = getattr(psi, "fresh", None)
    return make_fresh() if callable(make_fresh) else psi


def load_kb_stats(path: Union[Path, str]) -> KbStats:
    """Read a KB-stats text file. See `KbStats.from_tsv` for the format."""
    return KbStats.from_tsv(Path(path).read_text(encoding="utf-8"))


def load_embeddings(path: Union[Path, str]) -> EmbeddingStore:
    """Read an embeddings text file. See `EmbeddingStore.from_text`."""
    return EmbeddingStore.from_text(Path(path).read_text(encoding="utf-8"))


def wlm_formula(
    n1: int,
    n2: int,
    n_common: int,
    total: int,
    log: Callable[[float], float] = math.log,
) -> float:
    """Unclamped WLM from set sizes, with +1 smoothing on every count.

    Args:
        n1: |U1|.
        n2: |U2|.
        n_common: |U1 & U2|.
        total: |W|.
        log: Logarithm to use. The result does not depend on the base.
    """
    numerator = log(max(n1, n2) + 1) - log(n_common + 1)
    denominator = log(total + 1) - log(min(n1, n2) + 1)
    return 1.0 - numerator / denominator


def njs_formula(
    n_common: int, n_union: int, log: Callable[[float], float] = math.log
) -> float:
    """NJS from set sizes: log(|U1 & U2| + 1) / log(|U1 | U2| + 1)."""
    return log(n_common + 1) / log(n_union + 1)


def cosine(
    v1: np.ndarray,
    v2: np.ndarray,
    norm1: Optional[float] = None,
    norm2: Optional[float] = None,
) -> float:
    """Unclamped cosine similarity of two nonzero vectors.

    Precomputed norms may be passed to skip recomputing them.
    """
    if norm1 is None:
        norm1 = float(np.linalg.norm(v1))
    if norm2 is None:
        norm2 = float(np.linalg.norm(v2))
    return float(np.dot(v1, v2) / (norm1 * norm2))


def _clamp(value: float) -> float:
    return min(1.0, max(0.0, value))


def _overlap(kb: KbStats, e1: EntityId, e2: EntityId) -> tuple[int, int, int]:
    u1, u2 = kb.pages(e1), kb.pages(e2)
    common = np.intersect1d(u1, u2, assume_unique=True).size
    return u1.size, u2.size, int(common)


def wlm(e1: EntityId, e2: EntityId, kb: KbStats) -> float:
    """Wikipedia link-based measure, clamped to [0, 1].

    An empty inlink set on either side gives 0.0. When the smaller set is at
    least as large as the knowledge base the formula is undefined; identical sets
    then give 1.0 and anything else 0.0.

    Raises:
        MissingEntityError: If either entity is not in `kb`.
    """
    e1, e2 = sorted((e1, e2))
    n1, n2, common = _overlap(kb, e1, e2)
    if n1 == 0 or n2 == 0:
        return 0.0
    if min(n1, n2) >= kb.total_entities:
        return 1.0 if common == n1 == n2 else 0.0
    return _clamp(wlm_formula(n1, n2, common, kb.total_entities))


def njs(e1: EntityId, e2: EntityId, kb: KbStats) -> float:
    """Normalized Jaccard similarity of inlink sets on a log scale.

    An empty inlink set on either side gives 0.0.

    Raises:
        MissingEntityError: If either entity is not in `kb`.
    """
    e1, e2 = sorted((e1, e2))
    n1, n2, common = _overlap(kb, e1, e2)
    if n1 == 0 or n2 == 0:
        return 0.0
    return njs_formula(common, n1 + n2 - common)


def ees(e1: EntityId, e2: EntityId, emb: EmbeddingStore) -> float:
    """Cosine similarity of entity embeddings, clamped to [0, 1].

    Raises:
        MissingEntityError: If either vector is missing or has zero norm.
    """
    e1, e2 = sorted((e1, e2))
    v1, v2 = emb.vector(e1), emb.vector(e2)
    return _clamp(cosine(v1, v2, emb.norm(e1), emb.norm(e2)))


def combined(e1: EntityId, e2: EntityId, kb: KbStats, emb: EmbeddingStore) -> float:
    """Mean of `njs` and `ees`. Missing-entity errors of either propagate."""
    return (njs(e1, e2, kb) + ees(e1, e2, emb)) / 2


class CoherenceMeasure:
    """A coherence measure bound to its resources, with a pair cache.

    The cache is keyed by the unordered entity pair and lives as long as the
    measure. Use `fresh` to get an empty-cache copy per document so concurrent
    runs never share mutable state.

    Attributes:
        kind: The measure computed.
        kb: KB statistics used by WLM, NJS and the combined measure.
        emb: Embeddings used by EES and the combined measure.
        strict: If False, a pair involving an unknown entity scores 0.0 and a
            warning is logged once per entity instead of raising.

    Example:
        ```python
        psi = CoherenceMeasure(MeasureKind.njs, kb=kb, strict=False)
        psi("Paris", "France")
        ```
    """

    def __init__(
        self,
        kind: Union[MeasureKind, str],
        kb: Optional[KbStats] = None,
        emb: Optional[EmbeddingStore] = None,
        strict: bool = True,
    ):
        self.kind = MeasureKind(kind)
        needs_kb = self.kind in (MeasureKind.wlm, MeasureKind.njs, MeasureKind.combined)
        needs_emb = self.kind in (MeasureKind.ees, MeasureKind.combined)
        if needs_kb and kb is None:
            raise ContractViolation(f"The {self.kind.value} measure needs KB stats.")
        if needs_emb and emb is None:
            raise ContractViolation(f"The {self.kind.value} measure needs embeddings.")
        self.kb = kb
        self.emb = emb
        self.strict = strict
        self._cache: dict[tuple[EntityId, EntityId], float] = {}
        self._missing: set[EntityId] = set()

    def __repr__(self) -> str:
        return (
            f"CoherenceMeasure(kind={self.kind.value!r}, strict={self.strict}, "
            f"cached={len(self._cache)})"
        )

    def fresh(self) -> "CoherenceMeasure":
        """Return a measure over the same resources with an empty cache."""
        return CoherenceMeasure(self.kind, kb=self.kb, emb=self.emb, strict=self.strict)

    @property
    def cache_size(self) -> int:
        return len(self._cache)

    def compute(self, e1: EntityId, e2: EntityId) -> float:
        """Compute the coherence without touching the cache."""
        if self.kind == MeasureKind.wlm:
            return wlm(e1, e2, self.kb)  # type: ignore[arg-type]
        if self.kind == MeasureKind.njs:
            return njs(e1, e2, self.kb)  # type: ignore[arg-type]
        if self.kind == MeasureKind.ees:
            return ees(e1, e2, self.emb)  # type: ignore[arg-type]
        return combined(e1, e2, self.kb, self.emb)  # type: ignore[arg-type]

    def __call__(self, e1: EntityId, e2: EntityId) -> float:
        key = (e1, e2) if e1 <= e2 else (e2, e1)
        value = self._cache.get(key)
        if value is None:
            try:
                value = self.compute(*key)
            except MissingEntityError as e:
                if self.strict:
                    raise
                self._warn_missing(key, e)
                value = 0.0
            self._cache[key] = value
        return value

    def warm(self, entities: Iterable[EntityId]) -> None:
        """Fill the cache for every pair of distinct `entities`."""
        unique = list(dict.fromkeys(entities))
        for a, e1 in enumerate(unique):
            for e2 in unique[a + 1 :]:
                self(e1, e2)
        logger.debug("Warmed %s cache with %d pairs", self.kind.value, self.cache_size)

    def _warn_missing(
        self, key: tuple[EntityId, EntityId], error: MissingEntityError
    ) -> None:
        for entity in key:
            if entity not in self._missing and not self._known(entity):
                self._missing.add(entity)
                logger.warning("%s; scoring its pairs as 0.0", error)

    def _known(self, entity: EntityId) -> bool:
        try:
            if self.kind in (MeasureKind.wlm, MeasureKind.njs, MeasureKind.combined):
                self.kb.pages(entity)  # type: ignore[union-attr]
            if self.kind in (MeasureKind.ees, MeasureKind.combined):
                self.emb.row(entity)  # type: ignore[union-attr]
        except MissingEntityError:
            return False
        return True


class TableCoherence:
    """Coherence read from an explicit table of pairs.

    Pairs are unordered; unlisted pairs score `default`.

    Args:
        table: Map from `(e1, e2)` to a value in [0, 1].
        default: Score of unlisted pairs.
    """

    def __init__(
        self, table: Mapping[tuple[EntityId, EntityId], float], default: float = 0.0
    ):
        self.default = default
        self.table: dict[tuple[EntityId, EntityId], float] = {}
        for (e1, e2), value in table.items():
            if not 0.0 <= value <= 1.0:
                raise ContractViolation(f"Coherence of ({e1}, {e2}) is outside [0, 1].")
            self.table[(e1, e2) if e1 <= e2 else (e2, e1)] = value

    def __call__(self, e1: EntityId, e2: EntityId) -> float:
        return self.table.get((e1, e2) if e1 <= e2 else (e2, e1), self.default)

    def fresh(self) -> "TableCoherence":
        return self

    def warm(self, entities: Iterable[EntityId]) -> None:
        pass
