"""Documents, mentions, candidates and assignments, plus the corpus file format."""

import json
import logging
import math
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
from pydantic import Field, PrivateAttr, ValidationError, model_validator
from typing_extensions import Self

from ..exceptions import ContractViolation, CorpusFormatError
from ..helper_types import EntityId
from .base_models import PairLinkModelBase
from .kb import KbStats

__all__ = [
    "Candidate",
    "Mention",
    "LinkingInstance",
    "Assignment",
    "read_corpus",
    "write_corpus",
    "dumps_corpus",
    "attach_priors",
]

logger = logging.getLogger(__name__)


class Candidate(PairLinkModelBase):
    """A candidate entity of a mention.

    Attributes:
        entity: Knowledge-base id of the entity.
        phi: Local confidence that the mention refers to `entity`, in [0, 1].
        prior: Optional P(entity | surface form), in [0, 1].
    """

    entity: EntityId
    phi: float = Field(ge=0.0, le=1.0)
    prior: Optional[float] = Field(default=None, ge=0.0, le=1.0)


class Mention(PairLinkModelBase):
    """A surface form to disambiguate and its candidate set.

    Attributes:
        index: 0-based position of the mention in its document.
        surface: The surface text.
        gold: The correct entity, if known. It may be absent from `candidates`.
        candidates: Ordered, nonempty list of distinct candidate entities.
    """

    index: int = Field(ge=0)
    surface: str = ""
    gold: Optional[EntityId] = None
    candidates: list[Candidate] = Field(min_length=1)

    _positions: dict[str, int] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def _distinct_candidates(self) -> Self:
        entities = [c.entity for c in self.candidates]
        if len(set(entities)) != len(entities):
            raise ValueError(f"Mention {self.index} has duplicate candidate entities.")
        return self

    def model_post_init(self, __context: Any) -> None:
        self._positions = {c.entity: pos for pos, c in enumerate(self.candidates)}

    @property
    def entities(self) -> list[EntityId]:
        """Candidate entity ids in list order."""
        return [c.entity for c in self.candidates]

    @property
    def phis(self) -> np.ndarray:
        """Local confidences in candidate order."""
        return np.array([c.phi for c in self.candidates], dtype=np.float64)

    def position(self, entity: EntityId) -> Optional[int]:
        """Return the list position of `entity` or None if it is not a candidate."""
        return self._positions.get(entity)

    def argmax_phi(self) -> int:
        """Position of the highest-phi candidate; the first one wins ties."""
        return int(np.argmax(self.phis))

    def gold_position(self) -> Optional[int]:
        """Position of the gold entity among the candidates, if present."""
        return None if self.gold is None else self.position(self.gold)


class LinkingInstance(PairLinkModelBase):
    """One document to disambiguate.

    Attributes:
        doc_id: Document identifier.
        mentions: Mentions in document order. Mention `i` carries index `i`.

    Example:
        ```python
        inst = LinkingInstance(
            doc_id="d1",
            mentions=[
                {"surface": "Paris", "candidates": [{"entity": "Paris", "phi": 0.9}]},
            ],
        )
        ```
    """

    doc_id: str
    mentions: list[Mention] = Field(min_length=1)

    @model_validator(mode="before")
    @classmethod
    def _fill_indices(cls, data: Any) -> Any:
        """Number mentions by position when the input omits `index`."""
        if isinstance(data, dict) and isinstance(data.get("mentions"), list):
            mentions = []
            for i, m in enumerate(data["mentions"]):
                if isinstance(m, dict) and "index" not in m:
                    m = {**m, "index": i}
                mentions.append(m)
            data = {**data, "mentions": mentions}
        return data

    @model_validator(mode="after")
    def _ordered_indices(self) -> Self:
        for i, mention in enumerate(self.mentions):
            if mention.index != i:
                raise ValueError(
                    f"Mention at position {i} of '{self.doc_id}' has index "
                    f"{mention.index}."
                )
        return self

    def __len__(self) -> int:
        return len(self.mentions)

    @property
    def n(self) -> int:
        """Number of mentions (N)."""
        return len(self.mentions)

    def search_space(self) -> int:
        """Number of complete assignments (product of candidate-set sizes)."""
        size = 1
        for mention in self.mentions:
            size *= len(mention.candidates)
        return size

    def gold_map(self) -> dict[int, EntityId]:
        """Map of mention index to gold entity for mentions with a gold label."""
        return {m.index: m.gold for m in self.mentions if m.gold is not None}

    def entities(self) -> list[EntityId]:
        """All distinct candidate entities in first-seen order."""
        return list(dict.fromkeys(e for m in self.mentions for e in m.entities))

    def rescale_phi(self) -> Self:
        """Return a copy with each mention's phi min-max rescaled to [0, 1].

        A mention whose candidates all share one phi gets 1.0 everywhere.
        """
        return self.from_raw(self.model_dump())

    def without_mentions(self, drop: Iterable[int]) -> Self:
        """Return a copy without the given mentions, re-indexed in order."""
        drop = set(drop)
        kept = [
            m.model_dump(exclude={"index"})
            for m in self.mentions
            if m.index not in drop
        ]
        return self.model_validate({**self._record_base(), "mentions": kept})

    def _record_base(self) -> dict[str, Any]:
        return {"doc_id": self.doc_id, "extras": self.extras}

    def to_record(self) -> dict[str, Any]:
        """Return the corpus-line dictionary of this document."""
        return {
            "doc_id": self.doc_id,
            "mentions": [
                {
                    "surface": m.surface,
                    "gold": m.gold,
                    "candidates": [
                        {"entity": c.entity, "phi": c.phi, "prior": c.prior}
                        for c in m.candidates
                    ],
                }
                for m in self.mentions
            ],
        }

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> Self:
        """Build an instance from a corpus-line dictionary."""
        return cls.model_validate(record)

    @classmethod
    def from_raw(cls, record: dict[str, Any]) -> Self:
        """Build an instance from a record whose phi values are raw ranker scores.

        Each mention's phi values are min-max rescaled to [0, 1] before
        validation; a mention whose candidates share one score gets 1.0
        everywhere. Records that are malformed in other ways are left for
        validation to reject.

        Example:
            ```python
            inst = LinkingInstance.from_raw(
                {"doc_id": "d1", "mentions": [{"candidates": [
                    {"entity": "a", "phi": 3.2}, {"entity": "b", "phi": -1.0},
                ]}]}
            )
            [c.phi for c in inst.mentions[0].candidates]  # [1.0, 0.0]
            ```
        """
        mentions = record.get("mentions") if isinstance(record, dict) else None
        if not isinstance(mentions, list):
            return cls.model_validate(record)
        return cls.model_validate(
            {**record, "mentions": [_rescaled_mention(m) for m in mentions]}
        )


def _is_score(value: Any) -> bool:
    return (
        isinstance(value, (int, float))
        and not isinstance(value, bool)
        and math.isfinite(value)
    )


def _rescaled_mention(mention: Any) -> Any:
    """Min-max rescale the phi values of a raw mention dictionary."""
    if not isinstance(mention, dict):
        return mention
    candidates = mention.get("candidates")
    if not isinstance(candidates, list) or not candidates:
        return mention
    if not all(isinstance(c, dict) and _is_score(c.get("phi")) for c in candidates):
        return mention
    phis = [float(c["phi"]) for c in candidates]
    low, high = min(phis), max(phis)
    span = high - low
    scaled = [(phi - low) / span if span > 0 else 1.0 for phi in phis]
    return {
        **mention,
        "candidates": [{**c, "phi": phi} for c, phi in zip(candidates, scaled)],
    }


class Assignment(PairLinkModelBase):
    """A (possibly partial) choice of one entity per mention.

    Attributes:
        choices: One optional entity id per mention.
        objective_value: Value of the objective the producing solver optimized.
    """

    choices: list[Optional[EntityId]]
    objective_value: Optional[float] = None

    @property
    def complete(self) -> bool:
        """True when every mention has a choice."""
        return all(choice is not None for choice in self.choices)

    @classmethod
    def from_positions(
        cls,
        inst: LinkingInstance,
        positions: Sequence[int],
        objective_value: Optional[float] = None,
    ) -> Self:
        """Build an assignment from one candidate position per mention."""
        return cls(
            choices=[
                m.candidates[int(p)].entity for m, p in zip(inst.mentions, positions)
            ],
            objective_value=objective_value,
        )

    def positions(self, inst: LinkingInstance) -> list[int]:
        """Return the candidate position of every choice.

        Raises:
            ContractViolation: If the assignment is incomplete, has the wrong
                length or picks an entity outside a mention's candidate set.
        """
        if len(self.choices) != inst.n:
            raise ContractViolation(
                f"Assignment has {len(self.choices)} choices for {inst.n} mentions."
            )
        positions = []
        for mention, choice in zip(inst.mentions, self.choices):
            if choice is None:
                raise ContractViolation(
                    f"Assignment is incomplete at mention {mention.index}."
                )
            pos = mention.position(choice)
            if pos is None:
                raise ContractViolation(
                    f"'{choice}' is not a candidate of mention {mention.index}."
                )
            positions.append(pos)
        return positions


def attach_priors(inst: LinkingInstance, kb: KbStats) -> LinkingInstance:
    """Fill each candidate's prior from `kb.priors` keyed by the mention surface.

    Candidates that already carry a prior keep it.
    """
    mentions = []
    for mention in inst.mentions:
        candidates = []
        for c in mention.candidates:
            prior = c.prior
            if prior is None:
                prior = kb.prior(mention.surface, c.entity)
            candidates.append(c.model_copy(update={"prior": prior}))
        mentions.append(mention.model_copy(update={"candidates": candidates}))
    return LinkingInstance(doc_id=inst.doc_id, mentions=mentions, extras=inst.extras)


def dumps_corpus(corpus: Iterable[LinkingInstance]) -> str:
    """Return the JSON Lines text of a corpus."""
    return "".join(json.dumps(inst.to_record()) + "\n" for inst in corpus)


def write_corpus(corpus: Iterable[LinkingInstance], path: Union[Path, str]) -> None:
    """Write a corpus as JSON Lines, one document per line."""
    path = Path(path)
    path.parent.mkdir(exist_ok=True, parents=True)
    path.write_text(dumps_corpus(corpus), encoding="utf-8")


def read_corpus(
    path: Union[Path, str], rescale_phi: bool = False
) -> list[LinkingInstance]:
    """Read a JSON Lines corpus.

    Args:
        path: The corpus file.
        rescale_phi: Treat phi values as raw ranker scores and min-max rescale
            them per mention (see `LinkingInstance.from_raw`).

    Raises:
        CorpusFormatError: If a line is not valid JSON or not a valid document.
            The message names the 1-based line number.
    """
    build = LinkingInstance.from_raw if rescale_phi else LinkingInstance.from_record
    corpus = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise CorpusFormatError(f"Line {lineno}: invalid JSON ({e.msg}).")
        if not isinstance(record, dict):
            raise CorpusFormatError(f"Line {lineno}: expected a JSON object.")
        try:
            corpus.append(build(record))
        except ValidationError as e:
            first = e.errors()[0]
            where = ".".join(str(loc) for loc in first["loc"])
            raise CorpusFormatError(f"Line {lineno}: {where}: {first['msg']}.")
    logger.info("Read %d documents from %s", len(corpus), path)
    return corpus
