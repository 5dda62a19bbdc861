"""Knowledge-base statistics and entity embeddings."""

import logging
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
from pydantic import Field, PrivateAttr, model_validator
from typing_extensions import Self

from ..constants import PRIOR_SUM_SLACK
from ..exceptions import KbFormatError, KbValidationError, MissingEntityError
from ..helper_types import EntityId, SerializableIntArray, SerializableNDArray
from .base_models import PairLinkModelBase

__all__ = ["KbStats", "EmbeddingStore"]

logger = logging.getLogger(__name__)

_KB_TEXT_SUFFIXES = {".tsv", ".txt"}
_EMB_TEXT_SUFFIXES = {".txt", ".vec"}


class KbStats(PairLinkModelBase):
    """Link statistics of a knowledge base.

    Attributes:
        total_entities: Number of articles in the knowledge base (|W|).
        inlinks: Maps an entity to the strictly ascending ids of the pages that
            link to it.
        priors: Maps a surface form to `{entity: P(entity | surface)}`.
    """

    total_entities: int = Field(gt=0)
    inlinks: dict[EntityId, SerializableIntArray] = {}
    priors: dict[str, dict[EntityId, float]] = {}

    @model_validator(mode="after")
    def _validate_inlinks_and_priors(self) -> Self:
        for entity, pages in self.inlinks.items():
            if pages.size > 1 and not np.all(np.diff(pages) > 0):
                raise ValueError(
                    f"Inlinks of '{entity}' must be strictly ascending page ids."
                )
            pages.flags.writeable = False
        for surface, dist in self.priors.items():
            for entity, prob in dist.items():
                if not 0.0 <= prob <= 1.0:
                    raise ValueError(
                        f"Prior P({entity}|{surface}) = {prob} is outside [0, 1]."
                    )
            if sum(dist.values()) > 1.0 + PRIOR_SUM_SLACK:
                raise ValueError(f"Priors of surface form '{surface}' sum above 1.")
        return self

    def pages(self, entity: EntityId) -> np.ndarray:
        """Return the inlink page ids of an entity.

        Raises:
            MissingEntityError: If the entity has no entry in the statistics.
        """
        try:
            return self.inlinks[entity]
        except KeyError:
            raise MissingEntityError(f"Entity '{entity}' is not in the KB statistics.")

    def prior(self, surface: str, entity: EntityId) -> Optional[float]:
        """Return P(entity | surface) or None when no prior is recorded."""
        return self.priors.get(surface, {}).get(entity)

    @classmethod
    def from_tsv(cls, text: str) -> Self:
        """Parse the KB-stats text format.

        The first line is `NUM_ENTITIES <int>`. Each further line is either
        `entity_id<TAB>comma-separated ascending inlink ids` (the id list may be
        empty) or `PRIOR<TAB>surface<TAB>entity_id<TAB>probability`.

        Raises:
            KbFormatError: On a malformed header or a non-numeric field.
            KbValidationError: On unsorted or duplicate ids, duplicate entities or
                out-of-range priors. The message names the offending line.
        """
        lines = text.split("\n")
        header = lines[0].strip().split()
        if len(header) != 2 or header[0] != "NUM_ENTITIES":
            raise KbFormatError(
                f"Line 1: expected 'NUM_ENTITIES <int>', got '{lines[0].strip()}'."
            )
        try:
            total = int(header[1])
        except ValueError:
            raise KbFormatError(f"Line 1: '{header[1]}' is not an integer.")
        if total <= 0:
            raise KbFormatError(f"Line 1: NUM_ENTITIES must be positive, got {total}.")

        inlinks: dict[str, np.ndarray] = {}
        priors: dict[str, dict[str, float]] = {}
        for lineno, raw in enumerate(lines[1:], start=2):
            line = raw.rstrip("\r")
            if not line.strip():
                continue
            fields = line.split("\t")
            if fields[0] == "PRIOR":
                if len(fields) != 4:
                    raise KbFormatError(
                        f"Line {lineno}: prior lines need 4 tab-separated fields."
                    )
                _, surface, entity, value = fields
                try:
                    prob = float(value)
                except ValueError:
                    raise KbFormatError(f"Line {lineno}: '{value}' is not a number.")
                if not 0.0 <= prob <= 1.0:
                    raise KbValidationError(
                        f"Line {lineno}: prior {prob} is outside [0, 1]."
                    )
                priors.setdefault(surface, {})[entity] = prob
                continue

            if len(fields) != 2:
                raise KbFormatError(
                    f"Line {lineno}: expected 'entity_id<TAB>ids', got {len(fields)} "
                    "fields."
                )
            entity, id_field = fields
            if entity in inlinks:
                raise KbValidationError(f"Line {lineno}: duplicate entity '{entity}'.")
            try:
                pages = [int(tok) for tok in id_field.split(",") if tok.strip()]
            except ValueError:
                raise KbFormatError(f"Line {lineno}: inlink ids must be integers.")
            for prev, cur in zip(pages, pages[1:]):
                if cur == prev:
                    raise KbValidationError(
                        f"Line {lineno}: duplicate inlink id {cur} for '{entity}'."
                    )
                if cur < prev:
                    raise KbValidationError(
                        f"Line {lineno}: inlink ids of '{entity}' are not ascending "
                        f"({prev} before {cur})."
                    )
            inlinks[entity] = np.array(pages, dtype=np.int64)

        for surface, dist in priors.items():
            if sum(dist.values()) > 1.0 + PRIOR_SUM_SLACK:
                raise KbValidationError(
                    f"Priors of surface form '{surface}' sum above 1."
                )

        logger.info("Read KB statistics: %d entities, |W| = %d", len(inlinks), total)
        return cls(total_entities=total, inlinks=inlinks, priors=priors)

    def to_tsv(self) -> str:
        """Return the KB-stats text representation."""
        lines = [f"NUM_ENTITIES {self.total_entities}"]
        for entity, pages in self.inlinks.items():
            lines.append(f"{entity}\t{','.join(str(int(p)) for p in pages)}")
        for surface, dist in self.priors.items():
            for entity, prob in dist.items():
                lines.append(f"PRIOR\t{surface}\t{entity}\t{prob!r}")
        lines.append("")
        return "\n".join(lines)

    @classmethod
    def open(cls, filepath: Union[Path, str]) -> Self:
        """Open KB statistics from the tab-separated text format (`.tsv`, `.txt`) or
        from a previously saved `.json`/`.yaml`/`.toml` file."""
        filepath = Path(filepath)
        if filepath.suffix in _KB_TEXT_SUFFIXES:
            return cls.from_tsv(filepath.read_text(encoding="utf-8"))
        return super().open(filepath)

    def save(self, filepath: Union[Path, str], **kwargs: Any) -> None:
        """Save to the text format for `.tsv`/`.txt` paths, otherwise as a model."""
        filepath = Path(filepath)
        if filepath.suffix in _KB_TEXT_SUFFIXES:
            filepath.parent.mkdir(exist_ok=True, parents=True)
            filepath.write_text(self.to_tsv(), encoding="utf-8")
            return
        super().save(filepath, **kwargs)


class EmbeddingStore(PairLinkModelBase):
    """Entity embeddings, one row of `matrix` per entry of `ids`.

    Attributes:
        dim: The length of every vector.
        ids: Entity ids in row order.
        matrix: `len(ids) x dim` array of embedding rows.
    """

    dim: int = Field(gt=0)
    ids: list[EntityId] = []
    matrix: SerializableNDArray = np.zeros((0, 1))

    _index: dict[str, int] = PrivateAttr(default_factory=dict)
    _norms: np.ndarray = PrivateAttr(default=None)

    @model_validator(mode="after")
    def _validate_matrix(self) -> Self:
        matrix = np.asarray(self.matrix, dtype=np.float64)
        if matrix.size == 0:
            matrix = np.zeros((0, self.dim))
        if matrix.ndim != 2 or matrix.shape != (len(self.ids), self.dim):
            raise ValueError(
                f"Embedding matrix has shape {matrix.shape}, expected "
                f"({len(self.ids)}, {self.dim})."
            )
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("Embedding ids must be unique.")
        norms = np.linalg.norm(matrix, axis=1)
        if len(self.ids) and not np.any(norms > 0):
            raise ValueError("At least one embedding vector must have nonzero norm.")
        matrix.flags.writeable = False
        object.__setattr__(self, "matrix", matrix)
        return self

    def model_post_init(self, __context: Any) -> None:
        self._index = {entity: row for row, entity in enumerate(self.ids)}
        matrix = np.asarray(self.matrix)
        self._norms = (
            np.linalg.norm(matrix, axis=1) if matrix.ndim == 2 else np.zeros(0)
        )

    def __contains__(self, entity: object) -> bool:
        return entity in self._index

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def vectors(self) -> dict[EntityId, np.ndarray]:
        """Map from entity id to its vector."""
        return {entity: self.matrix[row] for entity, row in self._index.items()}

    def row(self, entity: EntityId) -> int:
        """Return the matrix row of an entity.

        Raises:
            MissingEntityError: If the entity has no vector or its vector is zero.
        """
        try:
            row = self._index[entity]
        except KeyError:
            raise MissingEntityError(f"Entity '{entity}' has no embedding.")
        if self._norms[row] == 0:
            raise MissingEntityError(f"Entity '{entity}' has a zero-norm embedding.")
        return row

    def vector(self, entity: EntityId) -> np.ndarray:
        """Return the vector of an entity (see `row` for errors)."""
        return self.matrix[self.row(entity)]

    def norm(self, entity: EntityId) -> float:
        """Return the Euclidean norm of an entity's vector."""
        return float(self._norms[self.row(entity)])

    @classmethod
    def from_text(cls, text: str) -> Self:
        """Parse the embeddings text format.

        The first line is `<count> <dim>`, followed by `entity_id v_1 ... v_dim`
        lines separated by single spaces.

        Raises:
            KbFormatError: On a malformed header or a non-numeric component.
            KbValidationError: When a row length differs from `dim` or the row
                count differs from `count`.
        """
        lines = [line for line in text.split("\n") if line.strip()]
        if not lines:
            raise KbFormatError("Line 1: missing '<count> <dim>' header.")
        header = lines[0].split()
        try:
            count, dim = (int(tok) for tok in header)
        except ValueError:
            raise KbFormatError(
                f"Line 1: expected '<count> <dim>', got '{lines[0].strip()}'."
            )
        if dim <= 0 or count < 0:
            raise KbFormatError(f"Line 1: invalid header '{lines[0].strip()}'.")

        ids: list[str] = []
        rows: list[list[float]] = []
        for lineno, line in enumerate(lines[1:], start=2):
            tokens = line.split()
            if len(tokens) - 1 != dim:
                raise KbValidationError(
                    f"Line {lineno}: expected {dim} components, got {len(tokens) - 1}."
                )
            try:
                rows.append([float(tok) for tok in tokens[1:]])
            except ValueError:
                raise KbFormatError(f"Line {lineno}: non-numeric vector component.")
            ids.append(tokens[0])

        if len(ids) != count:
            raise KbValidationError(
                f"Header announces {count} vectors but {len(ids)} were read."
            )
        matrix = np.array(rows, dtype=np.float64).reshape(len(ids), dim)
        logger.info("Read %d embeddings of dimension %d", count, dim)
        return cls(dim=dim, ids=ids, matrix=matrix)

    def to_text(self) -> str:
        """Return the embeddings text representation (full float precision)."""
        lines = [f"{len(self.ids)} {self.dim}"]
        for entity, vec in zip(self.ids, self.matrix):
            lines.append(" ".join([entity] + [repr(float(v)) for v in vec]))
        lines.append("")
        return "\n".join(lines)

    @classmethod
    def open(cls, filepath: Union[Path, str]) -> Self:
        """Open embeddings from the text format (`.txt`, `.vec`) or a saved model."""
        filepath = Path(filepath)
        if filepath.suffix in _EMB_TEXT_SUFFIXES:
            return cls.from_text(filepath.read_text(encoding="utf-8"))
        return super().open(filepath)

    def save(self, filepath: Union[Path, str], **kwargs: Any) -> None:
        """Save to the text format for `.txt`/`.vec` paths, otherwise as a model."""
        filepath = Path(filepath)
        if filepath.suffix in _EMB_TEXT_SUFFIXES:
            filepath.parent.mkdir(exist_ok=True, parents=True)
            filepath.write_text(self.to_text(), encoding="utf-8")
            return
        super().save(filepath, **kwargs)
