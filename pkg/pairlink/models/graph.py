"""Weighted entity graphs used by the denseness analysis."""

from typing import Optional

import numpy as np
from pydantic import model_validator
from typing_extensions import Self

from ..helper_types import EntityId, SerializableNDArray
from .base_models import PairLinkModelBase

__all__ = ["CoherenceGraph"]


class CoherenceGraph(PairLinkModelBase):
    """Weighted complete graph over a set of entities.

    Attributes:
        vertices: Entity ids; vertex `i` is row `i` of `weights`.
        weights: Symmetric matrix of pairwise coherence. The diagonal is ignored.
        theta: Edge-cover threshold; set by `pairlink.analysis.threshold_graph`.
        filtered_edges: Edges `(i, j)`, `i < j`, with weight at least `theta`;
            set together with `theta`.
    """

    vertices: list[EntityId]
    weights: SerializableNDArray
    theta: Optional[float] = None
    filtered_edges: Optional[list[tuple[int, int]]] = None

    @model_validator(mode="after")
    def _symmetric_weights(self) -> Self:
        n = len(self.vertices)
        weights = self.weights.reshape(n, n) if self.weights.size == n * n else None
        if weights is None:
            raise ValueError(f"weights must be a {n}x{n} matrix.")
        if not np.allclose(weights, weights.T, rtol=0.0, atol=1e-12):
            raise ValueError("weights must be symmetric.")
        weights.flags.writeable = False
        object.__setattr__(self, "weights", weights)
        return self

    @property
    def n(self) -> int:
        return len(self.vertices)

    def edges(self) -> list[tuple[int, int, float]]:
        """All `(i, j, weight)` edges with `i < j`."""
        return [
            (i, j, float(self.weights[i, j]))
            for i in range(self.n)
            for j in range(i + 1, self.n)
        ]
