"""Results produced by solvers, analyses and the evaluation harness."""

from typing import Optional

from pydantic import Field, model_validator
from typing_extensions import Self

from ..helper_types import EntityId
from .base_models import PairLinkModelBase
from .config import Objective
from .instance import Assignment, LinkingInstance
from .kb import EmbeddingStore, KbStats

__all__ = [
    "PairQueueEntry",
    "SolverReport",
    "EvalResult",
    "CrossValidationResult",
    "BenchRecord",
    "CorrelationReport",
    "DensenessReport",
    "SynthCorpus",
]


class PairQueueEntry(PairLinkModelBase):
    """The most confident candidate pair of two mentions.

    Attributes:
        mentions: Mention indices (i, j) with i < j.
        best_pair: Chosen entities (e_i, e_j).
        positions: Candidate positions of `best_pair` within each mention.
        distance: Edge distance of the pair, in [0, 1].
    """

    mentions: tuple[int, int]
    best_pair: tuple[EntityId, EntityId]
    positions: tuple[int, int]
    distance: float = Field(ge=0.0, le=1.0)

    @property
    def confidence(self) -> float:
        """1 - distance."""
        return 1.0 - self.distance


class SolverReport(PairLinkModelBase):
    """Outcome of one solver run on one document.

    Attributes:
        doc_id: The document solved.
        solver: Name of the solver.
        assignment: Chosen entity per mention.
        iterations: Iterations, rounds or pops performed.
        converged: False when an iterative solver hit its iteration cap.
        wall_time: Solver wall time in milliseconds.
    """

    doc_id: str = ""
    solver: str = ""
    assignment: Assignment
    iterations: int = Field(default=0, ge=0)
    converged: bool = True
    wall_time: float = Field(default=0.0, ge=0.0)

    def to_record(self) -> dict:
        """Compact JSON-ready output line."""
        return {
            "doc_id": self.doc_id,
            "solver": self.solver,
            "assignment": self.assignment.choices,
            "objective_value": self.assignment.objective_value,
            "iterations": self.iterations,
            "converged": self.converged,
        }


class EvalResult(PairLinkModelBase):
    """Micro-averaged precision, recall and F1.

    Attributes:
        precision: correct / attempted.
        recall: correct / gold_count.
        f1: Harmonic mean of precision and recall, 0 when both are 0.
        attempted: Number of mentions with a prediction.
        gold_count: Number of mentions with a gold entity.
        correct: Number of predictions equal to gold.
    """

    precision: float = Field(ge=0.0, le=1.0)
    recall: float = Field(ge=0.0, le=1.0)
    f1: float = Field(ge=0.0, le=1.0)
    attempted: int = Field(ge=0)
    gold_count: int = Field(ge=0)
    correct: int = Field(ge=0)

    @model_validator(mode="after")
    def _consistent_counts(self) -> Self:
        if self.correct > min(self.attempted, self.gold_count):
            raise ValueError("correct cannot exceed attempted or gold_count.")
        return self

    @classmethod
    def from_counts(
        cls, attempted: int, gold_count: int, correct: int, **kwargs
    ) -> Self:
        """Compute the scores from raw counts."""
        precision = correct / attempted if attempted else 0.0
        recall = correct / gold_count if gold_count else 0.0
        total = precision + recall
        f1 = 2 * precision * recall / total if total > 0 else 0.0
        return cls(
            precision=precision,
            recall=recall,
            f1=f1,
            attempted=attempted,
            gold_count=gold_count,
            correct=correct,
            **kwargs,
        )


class CrossValidationResult(PairLinkModelBase):
    """Beta selected per fold and the score of all held-out predictions.

    Attributes:
        solver: Solver evaluated.
        fold_betas: Beta chosen for each fold; None for an empty held-out fold.
        fold_sizes: Number of documents held out in each fold.
        result: Micro scores over the concatenated held-out predictions.
    """

    solver: str
    fold_betas: list[Optional[float]]
    fold_sizes: list[int]
    result: EvalResult


class BenchRecord(PairLinkModelBase):
    """Mean solver time per document.

    Attributes:
        solver: Solver timed.
        dataset: Dataset name.
        ms_per_doc: Mean milliseconds per document over the timed repeats.
        docs: Number of documents.
        warmup_ms_per_doc: Mean milliseconds per document spent filling the
            coherence cache before timing.
    """

    solver: str
    dataset: str
    ms_per_doc: float = Field(gt=0.0)
    docs: int = Field(ge=1)
    warmup_ms_per_doc: float = Field(default=0.0, ge=0.0)


class CorrelationReport(PairLinkModelBase):
    """Objective values of progressively corrected assignments.

    Result t has the first t mentions linked to gold, for t = 0..N.

    Attributes:
        doc_id: The document analysed.
        n_mentions: N.
        objective_scores: Objective value of each of the N + 1 results.
        rho: Spearman correlation of each objective with the number of correct
            mentions; None when the scores are constant.
        pairwise_rho: Spearman correlation between objectives, keyed as
            `"<objective>~<objective>"`.
    """

    doc_id: str = ""
    n_mentions: int = Field(ge=2)
    objective_scores: dict[Objective, list[float]]
    rho: dict[Objective, Optional[float]]
    pairwise_rho: dict[str, Optional[float]] = {}

    @model_validator(mode="after")
    def _score_lengths(self) -> Self:
        for objective, scores in self.objective_scores.items():
            if len(scores) != self.n_mentions + 1:
                raise ValueError(
                    f"{objective.value} has {len(scores)} scores, expected "
                    f"{self.n_mentions + 1}."
                )
        return self


class DensenessReport(PairLinkModelBase):
    """Coherence denseness of one document's gold entities.

    Attributes:
        doc_id: The document analysed.
        entities: Number of vertices.
        theta: Edge-cover threshold.
        edges: Number of edges at or above `theta`.
        denseness: 2 * edges / entities.
    """

    doc_id: str
    entities: int
    theta: float
    edges: int
    denseness: float


class SynthCorpus(PairLinkModelBase):
    """A generated corpus with the KB statistics and embeddings it refers to.

    Attributes:
        corpus: The documents.
        kb: Inlink sets and priors of every candidate entity.
        embeddings: One vector per candidate entity.
    """

    corpus: list[LinkingInstance]
    kb: KbStats
    embeddings: EmbeddingStore
