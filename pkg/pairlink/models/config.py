"""Enumerations and configuration models for solvers and command-line runs."""

from enum import Enum
from pathlib import Path
from typing import Optional

from pydantic import Field, field_validator, model_validator
from typing_extensions import Self

from ..constants import BETA_GRID, DEFAULT_BETA, DEFAULT_SEED, NIL_FRACTIONS
from .base_models import PairLinkModelBase

__all__ = [
    "MeasureKind",
    "Objective",
    "LocalMode",
    "SolverName",
    "Shape",
    "Command",
    "SolverConfig",
    "SynthSpec",
    "RunConfig",
]


class MeasureKind(str, Enum):
    """Pairwise coherence measures.

    Attributes:
        wlm: Wikipedia link-based measure over inlink sets.
        njs: Normalized Jaccard similarity of inlink sets on a log scale.
        ees: Cosine similarity of entity embeddings.
        combined: Mean of njs and ees.
    """

    wlm = "wlm"
    njs = "njs"
    ees = "ees"
    combined = "combined"

    def __repr__(self) -> str:
        """Custom repr for MeasureKind"""
        return f"'{self.name}'"  # pragma: no cover


class Objective(str, Enum):
    """Global disambiguation objectives.

    Attributes:
        all_link: Sum of coherence over all ordered mention pairs.
        single_link: Each entity's best coherence to any other entity.
        chain: Coherence of neighbouring mentions only.
        mintree: Weight of the minimum spanning tree over edge distances (lower is
            better).
    """

    all_link = "all_link"
    single_link = "single_link"
    chain = "chain"
    mintree = "mintree"

    def __repr__(self) -> str:
        """Custom repr for Objective"""
        return f"'{self.name}'"  # pragma: no cover


class LocalMode(str, Enum):
    """Score used by the local (non-collective) linker."""

    phi = "phi"
    prior = "prior"


class SolverName(str, Enum):
    """Registered collective and local solvers."""

    pair_linking = "pair-linking"
    itr_sub_al = "itr-sub-al"
    itr_sub_sl = "itr-sub-sl"
    lbp_al = "lbp-al"
    lbp_sl = "lbp-sl"
    fwbw = "fwbw"
    pagerank = "pagerank"
    support = "support"
    local_phi = "local-phi"
    local_prior = "local-prior"


class Shape(str, Enum):
    """Coherence shape of synthetic gold entities.

    Attributes:
        forest: Gold entities form strongly related pairs.
        tree: A star; one central entity related to all others.
        chain: Consecutive gold entities are related.
        dense: All gold entities are equally related.
    """

    forest = "forest"
    tree = "tree"
    chain = "chain"
    dense = "dense"


class Command(str, Enum):
    """Command-line subcommands."""

    link = "link"
    eval = "eval"
    bench = "bench"
    denseness = "denseness"
    correlate = "correlate"
    oracle = "oracle"
    robustness = "robustness"
    synth = "synth"


class SolverConfig(PairLinkModelBase):
    """Settings shared by all solvers.

    Fields left as None resolve to the solver's default in `pairlink.constants`.

    Attributes:
        beta: Weight of pairwise coherence against local confidence.
        max_iterations: Iteration cap of iterative solvers.
        damping: LBP message damping or PageRank teleport probability.
        tolerance: Convergence tolerance of iterative solvers.
        seed: Seed for randomized procedures.
        early_stop: Prune the candidate-pair scan of Pair-Linking.
    """

    beta: float = Field(default=DEFAULT_BETA, ge=0.0, le=1.0)
    max_iterations: Optional[int] = Field(default=None, gt=0)
    damping: Optional[float] = Field(default=None, ge=0.0, lt=1.0)
    tolerance: Optional[float] = Field(default=None, gt=0.0)
    seed: int = Field(default=DEFAULT_SEED, ge=0, lt=2**64)
    early_stop: bool = True


class SynthSpec(PairLinkModelBase):
    """Shape parameters of a synthetic corpus.

    Attributes:
        shape: Coherence shape of each document's gold entities.
        docs: Number of documents.
        mentions: Mentions per document.
        candidates: Candidates per mention, gold included.
        noise: 0 keeps every gold phi above every distractor phi; 1 lets the
            ranges overlap almost entirely.
        dim: Dimension of the gold embedding subspace; 0 picks the smallest one
            the shape needs.
    """

    shape: Shape = Shape.forest
    docs: int = Field(default=20, ge=1)
    mentions: int = Field(default=6, ge=1)
    candidates: int = Field(default=5, ge=1)
    noise: float = Field(default=0.0, ge=0.0, le=1.0)
    dim: int = Field(default=0, ge=0)


class RunConfig(PairLinkModelBase):
    """Effective configuration of one command-line run.

    Attributes:
        command: The subcommand to run.
        measure: Coherence measure.
        solver: Solver used by link, eval and robustness.
        solvers: Solvers compared by bench.
        objective: Objective optimized by the oracle command.
        beta: Coherence weight. None uses the default or, for eval with
            `cross_validate`, the grid search.
        max_iterations: Iteration cap of iterative solvers; None uses the
            solver's default.
        damping: LBP message damping or PageRank teleport probability; None
            uses the solver's default.
        tolerance: Convergence tolerance of iterative solvers; None uses the
            solver's default.
        early_stop: Prune the candidate-pair scan of Pair-Linking.
        seed: Seed for randomized commands.
        threads: Number of documents processed concurrently.
        kb: KB-stats file.
        embeddings: Embeddings file.
        corpus: Corpus JSON Lines file.
        output: Output directory of synth.
        table: Optional path of a plain-text results table.
        dataset: Dataset name in tables; defaults to the corpus file stem.
        strict: Raise on entities missing from the KB instead of scoring them 0.
        rescale_phi: Treat corpus phi values as raw ranker scores and min-max
            rescale them per mention on load.
        cross_validate: Select beta by 5-fold cross validation during eval.
        grid: Beta values searched by cross validation.
        fractions: NIL fractions run by the robustness command.
        warmups: Untimed solver runs per document before timing.
        repeats: Timed solver runs per document.
        docs: Number of synthetic documents.
        mentions: Mentions per synthetic document.
        candidates: Candidates per synthetic mention.
        shape: Coherence shape of synthetic gold entities.
        noise: Phi noise level of synthetic distractors, in [0, 1].
        dim: Embedding dimension of the synthetic gold subspace; 0 picks one large
            enough for the document size.
    """

    command: Command
    measure: MeasureKind = MeasureKind.njs
    solver: SolverName = SolverName.pair_linking
    solvers: list[SolverName] = [SolverName.pair_linking, SolverName.lbp_al]
    objective: Objective = Objective.mintree
    beta: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    max_iterations: Optional[int] = Field(default=None, gt=0)
    damping: Optional[float] = Field(default=None, ge=0.0, lt=1.0)
    tolerance: Optional[float] = Field(default=None, gt=0.0)
    early_stop: bool = True
    seed: int = Field(default=DEFAULT_SEED, ge=0, lt=2**64)
    threads: int = Field(default=1, ge=1)
    kb: Optional[Path] = None
    embeddings: Optional[Path] = None
    corpus: Optional[Path] = None
    output: Optional[Path] = None
    table: Optional[Path] = None
    dataset: Optional[str] = None
    strict: bool = False
    rescale_phi: bool = False
    cross_validate: bool = False
    grid: list[float] = list(BETA_GRID)
    fractions: list[float] = list(NIL_FRACTIONS)
    warmups: int = Field(default=1, ge=0)
    repeats: int = Field(default=3, ge=1)
    docs: int = Field(default=20, ge=1)
    mentions: int = Field(default=6, ge=1)
    candidates: int = Field(default=5, ge=1)
    shape: Shape = Shape.forest
    noise: float = Field(default=0.0, ge=0.0, le=1.0)
    dim: int = Field(default=0, ge=0)

    @field_validator("grid")
    @classmethod
    def _grid_in_range(cls, grid: list[float]) -> list[float]:
        if not grid:
            raise ValueError("The beta grid must not be empty.")
        if any(not 0.0 <= b <= 1.0 for b in grid):
            raise ValueError("Every beta in the grid must lie in [0, 1].")
        return grid

    @field_validator("fractions")
    @classmethod
    def _fractions_in_range(cls, fractions: list[float]) -> list[float]:
        if any(not 0.0 <= f <= 1.0 for f in fractions):
            raise ValueError("NIL fractions must lie in [0, 1].")
        return fractions

    @model_validator(mode="after")
    def _inputs_exist(self) -> Self:
        if self.command == Command.synth:
            return self
        for name in ("kb", "embeddings", "corpus"):
            path = getattr(self, name)
            if path is not None and not path.is_file():
                raise ValueError(f"{name} file '{path}' does not exist.")
        return self

    def synth_spec(self) -> SynthSpec:
        """Synthetic corpus parameters of this run."""
        return SynthSpec(
            shape=self.shape,
            docs=self.docs,
            mentions=self.mentions,
            candidates=self.candidates,
            noise=self.noise,
            dim=self.dim,
        )

    def solver_config(self) -> SolverConfig:
        """Solver settings implied by this run."""
        return SolverConfig(
            beta=DEFAULT_BETA if self.beta is None else self.beta,
            max_iterations=self.max_iterations,
            damping=self.damping,
            tolerance=self.tolerance,
            seed=self.seed,
            early_stop=self.early_stop,
        )
