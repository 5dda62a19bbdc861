# https://github.com/python-poetry/poetry/pull/2366#issuecomment-652418094
from importlib import metadata

from .analysis import correlation_study, denseness, denseness_report
from .coherence import (
    CoherenceMeasure,
    TableCoherence,
    load_embeddings,
    load_kb_stats,
)
from .evaluation import (
    bench,
    cross_validate_beta,
    evaluate,
    micro_prf,
    nil_robustness,
)
from .models import *  # noqa: F403
from .objectives import (
    brute_force_optimum,
    edge_distance,
    mintree_score,
    objective_score,
)
from .solvers import pair_linking, run_solver, top_pair
from .synth import synth_corpus
from .utils import json_dumps

__version__ = metadata.version(__name__)


__all__ = [  # noqa: F405
    # Core Models
    "Candidate",
    "Mention",
    "LinkingInstance",
    "Assignment",
    "KbStats",
    "EmbeddingStore",
    "SolverConfig",
    "RunConfig",
    "SynthSpec",
    "MeasureKind",
    "Objective",
    "SolverName",
    "Shape",
    "SolverReport",
    "EvalResult",
    "read_corpus",
    "write_corpus",
    # Operations
    "CoherenceMeasure",
    "TableCoherence",
    "load_kb_stats",
    "load_embeddings",
    "edge_distance",
    "objective_score",
    "mintree_score",
    "brute_force_optimum",
    "top_pair",
    "pair_linking",
    "run_solver",
    "denseness",
    "denseness_report",
    "correlation_study",
    "micro_prf",
    "evaluate",
    "cross_validate_beta",
    "nil_robustness",
    "bench",
    "synth_corpus",
    "json_dumps",
]
