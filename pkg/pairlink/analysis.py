"""Coherence denseness of entity graphs and the objective-vs-quality correlation
study."""

import itertools
import logging
from collections.abc import Sequence
from typing import Optional

import numpy as np
from scipy import stats

from .coherence import Coherence
from .constants import DENSENESS_MIN_ENTITIES
from .exceptions import ContractViolation, RefusalError
from .helper_types import EntityId
from .models import (
    Assignment,
    CoherenceGraph,
    CorrelationReport,
    DensenessReport,
    LinkingInstance,
    Objective,
)
from .objectives import objective_score

__all__ = [
    "coherence_graph",
    "edge_cover_threshold",
    "filter_edges",
    "threshold_graph",
    "denseness",
    "denseness_report",
    "spearman",
    "correlation_study",
    "CORRELATED_OBJECTIVES",
]

logger = logging.getLogger(__name__)

CORRELATED_OBJECTIVES = (Objective.all_link, Objective.single_link, Objective.mintree)
"""Objectives scored by the correlation study."""


def coherence_graph(entities: Sequence[EntityId], psi: Coherence) -> CoherenceGraph:
    """Complete graph over the distinct `entities` weighted by `psi`."""
    vertices = list(dict.fromkeys(entities))
    n = len(vertices)
    weights = np.zeros((n, n))
    for i, j in itertools.combinations(range(n), 2):
        weights[i, j] = weights[j, i] = psi(vertices[i], vertices[j])
    return CoherenceGraph(vertices=vertices, weights=weights)


def edge_cover_threshold(g: CoherenceGraph) -> float:
    """Largest threshold whose edges `{e: w(e) >= theta}` still touch every vertex.

    Equals the minimum over vertices of their heaviest incident edge.

    Raises:
        ContractViolation: If the graph has fewer than two vertices.
    """
    if g.n < 2:
        raise ContractViolation("An edge cover needs at least two vertices.")
    weights = np.where(np.eye(g.n, dtype=bool), -np.inf, g.weights)
    return float(weights.max(axis=1).min())


def filter_edges(g: CoherenceGraph, theta: float) -> list[tuple[int, int]]:
    """Edges `(i, j)`, `i < j`, with weight at least `theta`."""
    return [(i, j) for i, j, w in g.edges() if w >= theta]


def threshold_graph(g: CoherenceGraph) -> CoherenceGraph:
    """Copy of `g` with `theta` and `filtered_edges` filled in.

    Raises:
        ContractViolation: If the graph has fewer than two vertices.
    """
    theta = edge_cover_threshold(g)
    return g.model_copy(
        update={"theta": theta, "filtered_edges": filter_edges(g, theta)}
    )


def denseness_report(
    entities: Sequence[EntityId], psi: Coherence, doc_id: str = ""
) -> DensenessReport:
    """Threshold, surviving edges and denseness of the entities' coherence graph.

    Raises:
        RefusalError: If there are fewer than `DENSENESS_MIN_ENTITIES` distinct
            entities.
    """
    g = coherence_graph(entities, psi)
    if g.n < DENSENESS_MIN_ENTITIES:
        raise RefusalError(
            f"Denseness needs at least {DENSENESS_MIN_ENTITIES} entities, got {g.n}."
        )
    g = threshold_graph(g)
    edges = g.filtered_edges or []
    return DensenessReport(
        doc_id=doc_id,
        entities=g.n,
        theta=g.theta,
        edges=len(edges),
        denseness=2 * len(edges) / g.n,
    )


def denseness(entities: Sequence[EntityId], psi: Coherence) -> float:
    """Average degree `2 |E_theta| / |V|` at the edge-cover threshold.

    A forest of strong pairs gives 1, a tree or chain `2 (n - 1) / n` and a
    uniformly coherent set `n - 1`.

    Raises:
        RefusalError: If there are fewer than `DENSENESS_MIN_ENTITIES` distinct
            entities.
    """
    return denseness_report(entities, psi).denseness


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation with average ranks for ties.

    Raises:
        ContractViolation: On unequal lengths, fewer than two points, or a
            constant input.
    """
    if len(xs) != len(ys):
        raise ContractViolation(f"Length mismatch: {len(xs)} vs {len(ys)}.")
    if len(xs) < 2:
        raise ContractViolation("Spearman correlation needs at least two points.")
    if len(set(xs)) == 1 or len(set(ys)) == 1:
        raise ContractViolation("Spearman correlation is undefined for constant input.")
    rho = float(stats.spearmanr(xs, ys)[0])
    return min(1.0, max(-1.0, rho))


def _rho_or_none(xs: Sequence[float], ys: Sequence[float]) -> Optional[float]:
    try:
        return spearman(xs, ys)
    except ContractViolation:
        return None


def correlation_study(
    inst: LinkingInstance, psi: Coherence, beta: float
) -> CorrelationReport:
    """Score progressively corrected assignments under each objective.

    Result 0 links every mention to its highest-phi wrong candidate. Result `t`
    additionally links the first `t` mentions to gold. Each objective's scores are
    correlated with `t`; a constant score list has no correlation and reports
    None.

    Raises:
        RefusalError: If the document has a single mention, or a mention lacks
            gold among its candidates or has only one candidate.
    """
    if inst.n < 2:
        raise RefusalError(f"Document '{inst.doc_id}' needs at least two mentions.")

    gold, wrong = [], []
    for mention in inst.mentions:
        if mention.gold_position() is None:
            raise RefusalError(
                f"Mention {mention.index} of '{inst.doc_id}' has no gold candidate."
            )
        if len(mention.candidates) < 2:
            raise RefusalError(
                f"Mention {mention.index} of '{inst.doc_id}' has a single candidate."
            )
        others = [c for c in mention.candidates if c.entity != mention.gold]
        gold.append(mention.gold)
        wrong.append(max(others, key=lambda c: c.phi).entity)

    steps = list(range(inst.n + 1))
    scores: dict[Objective, list[float]] = {o: [] for o in CORRELATED_OBJECTIVES}
    for t in steps:
        gamma = Assignment(choices=gold[:t] + wrong[t:])
        for objective in CORRELATED_OBJECTIVES:
            scores[objective].append(objective_score(objective, gamma, inst, psi, beta))

    rho = {o: _rho_or_none(steps, scores[o]) for o in CORRELATED_OBJECTIVES}
    pairwise = {
        f"{a.value}~{b.value}": _rho_or_none(scores[a], scores[b])
        for a, b in (
            (Objective.mintree, Objective.all_link),
            (Objective.mintree, Objective.single_link),
            (Objective.all_link, Objective.single_link),
        )
    }
    return CorrelationReport(
        doc_id=inst.doc_id,
        n_mentions=inst.n,
        objective_scores=scores,
        rho=rho,
        pairwise_rho=pairwise,
    )
