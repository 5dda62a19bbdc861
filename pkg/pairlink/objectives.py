"""Global disambiguation objectives and an exhaustive oracle for small documents.

All objectives blend local confidence (phi) and pairwise coherence (psi) with a
weight beta in [0, 1]:

- ALL-Link: (1 - beta) * sum(phi) + beta * sum of psi over ordered mention pairs.
- SINGLE-Link: like ALL-Link but each entity contributes only its best psi.
- Chain: like ALL-Link but only neighbouring mentions contribute psi.
- MINTREE: weight of the minimum spanning tree over `edge_distance` (minimized).
"""

import itertools
import logging
from collections.abc import Sequence
from typing import Callable, Literal, Union

import numpy as np

from .coherence import Coherence
from .constants import BRUTE_FORCE_LIMIT
from .exceptions import ContractViolation, RefusalError
from .helper_types import EntityId
from .models import Assignment, LinkingInstance, Objective

__all__ = [
    "edge_distance",
    "all_link_score",
    "single_link_score",
    "chain_score",
    "support_score",
    "mintree_score",
    "mintree_tree",
    "objective_score",
    "minimum_spanning_tree",
    "brute_force_optimum",
    "pair_matrices",
    "pair_confidence",
    "MAXIMIZED",
]

logger = logging.getLogger(__name__)

MAXIMIZED = frozenset({Objective.all_link, Objective.single_link, Objective.chain})
"""Objectives where larger is better. MINTREE is minimized."""

MstMethod = Literal["kruskal", "prim"]


def edge_distance(phi_i: float, psi: float, phi_j: float, beta: float) -> float:
    """Semantic distance between two candidate entities of different mentions.

    `1 - ((1 - beta) * (phi_i + phi_j) / 2 + beta * psi)`. With beta = 1/3 this is
    `1 - (phi_i + psi + phi_j) / 3`.

    Raises:
        ContractViolation: If any input lies outside [0, 1].
    """
    checks = (("phi_i", phi_i), ("psi", psi), ("phi_j", phi_j), ("beta", beta))
    for name, value in checks:
        if not 0.0 <= value <= 1.0:
            raise ContractViolation(f"{name} = {value} is outside [0, 1].")
    return _distance(phi_i, psi, phi_j, beta)


def _distance(phi_i: float, psi: float, phi_j: float, beta: float) -> float:
    # Unchecked; clamped so rounding never leaves [0, 1]
    d = 1.0 - ((1.0 - beta) * (phi_i + phi_j) / 2 + beta * psi)
    return min(1.0, max(0.0, d))


def pair_confidence(phi_i: float, psi: float, phi_j: float, beta: float) -> float:
    """1 - edge_distance, unclamped and unchecked."""
    return (1.0 - beta) * (phi_i + phi_j) / 2 + beta * psi


def minimum_spanning_tree(
    dist: np.ndarray, method: MstMethod = "kruskal"
) -> list[tuple[int, int, float]]:
    """Edges `(i, j, weight)` of a minimum spanning tree of a complete graph.

    Args:
        dist: Symmetric `n x n` distance matrix; the diagonal is ignored.
        method: `"kruskal"` (sorted edges with union-find; ties broken by vertex
            indices) or `"prim"` (grown from vertex 0).

    Returns:
        The `n - 1` tree edges with `i < j`, in the order they were added.
    """
    n = dist.shape[0]
    if n <= 1:
        return []
    if method == "kruskal":
        return _kruskal(dist)
    if method == "prim":
        return _prim(dist)
    raise ContractViolation(f"Unknown spanning tree method '{method}'.")


def _kruskal(dist: np.ndarray) -> list[tuple[int, int, float]]:
    n = dist.shape[0]
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = sorted(
        (float(dist[i, j]), i, j) for i in range(n) for j in range(i + 1, n)
    )
    tree = []
    for weight, i, j in edges:
        ri, rj = find(i), find(j)
        if ri == rj:
            continue
        parent[rj] = ri
        tree.append((i, j, weight))
        if len(tree) == n - 1:
            break
    return tree


def _prim(dist: np.ndarray) -> list[tuple[int, int, float]]:
    n = dist.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = dist[0].astype(np.float64).copy()
    link = np.zeros(n, dtype=np.int64)
    tree = []
    for _ in range(n - 1):
        masked = np.where(in_tree, np.inf, best)
        v = int(np.argmin(masked))
        u = int(link[v])
        tree.append((min(u, v), max(u, v), float(dist[u, v])))
        in_tree[v] = True
        closer = dist[v] < best
        best = np.where(closer, dist[v], best)
        link = np.where(closer, v, link)
    return tree


def _score(
    objective: Objective,
    phis: Sequence[float],
    coh: Callable[[int, int], float],
    beta: float,
    method: MstMethod = "kruskal",
) -> float:
    """Objective value of selected entities given their phis and a pair accessor."""
    n = len(phis)
    if objective == Objective.mintree:
        tree = minimum_spanning_tree(_distance_matrix(phis, coh, beta), method)
        return sum(w for _, _, w in tree)

    local = (1.0 - beta) * sum(phis)
    if objective == Objective.all_link:
        pairs = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                pairs += coh(i, j)
        # Ordered pairs: each unordered pair counts twice
        return local + beta * 2.0 * pairs
    if objective == Objective.single_link:
        best = 0.0
        for i in range(n):
            best += max(
                (coh(min(i, j), max(i, j)) for j in range(n) if j != i), default=0.0
            )
        return local + beta * best
    if objective == Objective.chain:
        return local + beta * sum(coh(i, i + 1) for i in range(n - 1))
    raise ContractViolation(f"Unknown objective '{objective}'.")


def _distance_matrix(
    phis: Sequence[float], coh: Callable[[int, int], float], beta: float
) -> np.ndarray:
    n = len(phis)
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dist[i, j] = dist[j, i] = _distance(phis[i], coh(i, j), phis[j], beta)
    return dist


def _selected(
    gamma: Assignment, inst: LinkingInstance
) -> tuple[list[float], list[EntityId]]:
    positions = gamma.positions(inst)
    candidates = [m.candidates[p] for m, p in zip(inst.mentions, positions)]
    return [c.phi for c in candidates], [c.entity for c in candidates]


def objective_score(
    objective: Union[Objective, str],
    gamma: Assignment,
    inst: LinkingInstance,
    psi: Coherence,
    beta: float,
) -> float:
    """Value of any objective for a complete assignment.

    Raises:
        ContractViolation: If `gamma` is incomplete or picks a non-candidate.
    """
    phis, entities = _selected(gamma, inst)
    return _score(
        Objective(objective), phis, lambda a, b: psi(entities[a], entities[b]), beta
    )


def all_link_score(
    gamma: Assignment, inst: LinkingInstance, psi: Coherence, beta: float
) -> float:
    """ALL-Link value: psi summed over ordered mention pairs, so each unordered
    pair counts twice.

    Example:
        Two mentions with phi 0.5 each, psi 0.8 and beta 0.5 score
        `0.5 * 1.0 + 0.5 * 1.6 = 1.3`.
    """
    return objective_score(Objective.all_link, gamma, inst, psi, beta)


def single_link_score(
    gamma: Assignment, inst: LinkingInstance, psi: Coherence, beta: float
) -> float:
    """SINGLE-Link value. A lone mention contributes no coherence."""
    return objective_score(Objective.single_link, gamma, inst, psi, beta)


def chain_score(
    gamma: Assignment, inst: LinkingInstance, psi: Coherence, beta: float
) -> float:
    """Chain value: coherence of consecutive mentions only."""
    return objective_score(Objective.chain, gamma, inst, psi, beta)


def support_score(
    i: int,
    j: int,
    e_i: EntityId,
    inst: LinkingInstance,
    psi: Coherence,
    beta: float,
) -> float:
    """Support mention `j` lends to entity `e_i` of mention `i`.

    `max over e_j in C_j of (1 - beta) * phi(m_j, e_j) + beta * psi(e_i, e_j)`.

    Raises:
        ContractViolation: If `i == j` or `e_i` is not a candidate of mention `i`.
    """
    if i == j:
        raise ContractViolation("Support needs two different mentions.")
    if inst.mentions[i].position(e_i) is None:
        raise ContractViolation(f"'{e_i}' is not a candidate of mention {i}.")
    return max(
        (1.0 - beta) * c.phi + beta * psi(e_i, c.entity)
        for c in inst.mentions[j].candidates
    )


def _mintree_nodes(
    entities: Sequence[tuple[int, EntityId]], inst: LinkingInstance
) -> tuple[list[int], list[float], list[EntityId]]:
    indices = [i for i, _ in entities]
    if len(set(indices)) != len(indices):
        raise ContractViolation("Each mention may contribute only one entity.")
    ordered = sorted(entities)
    phis = []
    for i, entity in ordered:
        if not 0 <= i < inst.n:
            raise ContractViolation(f"Mention index {i} is out of range.")
        pos = inst.mentions[i].position(entity)
        if pos is None:
            raise ContractViolation(f"'{entity}' is not a candidate of mention {i}.")
        phis.append(inst.mentions[i].candidates[pos].phi)
    return [i for i, _ in ordered], phis, [e for _, e in ordered]


def mintree_score(
    entities: Sequence[tuple[int, EntityId]],
    inst: LinkingInstance,
    psi: Coherence,
    beta: float,
    method: MstMethod = "kruskal",
) -> float:
    """Weight of the minimum spanning tree over the selected entities.

    Args:
        entities: `(mention index, entity)` pairs, one per mention.
        inst: The document the entities were selected from.
        psi: Pairwise coherence.
        beta: Coherence weight of `edge_distance`.
        method: Spanning tree routine, `"kruskal"` or `"prim"`.

    Returns:
        The tree weight; 0.0 for a single entity.

    Raises:
        ContractViolation: On a duplicate mention index or a non-candidate.
    """
    _, phis, ents = _mintree_nodes(entities, inst)
    return _score(
        Objective.mintree, phis, lambda a, b: psi(ents[a], ents[b]), beta, method
    )


def mintree_tree(
    entities: Sequence[tuple[int, EntityId]],
    inst: LinkingInstance,
    psi: Coherence,
    beta: float,
) -> list[tuple[int, int, float]]:
    """Minimum spanning tree edges as `(mention i, mention j, distance)`."""
    indices, phis, ents = _mintree_nodes(entities, inst)
    dist = _distance_matrix(phis, lambda a, b: psi(ents[a], ents[b]), beta)
    return [(indices[a], indices[b], w) for a, b, w in minimum_spanning_tree(dist)]


def pair_matrices(
    inst: LinkingInstance, psi: Coherence
) -> dict[tuple[int, int], np.ndarray]:
    """Coherence between all candidates of every mention pair `(i, j)`, `i < j`.

    Entry `[(i, j)][x, y]` is `psi(C_i[x], C_j[y])`.
    """
    mats = {}
    for i, j in itertools.combinations(range(inst.n), 2):
        ci, cj = inst.mentions[i].entities, inst.mentions[j].entities
        mats[(i, j)] = np.array([[psi(a, b) for b in cj] for a in ci], dtype=float)
    return mats


def brute_force_optimum(
    inst: LinkingInstance,
    objective: Union[Objective, str],
    psi: Coherence,
    beta: float,
) -> tuple[Assignment, float]:
    """Exact optimum by enumerating every complete assignment.

    Maximizes ALL-Link, SINGLE-Link and chain; minimizes MINTREE. Among equal
    values the lexicographically smallest vector of candidate positions wins.

    Raises:
        RefusalError: If the search space exceeds `BRUTE_FORCE_LIMIT`.
    """
    objective = Objective(objective)
    space = inst.search_space()
    if space > BRUTE_FORCE_LIMIT:
        raise RefusalError(
            f"Document '{inst.doc_id}' has {space} assignments, above the "
            f"exhaustive search limit of {BRUTE_FORCE_LIMIT}."
        )
    mats = pair_matrices(inst, psi)
    phi_lists = [m.phis.tolist() for m in inst.mentions]
    sign = 1.0 if objective in MAXIMIZED else -1.0

    best_value = None
    best_positions: tuple[int, ...] = ()
    ranges = [range(len(m.candidates)) for m in inst.mentions]
    for positions in itertools.product(*ranges):
        phis = [phi_lists[i][p] for i, p in enumerate(positions)]

        def coh(a: int, b: int, positions: tuple[int, ...] = positions) -> float:
            return float(mats[(a, b)][positions[a], positions[b]])

        value = _score(objective, phis, coh, beta)
        if best_value is None or sign * value > sign * best_value:
            best_value, best_positions = value, positions

    assert best_value is not None
    logger.debug(
        "Enumerated %d assignments of '%s' for %s", space, inst.doc_id, objective.value
    )
    return Assignment.from_positions(inst, best_positions, best_value), best_value
