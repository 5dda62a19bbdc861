"""Collective linking algorithms.

Every solver takes a `LinkingInstance`, a coherence callable and a
`SolverConfig`, and returns a `SolverReport` with exactly one candidate chosen
per mention. Ties are always broken toward the lower mention index and then the
lower candidate position.
"""

import heapq
import logging
import time
from collections.abc import Sequence
from typing import Any, Callable, Optional, Union

import numpy as np

from .coherence import Coherence
from .constants import (
    LBP_DAMPING,
    LBP_MAX_ITERATIONS,
    LBP_TOLERANCE,
    PAGERANK_DAMPING,
    PAGERANK_MAX_ITERATIONS,
    PAGERANK_TOLERANCE,
    SUBSTITUTION_MAX_ITERATIONS,
)
from .exceptions import ContractViolation
from .models import (
    Assignment,
    Candidate,
    LinkingInstance,
    LocalMode,
    Mention,
    Objective,
    PairQueueEntry,
    SolverConfig,
    SolverName,
    SolverReport,
)
from .objectives import (
    _distance,
    _score,
    mintree_score,
    pair_confidence,
    pair_matrices,
    support_score,
)

__all__ = [
    "top_pair",
    "pair_linking",
    "iterative_substitution",
    "loopy_belief_propagation",
    "forward_backward",
    "personalized_pagerank",
    "support_linker",
    "local_linker",
    "run_solver",
    "SOLVERS",
]

logger = logging.getLogger(__name__)


def _resolve(value: Optional[Any], default: Any) -> Any:
    return default if value is None else value


def _finish(
    inst: LinkingInstance,
    solver: Union[SolverName, str],
    start: float,
    positions: Sequence[int],
    objective_value: Optional[float] = None,
    iterations: int = 0,
    converged: bool = True,
    extras: Optional[dict[str, Any]] = None,
) -> SolverReport:
    wall_time = (time.perf_counter() - start) * 1000.0
    return SolverReport(
        doc_id=inst.doc_id,
        solver=SolverName(solver).value,
        assignment=Assignment.from_positions(inst, positions, objective_value),
        iterations=iterations,
        converged=converged,
        wall_time=wall_time,
        extras=extras or {},
    )


def _argmax_phi(inst: LinkingInstance) -> list[int]:
    return [m.argmax_phi() for m in inst.mentions]


def _selected_score(
    objective: Objective,
    inst: LinkingInstance,
    positions: Sequence[int],
    psi: Coherence,
    beta: float,
) -> float:
    chosen = [m.candidates[p] for m, p in zip(inst.mentions, positions)]
    return _score(
        objective,
        [c.phi for c in chosen],
        lambda a, b: psi(chosen[a].entity, chosen[b].entity),
        beta,
    )


def top_pair(
    m_i: Mention,
    c_i: Sequence[Candidate],
    m_j: Mention,
    c_j: Sequence[Candidate],
    psi: Coherence,
    beta: float,
    early_stop: bool = True,
) -> PairQueueEntry:
    """Most confident candidate pair of two mentions.

    Confidence is `1 - edge_distance`. Among equally confident pairs the one with
    the lower candidate positions wins, so the early-stop scan returns exactly
    what the exhaustive scan returns.

    Args:
        m_i: First mention.
        c_i: Candidates of `m_i` to consider (all of them or a fixed singleton).
        m_j: Second mention.
        c_j: Candidates of `m_j` to consider.
        psi: Pairwise coherence.
        beta: Coherence weight.
        early_stop: Scan candidates by descending phi and stop once no remaining
            pair can beat the best one found, assuming the largest possible psi.

    Raises:
        ContractViolation: If either candidate list is empty.
    """
    if not c_i or not c_j:
        raise ContractViolation("top_pair needs nonempty candidate lists.")
    if m_i.index > m_j.index:
        m_i, c_i, m_j, c_j = m_j, c_j, m_i, c_i

    xs = [(m_i.position(c.entity), c) for c in c_i]
    ys = [(m_j.position(c.entity), c) for c in c_j]
    if early_stop:
        xs.sort(key=lambda item: (-item[1].phi, item[0]))
        ys.sort(key=lambda item: (-item[1].phi, item[0]))

    best: Optional[tuple[float, int, int]] = None
    best_pair: tuple[Candidate, Candidate] = (xs[0][1], ys[0][1])
    best_conf, best_psi = -1.0, 0.0
    for px, x in xs:
        if early_stop and best is not None:
            if pair_confidence(x.phi, 1.0, ys[0][1].phi, beta) < best_conf:
                break
        for py, y in ys:
            if early_stop and best is not None:
                if pair_confidence(x.phi, 1.0, y.phi, beta) < best_conf:
                    break
            coherence = psi(x.entity, y.entity)
            conf = pair_confidence(x.phi, coherence, y.phi, beta)
            key = (-conf, px, py)
            if best is None or key < best:
                best, best_pair, best_conf, best_psi = key, (x, y), conf, coherence

    assert best is not None
    x, y = best_pair
    return PairQueueEntry(
        mentions=(m_i.index, m_j.index),
        best_pair=(x.entity, y.entity),
        positions=(best[1], best[2]),
        distance=_distance(x.phi, best_psi, y.phi, beta),
    )


def pair_linking(
    inst: LinkingInstance, psi: Coherence, config: Optional[SolverConfig] = None
) -> SolverReport:
    """Greedy MINTREE solver that commits the most confident mention pair first.

    A priority queue holds the best candidate pair of every mention pair. The
    globally most confident entry is popped and both of its mentions are fixed.
    Entries between each undecided mention and the newly fixed ones are then
    recomputed against the fixed candidate only. When one undecided mention is
    left it is resolved through its best entry with any fixed mention.

    The order of committed pairs is recorded in `extras["selection_order"]` and
    the assignment's objective value is its MINTREE weight.

    Example:
        ```python
        report = pair_linking(inst, psi, SolverConfig(beta=1 / 3))
        report.assignment.choices
        ```
    """
    config = config or SolverConfig()
    start = time.perf_counter()
    beta, early_stop = config.beta, config.early_stop
    n = inst.n
    if n == 1:
        return _finish(inst, SolverName.pair_linking, start, _argmax_phi(inst), 0.0)

    mentions = inst.mentions
    assigned: list[Optional[int]] = [None] * n
    versions: dict[tuple[int, int], int] = {}
    queue: list[tuple[float, int, int, int, PairQueueEntry]] = []

    def candidates(k: int) -> list[Candidate]:
        pos = assigned[k]
        if pos is None:
            return mentions[k].candidates
        return [mentions[k].candidates[pos]]

    def push(a: int, b: int) -> None:
        i, j = min(a, b), max(a, b)
        m_i, m_j = mentions[i], mentions[j]
        entry = top_pair(m_i, candidates(i), m_j, candidates(j), psi, beta, early_stop)
        version = versions.get((i, j), 0) + 1
        versions[(i, j)] = version
        heapq.heappush(queue, (entry.distance, i, j, version, entry))

    for i in range(n):
        for j in range(i + 1, n):
            push(i, j)

    order: list[tuple[int, int]] = []
    undecided = n
    pops = 0
    while undecided and queue:
        _, i, j, version, entry = heapq.heappop(queue)
        pops += 1
        if version != versions[(i, j)]:
            continue
        if assigned[i] is not None and assigned[j] is not None:
            continue
        pos_i, pos_j = entry.positions
        if (assigned[i] is not None and assigned[i] != pos_i) or (
            assigned[j] is not None and assigned[j] != pos_j
        ):
            push(i, j)
            continue

        fixed = []
        for k, pos in ((i, pos_i), (j, pos_j)):
            if assigned[k] is None:
                assigned[k] = pos
                fixed.append(k)
        undecided -= len(fixed)
        order.append((i, j))
        for k in range(n):
            if assigned[k] is None:
                for f in fixed:
                    push(k, f)

    positions = [int(p) for p in assigned]  # type: ignore[arg-type]
    value = mintree_score(
        [(k, mentions[k].candidates[p].entity) for k, p in enumerate(positions)],
        inst,
        psi,
        beta,
    )
    logger.debug(
        "Pair-Linking on '%s': %d pairs committed, %d queue pops",
        inst.doc_id,
        len(order),
        pops,
    )
    return _finish(
        inst,
        SolverName.pair_linking,
        start,
        positions,
        value,
        iterations=len(order),
        extras={"selection_order": [list(pair) for pair in order]},
    )


def _check_objective(objective: Union[Objective, str]) -> Objective:
    objective = Objective(objective)
    if objective not in (Objective.all_link, Objective.single_link):
        raise ContractViolation(
            f"Only all_link and single_link are supported, got {objective.value}."
        )
    return objective


def iterative_substitution(
    inst: LinkingInstance,
    objective: Union[Objective, str],
    psi: Coherence,
    config: Optional[SolverConfig] = None,
) -> SolverReport:
    """Hill climbing from the per-mention argmax-phi assignment.

    Each round tries every single-mention substitution and applies the one with
    the largest strictly positive gain. Objective values after each round are in
    `extras["objective_trace"]`, starting value first.
    """
    config = config or SolverConfig()
    objective = _check_objective(objective)
    name = (
        SolverName.itr_sub_al
        if objective == Objective.all_link
        else SolverName.itr_sub_sl
    )
    max_rounds = _resolve(config.max_iterations, SUBSTITUTION_MAX_ITERATIONS)
    start = time.perf_counter()

    mats = pair_matrices(inst, psi)
    phis = [m.phis.tolist() for m in inst.mentions]

    def evaluate(positions: Sequence[int]) -> float:
        return _score(
            objective,
            [phis[i][p] for i, p in enumerate(positions)],
            lambda a, b: float(mats[(a, b)][positions[a], positions[b]]),
            config.beta,
        )

    positions = _argmax_phi(inst)
    current = evaluate(positions)
    trace = [current]
    rounds = 0
    converged = False
    while rounds < max_rounds:
        best_gain, best_move = 0.0, None
        for i, mention in enumerate(inst.mentions):
            for p in range(len(mention.candidates)):
                if p == positions[i]:
                    continue
                trial = positions.copy()
                trial[i] = p
                value = evaluate(trial)
                if value - current > best_gain:
                    best_gain, best_move = value - current, (i, p, value)
        if best_move is None:
            converged = True
            break
        i, p, current = best_move
        positions[i] = p
        trace.append(current)
        rounds += 1

    logger.debug(
        "Iterative substitution on '%s': %d rounds, local optimum %s",
        inst.doc_id,
        rounds,
        converged,
    )
    return _finish(
        inst,
        name,
        start,
        positions,
        current,
        iterations=rounds,
        converged=converged,
        extras={"objective_trace": trace},
    )


def loopy_belief_propagation(
    inst: LinkingInstance,
    objective: Union[Objective, str],
    psi: Coherence,
    config: Optional[SolverConfig] = None,
) -> SolverReport:
    """Max-product (max-sum in log space) message passing on the complete graph.

    Unary potentials are `(1 - beta) * phi`. For ALL-Link each undirected edge
    carries `2 * beta * psi` (both ordered terms of the objective); incoming
    messages are summed. For SINGLE-Link edges carry `beta * psi` and incoming
    messages are aggregated by their maximum.

    Messages are updated synchronously, normalized to a maximum of 0 and damped
    by `config.damping`. The run converges when the largest message change is
    below `config.tolerance`; otherwise it stops after `config.max_iterations`
    sweeps with `converged=False`.
    """
    config = config or SolverConfig()
    objective = _check_objective(objective)
    name = SolverName.lbp_al if objective == Objective.all_link else SolverName.lbp_sl
    damping = _resolve(config.damping, LBP_DAMPING)
    tolerance = _resolve(config.tolerance, LBP_TOLERANCE)
    max_iterations = _resolve(config.max_iterations, LBP_MAX_ITERATIONS)
    start = time.perf_counter()

    n, beta = inst.n, config.beta
    if n == 1:
        positions = _argmax_phi(inst)
        value = _selected_score(objective, inst, positions, psi, beta)
        return _finish(inst, name, start, positions, value)

    summed = objective == Objective.all_link
    unary = [(1.0 - beta) * m.phis for m in inst.mentions]
    scale = 2.0 * beta if summed else beta
    pairwise: dict[tuple[int, int], np.ndarray] = {}
    for (i, j), mat in pair_matrices(inst, psi).items():
        pairwise[(i, j)] = scale * mat
        pairwise[(j, i)] = pairwise[(i, j)].T
    edges = [(i, j) for i in range(n) for j in range(n) if i != j]
    messages = {(i, j): np.zeros(len(inst.mentions[j].candidates)) for i, j in edges}

    def aggregate(i: int, msgs: dict[tuple[int, int], np.ndarray]):
        """Return a function giving the incoming aggregate at i without sender j."""
        senders = [k for k in range(n) if k != i]
        stack = np.array([msgs[(k, i)] for k in senders])
        if summed:
            total = stack.sum(axis=0)
            return lambda j: total - msgs[(j, i)]
        if len(senders) == 1:
            return lambda j: np.zeros(stack.shape[1])
        top = stack.argmax(axis=0)
        first = stack.max(axis=0)
        rest = stack.copy()
        rest[top, np.arange(stack.shape[1])] = -np.inf
        second = rest.max(axis=0)
        return lambda j: np.where(np.array(senders)[top] == j, second, first)

    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        without = [aggregate(i, messages) for i in range(n)]
        updated = {}
        change = 0.0
        for i, j in edges:
            h = unary[i] + without[i](j)
            computed = np.max(h[:, None] + pairwise[(i, j)], axis=0)
            computed -= computed.max()
            new = damping * messages[(i, j)] + (1.0 - damping) * computed
            change = max(change, float(np.max(np.abs(new - messages[(i, j)]))))
            updated[(i, j)] = new
        messages = updated
        if change < tolerance:
            converged = True
            break

    positions = []
    for i in range(n):
        incoming = np.array([messages[(k, i)] for k in range(n) if k != i])
        belief = unary[i] + (incoming.sum(axis=0) if summed else incoming.max(axis=0))
        positions.append(int(np.argmax(belief)))

    logger.debug(
        "LBP (%s) on '%s': %d sweeps, converged %s",
        objective.value,
        inst.doc_id,
        iterations,
        converged,
    )
    value = _selected_score(objective, inst, positions, psi, beta)
    return _finish(inst, name, start, positions, value, iterations, converged)


def forward_backward(
    inst: LinkingInstance, psi: Coherence, config: Optional[SolverConfig] = None
) -> SolverReport:
    """Exact maximizer of the chain objective by dynamic programming.

    A forward max-sum pass over the mention sequence keeps backpointers; the
    backward pass decodes the best path. Runs in O(N * k^2). A single mention takes
    its highest-phi candidate, even at `beta = 1`.
    """
    config = config or SolverConfig()
    start = time.perf_counter()
    beta = config.beta
    mentions = inst.mentions
    if inst.n == 1:
        positions = _argmax_phi(inst)
        value = _selected_score(Objective.chain, inst, positions, psi, beta)
        return _finish(inst, SolverName.fwbw, start, positions, value, iterations=1)

    delta = (1.0 - beta) * mentions[0].phis
    backpointers = []
    for i in range(1, inst.n):
        prev, cur = mentions[i - 1].entities, mentions[i].entities
        coherence = np.array([[psi(a, b) for b in cur] for a in prev])
        scores = delta[:, None] + beta * coherence
        back = np.argmax(scores, axis=0)
        backpointers.append(back)
        delta = scores[back, np.arange(len(cur))] + (1.0 - beta) * mentions[i].phis

    positions = [int(np.argmax(delta))]
    for back in reversed(backpointers):
        positions.append(int(back[positions[-1]]))
    positions.reverse()

    value = _selected_score(Objective.chain, inst, positions, psi, beta)
    return _finish(inst, SolverName.fwbw, start, positions, value, iterations=inst.n)


def personalized_pagerank(
    inst: LinkingInstance, psi: Coherence, config: Optional[SolverConfig] = None
) -> SolverReport:
    """Rank all candidates with personalized PageRank and pick each mention's best.

    Edges run from every candidate of a mention to every candidate of the other
    mentions with weight `beta * psi`; rows are normalized to sum to one (uniform
    over other mentions' candidates when all weights vanish). The teleport vector
    is proportional to `(1 - beta) * phi` (uniform when that is all zero). The
    iteration `r = (1 - damping) * P.T @ r + damping * s` stops when the L1
    change falls below the tolerance. The total mass after each iteration is
    recorded in `extras["mass_trace"]`.
    """
    config = config or SolverConfig()
    damping = _resolve(config.damping, PAGERANK_DAMPING)
    tolerance = _resolve(config.tolerance, PAGERANK_TOLERANCE)
    max_iterations = _resolve(config.max_iterations, PAGERANK_MAX_ITERATIONS)
    start = time.perf_counter()
    n, beta = inst.n, config.beta
    if n == 1:
        return _finish(inst, SolverName.pagerank, start, _argmax_phi(inst))

    sizes = [len(m.candidates) for m in inst.mentions]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    total = int(offsets[-1])
    owner = np.repeat(np.arange(n), sizes)

    weights = np.zeros((total, total))
    for (i, j), mat in pair_matrices(inst, psi).items():
        block = beta * mat
        weights[offsets[i] : offsets[i + 1], offsets[j] : offsets[j + 1]] = block
        weights[offsets[j] : offsets[j + 1], offsets[i] : offsets[i + 1]] = block.T
    row_sums = weights.sum(axis=1)
    other = (owner[:, None] != owner[None, :]).astype(np.float64)
    uniform = other / other.sum(axis=1, keepdims=True)
    transition = np.where(
        row_sums[:, None] > 0,
        weights / np.where(row_sums > 0, row_sums, 1.0)[:, None],
        uniform,
    )

    teleport = (1.0 - beta) * np.concatenate([m.phis for m in inst.mentions])
    if teleport.sum() > 0:
        teleport = teleport / teleport.sum()
    else:
        teleport = np.full(total, 1.0 / total)

    rank = np.full(total, 1.0 / total)
    mass_trace = []
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        new = (1.0 - damping) * (transition.T @ rank) + damping * teleport
        mass_trace.append(float(new.sum()))
        change = float(np.abs(new - rank).sum())
        rank = new
        if change < tolerance:
            converged = True
            break

    positions = [
        int(np.argmax(rank[offsets[i] : offsets[i + 1]])) for i in range(n)
    ]
    logger.debug(
        "PageRank on '%s': %d iterations, converged %s",
        inst.doc_id,
        iterations,
        converged,
    )
    return _finish(
        inst,
        SolverName.pagerank,
        start,
        positions,
        iterations=iterations,
        converged=converged,
        extras={"mass_trace": mass_trace},
    )


def support_linker(
    inst: LinkingInstance, psi: Coherence, config: Optional[SolverConfig] = None
) -> SolverReport:
    """Non-iterative linker scoring each candidate by its own confidence plus the
    support every other mention lends it.

    Picks, per mention, the argmax over `e_i` of
    `(1 - beta) * phi(m_i, e_i) + sum_{j != i} support(i, j, e_i)`.
    A single mention takes its highest-phi candidate.
    """
    config = config or SolverConfig()
    start = time.perf_counter()
    beta = config.beta
    if inst.n == 1:
        return _finish(inst, SolverName.support, start, _argmax_phi(inst))
    positions = []
    for i, mention in enumerate(inst.mentions):
        best, best_pos = -np.inf, 0
        for pos, c in enumerate(mention.candidates):
            value = (1.0 - beta) * c.phi
            for j in range(inst.n):
                if j != i:
                    value += support_score(i, j, c.entity, inst, psi, beta)
            if value > best:
                best, best_pos = value, pos
        positions.append(best_pos)
    return _finish(inst, SolverName.support, start, positions)


def local_linker(
    inst: LinkingInstance, mode: Union[LocalMode, str] = LocalMode.phi
) -> SolverReport:
    """Per-mention argmax of phi or of the prior, ignoring coherence.

    Raises:
        ContractViolation: In prior mode when a candidate has no prior.
    """
    mode = LocalMode(mode)
    start = time.perf_counter()
    if mode == LocalMode.phi:
        return _finish(inst, SolverName.local_phi, start, _argmax_phi(inst))

    positions = []
    for mention in inst.mentions:
        priors = [c.prior for c in mention.candidates]
        if any(p is None for p in priors):
            raise ContractViolation(
                f"Mention {mention.index} of '{inst.doc_id}' has candidates without "
                "a prior."
            )
        positions.append(int(np.argmax(np.array(priors, dtype=np.float64))))
    return _finish(inst, SolverName.local_prior, start, positions)


SolverFn = Callable[[LinkingInstance, Coherence, SolverConfig], SolverReport]

SOLVERS: dict[SolverName, SolverFn] = {
    SolverName.pair_linking: pair_linking,
    SolverName.itr_sub_al: lambda inst, psi, config: iterative_substitution(
        inst, Objective.all_link, psi, config
    ),
    SolverName.itr_sub_sl: lambda inst, psi, config: iterative_substitution(
        inst, Objective.single_link, psi, config
    ),
    SolverName.lbp_al: lambda inst, psi, config: loopy_belief_propagation(
        inst, Objective.all_link, psi, config
    ),
    SolverName.lbp_sl: lambda inst, psi, config: loopy_belief_propagation(
        inst, Objective.single_link, psi, config
    ),
    SolverName.fwbw: forward_backward,
    SolverName.pagerank: personalized_pagerank,
    SolverName.support: support_linker,
    SolverName.local_phi: lambda inst, psi, config: local_linker(inst, LocalMode.phi),
    SolverName.local_prior: lambda inst, psi, config: local_linker(
        inst, LocalMode.prior
    ),
}
"""Solvers by name with a uniform `(inst, psi, config)` signature."""


def run_solver(
    name: Union[SolverName, str],
    inst: LinkingInstance,
    psi: Coherence,
    config: Optional[SolverConfig] = None,
) -> SolverReport:
    """Run a registered solver by name."""
    return SOLVERS[SolverName(name)](inst, psi, config or SolverConfig())
