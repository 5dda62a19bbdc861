"""Evaluation harness: micro-averaged scores, beta cross validation, NIL
robustness and solver timing."""

import logging
import math
import time
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, TypeVar, Union

from .coherence import Coherence, fresh
from .constants import BETA_GRID, CV_FOLDS, NIL_MIN_MENTIONS
from .exceptions import ContractViolation, RefusalError
from .helper_types import EntityId
from .models import (
    Assignment,
    BenchRecord,
    CrossValidationResult,
    EvalResult,
    LinkingInstance,
    SolverConfig,
    SolverName,
    SolverReport,
)
from .solvers import run_solver
from .utils import doc_rng, stable_hash

__all__ = [
    "micro_prf",
    "parallel_map",
    "solve_corpus",
    "evaluate",
    "fold_of",
    "cross_validate_beta",
    "nil_count",
    "nil_robustness",
    "bench",
    "format_table",
]

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(
    func: Callable[[T], R], items: Sequence[T], threads: int = 1
) -> list[R]:
    """Apply `func` to every item, on up to `threads` threads, in input order."""
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def micro_prf(
    predictions: Mapping[str, Assignment],
    gold: Mapping[str, Mapping[int, EntityId]],
) -> EvalResult:
    """Precision, recall and F1 aggregated over mentions of all documents.

    Args:
        predictions: Assignment per document id. `None` choices are not attempted.
        gold: Gold entity per mention index, per document id.

    Raises:
        ContractViolation: If a prediction refers to a document without gold.
    """
    unknown = sorted(set(predictions) - set(gold))
    if unknown:
        raise ContractViolation(f"Predictions for unknown documents: {unknown}.")
    attempted = correct = 0
    for doc_id, gamma in predictions.items():
        doc_gold = gold[doc_id]
        for i, choice in enumerate(gamma.choices):
            if choice is None:
                continue
            attempted += 1
            if doc_gold.get(i) == choice:
                correct += 1
    gold_count = sum(len(g) for g in gold.values())
    return EvalResult.from_counts(attempted, gold_count, correct)


def solve_corpus(
    corpus: Sequence[LinkingInstance],
    solver: Union[SolverName, str],
    psi: Coherence,
    config: Optional[SolverConfig] = None,
    threads: int = 1,
) -> list[SolverReport]:
    """Run a solver on every document, each with its own coherence cache.

    Reports come back in corpus order whatever the number of threads.
    """
    config = config or SolverConfig()
    return parallel_map(
        lambda inst: run_solver(solver, inst, fresh(psi), config), corpus, threads
    )


def evaluate(
    corpus: Sequence[LinkingInstance],
    solver: Union[SolverName, str],
    psi: Coherence,
    config: Optional[SolverConfig] = None,
    threads: int = 1,
) -> tuple[EvalResult, list[SolverReport]]:
    """Solve the corpus and score the predictions against gold."""
    reports = solve_corpus(corpus, solver, psi, config, threads)
    result = micro_prf(
        {r.doc_id: r.assignment for r in reports},
        {inst.doc_id: inst.gold_map() for inst in corpus},
    )
    return result, reports


def fold_of(doc_id: str, folds: int = CV_FOLDS) -> int:
    """Fold of a document, from a stable hash of its id."""
    return stable_hash(doc_id) % folds


def cross_validate_beta(
    corpus: Sequence[LinkingInstance],
    solver: Union[SolverName, str],
    psi: Coherence,
    grid: Sequence[float] = BETA_GRID,
    config: Optional[SolverConfig] = None,
    threads: int = 1,
) -> CrossValidationResult:
    """Select beta per fold on the other folds and score all held-out predictions.

    Documents are split into folds by `fold_of`. For each fold the beta with the
    best micro F1 on the remaining folds is applied to the held-out documents;
    ties go to the smallest beta. A fold with no training documents falls back to
    the first grid value.

    Raises:
        RefusalError: If the corpus has fewer than 5 documents.
        ContractViolation: If the grid is empty.
    """
    if len(corpus) < CV_FOLDS:
        raise RefusalError(
            f"Cross validation needs at least {CV_FOLDS} documents, got {len(corpus)}."
        )
    if not grid:
        raise ContractViolation("The beta grid must not be empty.")
    config = config or SolverConfig()
    solver = SolverName(solver)

    gold = {inst.doc_id: inst.gold_map() for inst in corpus}
    folds = [fold_of(inst.doc_id) for inst in corpus]
    predictions: dict[float, list[Assignment]] = {}
    for beta in dict.fromkeys(grid):
        reports = solve_corpus(
            corpus, solver, psi, config.model_copy(update={"beta": beta}), threads
        )
        predictions[beta] = [r.assignment for r in reports]

    def score(beta: float, members: list[int]) -> EvalResult:
        return micro_prf(
            {corpus[d].doc_id: predictions[beta][d] for d in members},
            {corpus[d].doc_id: gold[corpus[d].doc_id] for d in members},
        )

    fold_betas: list[Optional[float]] = []
    fold_sizes: list[int] = []
    held_out: dict[str, Assignment] = {}
    for fold in range(CV_FOLDS):
        test = [d for d, f in enumerate(folds) if f == fold]
        train = [d for d, f in enumerate(folds) if f != fold]
        fold_sizes.append(len(test))
        if not test:
            logger.warning("Fold %d holds no documents", fold)
            fold_betas.append(None)
            continue
        if not train:
            logger.warning(
                "Fold %d has no training documents; using beta %s", fold, grid[0]
            )
            chosen = grid[0]
        else:
            chosen, best_f1 = None, -1.0
            for beta in sorted(set(grid)):
                f1 = score(beta, train).f1
                if f1 > best_f1:
                    chosen, best_f1 = beta, f1
        fold_betas.append(chosen)
        for d in test:
            held_out[corpus[d].doc_id] = predictions[chosen][d]  # type: ignore[index]
        logger.info("Fold %d: beta %s on %d held-out docs", fold, chosen, len(test))

    return CrossValidationResult(
        solver=solver.value,
        fold_betas=fold_betas,
        fold_sizes=fold_sizes,
        result=micro_prf(held_out, gold),
    )


def nil_count(fraction: float, n: int) -> int:
    """Number of mentions turned into NIL mentions: ceil(fraction * n)."""
    # 0.7 * 10 is 7.000000000000001 in floating point; round before ceil
    return math.ceil(round(fraction * n, 9))


def _nil_document(
    inst: LinkingInstance, fraction: float, seed: int
) -> tuple[LinkingInstance, list[int], list[int], list[int]]:
    """Remove gold from sampled mentions.

    Returns the modified instance, the NIL mention indices, the indices dropped
    for lack of candidates and, for each kept mention, its original index.
    """
    count = nil_count(fraction, inst.n)
    if count == 0:
        return inst, [], [], list(range(inst.n))
    rng = doc_rng(seed, inst.doc_id)
    nil = sorted(int(i) for i in rng.choice(inst.n, size=count, replace=False))
    nil_set = set(nil)
    # a NIL mention empties only when its sole candidate is gold
    dropped = [
        i
        for i in nil
        if all(c.entity == inst.mentions[i].gold for c in inst.mentions[i].candidates)
    ]
    kept = [i for i in range(inst.n) if i not in set(dropped)]
    if not kept:
        return inst, nil, dropped, []
    record = inst.without_mentions(dropped).model_dump()
    for mention, original in zip(record["mentions"], kept):
        if original in nil_set:
            mention["candidates"] = [
                c for c in mention["candidates"] if c["entity"] != mention["gold"]
            ]
    return LinkingInstance.model_validate(record), nil, dropped, kept


def nil_robustness(
    corpus: Sequence[LinkingInstance],
    solver: Union[SolverName, str],
    psi: Coherence,
    config: Optional[SolverConfig] = None,
    fraction: float = 0.0,
    threads: int = 1,
) -> EvalResult:
    """Score a solver when some gold entities are missing from the knowledge base.

    In each document `ceil(fraction * N)` mentions, sampled uniformly without
    replacement from a per-document seeded stream, lose their gold candidate.
    Scores count only the unmodified (linkable) mentions. A NIL mention left
    without candidates is removed before solving; these are listed in
    `extras["skipped_mentions"]` and the NIL mentions in `extras["nil_mentions"]`.

    Raises:
        ContractViolation: If a mention lacks gold, a document has fewer than 4
            mentions, or `fraction` is outside [0, 1].
    """
    if not 0.0 <= fraction <= 1.0:
        raise ContractViolation(f"NIL fraction {fraction} is outside [0, 1].")
    config = config or SolverConfig()
    for inst in corpus:
        if inst.n < NIL_MIN_MENTIONS:
            raise ContractViolation(
                f"Document '{inst.doc_id}' has {inst.n} mentions; NIL robustness "
                f"needs at least {NIL_MIN_MENTIONS}."
            )
        missing = [m.index for m in inst.mentions if m.gold is None]
        if missing:
            raise ContractViolation(
                f"Mentions {missing} of '{inst.doc_id}' have no gold entity."
            )

    def run(inst: LinkingInstance):
        modified, nil, dropped, kept = _nil_document(inst, fraction, config.seed)
        choices: list[Optional[EntityId]] = [None] * inst.n
        if kept:
            report = run_solver(solver, modified, fresh(psi), config)
            for original, choice in zip(kept, report.assignment.choices):
                choices[original] = choice
        nil_set = set(nil)
        for i in nil_set:
            choices[i] = None
        linkable = {i: g for i, g in inst.gold_map().items() if i not in nil_set}
        return Assignment(choices=choices), linkable, nil, dropped

    outcomes = parallel_map(run, corpus, threads)
    predictions = {inst.doc_id: out[0] for inst, out in zip(corpus, outcomes)}
    gold = {inst.doc_id: out[1] for inst, out in zip(corpus, outcomes)}
    result = micro_prf(predictions, gold)
    skipped = {inst.doc_id: out[3] for inst, out in zip(corpus, outcomes) if out[3]}
    if skipped:
        logger.warning("Skipped NIL mentions left without candidates: %s", skipped)
    return result.model_copy(
        update={
            "extras": {
                "fraction": fraction,
                "nil_mentions": {
                    inst.doc_id: out[2] for inst, out in zip(corpus, outcomes)
                },
                "skipped_mentions": skipped,
            }
        }
    )


def bench(
    corpus: Sequence[LinkingInstance],
    solvers: Sequence[Union[SolverName, str]],
    psi: Coherence,
    config: Optional[SolverConfig] = None,
    warmups: int = 1,
    repeats: int = 3,
    dataset: str = "corpus",
) -> list[BenchRecord]:
    """Mean solver wall time per document, one record per solver.

    Runs strictly serially. For every document a private coherence cache is
    filled with all candidate pairs first (timed separately and reported as
    `warmup_ms_per_doc`), then the solver runs `warmups` untimed and `repeats`
    timed times. Only the solver call itself is timed.

    Raises:
        ContractViolation: On an empty corpus or `repeats < 1`.
    """
    if not corpus:
        raise ContractViolation("Cannot benchmark an empty corpus.")
    if repeats < 1:
        raise ContractViolation("repeats must be at least 1.")
    config = config or SolverConfig()

    records = []
    for solver in solvers:
        solver = SolverName(solver)
        solve_ms = warm_ms = 0.0
        for inst in corpus:
            measure = fresh(psi)
            start = time.perf_counter()
            warm = getattr(measure, "warm", None)
            if callable(warm):
                warm(inst.entities())
            warm_ms += (time.perf_counter() - start) * 1000.0
            for _ in range(warmups):
                run_solver(solver, inst, measure, config)
            for _ in range(repeats):
                solve_ms += run_solver(solver, inst, measure, config).wall_time
        record = BenchRecord(
            solver=solver.value,
            dataset=dataset,
            ms_per_doc=solve_ms / (repeats * len(corpus)),
            docs=len(corpus),
            warmup_ms_per_doc=warm_ms / len(corpus),
        )
        logger.info("%s on %s: %.3f ms/doc", record.solver, dataset, record.ms_per_doc)
        records.append(record)
    return records


def format_table(
    grid: Mapping[str, Mapping[str, Optional[float]]],
    corner: str = "solver",
    digits: int = 3,
) -> str:
    """Render a row x column grid of numbers as an aligned plain-text table.

    Args:
        grid: Value per row name (e.g. solver) per column name (e.g. dataset).
            Missing cells print as `-`.
        corner: Header of the row-name column.
        digits: Decimal places.

    Example:
        ```python
        print(format_table({"pair-linking": {"aida": 0.912}}))
        ```
    """
    columns = list(dict.fromkeys(c for row in grid.values() for c in row))
    header = [corner] + columns
    body = []
    for name, row in grid.items():
        cells = [name]
        for column in columns:
            value = row.get(column)
            cells.append("-" if value is None else f"{value:.{digits}f}")
        body.append(cells)
    widths = [max(len(r[k]) for r in [header] + body) for k in range(len(header))]

    def line(cells: list[str]) -> str:
        first = cells[0].ljust(widths[0])
        rest = [c.rjust(w) for c, w in zip(cells[1:], widths[1:])]
        return "  ".join([first] + rest).rstrip()

    rule = "  ".join("-" * w for w in widths)
    return "\n".join([line(header), rule] + [line(cells) for cells in body]) + "\n"
