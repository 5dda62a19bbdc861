"""Command-line entry point.

Every command writes JSON Lines to stdout. Settings come from flags, then a flat
TOML file given by `--config` (or the `PAIRLINK_CONFIG` environment variable),
then the defaults in `pairlink.constants`. Exit status is 0 on success, 1 when
the inputs are invalid and 2 on usage errors.
"""

import argparse
import logging
import os
import sys
from collections.abc import Mapping, Sequence
from pathlib import Path
from statistics import fmean
from typing import Any, Callable, Optional, Union

import toml
from pydantic import ValidationError

from .analysis import CORRELATED_OBJECTIVES, correlation_study, denseness_report
from .coherence import CoherenceMeasure, fresh, load_embeddings, load_kb_stats
from .constants import DENSENESS_MIN_ENTITIES
from .evaluation import (
    bench,
    cross_validate_beta,
    evaluate,
    format_table,
    nil_robustness,
    parallel_map,
    solve_corpus,
)
from .exceptions import PairLinkError, RefusalError, UsageError
from .models import (
    Command,
    LinkingInstance,
    MeasureKind,
    Objective,
    RunConfig,
    Shape,
    SolverName,
    attach_priors,
    read_corpus,
)
from .objectives import brute_force_optimum
from .synth import synth_corpus, write_synth
from .utils import json_dumps

__all__ = ["build_parser", "load_config_file", "parse_and_run", "main"]

logger = logging.getLogger(__name__)

CONFIG_ENV = "PAIRLINK_CONFIG"
"""Environment variable naming a config file when `--config` is not given."""

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

_CONFIG_KEYS = set(RunConfig.model_fields) - {"command", "extras"}


def _values(enum: Any) -> list[str]:
    return [member.value for member in enum]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="Flat TOML file of settings.")
    parser.add_argument("--log-level", choices=LOG_LEVELS, help="Default WARNING.")
    parser.add_argument("--seed", type=int, help="Seed of randomized steps.")
    parser.add_argument("--threads", type=int, help="Documents run concurrently.")


def _add_inputs(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--corpus", type=Path, help="Corpus JSON Lines file.")
    parser.add_argument("--kb", type=Path, help="KB-stats file.")
    parser.add_argument("--embeddings", type=Path, help="Embeddings file.")
    parser.add_argument("--measure", choices=_values(MeasureKind))
    parser.add_argument("--beta", type=float, help="Coherence weight in [0, 1].")
    parser.add_argument(
        "--strict",
        action="store_true",
        help="Fail on entities missing from the KB instead of scoring them 0.",
    )
    parser.add_argument(
        "--rescale-phi",
        action="store_true",
        help="Min-max rescale raw phi scores per mention on load.",
    )


def _add_solver_settings(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--max-iterations", type=int, help="Iterative solver cap.")
    parser.add_argument(
        "--damping", type=float, help="LBP damping or PageRank teleport in [0, 1)."
    )
    parser.add_argument("--tolerance", type=float, help="Convergence tolerance.")
    parser.add_argument(
        "--no-early-stop",
        dest="early_stop",
        action="store_false",
        help="Scan every candidate pair in Pair-Linking.",
    )


def _add_table(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--table", type=Path, help="Write a plain-text table here.")
    parser.add_argument("--dataset", help="Dataset name; defaults to the corpus stem.")


def build_parser() -> argparse.ArgumentParser:
    """Parser whose namespace holds only the options actually given."""
    parser = argparse.ArgumentParser(
        prog="pairlink",
        description="Collective entity disambiguation with MINTREE and Pair-Linking.",
        argument_default=argparse.SUPPRESS,
    )
    commands = parser.add_subparsers(dest="command", required=True)

    def add(command: Command, help: str) -> argparse.ArgumentParser:
        sub = commands.add_parser(
            command.value, help=help, argument_default=argparse.SUPPRESS
        )
        _add_common(sub)
        return sub

    link = add(Command.link, "Link every document and print the assignments.")
    _add_inputs(link)
    link.add_argument("--solver", choices=_values(SolverName))
    _add_solver_settings(link)

    ev = add(Command.eval, "Micro precision, recall and F1 of a solver.")
    _add_inputs(ev)
    _add_table(ev)
    ev.add_argument("--solver", choices=_values(SolverName))
    _add_solver_settings(ev)
    ev.add_argument(
        "--cross-validate",
        action="store_true",
        help="Select beta per fold by 5-fold cross validation.",
    )
    ev.add_argument("--grid", type=float, nargs="+", help="Beta values searched.")

    be = add(Command.bench, "Mean solver time per document.")
    _add_inputs(be)
    _add_table(be)
    be.add_argument("--solvers", choices=_values(SolverName), nargs="+")
    _add_solver_settings(be)
    be.add_argument("--warmups", type=int, help="Untimed runs per document.")
    be.add_argument("--repeats", type=int, help="Timed runs per document.")

    de = add(Command.denseness, "Coherence denseness of each document's gold.")
    _add_inputs(de)

    co = add(Command.correlate, "Objective values against linking quality.")
    _add_inputs(co)

    orc = add(Command.oracle, "Exact optimum of an objective by enumeration.")
    _add_inputs(orc)
    orc.add_argument("--objective", choices=_values(Objective))

    ro = add(Command.robustness, "F1 of linkable mentions as gold goes missing.")
    _add_inputs(ro)
    _add_table(ro)
    ro.add_argument("--solver", choices=_values(SolverName))
    _add_solver_settings(ro)
    ro.add_argument("--fractions", type=float, nargs="+", help="NIL fractions.")

    sy = add(Command.synth, "Generate a synthetic corpus, KB and embeddings.")
    sy.add_argument("--output", type=Path, help="Directory to write into.")
    sy.add_argument("--docs", type=int)
    sy.add_argument("--mentions", type=int)
    sy.add_argument("--candidates", type=int)
    sy.add_argument("--shape", choices=_values(Shape))
    sy.add_argument("--noise", type=float, help="Phi noise in [0, 1].")
    sy.add_argument("--dim", type=int, help="Gold subspace dimension; 0 is auto.")
    return parser


def load_config_file(path: Union[Path, str]) -> dict[str, Any]:
    """Read a flat TOML file of settings.

    Raises:
        UsageError: If the file is not valid TOML, nests tables or sets an
            unknown key.
        OSError: If the file cannot be read.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        settings = toml.loads(text)
    except toml.TomlDecodeError as e:
        raise UsageError(f"Config file '{path}' is not valid TOML: {e}")
    nested = sorted(k for k, v in settings.items() if isinstance(v, dict))
    if nested:
        raise UsageError(f"Config file '{path}' must be flat; found tables {nested}.")
    unknown = sorted(set(settings) - _CONFIG_KEYS)
    if unknown:
        raise UsageError(f"Unknown keys in config file '{path}': {unknown}.")
    return settings


def _emit(record: Union[dict[str, Any], Any]) -> None:
    if not isinstance(record, dict):
        record = record.model_dump(mode="json", exclude={"extras"})
    sys.stdout.write(json_dumps(record) + "\n")


def _dataset(config: RunConfig) -> str:
    if config.dataset:
        return config.dataset
    return config.corpus.stem if config.corpus else "corpus"


def _write_table(
    config: RunConfig, grid: Mapping[str, Mapping[str, Optional[float]]], corner: str
) -> None:
    if config.table is not None:
        config.table.parent.mkdir(exist_ok=True, parents=True)
        config.table.write_text(format_table(grid, corner=corner), encoding="utf-8")


def _inputs(config: RunConfig) -> tuple[list[LinkingInstance], CoherenceMeasure]:
    """Corpus (with priors attached when KB stats are given) and the measure."""
    if config.corpus is None:
        raise UsageError(f"{config.command.value} requires --corpus.")
    kb = emb = None
    if config.kb is not None:
        kb = load_kb_stats(config.kb)
    if config.embeddings is not None:
        emb = load_embeddings(config.embeddings)
    psi = CoherenceMeasure(config.measure, kb=kb, emb=emb, strict=config.strict)
    corpus = read_corpus(config.corpus, rescale_phi=config.rescale_phi)
    if kb is not None:
        corpus = [attach_priors(inst, kb) for inst in corpus]
    return corpus, psi


def _link(config: RunConfig) -> None:
    corpus, psi = _inputs(config)
    reports = solve_corpus(
        corpus, config.solver, psi, config.solver_config(), config.threads
    )
    for report in reports:
        _emit(report.to_record())


def _eval(config: RunConfig) -> None:
    corpus, psi = _inputs(config)
    solver_config = config.solver_config()
    base = {"solver": config.solver.value, "dataset": _dataset(config)}
    if config.cross_validate:
        cv = cross_validate_beta(
            corpus, config.solver, psi, config.grid, solver_config, config.threads
        )
        _emit({**base, **cv.model_dump(mode="json", exclude={"extras", "solver"})})
        f1 = cv.result.f1
    else:
        result, _ = evaluate(corpus, config.solver, psi, solver_config, config.threads)
        _emit(
            {
                **base,
                "beta": solver_config.beta,
                **result.model_dump(mode="json", exclude={"extras"}),
            }
        )
        f1 = result.f1
    _write_table(config, {config.solver.value: {_dataset(config): f1}}, "F1")


def _bench(config: RunConfig) -> None:
    corpus, psi = _inputs(config)
    records = bench(
        corpus,
        config.solvers,
        psi,
        config.solver_config(),
        warmups=config.warmups,
        repeats=config.repeats,
        dataset=_dataset(config),
    )
    for record in records:
        _emit(record)
    grid = {r.solver: {r.dataset: r.ms_per_doc} for r in records}
    _write_table(config, grid, "ms/doc")


def _denseness(config: RunConfig) -> None:
    corpus, psi = _inputs(config)
    todo, skipped = [], []
    for inst in corpus:
        entities = list(dict.fromkeys(inst.gold_map().values()))
        if len(entities) < DENSENESS_MIN_ENTITIES:
            skipped.append(inst.doc_id)
        else:
            todo.append((inst.doc_id, entities))
    if skipped:
        logger.warning(
            "Skipped %d of %d documents with fewer than %d gold entities",
            len(skipped),
            len(corpus),
            DENSENESS_MIN_ENTITIES,
        )
    reports = parallel_map(
        lambda item: denseness_report(item[1], fresh(psi), doc_id=item[0]),
        todo,
        config.threads,
    )
    for report in reports:
        _emit(report)
    if reports:
        _emit(
            {
                "aggregate": "denseness",
                "docs": len(reports),
                "mean": fmean(r.denseness for r in reports),
            }
        )


def _correlate(config: RunConfig) -> None:
    corpus, psi = _inputs(config)
    beta = config.solver_config().beta

    def study(inst: LinkingInstance):
        try:
            return correlation_study(inst, fresh(psi), beta)
        except RefusalError as e:
            return e

    reports = []
    for outcome in parallel_map(study, corpus, config.threads):
        if isinstance(outcome, RefusalError):
            logger.warning("Skipped: %s", outcome)
            continue
        reports.append(outcome)
        _emit(outcome)
    if reports:
        mean_rho = {}
        for objective in CORRELATED_OBJECTIVES:
            values = [r.rho[objective] for r in reports if r.rho[objective] is not None]
            mean_rho[objective.value] = fmean(values) if values else None
        _emit({"aggregate": "correlation", "docs": len(reports), "mean_rho": mean_rho})


def _oracle(config: RunConfig) -> None:
    corpus, psi = _inputs(config)
    beta = config.solver_config().beta
    results = parallel_map(
        lambda inst: brute_force_optimum(inst, config.objective, fresh(psi), beta),
        corpus,
        config.threads,
    )
    for inst, (gamma, value) in zip(corpus, results):
        _emit(
            {
                "doc_id": inst.doc_id,
                "objective": config.objective.value,
                "assignment": gamma.choices,
                "value": value,
            }
        )


def _robustness(config: RunConfig) -> None:
    corpus, psi = _inputs(config)
    solver_config = config.solver_config()
    row: dict[str, Optional[float]] = {}
    for fraction in config.fractions:
        result = nil_robustness(
            corpus, config.solver, psi, solver_config, fraction, config.threads
        )
        _emit(
            {
                "solver": config.solver.value,
                "dataset": _dataset(config),
                "fraction": fraction,
                **result.model_dump(mode="json", exclude={"extras"}),
                "nil_mentions": sum(
                    len(v) for v in result.extras["nil_mentions"].values()
                ),
                "skipped_mentions": sum(
                    len(v) for v in result.extras["skipped_mentions"].values()
                ),
            }
        )
        row[f"nil={fraction:g}"] = result.f1
    _write_table(config, {config.solver.value: row}, "F1")


def _synth(config: RunConfig) -> None:
    if config.output is None:
        raise UsageError("synth requires --output.")
    data = synth_corpus(config.synth_spec(), config.seed)
    paths = write_synth(data, config.output)
    _emit({"docs": len(data.corpus), **{k: str(p) for k, p in paths.items()}})


COMMANDS: dict[Command, Callable[[RunConfig], None]] = {
    Command.link: _link,
    Command.eval: _eval,
    Command.bench: _bench,
    Command.denseness: _denseness,
    Command.correlate: _correlate,
    Command.oracle: _oracle,
    Command.robustness: _robustness,
    Command.synth: _synth,
}


def _describe(error: Exception) -> str:
    if isinstance(error, ValidationError):
        return "; ".join(
            f"{'.'.join(str(loc) for loc in e['loc']) or 'config'}: {e['msg']}"
            for e in error.errors()
        )
    return str(error)


def parse_and_run(
    argv: Optional[Sequence[str]] = None, env: Optional[Mapping[str, str]] = None
) -> int:
    """Parse the command line, run the command and return the exit status.

    Args:
        argv: Arguments without the program name; `sys.argv[1:]` when None.
        env: Environment consulted for `PAIRLINK_CONFIG`; `os.environ` when None.

    Returns:
        0 on success, 1 on invalid inputs, 2 on usage errors.
    """
    env = os.environ if env is None else env
    parser = build_parser()
    try:
        args = vars(parser.parse_args(argv))
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    logging.basicConfig(
        level=args.pop("log_level", "WARNING"),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    config_path = args.pop("config", None) or env.get(CONFIG_ENV)
    command = args["command"]
    try:
        settings = load_config_file(config_path) if config_path else {}
        config = RunConfig(**{**settings, **args})
        logger.info("Effective configuration: %s", json_dumps(config))
        COMMANDS[config.command](config)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"pairlink {command}: error: {e}", file=sys.stderr)
        return 2
    except (PairLinkError, ValidationError, OSError) as e:
        print(f"pairlink {command}: error: {_describe(e)}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    """Console-script entry point."""
    sys.exit(parse_and_run())
