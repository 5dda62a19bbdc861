import json
import logging

import pytest

from pairlink import write_corpus
from pairlink.cli import CONFIG_ENV, load_config_file, parse_and_run
from pairlink.exceptions import UsageError

from .data import instances


def _run(capsys, *argv, env=None):
    """Run the CLI and return its exit status and parsed stdout lines."""
    status = parse_and_run([str(a) for a in argv], env=env or {})
    out = capsys.readouterr().out
    return status, [json.loads(line) for line in out.splitlines() if line.strip()]


def _synth_args(synth_files):
    return [
        "--corpus",
        synth_files["corpus"],
        "--embeddings",
        synth_files["embeddings"],
        "--measure",
        "ees",
    ]


def test_link(capsys, test_data_dir):
    status, lines = _run(
        capsys,
        "link",
        "--corpus",
        test_data_dir / "corpus.jsonl",
        "--kb",
        test_data_dir / "kb.tsv",
    )
    assert status == 0
    assert [line["doc_id"] for line in lines] == ["paris-france", "hilton", "texas"]
    assert all(line["solver"] == "pair-linking" for line in lines)
    assert lines[2]["assignment"][1] in ("Texas", "Lonely")


def test_link_strict_fails_on_unknown_entities(capsys, test_data_dir):
    status = parse_and_run(
        [
            "link",
            "--corpus",
            str(test_data_dir / "corpus.jsonl"),
            "--kb",
            str(test_data_dir / "kb.tsv"),
            "--strict",
        ],
        env={},
    )
    assert status == 1
    assert "Unknown_Entity" in capsys.readouterr().err


def test_link_output_does_not_depend_on_threads(capsys, synth_files):
    args = ["link", *_synth_args(synth_files)]
    serial = _run(capsys, *args, "--threads", 1)
    threaded = _run(capsys, *args, "--threads", 8)
    assert serial[0] == threaded[0] == 0
    assert serial[1] == threaded[1]
    assert len(serial[1]) == 6


def test_eval_writes_a_table(capsys, synth_files, tmp_path):
    table = tmp_path / "tables" / "f1.txt"
    status, lines = _run(
        capsys, "eval", *_synth_args(synth_files), "--table", table, "--dataset", "toy"
    )
    assert status == 0
    (line,) = lines
    assert line["dataset"] == "toy"
    assert line["beta"] == pytest.approx(1 / 3)
    assert line["f1"] >= 0.95
    assert table.read_text().split()[:2] == ["F1", "toy"]


def test_eval_cross_validate(capsys, synth_files):
    status, lines = _run(
        capsys,
        "eval",
        *_synth_args(synth_files),
        "--cross-validate",
        "--grid",
        0.2,
        0.5,
    )
    assert status == 0
    (line,) = lines
    assert line["dataset"] == "corpus"
    assert sum(line["fold_sizes"]) == 6
    assert set(b for b in line["fold_betas"] if b is not None) <= {0.2, 0.5}


def test_bench(capsys, synth_files):
    status, lines = _run(
        capsys,
        "bench",
        *_synth_args(synth_files),
        "--solvers",
        "pair-linking",
        "fwbw",
        "--warmups",
        0,
        "--repeats",
        1,
    )
    assert status == 0
    assert [line["solver"] for line in lines] == ["pair-linking", "fwbw"]
    assert all(line["docs"] == 6 for line in lines)


def test_denseness(capsys, synth_files):
    status, lines = _run(capsys, "denseness", *_synth_args(synth_files))
    assert status == 0
    *docs, aggregate = lines
    assert len(docs) == 6
    assert all(doc["denseness"] == pytest.approx(4.0) for doc in docs)
    assert aggregate["aggregate"] == "denseness"
    assert aggregate["mean"] == pytest.approx(4.0)


def test_denseness_skips_small_documents(capsys, caplog, test_data_dir):
    with caplog.at_level(logging.WARNING):
        status, lines = _run(
            capsys,
            "denseness",
            "--corpus",
            test_data_dir / "corpus.jsonl",
            "--kb",
            test_data_dir / "kb.tsv",
        )
    assert status == 0
    assert lines == []
    assert "Skipped 3 of 3 documents" in caplog.text


def test_correlate(capsys, synth_files):
    status, lines = _run(capsys, "correlate", *_synth_args(synth_files))
    assert status == 0
    *docs, aggregate = lines
    assert len(docs) == 6
    assert all(doc["n_mentions"] == 5 for doc in docs)
    assert aggregate["aggregate"] == "correlation"
    assert set(aggregate["mean_rho"]) == {"all_link", "single_link", "mintree"}


def test_oracle(capsys, synth_files):
    status, lines = _run(
        capsys, "oracle", *_synth_args(synth_files), "--objective", "chain"
    )
    assert status == 0
    assert len(lines) == 6
    assert all(line["objective"] == "chain" for line in lines)


def test_oracle_refuses_large_documents(capsys, tmp_path, test_data_dir):
    huge = instances._instance(
        "huge-doc", [[(f"x{i}_{c}", 0.5) for c in range(8)] for i in range(7)]
    )
    write_corpus([huge], tmp_path / "huge.jsonl")
    status = parse_and_run(
        [
            "oracle",
            "--corpus",
            str(tmp_path / "huge.jsonl"),
            "--kb",
            str(test_data_dir / "kb.tsv"),
        ],
        env={},
    )
    assert status == 1
    assert "huge-doc" in capsys.readouterr().err


def test_robustness(capsys, synth_files, tmp_path):
    status, lines = _run(
        capsys,
        "robustness",
        *_synth_args(synth_files),
        "--fractions",
        0,
        0.4,
        "--table",
        tmp_path / "nil.txt",
    )
    assert status == 0
    assert [line["fraction"] for line in lines] == [0.0, 0.4]
    assert lines[1]["nil_mentions"] == 6 * 2
    assert "nil=0.4" in (tmp_path / "nil.txt").read_text()


@pytest.mark.parametrize(
    "command",
    [
        ["eval"],
        ["robustness", "--fractions", 0, 0.4],
        ["denseness"],
        ["correlate"],
        ["oracle", "--objective", "all_link"],
    ],
)
def test_output_bytes_do_not_depend_on_threads(capsys, synth_files, command):
    outputs = []
    for threads in (1, 8):
        argv = [*command, *_synth_args(synth_files), "--threads", threads]
        assert parse_and_run([str(a) for a in argv], env={}) == 0
        outputs.append(capsys.readouterr().out)
    assert outputs[0]
    assert outputs[0] == outputs[1]


def test_rescale_phi_accepts_raw_scores(capsys, tmp_path, test_data_dir):
    raw = {
        "doc_id": "raw",
        "mentions": [
            {
                "surface": "Paris",
                "candidates": [
                    {"entity": "Paris_Hilton", "phi": 3.0},
                    {"entity": "Paris", "phi": 6.0},
                    {"entity": "Paris_Texas", "phi": -1.0},
                ],
            },
            {"surface": "France", "candidates": [{"entity": "France", "phi": 9.0}]},
        ],
    }
    corpus = tmp_path / "raw.jsonl"
    corpus.write_text(json.dumps(raw) + "\n")
    args = ["link", "--corpus", corpus, "--kb", test_data_dir / "kb.tsv"]

    status = parse_and_run([str(a) for a in args], env={})
    assert status == 1
    assert "Line 1" in capsys.readouterr().err

    status, lines = _run(capsys, *args, "--solver", "local-phi", "--rescale-phi")
    assert status == 0
    assert lines[0]["assignment"] == ["Paris", "France"]


def test_solver_settings_reach_the_solver(capsys, synth_files, tmp_path):
    args = ["link", *_synth_args(synth_files), "--solver", "lbp-al"]
    status, lines = _run(capsys, *args, "--max-iterations", 1, "--damping", 0.2)
    assert status == 0
    assert {line["iterations"] for line in lines} == {1}

    config = tmp_path / "run.toml"
    config.write_text("max_iterations = 2\ntolerance = 1e-3\nearly_stop = false\n")
    status, lines = _run(capsys, *args, "--config", config)
    assert status == 0
    assert {line["iterations"] for line in lines} <= {1, 2}

    status, lines = _run(
        capsys, "link", *_synth_args(synth_files), "--no-early-stop"
    )
    assert status == 0
    assert len(lines) == 6


def test_synth_is_reproducible(capsys, tmp_path):
    for name in ("a", "b"):
        status, lines = _run(
            capsys,
            "synth",
            "--output",
            tmp_path / name,
            "--docs",
            3,
            "--shape",
            "chain",
            "--seed",
            17,
        )
        assert status == 0
        assert lines[0]["docs"] == 3
    for filename in ("corpus.jsonl", "kb.tsv", "embeddings.txt"):
        first = (tmp_path / "a" / filename).read_bytes()
        assert first == (tmp_path / "b" / filename).read_bytes()


def test_synth_requires_output(capsys):
    assert parse_and_run(["synth"], env={}) == 2
    assert "--output" in capsys.readouterr().err


def test_unknown_flag_is_a_usage_error(capsys):
    assert parse_and_run(["link", "--teleport"], env={}) == 2


def test_missing_corpus_is_an_input_error(capsys, tmp_path):
    status = parse_and_run(["link", "--corpus", str(tmp_path / "nope.jsonl")], env={})
    assert status == 1
    assert "does not exist" in capsys.readouterr().err


def test_flags_override_the_config_file(capsys, synth_files, tmp_path):
    config = tmp_path / "run.toml"
    config.write_text('solver = "fwbw"\nthreads = 2\n')
    args = ["link", *_synth_args(synth_files)]

    status, lines = _run(capsys, *args, "--config", config)
    assert status == 0
    assert {line["solver"] for line in lines} == {"fwbw"}

    status, lines = _run(capsys, *args, "--config", config, "--solver", "lbp-al")
    assert {line["solver"] for line in lines} == {"lbp-al"}

    status, lines = _run(capsys, *args, env={CONFIG_ENV: str(config)})
    assert {line["solver"] for line in lines} == {"fwbw"}


def test_unknown_config_key_is_a_usage_error(capsys, synth_files, tmp_path):
    config = tmp_path / "run.toml"
    config.write_text("colour = 3\n")
    status = parse_and_run(
        ["link", *map(str, _synth_args(synth_files)), "--config", str(config)], env={}
    )
    assert status == 2
    assert "colour" in capsys.readouterr().err


@pytest.mark.parametrize(
    "text,match",
    [
        ("solver = ", "not valid TOML"),
        ("[section]\nbeta = 0.5\n", "must be flat"),
        ("betta = 0.5\n", "Unknown keys"),
    ],
)
def test_load_config_file_errors(tmp_path, text, match):
    path = tmp_path / "bad.toml"
    path.write_text(text)
    with pytest.raises(UsageError, match=match):
        load_config_file(path)
