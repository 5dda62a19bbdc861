import numpy as np
import pytest

from pairlink import (
    CoherenceMeasure,
    MeasureKind,
    Objective,
    Shape,
    SolverConfig,
    SynthSpec,
    brute_force_optimum,
    pair_linking,
    synth_corpus,
    top_pair,
)
from pairlink.coherence import TableCoherence
from pairlink.exceptions import ContractViolation
from pairlink.solvers import loopy_belief_propagation

from .data import instances


def test_pair_linking_example():
    report = pair_linking(instances.fig5, instances.fig5_psi, SolverConfig(beta=1 / 3))
    assert report.extras["selection_order"] == [[0, 1], [3, 4], [2, 3]]
    assert report.assignment.choices == ["e12", "e22", "e31", "e41", "e51"]
    assert report.iterations == 3
    assert report.assignment.objective_value == pytest.approx((8 - 2.3) / 3)


def test_pair_linking_two_mentions_is_exact(rng):
    for _ in range(50):
        inst, psi = instances.random_instance(rng, 2, int(rng.integers(1, 6)))
        report = pair_linking(inst, psi, SolverConfig(beta=0.4))
        _, best = brute_force_optimum(inst, Objective.mintree, psi, 0.4)
        assert report.assignment.objective_value == pytest.approx(best, abs=1e-12)
        assert report.extras["selection_order"] == [[0, 1]]


def test_pair_linking_single_mention():
    inst = instances._instance("one", [[("a", 0.3), ("b", 0.8)]])
    report = pair_linking(inst, TableCoherence({}))
    assert report.assignment.choices == ["b"]
    assert report.assignment.objective_value == 0.0


def test_top_pair_early_stop_matches_exhaustive_scan(rng):
    for _ in range(1000):
        inst, psi = instances.random_instance(rng, 2, 20, decimals=1)
        m_i, m_j = inst.mentions
        beta = float(rng.choice([0.0, 0.25, 1 / 3, 0.5, 1.0]))
        args = (m_i, m_i.candidates, m_j, m_j.candidates, psi, beta)
        assert top_pair(*args, early_stop=True) == top_pair(*args, early_stop=False)


def test_top_pair():
    inst, psi = instances.fig5, instances.fig5_psi
    m1, m2 = inst.mentions[0], inst.mentions[1]
    entry = top_pair(m1, m1.candidates, m2, m2.candidates, psi, 1 / 3)
    assert entry.mentions == (0, 1)
    assert entry.best_pair == ("e12", "e22")
    assert entry.positions == (1, 1)
    assert entry.distance == pytest.approx(1.1 / 3)
    assert entry.confidence == pytest.approx(1.9 / 3)

    # mention order does not matter; a fixed mention offers one candidate
    swapped = top_pair(m2, m2.candidates[:1], m1, m1.candidates, psi, 1 / 3)
    assert swapped.mentions == (0, 1)
    assert swapped.best_pair == ("e11", "e21")
    assert swapped.positions == (0, 0)

    with pytest.raises(ContractViolation, match="nonempty"):
        top_pair(m1, [], m2, m2.candidates, psi, 1 / 3)


def test_early_stop_does_not_change_assignments(rng):
    for trial in range(1000):
        n = int(rng.integers(2, 11))
        k = int(rng.integers(1, 21))
        inst, psi = instances.random_instance(
            rng, n, k, doc_id=f"es-{trial}", decimals=1
        )
        beta = float(rng.random())
        fast = pair_linking(inst, psi, SolverConfig(beta=beta, early_stop=True))
        slow = pair_linking(inst, psi, SolverConfig(beta=beta, early_stop=False))
        assert fast.assignment.choices == slow.assignment.choices
        assert fast.extras == slow.extras


def test_pair_linking_approximates_the_mintree_optimum(rng):
    trials, exact = 500, 0
    for trial in range(trials):
        n = int(rng.integers(2, 6))
        k = int(rng.integers(1, 4))
        inst, psi = instances.random_instance(rng, n, k, doc_id=f"mt-{trial}")
        value = pair_linking(inst, psi, SolverConfig()).assignment.objective_value
        _, best = brute_force_optimum(inst, Objective.mintree, psi, 1 / 3)
        assert value >= best - 1e-9
        exact += value <= best + 1e-9
    assert exact / trials >= 0.7


@pytest.mark.benchmark
def test_pair_linking_scales_quadratically_and_beats_lbp():
    sizes = [10, 20, 40, 80]
    times = {}
    for n in sizes:
        spec = SynthSpec(shape=Shape.dense, docs=1, mentions=n, candidates=20)
        data = synth_corpus(spec, seed=11)
        inst = data.corpus[0]

        def measure():
            return CoherenceMeasure(MeasureKind.ees, emb=data.embeddings)

        runs = [pair_linking(inst, measure()).wall_time for _ in range(3)]
        times[n] = float(np.median(runs))
        if n >= 40:
            lbp = loopy_belief_propagation(inst, Objective.all_link, measure())
            assert times[n] < lbp.wall_time

    slope = np.polyfit(np.log(sizes), np.log([times[n] for n in sizes]), 1)[0]
    assert slope <= 2.3
