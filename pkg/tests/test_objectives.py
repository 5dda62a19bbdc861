import itertools

import numpy as np
import pytest

from pairlink import (
    Assignment,
    Objective,
    brute_force_optimum,
    edge_distance,
    mintree_score,
    objective_score,
)
from pairlink.coherence import TableCoherence
from pairlink.constants import BRUTE_FORCE_LIMIT
from pairlink.exceptions import ContractViolation, RefusalError
from pairlink.objectives import (
    all_link_score,
    chain_score,
    minimum_spanning_tree,
    mintree_tree,
    pair_confidence,
    single_link_score,
    support_score,
)

from .data import instances


def test_edge_distance():
    assert edge_distance(0.6, 0.9, 0.3, 1 / 3) == pytest.approx(0.4)
    assert edge_distance(1.0, 1.0, 1.0, 0.5) == 0.0
    assert edge_distance(0.0, 0.0, 0.0, 0.2) == 1.0
    assert 1 - edge_distance(0.2, 0.7, 0.4, 0.25) == pytest.approx(
        pair_confidence(0.2, 0.7, 0.4, 0.25)
    )


@pytest.mark.parametrize(
    "args,name",
    [
        ((1.2, 0.5, 0.5, 0.3), "phi_i"),
        ((0.5, -0.1, 0.5, 0.3), "psi"),
        ((0.5, 0.5, 0.5, 1.5), "beta"),
    ],
)
def test_edge_distance_rejects_out_of_range_inputs(args, name):
    with pytest.raises(ContractViolation, match=name):
        edge_distance(*args)


def _two_mentions():
    inst = instances._instance(
        "two", [[("a", 0.5), ("b", 0.1)], [("c", 0.5), ("d", 0.9)]]
    )
    psi = TableCoherence({("a", "c"): 0.8, ("b", "d"): 0.2})
    return inst, psi


def test_all_link_counts_each_pair_twice():
    inst, psi = _two_mentions()
    gamma = Assignment(choices=["a", "c"])
    assert all_link_score(gamma, inst, psi, 0.5) == pytest.approx(1.3)


def test_single_link_and_chain():
    inst = instances._instance(
        "three", [[("a", 0.4)], [("b", 0.6)], [("c", 0.2)]]
    )
    psi = TableCoherence({("a", "b"): 0.5, ("a", "c"): 0.9, ("b", "c"): 0.1})
    gamma = Assignment(choices=["a", "b", "c"])
    beta = 0.5
    local = 0.5 * 1.2
    # best partners: a->c 0.9, b->a 0.5, c->a 0.9
    assert single_link_score(gamma, inst, psi, beta) == pytest.approx(
        local + 0.5 * 2.3
    )
    # neighbours only: a-b and b-c
    assert chain_score(gamma, inst, psi, beta) == pytest.approx(local + 0.5 * 0.6)
    assert objective_score("all_link", gamma, inst, psi, beta) == pytest.approx(
        local + 0.5 * 2 * 1.5
    )


def test_single_mention_has_no_coherence():
    inst = instances._instance("one", [[("a", 0.4), ("b", 0.3)]])
    psi = TableCoherence({}, default=1.0)
    gamma = Assignment(choices=["a"])
    assert single_link_score(gamma, inst, psi, 0.5) == pytest.approx(0.2)
    assert mintree_score([(0, "a")], inst, psi, 0.5) == 0.0


def test_objective_score_needs_a_complete_assignment():
    inst, psi = _two_mentions()
    with pytest.raises(ContractViolation, match="incomplete"):
        objective_score(Objective.chain, Assignment(choices=["a", None]), inst, psi, 0.3)


def test_mintree_on_pair_linking_example():
    choices = ["e12", "e22", "e31", "e41", "e51"]
    entities = list(enumerate(choices))
    value = mintree_score(entities, instances.fig5, instances.fig5_psi, 1 / 3)
    # psi 0.9, 0.7 and 0.6 edges plus one default 0.1 edge joining the halves
    assert value == pytest.approx((8 - 2.3) / 3)
    assert value == pytest.approx(
        objective_score(
            Objective.mintree,
            Assignment(choices=choices),
            instances.fig5,
            instances.fig5_psi,
            1 / 3,
        )
    )
    tree = mintree_tree(entities, instances.fig5, instances.fig5_psi, 1 / 3)
    assert len(tree) == 4
    assert {(i, j) for i, j, _ in tree} >= {(0, 1), (3, 4), (2, 3)}


def test_mintree_score_ignores_entity_order():
    entities = [(4, "e51"), (0, "e12"), (2, "e31"), (1, "e22"), (3, "e41")]
    assert mintree_score(
        entities, instances.fig5, instances.fig5_psi, 1 / 3
    ) == pytest.approx((8 - 2.3) / 3)


@pytest.mark.parametrize(
    "entities,match",
    [
        ([(0, "e11"), (0, "e12")], "only one entity"),
        ([(0, "e21")], "not a candidate"),
        ([(7, "e11")], "out of range"),
    ],
)
def test_mintree_score_errors(entities, match):
    with pytest.raises(ContractViolation, match=match):
        mintree_score(entities, instances.fig5, instances.fig5_psi, 0.5)


def test_kruskal_and_prim_agree(rng):
    for trial in range(200):
        n = int(rng.integers(1, 15))
        upper = np.triu(rng.random((n, n)), 1)
        if trial % 2:
            upper = np.round(upper, 1)
        dist = upper + upper.T
        kruskal = minimum_spanning_tree(dist, "kruskal")
        prim = minimum_spanning_tree(dist, "prim")
        assert len(kruskal) == len(prim) == max(0, n - 1)
        assert sum(w for *_, w in kruskal) == pytest.approx(sum(w for *_, w in prim))
        assert all(i < j for i, j, _ in kruskal + prim)


def _permuted(inst, order):
    """`inst` with its mentions reordered by `order`."""
    candidates = [[(c.entity, c.phi) for c in m.candidates] for m in inst.mentions]
    return instances._instance(inst.doc_id, [candidates[i] for i in order])


def test_all_link_ignores_mention_order_but_chain_does_not(rng):
    chain_moved = 0
    for _ in range(50):
        inst, psi = instances.random_instance(rng, 5, 3)
        choices = [m.candidates[int(rng.integers(3))].entity for m in inst.mentions]
        order = [int(i) for i in rng.permutation(5)]
        moved = _permuted(inst, order)
        reordered = Assignment(choices=[choices[i] for i in order])
        before = Assignment(choices=choices)
        assert all_link_score(reordered, moved, psi, 0.4) == pytest.approx(
            all_link_score(before, inst, psi, 0.4), abs=1e-12
        )
        chain_moved += chain_score(reordered, moved, psi, 0.4) != pytest.approx(
            chain_score(before, inst, psi, 0.4), abs=1e-12
        )
    assert chain_moved > 25


def test_mintree_is_at_most_the_sum_of_all_distances(rng):
    for _ in range(100):
        n = int(rng.integers(1, 8))
        inst, psi = instances.random_instance(rng, n, 3)
        beta = float(rng.random())
        picked = [
            (i, m.candidates[int(rng.integers(3))]) for i, m in enumerate(inst.mentions)
        ]
        total = sum(
            edge_distance(a.phi, psi(a.entity, b.entity), b.phi, beta)
            for (_, a), (_, b) in itertools.combinations(picked, 2)
        )
        entities = [(i, c.entity) for i, c in picked]
        assert mintree_score(entities, inst, psi, beta) <= total + 1e-12


def test_mintree_score_is_independent_of_the_tree_routine(rng):
    for _ in range(200):
        n = int(rng.integers(1, 9))
        inst, psi = instances.random_instance(rng, n, 2, decimals=1)
        entities = [(i, m.candidates[0].entity) for i, m in enumerate(inst.mentions)]
        assert mintree_score(entities, inst, psi, 0.5, "kruskal") == pytest.approx(
            mintree_score(entities, inst, psi, 0.5, "prim")
        )


def test_unknown_spanning_tree_method():
    with pytest.raises(ContractViolation, match="boruvka"):
        minimum_spanning_tree(np.zeros((3, 3)), "boruvka")


def test_support_score():
    inst, psi = _two_mentions()
    # max(0.5 * 0.5 + 0.5 * 0.8, 0.5 * 0.9 + 0.5 * 0.0)
    assert support_score(0, 1, "a", inst, psi, 0.5) == pytest.approx(0.65)
    with pytest.raises(ContractViolation, match="two different"):
        support_score(0, 0, "a", inst, psi, 0.5)
    with pytest.raises(ContractViolation, match="not a candidate"):
        support_score(0, 1, "c", inst, psi, 0.5)


@pytest.mark.parametrize("objective", list(Objective))
def test_brute_force_finds_the_best_assignment(objective, rng):
    inst, psi = instances.random_instance(rng, 4, 3)
    gamma, value = brute_force_optimum(inst, objective, psi, 0.4)
    assert gamma.objective_value == value
    assert objective_score(objective, gamma, inst, psi, 0.4) == pytest.approx(value)
    sign = -1.0 if objective == Objective.mintree else 1.0
    for positions in itertools.product(range(3), repeat=4):
        other = Assignment.from_positions(inst, list(positions))
        assert sign * objective_score(objective, other, inst, psi, 0.4) <= (
            sign * value + 1e-12
        )


def test_brute_force_breaks_ties_by_smallest_positions():
    inst = instances._instance(
        "ties", [[("a", 0.5), ("b", 0.5)], [("c", 0.5), ("d", 0.5)]]
    )
    gamma, _ = brute_force_optimum(inst, Objective.all_link, TableCoherence({}), 0.5)
    assert gamma.choices == ["a", "c"]


def test_brute_force_refuses_large_documents():
    k, n = 8, 7
    assert k**n > BRUTE_FORCE_LIMIT
    inst = instances._instance(
        "huge", [[(f"x{i}_{c}", 0.5) for c in range(k)] for i in range(n)]
    )
    with pytest.raises(RefusalError, match="'huge'"):
        brute_force_optimum(inst, Objective.mintree, TableCoherence({}), 0.5)
