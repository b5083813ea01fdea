import itertools

import numpy as np
import pytest

from conftest import make_scenario, random_scenario
from nomagroup.errors import ContractViolation
from nomagroup.graph import (
    ABSENT,
    DifferGroupLoop,
    apply_cycle,
    build_graph,
    cycle_weight,
    extend_with_virtuals,
    loop_moves,
    move_delta,
)
from nomagroup.power import Grouping, allocate_all, pce, powers_close, total_power
from nomagroup.scenario import generate_scenario


def test_extension_adds_one_virtual_per_group():
    s = generate_scenario(5, 3, 0)
    g = Grouping((0, 0, 1, 2, 2), 3)
    eg = extend_with_virtuals(g, s)
    assert eg.n_nodes == 8
    assert [eg.group_of(v) for v in range(5, 8)] == [0, 1, 2]
    assert all(eg.is_virtual(v) for v in range(5, 8))
    # the base grouping, and so every real power, is untouched
    assert total_power(eg.base, s) == total_power(g, s)


def test_five_users_three_groups_matrix():
    s = generate_scenario(5, 3, 1)
    g = Grouping((0, 1, 0, 2, 1), 3)
    graph = build_graph(extend_with_virtuals(g, s), s)
    assert graph.weights.shape == (8, 8)
    pi = np.array([0, 1, 0, 2, 1, 0, 1, 2])
    same = pi[:, None] == pi[None, :]
    assert np.all(np.isinf(graph.weights[same]))
    assert np.all(np.isfinite(graph.weights[~same]))
    assert np.all(np.diag(graph.weights) == ABSENT)
    # virtual rows are zero wherever an edge exists
    assert np.all(graph.weights[5:][~same[5:]] == 0.0)


def test_build_graph_matches_move_delta():
    rng = np.random.default_rng(2)
    for seed in range(15):
        N, G = int(rng.integers(2, 12)), int(rng.integers(2, 5))
        s = generate_scenario(N, G, seed)
        g = Grouping(tuple(rng.integers(0, G, N)), G)
        eg = extend_with_virtuals(g, s)
        graph = build_graph(eg, s)
        for i, j in itertools.permutations(range(eg.n_nodes), 2):
            if eg.group_of(i) == eg.group_of(j):
                continue
            ref = move_delta(i, j, eg, s)
            assert powers_close(graph.weight(i, j), ref, scale=total_power(g, s))


def test_move_delta_same_group_and_virtual():
    s = generate_scenario(4, 2, 0)
    eg = extend_with_virtuals(Grouping((0, 0, 1, 1), 2), s)
    with pytest.raises(ContractViolation):
        move_delta(0, 1, eg, s)
    assert move_delta(4, 2, eg, s) == 0.0
    with pytest.raises(ContractViolation):
        build_graph(eg, s).weight(0, 1)


def test_move_into_empty_group_is_negative():
    # a weak user stuck behind a strong one gains by moving to an empty group
    s = make_scenario([10.0, 1.0], [2.0, 2.0], group_count=2)
    eg = extend_with_virtuals(Grouping((0, 0), 2), s)
    d = move_delta(1, eg.virtual_of(1), eg, s)
    # oracle: both PCE terms from the power module
    alone = (2**2 - 1) * 1.0 / 1.0
    shared = pce(1, 0, eg.base, s)
    assert d == pytest.approx(alone - shared, rel=1e-14)
    assert d < 0


def _swap_instance():
    # strong users 0, 1 and weak users 2, 3; grouping pairs them badly
    return make_scenario([10.0, 8.0, 0.5, 0.3], [3.0, 0.5, 3.0, 0.5], group_count=2)


def test_swap_weight_equals_power_change():
    s = _swap_instance()
    eg = extend_with_virtuals(Grouping((0, 0, 1, 1), 2), s)
    graph = build_graph(eg, s)
    for i, j in [(0, 2), (1, 3), (0, 3), (1, 2)]:
        after = total_power(apply_cycle((i, j), eg).base, s)
        delta = after - total_power(eg.base, s)
        assert graph.weight(i, j) + graph.weight(j, i) == pytest.approx(delta, rel=1e-12, abs=1e-15)


def test_cycle_weight_equals_power_change_random():
    from nomagroup.solvers import enumerate_cycles

    rng = np.random.default_rng(3)
    for _ in range(20):
        s = random_scenario(rng, 6, 3)
        g = Grouping(tuple(rng.integers(0, 3, 6)), 3)
        eg = extend_with_virtuals(g, s)
        graph = build_graph(eg, s)
        base = total_power(g, s)
        for c in enumerate_cycles(eg):
            after = total_power(apply_cycle(c, eg).base, s)
            assert powers_close(cycle_weight(c, graph), after - base, scale=max(base, after))


def test_virtual_two_cycle_zero():
    s = generate_scenario(3, 2, 0)
    eg = extend_with_virtuals(Grouping((0, 1, 1), 2), s)
    assert cycle_weight((3, 4), build_graph(eg, s)) == 0.0


def test_reversed_cycle_differs():
    s = generate_scenario(6, 3, 5)
    eg = extend_with_virtuals(Grouping((0, 0, 1, 1, 2, 2), 3), s)
    graph = build_graph(eg, s)
    assert cycle_weight((0, 2, 4), graph) != pytest.approx(cycle_weight((0, 4, 2), graph), rel=1e-6)


def test_cycle_weight_rejects_bad_loops():
    s = generate_scenario(4, 2, 0)
    eg = extend_with_virtuals(Grouping((0, 0, 1, 1), 2), s)
    graph = build_graph(eg, s)
    with pytest.raises(ContractViolation):
        cycle_weight((0,), graph)
    with pytest.raises(ContractViolation):
        cycle_weight((0, 1, 2), graph)


def test_apply_swap():
    s = generate_scenario(5, 3, 0)
    eg = extend_with_virtuals(Grouping((0, 0, 1, 2, 2), 3), s)
    out = apply_cycle(DifferGroupLoop((0, 2), -1.0), eg)
    assert out.base.assignment == (1, 0, 0, 2, 2)


def test_apply_cycle_through_virtual_is_shift():
    s = generate_scenario(5, 3, 0)
    eg = extend_with_virtuals(Grouping((0, 0, 1, 2, 2), 3), s)
    # 0 -> group of 2, 2 -> group of virtual 7 (group 2), virtual 7 -> group 0
    out = apply_cycle((0, 2, 7), eg)
    assert out.base.assignment == (1, 0, 2, 2, 2)
    assert list(out.base.group_sizes()) == [1, 1, 3]
    assert loop_moves((0, 2, 7), eg) == {0: 1, 2: 2}
    assert out.n_nodes == eg.n_nodes


def test_negative_loop_lowers_power_by_weight():
    s = _swap_instance()
    eg = extend_with_virtuals(Grouping((0, 0, 1, 1), 2), s)
    graph = build_graph(eg, s)
    w = cycle_weight((1, 2), graph)
    assert w < 0
    before = total_power(eg.base, s)
    after = total_power(apply_cycle((1, 2), eg).base, s)
    assert after < before
    assert after - before == pytest.approx(w, rel=1e-12)


def test_graph_csv(tmp_path):
    s = generate_scenario(3, 2, 0)
    graph = build_graph(extend_with_virtuals(Grouping((0, 1, 1), 2), s), s)
    graph.to_csv(tmp_path / "g.csv")
    rows = [ln.split(",") for ln in (tmp_path / "g.csv").read_text().splitlines()]
    assert rows[0] == ["", "0", "1", "2", "3", "4"]
    assert rows[1][1] == "" and rows[1][4] == ""  # 0 shares group 0 with virtual node 3
    assert float(rows[1][2]) == graph.weights[0, 1]
