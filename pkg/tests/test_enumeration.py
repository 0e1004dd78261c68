from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from clonemix.ancestry import build_cladistic_graph, build_noisy_graph, check_mssc
from clonemix.core import (
    ROOT,
    CloneTree,
    FrequencyIntervalTensor,
    FrequencyTensor,
    StateTree,
    is_complete,
    is_consistent,
)
from clonemix.enumeration import (
    compute_fhat,
    enumerate_trees,
    is_valid_tree,
    noisy_enumerate,
    state_complete_subtree,
    valid_witness,
)
from clonemix.errors import InconsistentTree, PreconditionViolated
from clonemix.oracle import brute_enumerate, consistent_trees
from clonemix.simulate import SimulationConfig, simulate_instance
from clonemix.usage import compute_usage

from conftest import binary_tensor, one_character, v


def arborescence_count(G) -> int:
    """Spanning arborescences rooted at ROOT, by the directed matrix-tree theorem."""
    verts = [x for x in G.vertices if x != ROOT]
    idx = {x: k for k, x in enumerate(verts)}
    L = [[Fraction(0)] * len(verts) for _ in verts]
    for a, b in G.edges:
        L[idx[b]][idx[b]] += 1
        if a != ROOT:
            L[idx[a]][idx[b]] -= 1
    det = Fraction(1)
    for col in range(len(L)):
        pivot = next((r for r in range(col, len(L)) if L[r][col] != 0), None)
        if pivot is None:
            return 0
        if pivot != col:
            L[col], L[pivot] = L[pivot], L[col]
            det = -det
        det *= L[col][col]
        for r in range(col + 1, len(L)):
            factor = L[r][col] / L[col][col]
            L[r] = [x - factor * y for x, y in zip(L[r], L[col])]
    return int(det)


def solve(F, S, **kw):
    return enumerate_trees(build_cladistic_graph(F, S), F, S, **kw)


# exact enumeration


def test_single_chain_has_one_solution(chain2, chain_tree):
    sols = solve(one_character(["0.5", "0.3", "0.2"]), chain2)
    assert sols.trees == [chain_tree]
    assert sols[0].usage.rows == ((Fraction(1, 2), Fraction(3, 10), Fraction(1, 5)),)
    assert not sols.truncated


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_all_root_mass_gives_every_spanning_tree(n):
    S = tuple(StateTree.chain(c, 2) for c in range(n))
    F = binary_tensor((0,) * n, (0,) * n)
    G = build_cladistic_graph(F, S)
    sols = solve(F, S)
    assert len(sols) == arborescence_count(G) == (n + 1) ** (n - 1)
    assert len(sols.edge_sets()) == len(sols)


def test_generating_tree_is_found():
    S = (StateTree.chain(0, 2), StateTree.chain(1, 2))
    T = CloneTree([(ROOT, v(0, 1)), (v(0, 1), v(1, 1))])
    sols = solve(binary_tensor(("0.6", "0.4")), S)
    assert T in sols.trees
    # equal masses also allow the reverse order; siblings overflow the root
    assert len(sols) == 2


def test_no_solution_is_an_empty_set():
    S = (StateTree.chain(0, 2), StateTree.chain(1, 2))
    # both characters outweigh each other in one sample and overflow the root together
    F = binary_tensor(("0.6", "0.5"), ("0.5", "0.6"))
    sols = solve(F, S)
    assert len(sols) == 0 and not sols.truncated


def test_limit_truncates():
    S = tuple(StateTree.chain(c, 2) for c in range(4))
    F = binary_tensor((0,) * 4)
    sols = solve(F, S, limit=10)
    assert len(sols) == 10 and sols.truncated
    exact = solve(F, S, limit=125)
    assert len(exact) == 125 and not exact.truncated


def _check_solutions(sols, F, S):
    G = build_cladistic_graph(F, S)
    for sol in sols:
        T = sol.tree
        assert is_complete(T, S) and is_consistent(T, S)
        assert set(T.edges) <= set(G.edges)
        assert check_mssc(F, T, S)
        assert sol.usage == compute_usage(F, T, S)
        assert sol.usage.is_nonnegative()


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 10**6))
def test_matches_brute_force(n, m, seed):
    sim = simulate_instance(SimulationConfig(n=n, m=m, seed=seed))
    S, F = sim.state_trees, sim.tensor
    sols = solve(F, S, debug=True)
    brute = brute_enumerate(F, S)
    assert sols.edge_sets() == brute.edge_sets()
    assert sim.tree in sols.trees
    _check_solutions(sols, F, S)


@pytest.mark.parametrize("seed", range(6))
def test_matches_brute_force_all_binary(seed):
    # binary characters with little usage spread make wide solution sets
    S = tuple(StateTree.chain(c, 2) for c in range(4))
    sim = simulate_instance(SimulationConfig(n=4, m=1, seed=seed, tree_ids=(0, 0, 0, 0)))
    sols = solve(sim.tensor, S)
    assert sols.edge_sets() == brute_enumerate(sim.tensor, S).edge_sets()
    _check_solutions(sols, sim.tensor, S)


def test_solutions_are_canonically_ordered():
    S = tuple(StateTree.chain(c, 2) for c in range(3))
    sols = solve(binary_tensor((0, 0, 0)), S)
    edges = [t.edges for t in sols.trees]
    assert edges == sorted(edges)


# f-hat and validity


def test_fhat_all_zero_bounds():
    sim = simulate_instance(SimulationConfig(n=3, m=2, seed=2))
    lower = FrequencyTensor(
        [[{s: 0 for s in sim.tensor.states(c)} for c in range(3)] for _ in range(2)]
    )
    fhat = compute_fhat(sim.tree, lower, sim.state_trees)
    assert all(x == 0 for vals in fhat.values() for x in vals)


def test_fhat_chain_example():
    S = (StateTree.chain(0, 2), StateTree.chain(1, 2))
    T = CloneTree([(ROOT, v(0, 1)), (v(0, 1), v(1, 1))])
    lower = binary_tensor(("0.3", "0.5"))
    fhat = compute_fhat(T, lower, S)
    assert fhat[v(1, 1)] == (Fraction(1, 2),)
    assert fhat[v(0, 1)] == (Fraction(1, 2),)


def test_fhat_leaf_takes_lower_bound():
    S = (StateTree.chain(0, 2), StateTree.chain(1, 2))
    T = CloneTree([(ROOT, v(0, 1)), (ROOT, v(1, 1))])
    fhat = compute_fhat(T, binary_tensor(("0.25", "0.125")), S)
    assert fhat == {v(0, 1): (Fraction(1, 4),), v(1, 1): (Fraction(1, 8),)}


def test_fhat_rejects_inconsistent_tree(chain2):
    T = CloneTree([(ROOT, v(0, 2)), (v(0, 2), v(0, 1))])
    with pytest.raises(InconsistentTree):
        compute_fhat(T, one_character(["0.5", "0.3", "0.2"]), chain2)


def test_valid_point_interval_returns_the_tensor():
    sim = simulate_instance(SimulationConfig(n=3, m=3, seed=11))
    I = FrequencyIntervalTensor.point(sim.tensor)
    assert valid_witness(sim.tree, I, sim.state_trees) == sim.tensor


def test_leaf_above_parent_bound_is_invalid():
    S = (StateTree.chain(0, 2), StateTree.chain(1, 2))
    T = CloneTree([(ROOT, v(0, 1)), (v(0, 1), v(1, 1))])
    lower = binary_tensor(("0.1", "0.6"))
    upper = [[{0: 1, 1: Fraction(4, 10)}, {0: 1, 1: Fraction(7, 10)}]]
    assert not is_valid_tree(T, FrequencyIntervalTensor(lower, upper), S)


def test_unit_intervals_make_every_tree_valid():
    S = (StateTree.chain(0, 3), StateTree.chain(1, 2))
    lower = [[{0: 0, 1: 0, 2: 0}, {0: 0, 1: 0}]]
    upper = [[{0: 1, 1: 1, 2: 1}, {0: 1, 1: 1}]]
    I = FrequencyIntervalTensor(lower, upper)
    assert all(is_valid_tree(T, I, S) for T in consistent_trees(S))


def test_validity_needs_open_root():
    F = binary_tensor(("0.5",))
    I = FrequencyIntervalTensor.point(F, open_root=False)
    with pytest.raises(PreconditionViolated):
        is_valid_tree(CloneTree([(ROOT, v(0, 1))]), I, (StateTree.chain(0, 2),))


# noisy enumeration


def noisy(I, S, **kw):
    return noisy_enumerate(build_noisy_graph(I, S), I, S, **kw)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 10**6))
def test_point_intervals_cover_exact_solutions(n, m, seed):
    sim = simulate_instance(SimulationConfig(n=n, m=m, seed=seed))
    S, F = sim.state_trees, sim.tensor
    exact = solve(F, S).edge_sets()
    found = noisy(FrequencyIntervalTensor.point(F), S, debug=True)
    assert exact <= found.edge_sets()
    for sol in found:
        assert sol.witness is not None
        assert FrequencyIntervalTensor.point(F).contains(sol.witness)


def test_unit_intervals_give_spanning_trees():
    S = tuple(StateTree.chain(c, 2) for c in range(3))
    lower = [[{0: 0, 1: 0}] * 3]
    upper = [[{0: 1, 1: 1}] * 3]
    I = FrequencyIntervalTensor(lower, upper)
    G = build_noisy_graph(I, S)
    found = noisy_enumerate(G, I, S)
    assert len(found) == arborescence_count(G) == 16
    assert all(len(t) == 4 for t in found.trees)


def test_noisy_results_are_maximal_and_valid():
    sim = simulate_instance(SimulationConfig(n=3, m=2, seed=4))
    S = sim.state_trees
    lower, upper = sim.tensor.to_lists(), sim.tensor.to_lists()
    for rows_lo, rows_hi in zip(lower, upper):
        for lo, hi in zip(rows_lo, rows_hi):
            for s in lo:
                lo[s] = max(Fraction(0), lo[s] - Fraction(1, 20))
                hi[s] = min(Fraction(1), hi[s] + Fraction(1, 20))
            hi[0] = Fraction(1)
    I = FrequencyIntervalTensor(lower, upper)
    raw = noisy(I, S, state_complete=False, debug=True)
    G = build_noisy_graph(I, S)
    for T in raw.trees:
        assert is_valid_tree(T, I, S)
        for u in T.vertices:
            for w in G.out[u]:
                if w in T:
                    continue
                bigger = CloneTree(list(T.edges) + [(u, w)])
                if is_consistent(bigger, S):
                    assert not is_valid_tree(bigger, I, S)
    # the true tree is valid, so some maximal tree extends it
    assert any(sim.tree.is_subtree_of(T) for T in noisy(I, S).trees)


def test_noisy_limit():
    S = tuple(StateTree.chain(c, 2) for c in range(3))
    I = FrequencyIntervalTensor([[{0: 0, 1: 0}] * 3], [[{0: 1, 1: 1}] * 3])
    found = noisy(I, S, limit=5)
    assert len(found) == 5 and found.truncated


def test_state_complete_subtree_drops_partial_characters():
    S = (StateTree.chain(0, 3), StateTree.chain(1, 2))
    # character 0 lacks state 2; (1,1) hangs below (0,1) and goes with it
    T = CloneTree([(ROOT, v(0, 1)), (v(0, 1), v(1, 1))])
    assert state_complete_subtree(T, S) == CloneTree([])
    T = CloneTree([(ROOT, v(1, 1)), (v(1, 1), v(0, 1))])
    assert state_complete_subtree(T, S) == CloneTree([(ROOT, v(1, 1))])
