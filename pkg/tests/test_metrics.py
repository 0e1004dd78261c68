from __future__ import annotations

from collections import Counter
from fractions import Fraction

import pytest

from clonemix.core import ROOT, CloneTree
from clonemix.errors import EmptySolutionSet
from clonemix.metrics import concordance, concordance_table, representative, summarize

from conftest import v

A, B, C, D = v(0, 1), v(1, 1), v(2, 1), v(3, 1)


def test_identical_trees():
    T = CloneTree([(ROOT, A), (A, B)])
    assert concordance(T, T) == 1


def test_edge_disjoint_trees():
    assert concordance(CloneTree([(ROOT, A), (A, B)]), CloneTree([(ROOT, B), (B, A)])) == 0


def test_three_of_four_edges():
    truth = CloneTree([(ROOT, A), (A, B), (A, C), (C, D)])
    sol = CloneTree([(ROOT, A), (A, B), (A, C), (ROOT, D)])
    assert concordance(truth, sol) == Fraction(3, 4)


def test_shared_edges_are_symmetric():
    x = CloneTree([(ROOT, A), (A, B), (B, C)])
    y = CloneTree([(ROOT, A), (A, B), (A, C), (ROOT, D)])
    assert concordance(x, y) * 3 == concordance(y, x) * 4


def test_summary_single_solution():
    T = CloneTree([(ROOT, A), (A, B)])
    s = summarize([T])
    assert s.counts == {(ROOT, A): 1, (A, B): 1}
    assert s.total == 1


def test_summary_counts():
    chain = CloneTree([(ROOT, A), (A, B)])
    star = CloneTree([(ROOT, A), (ROOT, B)])
    s = summarize([chain, star])
    assert s.counts == {(ROOT, A): 2, (A, B): 1, (ROOT, B): 1}


def test_summary_before_dedup_counts_twice():
    T = CloneTree([(ROOT, A), (A, B)])
    assert summarize([T, T]).counts[(A, B)] == 2


def test_summary_recount(small_sims):
    trees = [s.tree for s in small_sims]
    counts = summarize(trees).counts
    for e, k in counts.items():
        assert k == sum(e in t.edges for t in trees)


def test_summary_dot_marks_reference():
    chain = CloneTree([(ROOT, A), (A, B)])
    star = CloneTree([(ROOT, A), (ROOT, B)])
    truth = CloneTree([(ROOT, A), (A, C)])
    dot = summarize([chain, star], reference=truth).to_dot()
    assert '"root" -> "0:1" [label="2", color=red];' in dot
    assert '"0:1" -> "1:1" [label="1"];' in dot
    assert '"0:1" -> "2:1" [label="0", color=red, style=dashed];' in dot


def test_empty_inputs():
    with pytest.raises(EmptySolutionSet):
        summarize([])
    with pytest.raises(EmptySolutionSet):
        representative([])


def test_representative_single():
    T = CloneTree([(ROOT, A)])
    assert representative([T]) == T


def test_representative_prefers_shared_edges():
    X = CloneTree([(ROOT, A), (A, B), (B, C)])
    X2 = CloneTree([(ROOT, A), (A, B), (A, C)])
    Y = CloneTree([(ROOT, C), (C, B), (ROOT, A)])
    assert representative([Y, X2, X]) in (X, X2)
    # X shares (root,A),(A,B) with X2 and (root,A) with Y: score 3; X2 the same; Y scores 2
    counts = Counter(e for t in (X, X2, Y) for e in t.edges)
    best = min((X, X2), key=lambda t: t.edges)
    assert sum(counts[e] - 1 for e in X.edges) == sum(counts[e] - 1 for e in X2.edges) == 3
    assert representative([Y, X2, X]) == best


def test_representative_is_a_member(small_sims):
    trees = [s.tree for s in small_sims]
    assert representative(trees) in trees


def test_concordance_table():
    T = CloneTree([(ROOT, A), (A, B)])
    assert concordance_table(T, [T, CloneTree([(ROOT, A), (ROOT, B)])]) == [1, Fraction(1, 2)]
