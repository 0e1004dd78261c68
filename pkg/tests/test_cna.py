from __future__ import annotations

from fractions import Fraction
from itertools import product

import pytest

from clonemix.cna import (
    CLASSES,
    STATE_CLASS,
    STATES,
    LocusMeasurement,
    Proportions,
    SampleMeasurement,
    catalog,
    class_proportions,
    combinations,
    compatible_trees,
    derive_frequencies,
    derive_frequency_intervals,
    is_compatible,
    vaf_from_frequencies,
    vaf_interval,
)
from clonemix.core import validate_tensor
from clonemix.errors import EmptyIntersection, IncompatibleProportions, UnsupportedState, ZeroDenominator

Q = Fraction


def mu_for(tree_id, x):
    """Proportions with CNA mass ``x`` in the tree's own class."""
    cls = catalog()[tree_id].cna
    if cls is None:
        return Proportions.of(1)
    kw = {"LOH": "loh", "SCD": "scd", "SCA": "sca"}[cls]
    return Proportions.of(1 - x, **{kw: x})


def solve_linear(rows, rhs):
    """Gauss-Jordan over the rationals; the system must be square and regular."""
    A = [list(r) + [b] for r, b in zip(rows, rhs)]
    n = len(A)
    for col in range(n):
        pivot = next(r for r in range(col, n) if A[r][col] != 0)
        A[col], A[pivot] = A[pivot], A[col]
        A[col] = [x / A[col][col] for x in A[col]]
        for r in range(n):
            if r != col and A[r][col] != 0:
                A[r] = [x - A[r][col] * y for x, y in zip(A[r], A[col])]
    return [A[r][n] for r in range(n)]


def frequencies_from_definitions(tree_id, h, mu):
    """Solve class sums plus the VAF relation directly.

    For a tree's states: the copy-neutral states carry mu0, the CNA states
    carry that class's proportion, and the VAF fixes the split.
    """
    states = catalog()[tree_id].states
    rows, rhs = [], []
    for cls in (None, *CLASSES):
        members = [s for s in states if STATE_CLASS[s] == cls]
        if members:
            rows.append([Q(int(s in members)) for s in states])
            rhs.append(mu.of_class(cls))
    # sum_i z_i f_i = h * sum_i (x_i + y_i) f_i
    rows.append([Q(STATES[s][2]) - h * (STATES[s][0] + STATES[s][1]) for s in states])
    rhs.append(Q(0))
    return dict(zip(states, solve_linear(rows, rhs)))


# catalog


def test_catalog_has_thirteen_trees():
    assert len(catalog()) == 13


def test_every_tree_starts_at_the_normal_state():
    for entry in catalog():
        t = entry.state_tree(0)
        assert t.parent(0) is None
        assert STATES[0] == (1, 1, 0)
        assert all(t.is_ancestor(0, s) for s in t.states)


def test_snv_only_tree():
    assert catalog()[0].parent == {1: 0}
    assert catalog()[0].cna is None
    assert STATES[1] == (1, 1, 1)


def test_one_snv_and_at_most_one_cna_per_tree():
    for entry in catalog():
        kinds = list(entry.edge_kinds().values())
        assert kinds.count("SNV") == 1
        assert len(kinds) - 1 <= 1
        assert set(kinds) - {"SNV"} <= ({entry.cna} if entry.cna else set())


def test_state_trees_are_distinct():
    assert len({tuple(sorted(e.parent.items())) for e in catalog()}) == 13


# derived frequencies


def test_snv_only_frequencies():
    # mutated heterozygous cells carry VAF 1/2, so f1 = 2h
    assert derive_frequencies(0, Q(3, 10), Proportions.of(1)) == {0: Q(2, 5), 1: Q(3, 5)}


def test_loh_after_snv_formula():
    h, loh = Q(1, 2), Q(2, 5)
    mu = Proportions.of(1 - loh, loh=loh)
    f = derive_frequencies(4, h, mu)
    assert f == {0: mu.mu0 - (2 * h - 2 * loh), 1: 2 * h - 2 * loh, 4: loh}


def test_loh_before_snv_at_zero_vaf():
    f = derive_frequencies(1, 0, Proportions.of("0.6", loh="0.4"))
    assert f == {0: Q(3, 5), 2: Q(2, 5), 3: Q(0)}


def test_wrong_class_is_rejected():
    with pytest.raises(IncompatibleProportions):
        derive_frequencies(4, Q(1, 2), Proportions.of("0.6", scd="0.4"))
    with pytest.raises(IncompatibleProportions):
        derive_frequencies(4, Q(1, 2), Proportions(Q(1, 2), Q(1, 4)))


@pytest.mark.parametrize("tree_id", range(13))
def test_formulas_match_the_defining_system(tree_id):
    for x, h in product([Q(1, 10), Q(1, 3), Q(3, 4)], [Q(0), Q(1, 7), Q(2, 5), Q(9, 10)]):
        mu = mu_for(tree_id, x)
        assert derive_frequencies(tree_id, h, mu) == frequencies_from_definitions(tree_id, h, mu)


@pytest.mark.parametrize("tree_id", range(13))
def test_nonnegativity_is_vaf_interval_membership(tree_id):
    for x in [Q(1, 10), Q(1, 2), Q(4, 5)]:
        mu = mu_for(tree_id, x)
        lo, hi = vaf_interval(tree_id, mu)
        for k in range(41):
            h = Q(k, 40)
            f = derive_frequencies(tree_id, h, mu)
            assert sum(f.values()) == 1
            assert (min(f.values()) >= 0) == (lo <= h <= hi)
            if lo <= h <= hi:
                assert vaf_from_frequencies(f) == h


def test_vaf_interval_examples():
    assert vaf_interval(0, Proportions.of(1)) == (0, Q(1, 2))
    assert vaf_interval(1, Proportions.of("0.6", loh="0.4")) == (0, Q(1, 5))
    assert vaf_interval(4, Proportions.of("0.6", loh="0.4")) == (Q(2, 5), Q(7, 10))
    sca = Q(1, 4)
    assert vaf_interval(9, Proportions.of(1 - sca, sca=sca)) == (2 * sca / (2 + sca), (1 + sca) / (2 + sca))


# VAF and class sums


def test_vaf_examples():
    assert vaf_from_frequencies({1: 1}) == Q(1, 2)
    assert vaf_from_frequencies({4: 1}) == 1
    assert vaf_from_frequencies([Q(1, 2), Q(1, 2)]) == Q(1, 4)


def test_vaf_errors():
    with pytest.raises(UnsupportedState):
        vaf_from_frequencies({10: 1})
    with pytest.raises(ZeroDenominator):
        vaf_from_frequencies({0: 0})


def test_class_proportions():
    f = {0: Q(3, 10), 1: Q(3, 10), 4: Q(2, 5)}
    assert class_proportions(f) == Proportions(Q(3, 5), Q(2, 5), Q(0), Q(0))


# compatibility


def locus(*samples, name="x"):
    return LocusMeasurement(name, tuple(SampleMeasurement(Q(h), Q(h), Q(h), mu) for h, mu in samples))


def noisy_locus(*samples, name="x"):
    return LocusMeasurement(name, tuple(SampleMeasurement(Q(h), Q(lo), Q(hi), mu) for h, lo, hi, mu in samples))


def test_snv_only_incompatible_above_half():
    mu = Proportions.of(1)
    assert not is_compatible(0, locus(("0.3", mu), ("0.6", mu)))
    assert is_compatible(0, locus(("0.3", mu), ("0.5", mu)))


def test_loh_after_snv_needs_vaf_above_loh():
    mu = Proportions.of("0.6", loh="0.4")
    assert not is_compatible(4, locus(("0.3", mu)))
    assert is_compatible(4, locus(("0.45", mu)))


def test_noisy_compatibility_uses_interval_overlap():
    mu = Proportions.of(1)
    assert is_compatible(0, noisy_locus(("0.55", "0.45", "0.6", mu)), noisy=True)
    assert not is_compatible(0, noisy_locus(("0.55", "0.45", "0.6", mu)))


def test_compatible_trees_matches_intervals():
    mu = Proportions.of("0.6", sca="0.4")
    found = compatible_trees(locus(("0.35", mu)))
    expected = []
    for t in range(13):
        if catalog()[t].cna == "SCA":
            lo, hi = vaf_interval(t, mu)
            if lo <= Q(35, 100) <= hi:
                expected.append(t)
    assert found == expected == [9, 11]


def test_copy_neutral_locus_offers_no_cna_tree():
    assert compatible_trees(locus(("0.2", Proportions.of(1)))) == [0]
    assert len(compatible_trees(locus(("0.2", Proportions.of(1))), require_cna_support=False)) > 1


def test_frequency_intervals_snv_only():
    iv = derive_frequency_intervals(0, "0.2", "0.4", Proportions.of(1))
    assert iv[1] == (Q(2, 5), Q(4, 5))
    assert iv[0] == (Q(1, 5), Q(1))


def test_frequency_intervals_loh_after_snv():
    iv = derive_frequency_intervals(4, "0.4", "0.5", Proportions.of("0.6", loh="0.4"))
    assert iv[1] == (Q(0), Q(1, 5))
    assert iv[4] == (Q(2, 5), Q(2, 5))


def test_frequency_intervals_are_clamped():
    iv = derive_frequency_intervals(0, "0.4", "0.7", Proportions.of(1))
    assert iv[1] == (Q(4, 5), Q(1))
    with pytest.raises(EmptyIntersection):
        derive_frequency_intervals(0, "0.6", "0.7", Proportions.of(1))


@pytest.mark.parametrize("tree_id", range(13))
def test_degenerate_interval_is_the_point(tree_id):
    mu = mu_for(tree_id, Q(1, 4))
    lo, hi = vaf_interval(tree_id, mu)
    h = (lo + hi) / 2
    iv = derive_frequency_intervals(tree_id, h, h, mu)
    f = derive_frequencies(tree_id, h, mu)
    assert {s: a for s, (a, b) in iv.items()} == f
    assert all(a == b for s, (a, b) in iv.items() if s != 0)
    assert iv[0][1] == 1


# combinations


def test_single_choice_gives_one_instance():
    mu = Proportions.of(1)
    loci = [locus(("0.2", mu), ("0.1", mu), name="a"), locus(("0.4", mu), ("0.3", mu), name="b")]
    out = combinations(loci)
    assert len(out) == 1
    assert out[0].combination == (0, 0)
    validate_tensor(out[0].tensor)


def test_combination_count_is_a_product():
    a = locus(("0.35", Proportions.of("0.6", sca="0.4")), name="a")  # trees 9, 11
    b = locus(("0.1", Proportions.of("0.6", loh="0.4")), name="b")  # trees 1, 2, 3
    out = combinations([a, b])
    assert len(out) == 6
    assert {i.combination for i in out} == set(product([9, 11], [1, 2, 3]))
    for inst in out:
        validate_tensor(inst.tensor)


def test_incompatible_locus_is_dropped(caplog):
    mu = Proportions.of(1)
    loci = [locus(("0.2", mu), name="a"), locus(("0.7", mu), name="bad"), locus(("0.1", mu), name="c")]
    out = combinations(loci)
    assert len(out) == 1 and out[0].loci == (0, 2)
    assert "bad" in caplog.text


def test_noisy_combinations_build_intervals():
    mu = Proportions.of(1)
    out = combinations([noisy_locus(("0.3", "0.25", "0.35", mu))], noisy=True)
    I = out[0].intervals
    assert I.has_open_root()
    assert I.lower.f(0, 0, 1) == Q(1, 2) and I.upper.f(0, 0, 1) == Q(7, 10)


def test_no_loci_no_instances():
    assert combinations([]) == []
