"""Usage matrices: recover mixing proportions from a tree, or mix them forward."""

from __future__ import annotations

from fractions import Fraction

from clonemix.core import (
    ROOT,
    CloneTree,
    FrequencyTensor,
    StateTreeSet,
    UsageMatrix,
    require_consistent,
    state_vectors,
)
from clonemix.errors import InvalidUsage


def cumulative_table(F: FrequencyTensor, T: CloneTree, S: StateTreeSet) -> dict:
    """f+ of every vertex's descendant set, per sample; the root gets 1."""
    out = {ROOT: [Fraction(1)] * F.m}
    for v in T.vertices:
        if v == ROOT:
            continue
        D = sorted(S[v.character].descendants(v.state))
        out[v] = [sum((F.f(p, v.character, s) for s in D), Fraction(0)) for p in range(F.m)]
    return out


def compute_usage(F: FrequencyTensor, T: CloneTree, S: StateTreeSet) -> UsageMatrix:
    """Usage of every vertex: its f+ minus the f+ of its children.

    Negative entries are kept; they mean ``T`` does not generate ``F``.
    """
    require_consistent(T, S)
    fplus = cumulative_table(F, T, S)
    rows = []
    for p in range(F.m):
        row = []
        for v in T.vertices:
            row.append(fplus[v][p] - sum((fplus[w][p] for w in T.children(v)), Fraction(0)))
        rows.append(row)
    return UsageMatrix(T.vertices, rows)


def generates(F: FrequencyTensor, T: CloneTree, S: StateTreeSet) -> bool:
    return compute_usage(F, T, S).is_nonnegative()


def mix(T: CloneTree, U: UsageMatrix, S: StateTreeSet | None = None, n: int | None = None) -> FrequencyTensor:
    """Frequency of ``(c, i)`` = total usage of vertices whose state for ``c`` is ``i``.

    States listed in ``S`` but absent from ``T`` get frequency 0.
    """
    if set(U.vertices) != set(T.vertices):
        raise InvalidUsage("usage columns do not match the tree's vertices")
    if not U.is_nonnegative():
        raise InvalidUsage("usage matrix has negative entries")
    for p, total in enumerate(U.row_sums()):
        if total != 1:
            raise InvalidUsage(f"usage row {p} sums to {total}")
    if S is not None:
        n = len(S)
        states = [t.states for t in S]
    else:
        if n is None:
            n = max((v.character for v in T.vertices), default=-1) + 1
        states = [sorted({0} | {v.state for v in T.vertices if v.character == c}) for c in range(n)]
    vecs = state_vectors(T, n)
    values = []
    for p in range(U.m):
        sample = [{s: Fraction(0) for s in states[c]} for c in range(n)]
        for v in T.vertices:
            u = U.u(p, v)
            for c, s in enumerate(vecs[v]):
                sample[c][s] += u
        values.append(sample)
    return FrequencyTensor(values)
