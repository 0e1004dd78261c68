"""Brute-force checkers and hard-instance generators.

Nothing here touches the ancestry graph or the frontier search, so the
results can be compared against :mod:`clonemix.enumeration`.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations as subsets
from typing import Iterator, Sequence

from clonemix.core import (
    ROOT,
    CharState,
    CloneTree,
    FrequencyTensor,
    StateTree,
    StateTreeSet,
    state_vectors,
)
from clonemix.enumeration import Solution, SolutionSet
from clonemix.errors import InstanceTooLarge, PreconditionViolated
from clonemix.usage import compute_usage

DEFAULT_TREE_CAP = 10**6


def consistent_trees(S: StateTreeSet, cap: int = DEFAULT_TREE_CAP) -> Iterator[CloneTree]:
    """Every complete clone tree consistent with ``S``, each exactly once."""
    for parent, _ in _consistent_maps(S, cap):
        yield CloneTree((u, v) for v, u in parent.items())


def _consistent_maps(S: StateTreeSet, cap: int):
    """Yield the live ``(parent, children)`` maps of every consistent complete tree.

    Vertices are inserted in a fixed order that lists state parents first.
    A new vertex picks a parent among the placed ones and adopts any subset
    of that parent's children; undoing the last insertion contracts the
    vertex, so each tree has exactly one construction.  Partial trees that
    are already inconsistent are abandoned, which is safe because
    contraction preserves consistency.
    """
    order = [CharState(t.character, s) for t in S for s in t.topological_states() if s != 0]
    parent: dict[CharState, CharState] = {}
    children: dict[CharState, list[CharState]] = {ROOT: []}
    spar = {v: S[v.character].parent(v.state) for v in order}
    count = 0

    def nearest_state(v):
        w = parent[v]
        while w != ROOT:
            if w.character == v.character:
                return w.state
            w = parent[w]
        return 0

    def subtree(v):
        out, stack = [], [v]
        while stack:
            w = stack.pop()
            out.append(w)
            stack.extend(children[w])
        return out

    def place(k):
        nonlocal count
        if k == len(order):
            count += 1
            if count > cap:
                raise InstanceTooLarge(f"more than {cap} consistent trees")
            yield parent, children
            return
        x = order[k]
        for p in list(parent) + [ROOT]:
            kids = list(children[p])
            for r in range(len(kids) + 1):
                for adopted in subsets(kids, r):
                    parent[x] = p
                    children[x] = list(adopted)
                    for a in adopted:
                        parent[a] = x
                    children[p] = [w for w in kids if w not in adopted] + [x]
                    affected = [x] + [w for a in adopted for w in subtree(a) if w.character == x.character]
                    if all(nearest_state(w) == spar[w] for w in affected):
                        yield from place(k + 1)
                    children[p] = kids
                    for a in adopted:
                        parent[a] = p
                    del children[x]
                    del parent[x]

    yield from place(0)


def brute_enumerate(F: FrequencyTensor, S: StateTreeSet, cap: int = DEFAULT_TREE_CAP) -> SolutionSet:
    """Filter every consistent complete tree by whether its usage is nonnegative."""
    fplus = {ROOT: [Fraction(1)] * F.m}
    for t in S:
        for s in t.states:
            if s != 0:
                D = t.descendants(s)
                fplus[CharState(t.character, s)] = [sum(F.f(p, t.character, j) for j in D) for p in range(F.m)]
    # scale to integers so the sum condition needs no rational arithmetic
    L = math.lcm(1, *(x.denominator for row in fplus.values() for x in row))
    scaled = {v: [int(x * L) for x in row] for v, row in fplus.items()}
    found = []
    for parent, children in _consistent_maps(S, cap):
        if all(
            scaled[v][p] >= sum(scaled[w][p] for w in kids)
            for v, kids in children.items()
            if kids
            for p in range(F.m)
        ):
            tree = CloneTree((u, v) for v, u in parent.items())
            found.append(Solution(tree, compute_usage(F, tree, S)))
    found.sort(key=lambda s: s.tree.edges)
    return SolutionSet(found)


def subset_sum_epsilon(B: Sequence[int], d: int) -> Fraction:
    e = sum(B)
    return Fraction(min(d, e - d), e * (len(B) + 1))


def subset_sum_instance(B: Sequence[int], d: int) -> FrequencyTensor:
    """Two-sample, two-state tensor with a solution iff some subset of ``B`` sums to ``d``.

    Characters 0 and 1 carry ``d`` and ``e - d`` (``e = sum(B)``); character
    ``l + 2`` carries the ``l``-th smallest element.  In the second sample
    the element characters get strictly decreasing small masses so no
    element can sit above another.
    """
    B = [int(b) for b in B]
    d = int(d)
    if not B or any(b <= 0 for b in B):
        raise PreconditionViolated("B must be a nonempty set of positive integers")
    if len(set(B)) != len(B):
        raise PreconditionViolated("B must not repeat values")
    e = sum(B)
    if not 0 < d < e:
        raise PreconditionViolated("d must lie strictly between 0 and the sum of B")
    B = sorted(B)
    t = len(B)
    eps = subset_sum_epsilon(B, d)
    one = [Fraction(d, e), Fraction(e - d, e)] + [Fraction(b, e) for b in B]
    two = [Fraction(e - d, e), Fraction(d, e)] + [(t - l) * eps / e for l in range(t)]
    return FrequencyTensor([[{0: 1 - x, 1: x} for x in row] for row in (one, two)])


def subset_sum_state_trees(t: int) -> tuple[StateTree, ...]:
    return tuple(StateTree.chain(c, 2) for c in range(t + 2))


def subset_sum_feasible(B: Sequence[int], d: int) -> bool:
    """Dynamic program over reachable sums."""
    reach = 1
    for b in B:
        reach |= reach << int(b)
    return d >= 0 and bool(reach >> d & 1)


def exact_rank(rows: Sequence[Sequence]) -> int:
    """Row rank by Gaussian elimination over the rationals."""
    mat = [[Fraction(x) for x in r] for r in rows]
    rank = 0
    ncols = len(mat[0]) if mat else 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(mat)) if mat[r][col] != 0), None)
        if pivot is None:
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        for r in range(len(mat)):
            if r != rank and mat[r][col] != 0:
                factor = mat[r][col] / mat[rank][col]
                mat[r] = [a - factor * b for a, b in zip(mat[r], mat[rank])]
        rank += 1
    return rank


def binary_state_matrix(T: CloneTree, S: StateTreeSet):
    """Rows are vertices; one 0/1 column per (character, state)."""
    vecs = state_vectors(T, len(S))
    cols = [(t.character, s) for t in S for s in t.states]
    return [[int(vecs[v][c] == s) for c, s in cols] for v in T.vertices]


def rank_check(T: CloneTree, S: StateTreeSet) -> bool:
    B = binary_state_matrix(T, S)
    return exact_rank(B) == len(T.vertices)
