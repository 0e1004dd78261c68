"""Cladistic ancestry graph and the ancestry / sum conditions."""

from __future__ import annotations

from fractions import Fraction

from clonemix.core import (
    ROOT,
    CharState,
    CloneTree,
    DescendantSet,
    FrequencyIntervalTensor,
    FrequencyTensor,
    StateTreeSet,
    cumulative_frequency,
    descendant_set,
    require_consistent,
    validate_tensor,
)
from clonemix.errors import InconsistentTree, SamePair


class AncestryGraph:
    """Directed graph on character-state pairs plus the root.

    ``out[v]`` lists the heads of ``v``'s outgoing edges in canonical order.
    Each edge ``(u, v)`` is labelled by the descendant-set pair of its ends.
    """

    def __init__(self, vertices, out, state_trees: StateTreeSet):
        self.vertices = tuple(sorted(vertices))
        self.out = {v: tuple(sorted(out.get(v, ()))) for v in self.vertices}
        self.state_trees = tuple(state_trees)

    @property
    def edges(self) -> list[tuple[CharState, CharState]]:
        return [(u, v) for u in self.vertices for v in self.out[u]]

    def has_edge(self, u, v) -> bool:
        return v in self.out.get(u, ())

    def descendant_set(self, v: CharState, character: int | None = None) -> DescendantSet:
        if v == ROOT:
            tree = self.state_trees[character]
            return DescendantSet(character, frozenset(tree.states))
        return descendant_set(self.state_trees[v.character], v.state)

    def label(self, u, v) -> tuple[DescendantSet, DescendantSet]:
        return self.descendant_set(u, v.character), self.descendant_set(v)

    def __len__(self):
        return len(self.vertices)

    def to_dot(self, name: str = "ancestry") -> str:
        lines = [f"digraph {name} {{"]
        for v in self.vertices:
            lines.append(f'  "{v}" [label="{"*:0" if v == ROOT else v}"];')
        for u, v in self.edges:
            a, b = self.label(u, v)
            text = _fmt_set(a.states) + " | " + _fmt_set(b.states)
            lines.append(f'  "{u}" -> "{v}" [label="{text}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _fmt_set(states) -> str:
    return "{" + ",".join(str(s) for s in sorted(states)) + "}"


def check_msac(F: FrequencyTensor, A: DescendantSet, B: DescendantSet, a=None, b=None) -> bool:
    """Ancestry condition for the descendant-set pair ``(A, B)``.

    ``a`` and ``b`` optionally name the two pairs so that a pair compared with
    itself is reported as :class:`SamePair`.
    """
    if a is not None and a == b:
        raise SamePair(f"{a} compared with itself")
    if A.character == B.character and not B.states < A.states:
        return False
    return all(cumulative_frequency(F, p, A) >= cumulative_frequency(F, p, B) for p in range(F.m))


def _candidate_pairs(S: StateTreeSet):
    """Yield (u, v) pairs allowed by the state trees, root edges first."""
    nonroot = sorted(CharState(t.character, s) for t in S for s in t.states if s != 0)
    for v in nonroot:
        if S[v.character].parent(v.state) == 0:
            yield ROOT, v
    for u in nonroot:
        for v in nonroot:
            if u == v:
                continue
            if u.character == v.character and S[v.character].parent(v.state) != u.state:
                continue
            yield u, v


def build_cladistic_graph(F: FrequencyTensor, S: StateTreeSet) -> AncestryGraph:
    """Edges are the state-tree-allowed pairs whose descendant sets pass MSAC.

    Root edges go to every top-level state (state parent 0); within one
    character only state-tree parent -> child edges are kept.
    """
    validate_tensor(F)
    if len(S) != F.n:
        raise InconsistentTree(f"{len(S)} state trees for {F.n} characters")
    out: dict[CharState, list[CharState]] = {}
    vertices = {ROOT}
    for u, v in _candidate_pairs(S):
        vertices.update((u, v))
        if u == ROOT:
            out.setdefault(u, []).append(v)
            continue
        A = descendant_set(S[u.character], u.state)
        B = descendant_set(S[v.character], v.state)
        if check_msac(F, A, B):
            out.setdefault(u, []).append(v)
    return AncestryGraph(vertices, out, S)


def build_noisy_graph(I: FrequencyIntervalTensor, S: StateTreeSet) -> AncestryGraph:
    """Optimistic ancestry graph for interval data.

    An edge survives unless some sample has the ancestor's upper-bound mass
    below the descendant's lower-bound mass, so no valid tree loses an edge.
    """
    if len(S) != I.n:
        raise InconsistentTree(f"{len(S)} state trees for {I.n} characters")
    out: dict[CharState, list[CharState]] = {}
    vertices = {ROOT}
    for u, v in _candidate_pairs(S):
        vertices.update((u, v))
        if u == ROOT:
            out.setdefault(u, []).append(v)
            continue
        A = descendant_set(S[u.character], u.state)
        B = descendant_set(S[v.character], v.state)
        if u.character == v.character and not B.states < A.states:
            continue
        if all(
            cumulative_frequency(I.upper, p, A) >= cumulative_frequency(I.lower, p, B) for p in range(I.m)
        ):
            out.setdefault(u, []).append(v)
    return AncestryGraph(vertices, out, S)


def check_mssc(F: FrequencyTensor, T: CloneTree, S: StateTreeSet) -> bool:
    """Sum condition: no vertex's children outweigh it, in any sample."""
    require_consistent(T, S)

    def fplus(p, v):
        if v == ROOT:
            return Fraction(1)
        return cumulative_frequency(F, p, descendant_set(S[v.character], v.state))

    for v in T.vertices:
        kids = T.children(v)
        if not kids:
            continue
        for p in range(F.m):
            if fplus(p, v) < sum((fplus(p, w) for w in kids), Fraction(0)):
                return False
    return True
