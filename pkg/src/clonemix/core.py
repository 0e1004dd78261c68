"""Domain model: character-state pairs, state trees, tensors, clone trees.

All frequencies are held as :class:`fractions.Fraction`.  Vertices of clone
trees are :class:`CharState` pairs; every ``(c, 0)`` normalizes to the shared
root sentinel :data:`ROOT`, which sorts before all other vertices.
"""

from __future__ import annotations

from decimal import Decimal
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from clonemix.errors import (
    IncompleteTree,
    InconsistentTree,
    NegativeEntry,
    RowSumMismatch,
    UnknownState,
)


class CharState(NamedTuple):
    character: int
    state: int

    def __str__(self):
        if self.character < 0:
            return "root"
        return f"{self.character}:{self.state}"


ROOT = CharState(-1, 0)


def vertex(character: int, state: int) -> CharState:
    """Return the vertex for ``(character, state)``; state 0 is the root."""
    if state == 0:
        return ROOT
    return CharState(character, state)


def to_fraction(x) -> Fraction:
    """Parse a number exactly.

    Strings and decimals keep every written digit; floats are read through
    their shortest repr so ``0.1`` becomes ``1/10``.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not frequencies")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, Decimal):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


class StateTree:
    """Rooted tree over the states of one character, root state 0.

    ``parent`` maps every non-root state to its parent state.  States need
    not be contiguous (the copy-number catalog uses labels from a shared
    ten-state alphabet).
    """

    def __init__(self, character: int, parent: Mapping[int, int]):
        self.character = int(character)
        self._parent = {int(s): int(p) for s, p in parent.items() if int(s) != 0}
        states = {0, *self._parent}
        for s, p in self._parent.items():
            if p not in states:
                raise InconsistentTree(f"state {s} of character {character} has unknown parent {p}")
        # every state must reach 0 without revisiting
        for s in self._parent:
            seen = set()
            while s != 0:
                if s in seen:
                    raise InconsistentTree(f"state tree of character {character} has a cycle")
                seen.add(s)
                s = self._parent[s]
        self.states = tuple(sorted(states))

    @classmethod
    def chain(cls, character: int, k: int) -> "StateTree":
        return cls(character, {i: i - 1 for i in range(1, k)})

    @classmethod
    def star(cls, character: int, k: int) -> "StateTree":
        return cls(character, {i: 0 for i in range(1, k)})

    @classmethod
    def from_parent_list(cls, character: int, parents: Sequence[int | None]) -> "StateTree":
        """Build from a list indexed by state, ``None`` (or -1) at the root."""
        if parents and parents[0] not in (None, -1):
            raise InconsistentTree("state 0 must be the root")
        return cls(character, {i: p for i, p in enumerate(parents) if i != 0})

    def parent(self, state: int) -> int | None:
        if state == 0:
            return None
        try:
            return self._parent[state]
        except KeyError:
            raise UnknownState(f"state {state} not in state tree of character {self.character}") from None

    def children(self, state: int) -> tuple[int, ...]:
        return self._children.get(state, ())

    @cached_property
    def _children(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {}
        for s in self.states[1:]:
            out.setdefault(self._parent[s], []).append(s)
        return {p: tuple(sorted(c)) for p, c in out.items()}

    @cached_property
    def _descendants(self) -> dict[int, frozenset[int]]:
        out = {}
        for s in reversed(self._topological()):
            out[s] = frozenset({s}).union(*(out[c] for c in self.children(s)))
        return out

    def _topological(self) -> list[int]:
        order, stack = [], [0]
        while stack:
            s = stack.pop()
            order.append(s)
            stack.extend(reversed(self.children(s)))
        return order

    def descendants(self, state: int) -> frozenset[int]:
        try:
            return self._descendants[state]
        except KeyError:
            raise UnknownState(f"state {state} not in state tree of character {self.character}") from None

    def is_ancestor(self, i: int, j: int) -> bool:
        """True if ``i`` precedes or equals ``j``."""
        return j in self.descendants(i)

    def topological_states(self) -> list[int]:
        return self._topological()

    @property
    def parent_map(self) -> dict[int, int]:
        return dict(self._parent)

    def relabel(self, character: int) -> "StateTree":
        return StateTree(character, self._parent)

    def __eq__(self, other):
        return (
            isinstance(other, StateTree)
            and self.character == other.character
            and self._parent == other._parent
        )

    def __hash__(self):
        return hash((self.character, tuple(sorted(self._parent.items()))))

    def __repr__(self):
        edges = ", ".join(f"{p}->{s}" for s, p in sorted(self._parent.items()))
        return f"StateTree({self.character}: {edges})"


StateTreeSet = Sequence[StateTree]


def state_tree_set(trees: Iterable[StateTree]) -> tuple[StateTree, ...]:
    trees = tuple(trees)
    for c, tree in enumerate(trees):
        if tree.character != c:
            raise InconsistentTree(f"state tree at position {c} is for character {tree.character}")
    return trees


class DescendantSet(NamedTuple):
    character: int
    states: frozenset


def descendant_set(tree: StateTree, state: int) -> DescendantSet:
    return DescendantSet(tree.character, tree.descendants(state))


class FrequencyTensor:
    """Per-sample, per-character state frequencies.

    ``values[p][c]`` maps each state of character ``c`` to its frequency in
    sample ``p``.  Construction checks shape only; use :func:`validate_tensor`
    for the frequency invariants.
    """

    def __init__(self, values: Sequence[Sequence[Mapping[int, object] | Sequence[object]]]):
        rows = []
        for p, sample in enumerate(values):
            row = []
            for c, entry in enumerate(sample):
                if not isinstance(entry, Mapping):
                    entry = dict(enumerate(entry))
                row.append({int(s): to_fraction(v) for s, v in sorted(entry.items())})
            rows.append(tuple(row))
        if not rows:
            raise ValueError("frequency tensor needs at least one sample")
        n = len(rows[0])
        for p, row in enumerate(rows):
            if len(row) != n:
                raise ValueError(f"sample {p} has {len(row)} characters, expected {n}")
            for c in range(n):
                if set(row[c]) != set(rows[0][c]):
                    raise ValueError(f"character {c} has different states across samples")
                if 0 not in row[c]:
                    raise ValueError(f"character {c} lacks the root state 0")
        self._values = tuple(rows)

    @property
    def m(self) -> int:
        return len(self._values)

    @property
    def n(self) -> int:
        return len(self._values[0])

    def states(self, c: int) -> tuple[int, ...]:
        return tuple(self._values[0][c])

    def f(self, p: int, c: int, i: int) -> Fraction:
        try:
            return self._values[p][c][i]
        except KeyError:
            raise UnknownState(f"state {i} of character {c} not in tensor") from None

    def row(self, p: int, c: int) -> dict[int, Fraction]:
        return dict(self._values[p][c])

    def to_lists(self) -> list[list[dict[int, Fraction]]]:
        return [[dict(e) for e in row] for row in self._values]

    def __eq__(self, other):
        return isinstance(other, FrequencyTensor) and self._values == other._values

    def __repr__(self):
        return f"FrequencyTensor(m={self.m}, n={self.n})"


class FrequencyIntervalTensor:
    """Entrywise frequency intervals ``[lower, upper]``."""

    def __init__(self, lower, upper):
        self.lower = lower if isinstance(lower, FrequencyTensor) else FrequencyTensor(lower)
        self.upper = upper if isinstance(upper, FrequencyTensor) else FrequencyTensor(upper)
        lo, hi = self.lower, self.upper
        if lo.m != hi.m or lo.n != hi.n:
            raise ValueError("lower and upper bounds differ in shape")
        for p in range(lo.m):
            for c in range(lo.n):
                if lo.states(c) != hi.states(c):
                    raise ValueError(f"bounds of character {c} list different states")
                for i in lo.states(c):
                    a, b = lo.f(p, c, i), hi.f(p, c, i)
                    if a > b:
                        raise ValueError(f"empty interval [{a}, {b}] at ({p}, {c}, {i})")
                    if a < 0 or b > 1:
                        raise ValueError(f"interval [{a}, {b}] at ({p}, {c}, {i}) leaves [0, 1]")

    @classmethod
    def point(cls, F: FrequencyTensor, open_root: bool = True) -> "FrequencyIntervalTensor":
        """Zero-width intervals around ``F``; with ``open_root`` the state-0 upper bound is 1."""
        upper = F.to_lists()
        if open_root:
            for row in upper:
                for entry in row:
                    entry[0] = Fraction(1)
        return cls(F, upper)

    @property
    def m(self) -> int:
        return self.lower.m

    @property
    def n(self) -> int:
        return self.lower.n

    def states(self, c: int) -> tuple[int, ...]:
        return self.lower.states(c)

    def has_open_root(self) -> bool:
        return all(self.upper.f(p, c, 0) == 1 for p in range(self.m) for c in range(self.n))

    def contains(self, F: FrequencyTensor) -> bool:
        for p in range(self.m):
            for c in range(self.n):
                for i in self.states(c):
                    if not self.lower.f(p, c, i) <= F.f(p, c, i) <= self.upper.f(p, c, i):
                        return False
        return True


def validate_tensor(F: FrequencyTensor) -> None:
    """Raise unless every entry is nonnegative and every row sums to 1."""
    for p in range(F.m):
        for c in range(F.n):
            row = F.row(p, c)
            for i, v in row.items():
                if v < 0:
                    raise NegativeEntry(p, c, i, v)
            total = sum(row.values(), Fraction(0))
            if total != 1:
                raise RowSumMismatch(p, c, total)


def cumulative_frequency(F: FrequencyTensor, p: int, D: DescendantSet) -> Fraction:
    return sum((F.f(p, D.character, s) for s in sorted(D.states)), Fraction(0))


class CloneTree:
    """Rooted tree on character-state pairs, stored as child -> parent.

    Instances are immutable and hash by their edge set.
    """

    def __init__(self, edges: Iterable[tuple]):
        parent: dict[CharState, CharState] = {}
        for u, v in edges:
            u, v = _as_vertex(u), _as_vertex(v)
            if v == ROOT:
                raise InconsistentTree("the root cannot have a parent")
            if v in parent:
                raise InconsistentTree(f"vertex {v} has two parents")
            parent[v] = u
        for v in parent:
            seen = {v}
            w = parent[v]
            while w != ROOT:
                if w not in parent:
                    raise InconsistentTree(f"vertex {w} is not connected to the root")
                if w in seen:
                    raise InconsistentTree("clone tree has a cycle")
                seen.add(w)
                w = parent[w]
        self._parent = parent
        self.edges = tuple(sorted((u, v) for v, u in parent.items()))

    @classmethod
    def trusted(cls, parent: Mapping[CharState, CharState]) -> "CloneTree":
        """Build from a child -> parent map already known to form a rooted tree."""
        obj = cls.__new__(cls)
        obj._parent = dict(parent)
        obj.edges = tuple(sorted(zip(obj._parent.values(), obj._parent.keys())))
        return obj

    @property
    def parent(self) -> dict[CharState, CharState]:
        return dict(self._parent)

    def parent_of(self, v: CharState) -> CharState | None:
        return self._parent.get(v)

    @cached_property
    def vertices(self) -> tuple[CharState, ...]:
        return tuple(sorted({ROOT, *self._parent}))

    @cached_property
    def _children(self) -> dict[CharState, tuple[CharState, ...]]:
        out: dict[CharState, list[CharState]] = {}
        for u, v in self.edges:
            out.setdefault(u, []).append(v)
        return {u: tuple(vs) for u, vs in out.items()}

    def children(self, v: CharState) -> tuple[CharState, ...]:
        return self._children.get(v, ())

    def path_to_root(self, v: CharState) -> list[CharState]:
        """Vertices from ``v`` up to and including the root."""
        path = [v]
        while v != ROOT:
            v = self._parent[v]
            path.append(v)
        return path

    def postorder(self) -> list[CharState]:
        order, stack = [], [(ROOT, False)]
        while stack:
            v, done = stack.pop()
            if done:
                order.append(v)
                continue
            stack.append((v, True))
            for w in reversed(self.children(v)):
                stack.append((w, False))
        return order

    def characters(self) -> set[int]:
        return {v.character for v in self._parent}

    def __contains__(self, v) -> bool:
        return v == ROOT or v in self._parent

    def __len__(self) -> int:
        return len(self._parent) + 1

    def __eq__(self, other):
        return isinstance(other, CloneTree) and self.edges == other.edges

    def __hash__(self):
        return hash(self.edges)

    def __lt__(self, other):
        return self.edges < other.edges

    def __repr__(self):
        return "CloneTree(" + ", ".join(f"{u}->{v}" for u, v in self.edges) + ")"

    def relabel(self, character_map: Mapping[int, int]) -> "CloneTree":
        """Rename characters, e.g. from instance positions back to locus indices."""

        def r(v):
            return v if v == ROOT else CharState(character_map[v.character], v.state)

        return CloneTree.trusted({r(v): r(u) for u, v in self.edges})

    def is_subtree_of(self, other: "CloneTree") -> bool:
        return set(self.edges) <= set(other.edges)


def _as_vertex(v) -> CharState:
    if isinstance(v, CharState):
        return v
    c, i = v
    if c is None or c == "*" or c < 0:
        return ROOT
    return vertex(int(c), int(i))


def expected_vertices(S: StateTreeSet) -> set[CharState]:
    return {ROOT} | {CharState(t.character, s) for t in S for s in t.states if s != 0}


def is_complete(T: CloneTree, S: StateTreeSet) -> bool:
    return set(T.vertices) == expected_vertices(S)


def is_consistent(T: CloneTree, S: StateTreeSet) -> bool:
    """Check that each vertex's nearest same-character ancestor is its state parent."""
    try:
        require_consistent(T, S)
    except InconsistentTree:
        return False
    return True


def require_consistent(T: CloneTree, S: StateTreeSet) -> None:
    for v in T.vertices:
        if v == ROOT:
            continue
        if not 0 <= v.character < len(S):
            raise InconsistentTree(f"vertex {v} has no state tree")
        tree = S[v.character]
        if v.state not in tree.states:
            raise InconsistentTree(f"state {v.state} is not in the state tree of character {v.character}")
        expected = tree.parent(v.state)
        found = 0
        for w in T.path_to_root(v)[1:]:
            if w != ROOT and w.character == v.character:
                found = w.state
                break
        if found != expected:
            raise InconsistentTree(
                f"vertex {v}: nearest ancestor of character {v.character} has state {found}, expected {expected}"
            )


class UsageMatrix:
    """Mixing proportions, one row per sample, columns in canonical vertex order."""

    def __init__(self, vertices: Sequence[CharState], rows: Sequence[Sequence]):
        self.vertices = tuple(_as_vertex(v) for v in vertices)
        self.rows = tuple(tuple(to_fraction(x) for x in r) for r in rows)
        for r in self.rows:
            if len(r) != len(self.vertices):
                raise ValueError("usage row length does not match vertex count")
        self._index = {v: k for k, v in enumerate(self.vertices)}

    @property
    def m(self) -> int:
        return len(self.rows)

    def u(self, p: int, v: CharState) -> Fraction:
        return self.rows[p][self._index[v]]

    def is_nonnegative(self) -> bool:
        return all(x >= 0 for r in self.rows for x in r)

    def row_sums(self) -> list[Fraction]:
        return [sum(r, Fraction(0)) for r in self.rows]

    def __eq__(self, other):
        if not isinstance(other, UsageMatrix):
            return NotImplemented
        return dict(zip(self.vertices, zip(*self.rows))) == dict(zip(other.vertices, zip(*other.rows)))

    def __repr__(self):
        return f"UsageMatrix(m={self.m}, vertices={len(self.vertices)})"


def state_vectors(T: CloneTree, n: int) -> dict[CharState, tuple[int, ...]]:
    """State vector of every vertex: parent's vector with its own character set."""
    out = {ROOT: (0,) * n}
    stack = [ROOT]
    while stack:
        u = stack.pop()
        for v in T.children(u):
            vec = list(out[u])
            vec[v.character] = v.state
            out[v] = tuple(vec)
            stack.append(v)
    return out


def tree_to_matrix(T: CloneTree, S: StateTreeSet | None = None, n: int | None = None):
    """Return ``(vertices, A)``: canonical vertex order and the state-vector matrix.

    With ``S`` the tree must be complete for it, otherwise :class:`IncompleteTree`.
    """
    if S is not None:
        missing = expected_vertices(S) - set(T.vertices)
        if missing:
            raise IncompleteTree(f"tree lacks vertices {sorted(missing)}")
        n = len(S)
    if n is None:
        n = max((v.character for v in T.vertices), default=-1) + 1
    vecs = state_vectors(T, n)
    verts = T.vertices
    return verts, np.array([vecs[v] for v in verts], dtype=int).reshape(len(verts), n)
