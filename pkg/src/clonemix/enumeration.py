"""Enumeration of clone trees over the cladistic ancestry graph.

Both searches follow the Gabow-Myers scheme: grow a rooted tree from a
frontier of extendable edges, branch on including the popped edge, and
exclude it from all later siblings.  Frontier edges always keep the tree
consistent with the state trees and within the sum condition.

Arithmetic runs on integers: every frequency is scaled by the least common
multiple of all denominators in the instance, so comparisons stay exact.
"""

from __future__ import annotations

import itertools
import contextlib
import gc
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from clonemix.ancestry import AncestryGraph
from clonemix.core import (
    ROOT,
    CharState,
    CloneTree,
    FrequencyIntervalTensor,
    FrequencyTensor,
    StateTreeSet,
    UsageMatrix,
    require_consistent,
)
from clonemix.errors import PreconditionViolated


class Solution:
    """A tree with its usage matrix (exact mode) or witness tensor (noisy mode).

    Exact-mode usage may be held as packed integers and expanded to a
    :class:`UsageMatrix` on first access.
    """

    __slots__ = ("tree", "_usage", "witness")

    def __init__(self, tree: CloneTree, usage=None, witness: FrequencyTensor | None = None):
        self.tree = tree
        self._usage = usage
        self.witness = witness

    @property
    def usage(self) -> UsageMatrix | None:
        if isinstance(self._usage, _PackedUsage):
            self._usage = self._usage.expand(self.tree.vertices)
        return self._usage

    def __eq__(self, other):
        if not isinstance(other, Solution):
            return NotImplemented
        return (self.tree, self.usage, self.witness) == (other.tree, other.usage, other.witness)

    def __hash__(self):
        return hash(self.tree)

    def __repr__(self):
        return f"Solution({self.tree!r})"


class _PackedUsage:
    """Per-vertex usage as ``m`` fields of ``width`` bits, over a common denominator."""

    __slots__ = ("scale", "width", "m", "packed")

    def __init__(self, scale: int, width: int, m: int, packed: dict):
        self.scale, self.width, self.m, self.packed = scale, width, m, packed

    def __getstate__(self):
        return (self.scale, self.width, self.m, self.packed)

    def __setstate__(self, state):
        self.scale, self.width, self.m, self.packed = state

    def expand(self, vertices) -> UsageMatrix:
        mask = (1 << self.width) - 1
        cols = [[(self.packed[v] >> (p * self.width)) & mask for p in range(self.m)] for v in vertices]
        rows = [[Fraction(col[p], self.scale) for col in cols] for p in range(self.m)]
        return UsageMatrix(vertices, rows)


@dataclass
class SolutionSet:
    solutions: list[Solution] = field(default_factory=list)
    truncated: bool = False

    def __len__(self):
        return len(self.solutions)

    def __iter__(self) -> Iterator[Solution]:
        return iter(self.solutions)

    def __getitem__(self, k) -> Solution:
        return self.solutions[k]

    @property
    def trees(self) -> list[CloneTree]:
        return [s.tree for s in self.solutions]

    def edge_sets(self) -> set[frozenset]:
        return {frozenset(t.edges) for t in self.trees}


@contextlib.contextmanager
def collector_paused():
    """Suspend the cyclic garbage collector.

    Searches allocate no reference cycles, and with a million live solutions
    every full collection would rescan all of them.
    """
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was_enabled:
            gc.enable()


class _Stop(Exception):
    pass


def _common_denominator(values) -> int:
    return math.lcm(1, *(Fraction(v).denominator for v in values))


def _nearest_ok(nearest: dict[int, int], state_parent: int, character: int) -> bool:
    return nearest.get(character, 0) == state_parent


def enumerate_trees(
    G: AncestryGraph,
    F: FrequencyTensor,
    S: StateTreeSet,
    limit: int | None = None,
    debug: bool = False,
) -> SolutionSet:
    """All complete trees consistent with ``S`` that generate ``F``.

    Each solution carries its usage matrix.  With ``limit`` the search stops
    once more than ``limit`` trees exist and flags the result as truncated.
    ``debug`` re-checks both search invariants and exact backtracking at
    every step (slow).
    """
    m = F.m
    verts = G.vertices
    flat = [F.f(p, c, s) for p in range(m) for c in range(F.n) for s in F.states(c)]
    L = _common_denominator(flat)
    # each sample gets a field of W bits whose top bit is a guard: subtracting
    # a packed value clears a guard exactly when that sample goes negative
    W = L.bit_length() + 1
    guard = sum(1 << (p * W + W - 1) for p in range(m))

    def pack(values):
        return sum(int(x) << (p * W) for p, x in enumerate(values))

    fplus: dict[CharState, int] = {ROOT: pack([L] * m)}
    spar: dict[CharState, int] = {}
    for v in verts:
        if v == ROOT:
            continue
        D = S[v.character].descendants(v.state)
        fplus[v] = pack(sum(F.f(p, v.character, s) for s in D) * L for p in range(m))
        spar[v] = S[v.character].parent(v.state)
    out = G.out
    inn: dict[CharState, list[CharState]] = {v: [] for v in verts}
    for u in verts:
        for w in out[u]:
            inn[w].append(u)
    inn = {w: tuple(xs) for w, xs in inn.items()}
    # in-neighbours of each vertex that are not yet in the tree
    missing = {w: sum(1 for x in xs if x != ROOT) for w, xs in inn.items()}

    parent: dict[CharState, CharState] = {}
    nearest: dict[CharState, dict[int, int]] = {ROOT: {}}
    slack: dict[CharState, int] = {ROOT: fplus[ROOT]}
    found: list[Solution] = []
    state = {"truncated": False}
    n_vertices = len(verts)
    nonroot = [v for v in verts if v != ROOT]

    def fits(u, w):
        return ((slack[u] | guard) - fplus[w]) & guard == guard

    def emit():
        if limit is not None and len(found) >= limit:
            state["truncated"] = True
            raise _Stop
        tree = CloneTree.trusted(parent)
        usage = _PackedUsage(L, W, m, dict(slack))
        found.append(Solution(tree, usage))

    def snapshot():
        return (
            tuple(sorted(parent.items())),
            tuple(sorted(slack.items())),
            tuple(sorted((v, tuple(sorted(d.items()))) for v, d in nearest.items())),
        )

    def check_invariants(H):
        for v, u in parent.items():
            assert nearest[u].get(v.character, 0) == spar[v], f"invariant 1 (consistency) fails at {v}"
        for v in nearest:
            assert slack[v] >= 0 and slack[v] & guard == 0, f"invariant 1 (sum condition) fails at {v}"
        for u, w in H:
            assert u in nearest and w not in nearest, f"frontier edge {u}->{w} breaks tree membership"
            assert _nearest_ok(nearest[u], spar[w], w.character), f"frontier edge {u}->{w} inconsistent"
            assert fits(u, w), f"frontier edge {u}->{w} violates the sum condition"

    def stranded(H, candidates):
        # an edge from a tree vertex that left the frontier never returns, so
        # a vertex with no frontier edge and no in-neighbour outside the tree
        # can no longer be attached
        heads = None
        for w in candidates:
            if missing[w] or w in nearest:
                continue
            if heads is None:
                heads = {b for _, b in H}
            if w not in heads:
                return True
        return False

    def grow(H):
        if debug:
            check_invariants(H)
        if not H:
            if len(nearest) == n_vertices:
                emit()
            return
        H = list(H)
        while H:
            u, v = H.pop()
            before = snapshot() if debug else None
            parent[v] = u
            near = dict(nearest[u])
            near[v.character] = v.state
            nearest[v] = near
            fv = fplus[v]
            slack[u] -= fv
            slack[v] = fv
            su = slack[u] | guard
            nxt = []
            dropped = []
            for e in H:
                a, b = e
                if b == v:
                    continue
                if a == u and (su - fplus[b]) & guard != guard:
                    dropped.append(b)
                    continue
                nxt.append(e)
            sv = fv | guard
            for w in out[v]:
                missing[w] -= 1
                if w not in nearest and near.get(w.character, 0) == spar[w] and (sv - fplus[w]) & guard == guard:
                    nxt.append((v, w))
            if not stranded(nxt, itertools.chain(out[v], dropped)):
                grow(nxt)
            for w in out[v]:
                missing[w] += 1
            del slack[v]
            slack[u] += fv
            del nearest[v]
            del parent[v]
            if debug:
                assert snapshot() == before, "backtracking did not restore the search state"
            # the popped edge is now excluded; if it was the last way into v,
            # every later sibling is a dead end
            if not missing[v] and all(b != v for _, b in H):
                break

    initial = [(ROOT, w) for w in out[ROOT] if spar[w] == 0 and fits(ROOT, w)]
    with collector_paused():
        try:
            if not stranded(initial, nonroot):
                grow(initial)
        except _Stop:
            pass
    found.sort(key=lambda s: s.tree.edges)
    return SolutionSet(found, state["truncated"])


class _IntervalState:
    """Lower-bound propagation (f-hat) over a growing partial tree."""

    def __init__(self, I: FrequencyIntervalTensor, S: StateTreeSet):
        self.m = I.m
        self.S = S
        flat = []
        for p in range(I.m):
            for c in range(I.n):
                for s in I.states(c):
                    flat += [I.lower.f(p, c, s), I.upper.f(p, c, s)]
        self.L = L = _common_denominator(flat)
        self.lo = {}
        self.hi = {}
        for c in range(I.n):
            for s in I.states(c):
                self.lo[(c, s)] = tuple(int(I.lower.f(p, c, s) * L) for p in range(I.m))
                self.hi[(c, s)] = tuple(int(I.upper.f(p, c, s) * L) for p in range(I.m))
        self.desc = {}
        for tree in S:
            for s in tree.states:
                self.desc[(tree.character, s)] = tuple(sorted(tree.descendants(s)))
        # current f-hat of present states, lower bound of absent ones
        self.val = dict(self.lo)
        self.parent: dict[CharState, CharState] = {}
        self.children: dict[CharState, list[CharState]] = {ROOT: []}

    def fplus(self, v, overlay):
        if v == ROOT:
            return (self.L,) * self.m
        c = v.character
        tot = [0] * self.m
        for s in self.desc[(c, v.state)]:
            x = overlay.get((c, s)) or self.val[(c, s)]
            for p in range(self.m):
                tot[p] += x[p]
        return tot

    def propagate(self, a: CharState, b: CharState | None):
        """New f-hat values on the path from ``a`` to the root if ``b`` hangs below ``a``.

        Returns ``(overlay, root_sum)``; nothing is mutated.
        """
        m = self.m
        overlay: dict[tuple[int, int], tuple[int, ...]] = {}
        cur = a
        while cur != ROOT:
            key = (cur.character, cur.state)
            kids = list(self.children.get(cur, ()))
            if cur == a and b is not None:
                kids.append(b)
            csum = [0] * m
            for w in kids:
                fw = self.fplus(w, overlay)
                for p in range(m):
                    csum[p] += fw[p]
            fp = self.fplus(cur, overlay)
            own = overlay.get(key) or self.val[key]
            low = self.lo[key]
            overlay[key] = tuple(max(low[p], csum[p] - (fp[p] - own[p])) for p in range(m))
            cur = self.parent[cur]
        kids = list(self.children[ROOT])
        if a == ROOT and b is not None:
            kids.append(b)
        rsum = [0] * m
        for w in kids:
            fw = self.fplus(w, overlay)
            for p in range(m):
                rsum[p] += fw[p]
        return overlay, rsum

    def acceptable(self, overlay, rsum) -> bool:
        L = self.L
        if any(x > L for x in rsum):
            return False
        touched = set()
        for key, x in overlay.items():
            if any(x[p] > self.hi[key][p] for p in range(self.m)):
                return False
            touched.add(key[0])
        for c in touched:
            if not self.root_state_ok(c, overlay):
                return False
        return True

    def root_state_ok(self, c, overlay=None) -> bool:
        overlay = overlay or {}
        low0 = self.lo[(c, 0)]
        for p in range(self.m):
            rest = 0
            for s in self.S[c].states:
                if s != 0:
                    rest += (overlay.get((c, s)) or self.val[(c, s)])[p]
            if self.L - rest < low0[p]:
                return False
        return True

    def try_edge(self, a, b):
        overlay, rsum = self.propagate(a, b)
        if self.acceptable(overlay, rsum):
            return overlay
        return None

    def apply(self, a, b, overlay):
        saved = {key: self.val[key] for key in overlay}
        self.val.update(overlay)
        self.parent[b] = a
        self.children.setdefault(a, []).append(b)
        self.children[b] = []
        return saved

    def undo(self, a, b, saved):
        del self.children[b]
        self.children[a].pop()
        del self.parent[b]
        self.val.update(saved)


def compute_fhat(T: CloneTree, lower: FrequencyTensor, S: StateTreeSet) -> dict[CharState, tuple[Fraction, ...]]:
    """Smallest frequencies that keep every vertex of ``T`` within the sum condition.

    Computed bottom-up: a leaf takes its lower bound; an inner vertex takes
    the larger of its lower bound and the mass its children need beyond what
    its own descendant states already supply.  States absent from ``T`` sit
    at their lower bounds.
    """
    require_consistent(T, S)
    m = lower.m
    val = {(c, s): [lower.f(p, c, s) for p in range(m)] for c in range(lower.n) for s in lower.states(c)}

    def fplus(v):
        if v == ROOT:
            return [Fraction(1)] * m
        D = S[v.character].descendants(v.state)
        return [sum((val[(v.character, s)][p] for s in D), Fraction(0)) for p in range(m)]

    for v in T.postorder():
        if v == ROOT:
            continue
        kids = T.children(v)
        if not kids:
            continue
        key = (v.character, v.state)
        csum = [sum((fplus(w)[p] for w in kids), Fraction(0)) for p in range(m)]
        fp = fplus(v)
        val[key] = [max(lower.f(p, *key), csum[p] - (fp[p] - val[key][p])) for p in range(m)]
    return {v: tuple(val[(v.character, v.state)]) for v in T.vertices if v != ROOT}


def valid_witness(T: CloneTree, I: FrequencyIntervalTensor, S: StateTreeSet) -> FrequencyTensor | None:
    """A tensor inside the intervals under which ``T`` meets the sum condition, or None.

    Uses f-hat for the non-root states (lower bounds where absent from ``T``)
    and puts the remaining mass on state 0.
    """
    if not I.has_open_root():
        raise PreconditionViolated("interval tensor needs upper bound 1 on every state 0")
    fhat = compute_fhat(T, I.lower, S)
    m = I.m
    values = [[{} for _ in range(I.n)] for _ in range(m)]
    for c in range(I.n):
        for s in I.states(c):
            if s == 0:
                continue
            v = CharState(c, s)
            for p in range(m):
                x = fhat[v][p] if v in fhat else I.lower.f(p, c, s)
                if x > I.upper.f(p, c, s):
                    return None
                values[p][c][s] = x
    for p in range(m):
        for c in range(I.n):
            rest = sum(values[p][c].values(), Fraction(0))
            values[p][c][0] = 1 - rest
            if values[p][c][0] < I.lower.f(p, c, 0):
                return None
    for p in range(m):
        if sum((_fplus_from(values, S, w, p) for w in T.children(ROOT)), Fraction(0)) > 1:
            return None
    return FrequencyTensor(values)


def _fplus_from(values, S, v, p):
    D = S[v.character].descendants(v.state)
    return sum((values[p][v.character][s] for s in D), Fraction(0))


def is_valid_tree(T: CloneTree, I: FrequencyIntervalTensor, S: StateTreeSet) -> bool:
    return valid_witness(T, I, S) is not None


def state_complete_subtree(T: CloneTree, S: StateTreeSet) -> CloneTree:
    """Drop characters with a missing state, keep the part still hanging from the root."""
    present: dict[int, set[int]] = {}
    for v in T.vertices:
        if v != ROOT:
            present.setdefault(v.character, set()).add(v.state)
    complete = {c for c, states in present.items() if states | {0} == set(S[c].states)}
    keep = {ROOT}
    stack = [ROOT]
    edges = []
    while stack:
        u = stack.pop()
        for w in T.children(u):
            if w.character in complete:
                keep.add(w)
                edges.append((u, w))
                stack.append(w)
    return CloneTree(edges)


def noisy_enumerate(
    G: AncestryGraph,
    I: FrequencyIntervalTensor,
    S: StateTreeSet,
    limit: int | None = None,
    state_complete: bool = True,
    debug: bool = False,
) -> SolutionSet:
    """Maximal valid trees for interval frequencies.

    A tree is valid when some tensor inside the intervals satisfies the sum
    condition on it; it is maximal when no single edge keeps it valid.
    With ``state_complete`` each maximal tree is cut down to its
    state-complete characters and the results are deduplicated.  Each
    solution carries a witness tensor.
    """
    if not I.has_open_root():
        raise PreconditionViolated("interval tensor needs upper bound 1 on every state 0")
    st = _IntervalState(I, S)
    out = G.out
    spar = {v: S[v.character].parent(v.state) for v in G.vertices if v != ROOT}
    nearest: dict[CharState, dict[int, int]] = {ROOT: {}}
    seen: set[tuple] = set()
    found: list[Solution] = []
    flags = {"truncated": False}

    def extensions():
        for u in list(nearest):
            for w in out[u]:
                if w not in nearest and nearest[u].get(w.character, 0) == spar[w]:
                    yield u, w

    def is_maximal():
        return all(st.try_edge(u, w) is None for u, w in extensions())

    def emit():
        tree = CloneTree((u, v) for v, u in st.parent.items())
        if state_complete:
            tree = state_complete_subtree(tree, S)
        if tree.edges in seen:
            return
        if limit is not None and len(found) >= limit:
            flags["truncated"] = True
            raise _Stop
        seen.add(tree.edges)
        found.append(Solution(tree, witness=valid_witness(tree, I, S)))

    def check_invariants(H):
        for u, w in H:
            assert u in nearest and w not in nearest, f"frontier edge {u}->{w} breaks tree membership"
            assert nearest[u].get(w.character, 0) == spar[w], f"frontier edge {u}->{w} inconsistent"
            assert st.try_edge(u, w) is not None, f"frontier edge {u}->{w} is not a valid extension"

    def grow(H):
        if debug:
            check_invariants(H)
        if not H:
            if is_maximal():
                emit()
            return
        H = list(H)
        while H:
            u, v = H.pop()
            overlay = st.try_edge(u, v)
            saved = st.apply(u, v, overlay)
            near = dict(nearest[u])
            near[v.character] = v.state
            nearest[v] = near
            nxt = [(a, b) for a, b in H if b != v and st.try_edge(a, b) is not None]
            for w in out[v]:
                if w not in nearest and near.get(w.character, 0) == spar[w] and st.try_edge(v, w) is not None:
                    nxt.append((v, w))
            grow(nxt)
            del nearest[v]
            st.undo(u, v, saved)

    initial = [(ROOT, w) for w in out[ROOT] if spar[w] == 0 and st.try_edge(ROOT, w) is not None]
    try:
        grow(initial)
    except _Stop:
        pass
    found.sort(key=lambda s: s.tree.edges)
    return SolutionSet(found, flags["truncated"])
