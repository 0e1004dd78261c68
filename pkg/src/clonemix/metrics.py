"""Evaluation: concordance, solution-space summaries, representative trees."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from clonemix.core import CloneTree
from clonemix.errors import EmptySolutionSet


def _trees(solutions) -> list[CloneTree]:
    return [s if isinstance(s, CloneTree) else s.tree for s in solutions]


def concordance(T_true: CloneTree, T_sol: CloneTree) -> Fraction:
    """Fraction of the true tree's edges that the solution recovers."""
    truth = set(T_true.edges)
    if not truth:
        return Fraction(1)
    return Fraction(len(truth & set(T_sol.edges)), len(truth))


@dataclass
class SolutionSummary:
    counts: dict[tuple, int]
    total: int
    marked: frozenset = field(default_factory=frozenset)

    def to_dot(self, name: str = "summary") -> str:
        vertices = sorted({v for e in self.counts for v in e})
        lines = [f"digraph {name} {{"]
        for v in vertices:
            lines.append(f'  "{v}";')
        for (u, v), k in sorted(self.counts.items()):
            attrs = f'label="{k}"'
            if (u, v) in self.marked:
                attrs += ", color=red"
            lines.append(f'  "{u}" -> "{v}" [{attrs}];')
        # reference edges no solution found
        for u, v in sorted(self.marked - set(self.counts)):
            lines.append(f'  "{u}" -> "{v}" [label="0", color=red, style=dashed];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def summarize(solutions: Iterable, reference: CloneTree | None = None) -> SolutionSummary:
    """Union of all solution edges, each labelled by how many solutions use it."""
    trees = _trees(solutions)
    if not trees:
        raise EmptySolutionSet("no solutions to summarize")
    counts = Counter(e for t in trees for e in t.edges)
    marked = frozenset(reference.edges) if reference is not None else frozenset()
    return SolutionSummary(dict(sorted(counts.items())), len(trees), marked)


def representative(solutions: Iterable) -> CloneTree:
    """The tree sharing the most edges with the others.

    Scores each tree by the sum over its edges of (count - 1); ties go to
    the canonically smallest edge list.
    """
    trees = _trees(solutions)
    if not trees:
        raise EmptySolutionSet("no solutions to choose from")
    counts = Counter(e for t in trees for e in t.edges)
    best = min(trees, key=lambda t: (-sum(counts[e] - 1 for e in t.edges), t.edges))
    return best


def concordance_table(T_true: CloneTree, solutions: Iterable) -> list[Fraction]:
    return [concordance(T_true, t) for t in _trees(solutions)]
