"""End-to-end solving: state-tree combinations in, merged locus-level solutions out."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from clonemix.ancestry import AncestryGraph, build_cladistic_graph, build_noisy_graph
from clonemix.cna import Instance, LocusMeasurement, combinations
from clonemix.core import (
    CloneTree,
    FrequencyIntervalTensor,
    FrequencyTensor,
    StateTree,
    UsageMatrix,
)
from clonemix.enumeration import SolutionSet, collector_paused, enumerate_trees, noisy_enumerate

JOBS_ENV = "CLONEMIX_JOBS"
MODES = ("exact", "noisy")


def default_jobs() -> int:
    raw = os.environ.get(JOBS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def prune_zero_states(data, S: Sequence[StateTree]):
    """Drop states whose descendant set never carries mass (upper bound 0 in noisy data).

    Returns the reduced data and state trees.  Only whole subtrees go, so the
    state trees stay rooted.
    """
    upper = data.upper if isinstance(data, FrequencyIntervalTensor) else data
    keep = []
    for t in S:
        c = t.character
        dead = {
            s
            for s in t.states
            if s != 0 and all(upper.f(p, c, j) == 0 for p in range(upper.m) for j in t.descendants(s))
        }
        keep.append(StateTree(c, {s: p for s, p in t.parent_map.items() if s not in dead}))

    def cut(F):
        return FrequencyTensor(
            [[{s: F.f(p, c, s) for s in keep[c].states} for c in range(F.n)] for p in range(F.m)]
        )

    if isinstance(data, FrequencyIntervalTensor):
        return FrequencyIntervalTensor(cut(data.lower), cut(data.upper)), tuple(keep)
    return cut(data), tuple(keep)


def graph_for(data, S) -> AncestryGraph:
    if isinstance(data, FrequencyIntervalTensor):
        return build_noisy_graph(data, S)
    return build_cladistic_graph(data, S)


def solve_tensor(data, S, limit: int | None = None, prune: bool = False) -> SolutionSet:
    """Exact enumeration for a tensor, noisy enumeration for an interval tensor."""
    if prune:
        data, S = prune_zero_states(data, S)
    G = graph_for(data, S)
    if isinstance(data, FrequencyIntervalTensor):
        return noisy_enumerate(G, data, S, limit=limit)
    return enumerate_trees(G, data, S, limit=limit)


def _solve_instance(args) -> SolutionSet:
    inst, limit, prune = args
    data = inst.intervals if inst.intervals is not None else inst.tensor
    return solve_tensor(data, inst.state_trees, limit=limit, prune=prune)


class MergedSolution:
    """A solution with characters renamed to locus indices."""

    __slots__ = ("tree", "combination", "raw_usage", "witness", "loci")

    def __init__(self, tree: CloneTree, combination: str, raw_usage=None, witness=None, loci=()):
        self.tree = tree
        self.combination = combination
        self.raw_usage = raw_usage  # UsageMatrix, possibly still packed
        self.witness = witness
        self.loci = loci  # locus index of each witness character

    @property
    def usage(self) -> UsageMatrix | None:
        if self.raw_usage is None or isinstance(self.raw_usage, UsageMatrix):
            return self.raw_usage
        return self.raw_usage.expand(self.tree.vertices)

    @property
    def size(self) -> int:
        return len(self.tree)


@dataclass(frozen=True)
class PipelineResult:
    mode: str
    instances: tuple[Instance, ...]
    per_instance: tuple[SolutionSet, ...]
    solutions: tuple[MergedSolution, ...]

    @property
    def truncated(self) -> bool:
        return any(s.truncated for s in self.per_instance)

    def trees(self) -> list[CloneTree]:
        return [s.tree for s in self.solutions]


def _relabel_usage(U: UsageMatrix | None, cmap) -> UsageMatrix | None:
    if U is None:
        return None
    verts = [v if v.character < 0 else type(v)(cmap[v.character], v.state) for v in U.vertices]
    order = sorted(range(len(verts)), key=lambda k: verts[k])
    return UsageMatrix([verts[k] for k in order], [[r[k] for k in order] for r in U.rows])


def merge(instances: Sequence[Instance], results: Sequence[SolutionSet], largest_only: bool = False):
    """Rename characters to locus indices, drop duplicates, keep canonical order.

    A tree found under several combinations keeps the first combination's
    usage or witness.
    """
    seen: dict[tuple, MergedSolution] = {}
    for inst, sols in zip(instances, results):
        cmap = dict(enumerate(inst.loci))
        identity = all(k == c for k, c in cmap.items())
        for sol in sols:
            tree = sol.tree if identity else sol.tree.relabel(cmap)
            if tree.edges in seen:
                continue
            usage = sol._usage if identity else _relabel_usage(sol.usage, cmap)
            seen[tree.edges] = MergedSolution(tree, inst.key, usage, sol.witness, tuple(inst.loci))
    merged = sorted(seen.values(), key=lambda s: s.tree.edges)
    if largest_only and merged:
        top = max(s.size for s in merged)
        merged = [s for s in merged if s.size == top]
    return tuple(merged)


def solve_measurements(
    loci: Sequence[LocusMeasurement],
    mode: str = "exact",
    limit: int | None = None,
    largest_only: bool = False,
    jobs: int | None = None,
    prune: bool = False,
) -> PipelineResult:
    """Enumerate every compatible state-tree combination and merge the results."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    instances = combinations(loci, noisy=mode == "noisy")
    jobs = default_jobs() if jobs is None else max(1, jobs)
    work = [(inst, limit, prune) for inst in instances]
    with collector_paused():
        if jobs > 1 and len(work) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_solve_instance, work, chunksize=max(1, len(work) // (4 * jobs))))
        else:
            results = [_solve_instance(w) for w in work]
        merged = merge(instances, results, largest_only=largest_only)
    return PipelineResult(mode, tuple(instances), tuple(results), merged)
