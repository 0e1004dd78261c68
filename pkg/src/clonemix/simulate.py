"""Ground-truth instance generator for the copy-number model."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import stats

from clonemix.cna import (
    LocusMeasurement,
    Proportions,
    SampleMeasurement,
    catalog,
    class_proportions,
    vaf_from_frequencies,
)
from clonemix.core import (
    ROOT,
    CharState,
    CloneTree,
    FrequencyTensor,
    StateTree,
    UsageMatrix,
    to_fraction,
)
from clonemix.errors import UnsupportedState
from clonemix.usage import mix

USAGE_RESOLUTION = 10**6


@dataclass(frozen=True)
class SimulationConfig:
    n: int
    m: int
    coverage: float | None = None
    seed: int = 0
    confidence: float = 0.95
    tree_ids: tuple[int, ...] | None = None  # force catalog trees per character

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("need n >= 1 and m >= 1")
        if self.coverage is not None and self.coverage <= 0:
            raise ValueError("coverage must be positive")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must lie in (0, 1)")
        if self.tree_ids is not None and len(self.tree_ids) != self.n:
            raise ValueError("tree_ids needs one catalog index per character")


@dataclass(frozen=True)
class SimulatedInstance:
    tree: CloneTree
    state_trees: tuple[StateTree, ...]
    tree_ids: tuple[int, ...]
    usage: UsageMatrix
    tensor: FrequencyTensor


def random_consistent_tree(state_trees, rng: np.random.Generator) -> CloneTree:
    """Insert vertices one at a time as leaves at uniformly chosen legal positions.

    A vertex becomes available once its state parent is placed; a legal
    parent is any placed vertex whose nearest same-character ancestor (or
    itself) carries that state parent.  Every consistent tree has positive
    probability.
    """
    pending = [CharState(t.character, s) for t in state_trees for s in t.states if s != 0]
    placed = {ROOT: {}}  # vertex -> nearest state per character on its root path
    order = [ROOT]
    edges = []
    while pending:
        ready = [v for v in pending if _ready(v, state_trees, placed)]
        v = ready[rng.integers(len(ready))]
        want = state_trees[v.character].parent(v.state)
        spots = [u for u in order if placed[u].get(v.character, 0) == want]
        u = spots[rng.integers(len(spots))]
        near = dict(placed[u])
        near[v.character] = v.state
        placed[v] = near
        order.append(v)
        edges.append((u, v))
        pending.remove(v)
    return CloneTree(edges)


def _ready(v, state_trees, placed) -> bool:
    p = state_trees[v.character].parent(v.state)
    return p == 0 or CharState(v.character, p) in placed


def random_usage(vertices, m: int, rng: np.random.Generator) -> UsageMatrix:
    """Flat-simplex rows on a grid of 1/USAGE_RESOLUTION, all entries positive."""
    rows = []
    k = len(vertices)
    for _ in range(m):
        cuts = np.sort(rng.choice(np.arange(1, USAGE_RESOLUTION), size=k - 1, replace=False))
        bounds = [0, *cuts.tolist(), USAGE_RESOLUTION]
        rows.append([Fraction(b - a, USAGE_RESOLUTION) for a, b in zip(bounds, bounds[1:])])
    return UsageMatrix(vertices, rows)


def simulate_instance(cfg: SimulationConfig) -> SimulatedInstance:
    rng = np.random.default_rng(cfg.seed)
    entries = catalog()
    if cfg.tree_ids is None:
        ids = tuple(int(x) for x in rng.integers(len(entries), size=cfg.n))
    else:
        ids = tuple(cfg.tree_ids)
    trees = tuple(entries[t].state_tree(c) for c, t in enumerate(ids))
    tree = random_consistent_tree(trees, rng)
    usage = random_usage(tree.vertices, cfg.m, rng)
    F = mix(tree, usage, trees)
    return SimulatedInstance(tree, trees, ids, usage, F)


def to_observables(F: FrequencyTensor, state_trees) -> list[list[tuple[Fraction, Proportions]]]:
    """Per locus, per sample: the VAF and the CNA class proportions."""
    out = []
    for c in range(F.n):
        allowed = set(state_trees[c].states)
        per_sample = []
        for p in range(F.m):
            row = F.row(p, c)
            extra = [s for s, x in row.items() if s not in allowed and x != 0]
            if extra:
                raise UnsupportedState(f"character {c} has mass on states {extra} outside its state tree")
            per_sample.append((vaf_from_frequencies(row), class_proportions(row)))
        out.append(per_sample)
    return out


def beta_interval(variant: int, total: int, confidence: float = 0.95) -> tuple[float, float]:
    """Central interval of the Beta(variant + 1, total - variant + 1) posterior."""
    if total == 0:
        return 0.0, 1.0
    tail = (1 - confidence) / 2
    post = stats.beta(variant + 1, total - variant + 1)
    lo = 0.0 if variant == 0 else float(post.ppf(tail))
    hi = 1.0 if variant == total else float(post.ppf(1 - tail))
    return lo, hi


def add_read_noise(h, cfg: SimulationConfig, rng: np.random.Generator):
    """Draw read counts for true VAF ``h``; return ``(ref, var, (lb, ub))``."""
    total = int(rng.poisson(cfg.coverage))
    var = int(rng.binomial(total, float(h))) if total else 0
    return total - var, var, beta_interval(var, total, cfg.confidence)


def measurements(sim: SimulatedInstance, cfg: SimulationConfig) -> list[LocusMeasurement]:
    """Observable per-locus data; read noise is added when ``cfg.coverage`` is set.

    The noise stream is derived from the seed independently of the tree
    draw, so the same seed gives the same tree at every coverage.
    """
    obs = to_observables(sim.tensor, sim.state_trees)
    rng = np.random.default_rng([cfg.seed, 1])
    out = []
    for c, per_sample in enumerate(obs):
        samples = []
        for h, mu in per_sample:
            if cfg.coverage is None:
                samples.append(SampleMeasurement(h, h, h, mu))
                continue
            ref, var, (lb, ub) = add_read_noise(h, cfg, rng)
            total = ref + var
            point = Fraction(var, total) if total else Fraction(lb + ub) / 2
            lb, ub = to_fraction(lb), to_fraction(ub)
            point = min(max(point, lb), ub)
            samples.append(SampleMeasurement(point, lb, ub, mu))
        out.append(LocusMeasurement(f"locus{c}", tuple(samples)))
    return out
