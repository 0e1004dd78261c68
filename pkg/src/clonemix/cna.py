"""Copy-number / SNV character model.

A locus is in one of ten ``(maternal, paternal, mutated)`` copy states.  A
locus undergoes one SNV and at most one CN-LOH, single-copy deletion (SCD)
or single-copy amplification (SCA); the resulting thirteen state trees are
:func:`catalog`.  Given a state tree, a VAF and the CNA class proportions
fix the state frequencies uniquely.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

from clonemix.core import (
    FrequencyIntervalTensor,
    FrequencyTensor,
    StateTree,
    to_fraction,
)
from clonemix.errors import EmptyIntersection, IncompatibleProportions, UnsupportedState, ZeroDenominator

log = logging.getLogger(__name__)

STATES = (
    (1, 1, 0),
    (1, 1, 1),
    (2, 0, 0),
    (2, 0, 1),
    (2, 0, 2),
    (1, 0, 0),
    (1, 0, 1),
    (2, 1, 0),
    (2, 1, 1),
    (2, 1, 2),
)

# CNA class of each state; None for the copy-neutral heterozygous states
STATE_CLASS = (None, None, "LOH", "LOH", "LOH", "SCD", "SCD", "SCA", "SCA", "SCA")
CLASSES = ("LOH", "SCD", "SCA")


class Proportions(NamedTuple):
    """Fractions of cells unaffected by a CNA, or carrying CN-LOH, SCD, SCA."""

    mu0: Fraction
    loh: Fraction = Fraction(0)
    scd: Fraction = Fraction(0)
    sca: Fraction = Fraction(0)

    @classmethod
    def of(cls, mu0, loh=0, scd=0, sca=0) -> "Proportions":
        return cls(to_fraction(mu0), to_fraction(loh), to_fraction(scd), to_fraction(sca))

    def of_class(self, name: str | None) -> Fraction:
        return {None: self.mu0, "LOH": self.loh, "SCD": self.scd, "SCA": self.sca}[name]


@dataclass(frozen=True)
class CatalogEntry:
    index: int
    parent: dict  # state -> parent state
    cna: str | None

    @property
    def states(self) -> tuple[int, ...]:
        return tuple(sorted({0, *self.parent}))

    def state_tree(self, character: int) -> StateTree:
        return StateTree(character, self.parent)

    def edge_kinds(self) -> dict[tuple[int, int], str]:
        return {(p, s): edge_kind(p, s) for s, p in sorted(self.parent.items())}


def edge_kind(a: int, b: int) -> str:
    """Event type of the transition between two copy states."""
    xa, ya, za = STATES[a]
    xb, yb, zb = STATES[b]
    if (xa, ya) == (xb, yb):
        return "SNV"
    return STATE_CLASS[b]


_CATALOG = (
    CatalogEntry(0, {1: 0}, None),
    CatalogEntry(1, {2: 0, 3: 2}, "LOH"),
    CatalogEntry(2, {1: 0, 2: 0}, "LOH"),
    CatalogEntry(3, {1: 0, 2: 1}, "LOH"),
    CatalogEntry(4, {1: 0, 4: 1}, "LOH"),
    CatalogEntry(5, {1: 0, 5: 0}, "SCD"),
    CatalogEntry(6, {1: 0, 5: 1}, "SCD"),
    CatalogEntry(7, {1: 0, 6: 1}, "SCD"),
    CatalogEntry(8, {5: 0, 6: 5}, "SCD"),
    CatalogEntry(9, {1: 0, 9: 1}, "SCA"),
    CatalogEntry(10, {1: 0, 7: 0}, "SCA"),
    CatalogEntry(11, {1: 0, 8: 1}, "SCA"),
    CatalogEntry(12, {7: 0, 8: 7}, "SCA"),
)


def catalog() -> tuple[CatalogEntry, ...]:
    return _CATALOG


def _check_class(tree_id: int, mu: Proportions) -> CatalogEntry:
    if not 0 <= tree_id < len(_CATALOG):
        raise IndexError(f"no state tree {tree_id}")
    entry = _CATALOG[tree_id]
    for name in CLASSES:
        if name != entry.cna and mu.of_class(name) != 0:
            raise IncompatibleProportions(f"state tree {tree_id} has no {name} states but mu_{name} = {mu.of_class(name)}")
    if sum(mu, Fraction(0)) != 1:
        raise IncompatibleProportions(f"proportions sum to {sum(mu)}")
    return entry


def _formulas(tree_id: int, mu: Proportions):
    """Frequencies of the tree's states as affine functions ``h -> a + b*h``.

    Returns ``{state: (a, b)}``.
    """
    m0, loh, scd, sca = mu
    one = Fraction(1)
    z = Fraction(0)
    if tree_id == 0:
        return {0: (one, Fraction(-2)), 1: (z, Fraction(2))}
    if tree_id == 1:
        return {0: (m0, z), 2: (loh, Fraction(-2)), 3: (z, Fraction(2))}
    if tree_id in (2, 3):
        return {0: (m0, Fraction(-2)), 1: (z, Fraction(2)), 2: (loh, z)}
    if tree_id == 4:
        return {0: (m0 + 2 * loh, Fraction(-2)), 1: (-2 * loh, Fraction(2)), 4: (loh, z)}
    if tree_id in (5, 6):
        return {0: (m0, -(1 + m0)), 1: (z, 1 + m0), 5: (scd, z)}
    if tree_id == 7:
        return {0: (m0 + scd, -(1 + m0)), 1: (-scd, 1 + m0), 6: (scd, z)}
    if tree_id == 8:
        return {0: (m0, z), 5: (scd, -(1 + m0)), 6: (z, 1 + m0)}
    if tree_id == 9:
        return {0: (1 + sca, -(2 + sca)), 1: (-2 * sca, 2 + sca), 9: (sca, z)}
    if tree_id == 10:
        return {0: (m0, -(2 + sca)), 1: (z, 2 + sca), 7: (sca, z)}
    if tree_id == 11:
        return {0: (one, -(2 + sca)), 1: (-sca, 2 + sca), 8: (sca, z)}
    if tree_id == 12:
        return {0: (m0, z), 7: (sca, -(2 + sca)), 8: (z, 2 + sca)}
    raise IndexError(f"no state tree {tree_id}")


def derive_frequencies(tree_id: int, h, mu: Proportions) -> dict[int, Fraction]:
    """Unique state frequencies for VAF ``h`` under state tree ``tree_id``.

    Only the tree's states are returned; all other states are 0.  Values may
    be negative when ``h`` is outside :func:`vaf_interval`.
    """
    h = to_fraction(h)
    _check_class(tree_id, mu)
    return {s: a + b * h for s, (a, b) in _formulas(tree_id, mu).items()}


def vaf_interval(tree_id: int, mu: Proportions) -> tuple[Fraction, Fraction]:
    """VAFs for which every derived frequency is nonnegative."""
    _check_class(tree_id, mu)
    m0, loh, scd, sca = mu
    half = Fraction(1, 2)
    table = {
        0: (Fraction(0), half),
        1: (Fraction(0), loh / 2),
        2: (Fraction(0), m0 / 2),
        3: (Fraction(0), m0 / 2),
        4: (loh, (1 + loh) / 2),
        5: (Fraction(0), m0 / (1 + m0)),
        6: (Fraction(0), m0 / (1 + m0)),
        7: (scd / (1 + m0), 1 / (1 + m0)),
        8: (Fraction(0), scd / (1 + m0)),
        9: (2 * sca / (2 + sca), (1 + sca) / (2 + sca)),
        10: (Fraction(0), m0 / (2 + sca)),
        11: (sca / (2 + sca), 1 / (2 + sca)),
        12: (Fraction(0), sca / (2 + sca)),
    }
    return table[tree_id]


def vaf_from_frequencies(f: dict[int, object] | Sequence) -> Fraction:
    """Mutated copies over total copies, frequency weighted."""
    if not isinstance(f, dict):
        f = dict(enumerate(f))
    num = Fraction(0)
    den = Fraction(0)
    for s, x in f.items():
        if not 0 <= s < len(STATES):
            raise UnsupportedState(f"state {s} is not a copy state")
        x = to_fraction(x)
        cx, cy, cz = STATES[s]
        num += cz * x
        den += (cx + cy) * x
    if den == 0:
        raise ZeroDenominator("frequencies carry no copies")
    return num / den


def class_proportions(f: dict[int, object]) -> Proportions:
    sums = {None: Fraction(0), "LOH": Fraction(0), "SCD": Fraction(0), "SCA": Fraction(0)}
    for s, x in f.items():
        if not 0 <= s < len(STATES):
            raise UnsupportedState(f"state {s} is not a copy state")
        sums[STATE_CLASS[s]] += to_fraction(x)
    return Proportions(sums[None], sums["LOH"], sums["SCD"], sums["SCA"])


@dataclass(frozen=True)
class SampleMeasurement:
    vaf: Fraction
    vaf_lb: Fraction
    vaf_ub: Fraction
    mu: Proportions

    def __post_init__(self):
        if not self.vaf_lb <= self.vaf <= self.vaf_ub:
            raise ValueError(f"VAF {self.vaf} outside its interval [{self.vaf_lb}, {self.vaf_ub}]")
        if sum(self.mu, Fraction(0)) != 1:
            raise ValueError(f"CNA proportions sum to {sum(self.mu)}")
        if any(x < 0 for x in self.mu):
            raise ValueError("negative CNA proportion")


@dataclass(frozen=True)
class LocusMeasurement:
    locus_id: str
    samples: tuple[SampleMeasurement, ...]

    def __post_init__(self):
        classes = {name for s in self.samples for name in CLASSES if s.mu.of_class(name) != 0}
        if len(classes) > 1:
            raise ValueError(f"locus {self.locus_id} mixes CNA classes {sorted(classes)}")

    @property
    def cna(self) -> str | None:
        for s in self.samples:
            for name in CLASSES:
                if s.mu.of_class(name) != 0:
                    return name
        return None


def _class_fits(entry: CatalogEntry, locus: LocusMeasurement) -> bool:
    if entry.cna is None:
        return all(s.mu.mu0 == 1 for s in locus.samples)
    return locus.cna in (None, entry.cna)


def is_compatible(tree_id: int, locus: LocusMeasurement, noisy: bool = False) -> bool:
    """Whether every sample's VAF (or, if ``noisy``, VAF interval) meets the tree's admissible VAFs."""
    entry = _CATALOG[tree_id]
    if not _class_fits(entry, locus):
        return False
    for s in locus.samples:
        lo, hi = vaf_interval(tree_id, s.mu)
        if noisy:
            if max(lo, s.vaf_lb) > min(hi, s.vaf_ub):
                return False
        elif not lo <= s.vaf <= hi:
            return False
    return True


def derive_frequency_intervals(tree_id: int, vaf_lb, vaf_ub, mu: Proportions) -> dict[int, tuple[Fraction, Fraction]]:
    """Frequency intervals from a VAF interval, after clamping it to the admissible VAFs.

    Every frequency is affine in the VAF, so endpoint evaluation is exact.
    The state-0 upper bound is set to 1.
    """
    lo, hi = vaf_interval(tree_id, mu)
    a = max(lo, to_fraction(vaf_lb))
    b = min(hi, to_fraction(vaf_ub))
    if a > b:
        raise EmptyIntersection(f"VAF interval [{vaf_lb}, {vaf_ub}] misses [{lo}, {hi}] of state tree {tree_id}")
    at_a = derive_frequencies(tree_id, a, mu)
    at_b = derive_frequencies(tree_id, b, mu)
    out = {s: (min(at_a[s], at_b[s]), max(at_a[s], at_b[s])) for s in at_a}
    out[0] = (out[0][0], Fraction(1))
    return out


@dataclass(frozen=True)
class Instance:
    """One state-tree choice per kept locus, with its tensor."""

    combination: tuple[int, ...]
    loci: tuple[int, ...]  # indices into the measurement list
    state_trees: tuple[StateTree, ...]
    tensor: FrequencyTensor | None = None
    intervals: FrequencyIntervalTensor | None = None

    @property
    def key(self) -> str:
        return "-".join(str(t) for t in self.combination)


def compatible_trees(locus: LocusMeasurement, noisy: bool = False, require_cna_support: bool = True) -> list[int]:
    """Catalog indices compatible with a locus.

    With ``require_cna_support`` a tree with a CNA class is offered only if
    that class has nonzero proportion in some sample.
    """
    out = []
    for entry in _CATALOG:
        if require_cna_support and entry.cna is not None and locus.cna != entry.cna:
            continue
        if is_compatible(entry.index, locus, noisy=noisy):
            out.append(entry.index)
    return out


def combinations(
    measurements: Sequence[LocusMeasurement],
    noisy: bool = False,
    require_cna_support: bool = True,
) -> list[Instance]:
    """One instance per combination of compatible state trees.

    Loci compatible with no tree are dropped with a warning.
    """
    choices = []
    kept = []
    for k, locus in enumerate(measurements):
        ids = compatible_trees(locus, noisy=noisy, require_cna_support=require_cna_support)
        if not ids:
            log.warning("locus %s is incompatible with all state trees; dropped", locus.locus_id)
            continue
        kept.append(k)
        choices.append(ids)
    if not kept:
        return []
    m = len(measurements[kept[0]].samples)
    out = []
    for combo in itertools.product(*choices):
        trees = tuple(_CATALOG[t].state_tree(c) for c, t in enumerate(combo))
        if noisy:
            lower = [[None] * len(kept) for _ in range(m)]
            upper = [[None] * len(kept) for _ in range(m)]
            for c, (t, k) in enumerate(zip(combo, kept)):
                for p, s in enumerate(measurements[k].samples):
                    iv = derive_frequency_intervals(t, s.vaf_lb, s.vaf_ub, s.mu)
                    lower[p][c] = {st: x[0] for st, x in iv.items()}
                    upper[p][c] = {st: x[1] for st, x in iv.items()}
            out.append(Instance(combo, tuple(kept), trees, intervals=FrequencyIntervalTensor(lower, upper)))
        else:
            values = [[None] * len(kept) for _ in range(m)]
            for c, (t, k) in enumerate(zip(combo, kept)):
                for p, s in enumerate(measurements[k].samples):
                    values[p][c] = derive_frequencies(t, s.vaf, s.mu)
            out.append(Instance(combo, tuple(kept), trees, tensor=FrequencyTensor(values)))
    return out
