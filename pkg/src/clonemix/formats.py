"""File formats: tensor JSON, measurement TSV, usage TSV, solution and truth JSON.

Numbers are read exactly.  On output a rational with a terminating decimal
expansion is written as a plain decimal, anything else as an ``"a/b"``
string, so every file round-trips without loss.
"""

from __future__ import annotations

import csv
import io
import json
import re
from decimal import Decimal
from fractions import Fraction
from typing import Sequence

from clonemix.core import (
    ROOT,
    CharState,
    CloneTree,
    FrequencyIntervalTensor,
    FrequencyTensor,
    StateTree,
    UsageMatrix,
    to_fraction,
)
from clonemix.cna import LocusMeasurement, Proportions, SampleMeasurement
from clonemix.errors import ClonemixError


class ParseError(ClonemixError):
    pass


MEASUREMENT_COLUMNS = ("sample_id", "locus_id", "vaf", "vaf_lb", "vaf_ub", "mu0", "muLOH", "muSCD", "muSCA")

_RAW = "\x00raw:"


def decimal_text(x) -> str | None:
    """Exact decimal text for ``x``, or None if the expansion does not terminate."""
    x = to_fraction(x)
    d = x.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return None
    places = max(twos, fives)
    scaled = abs(x.numerator) * 10**places // x.denominator
    sign = "-" if x < 0 else ""
    if places == 0:
        return sign + str(scaled)
    digits = str(scaled).rjust(places + 1, "0")
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def number_text(x) -> str:
    """Decimal if it terminates, else ``a/b``."""
    return decimal_text(x) or str(to_fraction(x))


def _num(x):
    text = decimal_text(x)
    if text is None:
        return str(to_fraction(x))
    return _RAW + text


def dumps(obj) -> str:
    """Indented JSON in insertion order; terminating rationals become bare numbers."""
    text = json.dumps(obj, indent=1)
    return re.sub(r'"\\u0000raw:([^"]*)"', r"\1", text) + "\n"


def parse_number(x, where: str = "") -> Fraction:
    try:
        return to_fraction(x)
    except (ValueError, TypeError, ZeroDivisionError, ArithmeticError) as exc:
        raise ParseError(f"bad number {x!r}{' in ' + where if where else ''}") from exc


def _load_json(text: str):
    try:
        return json.loads(text, parse_float=Decimal, parse_int=int)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc


# -- vertices and trees ------------------------------------------------------


def vertex_text(v: CharState) -> str:
    return str(v)


def parse_vertex(text: str) -> CharState:
    if text == "root":
        return ROOT
    try:
        c, s = text.split(":")
        c, s = int(c), int(s)
    except ValueError:
        raise ParseError(f"bad vertex {text!r}") from None
    return ROOT if s == 0 else CharState(c, s)


def edges_json(T: CloneTree) -> list[list[str]]:
    return [[vertex_text(u), vertex_text(v)] for u, v in T.edges]


def parse_edges(rows) -> CloneTree:
    try:
        return CloneTree((parse_vertex(u), parse_vertex(v)) for u, v in rows)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad edge list: {exc}") from exc


def state_tree_json(t: StateTree) -> dict[str, int]:
    return {str(s): p for s, p in sorted(t.parent_map.items())}


def parse_state_tree(character: int, obj) -> StateTree:
    try:
        return StateTree(character, {int(s): int(p) for s, p in obj.items()})
    except (AttributeError, ValueError, TypeError) as exc:
        raise ParseError(f"bad state tree for character {character}: {exc}") from exc


# -- usage matrices ----------------------------------------------------------


def usage_json(U: UsageMatrix) -> dict:
    return {
        "vertices": [vertex_text(v) for v in U.vertices],
        "rows": [[_num(U.u(p, v)) for v in U.vertices] for p in range(U.m)],
    }


def parse_usage(obj) -> UsageMatrix:
    try:
        vertices = [parse_vertex(v) for v in obj["vertices"]]
        rows = [[parse_number(x, "usage") for x in row] for row in obj["rows"]]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"bad usage matrix: {exc}") from exc
    return UsageMatrix(vertices, rows)


def usage_tsv(U: UsageMatrix, sample_ids: Sequence[str] | None = None) -> str:
    """Rows are samples, columns the vertices in canonical order."""
    out = io.StringIO()
    w = csv.writer(out, delimiter="\t", lineterminator="\n")
    w.writerow(["sample_id", *(vertex_text(v) for v in U.vertices)])
    for p in range(U.m):
        name = sample_ids[p] if sample_ids else f"sample{p}"
        w.writerow([name, *(number_text(U.u(p, v)) for v in U.vertices)])
    return out.getvalue()


# -- frequency tensors -------------------------------------------------------


def _tensor_layout(states_of, trees: Sequence[StateTree], names):
    chars = []
    for c, t in enumerate(trees):
        labels = list(states_of(c))
        entry = {
            "name": names[c] if names else f"c{c}",
            "states": len(labels),
            "state_tree_parent": [t.parent(s) for s in labels],
        }
        if labels != list(range(len(labels))):
            entry["state_labels"] = labels
        chars.append(entry)
    return chars


def _tensor_values(F: FrequencyTensor):
    return [[[_num(F.f(p, c, s)) for s in F.states(c)] for c in range(F.n)] for p in range(F.m)]


def tensor_json(F: FrequencyTensor, trees: Sequence[StateTree], names=None) -> str:
    obj = {"m": F.m, "characters": _tensor_layout(F.states, trees, names), "f": _tensor_values(F)}
    return dumps(obj)


def interval_json(I: FrequencyIntervalTensor, trees: Sequence[StateTree], names=None) -> str:
    obj = {
        "m": I.m,
        "characters": _tensor_layout(I.states, trees, names),
        "f_lb": _tensor_values(I.lower),
        "f_ub": _tensor_values(I.upper),
    }
    return dumps(obj)


def _parse_values(raw, m, labels, key):
    if not isinstance(raw, list) or len(raw) != m:
        raise ParseError(f"'{key}' must list {m} samples")
    out = []
    for p, sample in enumerate(raw):
        if not isinstance(sample, list) or len(sample) != len(labels):
            raise ParseError(f"'{key}' sample {p} must list {len(labels)} characters")
        row = []
        for c, vals in enumerate(sample):
            if not isinstance(vals, list) or len(vals) != len(labels[c]):
                raise ParseError(f"'{key}' sample {p} character {c} must list {len(labels[c])} states")
            row.append({s: parse_number(x, key) for s, x in zip(labels[c], vals)})
        out.append(row)
    return out


def parse_tensor_json(text: str):
    """Return ``(tensor_or_intervals, state_trees, names)``."""
    obj = _load_json(text)
    try:
        m = int(obj["m"])
        chars = obj["characters"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"tensor file lacks 'm' or 'characters': {exc}") from exc
    labels, trees, names = [], [], []
    for c, ch in enumerate(chars):
        try:
            k = int(ch["states"])
            parents = ch["state_tree_parent"]
            lab = [int(s) for s in ch.get("state_labels", range(k))]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad character entry {c}: {exc}") from exc
        if len(lab) != k or len(parents) != k:
            raise ParseError(f"character {c}: expected {k} states and parents")
        pmap = {s: p for s, p in zip(lab, parents) if p is not None}
        if set(pmap) != set(lab) - {0}:
            raise ParseError(f"character {c}: only state 0 may lack a parent")
        try:
            trees.append(StateTree(c, {s: int(p) for s, p in pmap.items()}))
        except (ValueError, TypeError) as exc:
            raise ParseError(f"character {c}: {exc}") from exc
        labels.append(lab)
        names.append(str(ch.get("name", f"c{c}")))
    try:
        if "f" in obj:
            data = FrequencyTensor(_parse_values(obj["f"], m, labels, "f"))
        elif "f_lb" in obj and "f_ub" in obj:
            lo = _parse_values(obj["f_lb"], m, labels, "f_lb")
            hi = _parse_values(obj["f_ub"], m, labels, "f_ub")
            data = FrequencyIntervalTensor(lo, hi)
        else:
            raise ParseError("tensor file needs 'f' or both 'f_lb' and 'f_ub'")
    except ParseError:
        raise
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    return data, tuple(trees), names


# -- measurements ------------------------------------------------------------


def measurement_tsv(loci: Sequence[LocusMeasurement], sample_ids: Sequence[str] | None = None) -> str:
    out = io.StringIO()
    w = csv.writer(out, delimiter="\t", lineterminator="\n")
    w.writerow(MEASUREMENT_COLUMNS)
    m = len(loci[0].samples) if loci else 0
    for p in range(m):
        name = sample_ids[p] if sample_ids else f"sample{p}"
        for locus in loci:
            s = locus.samples[p]
            w.writerow([name, locus.locus_id, *(number_text(x) for x in (s.vaf, s.vaf_lb, s.vaf_ub, *s.mu))])
    return out.getvalue()


def parse_measurement_tsv(text: str) -> tuple[list[LocusMeasurement], list[str]]:
    """Return the loci (in first-seen order) and the sample ids."""
    reader = csv.reader(io.StringIO(text), delimiter="\t")
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != MEASUREMENT_COLUMNS:
        raise ParseError(f"measurement header must be {' '.join(MEASUREMENT_COLUMNS)}")
    samples: list[str] = []
    loci: list[str] = []
    cells: dict[tuple[str, str], SampleMeasurement] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not x.strip() for x in row):
            continue
        if len(row) != len(MEASUREMENT_COLUMNS):
            raise ParseError(f"line {lineno}: expected {len(MEASUREMENT_COLUMNS)} columns, got {len(row)}")
        sid, lid = row[0].strip(), row[1].strip()
        where = f"line {lineno}"
        vaf, lb, ub, mu0, loh, scd, sca = (parse_number(x.strip(), where) for x in row[2:])
        try:
            sm = SampleMeasurement(vaf, lb, ub, Proportions(mu0, loh, scd, sca))
        except ValueError as exc:
            raise ParseError(f"{where}: {exc}") from exc
        if (sid, lid) in cells:
            raise ParseError(f"{where}: duplicate row for sample {sid}, locus {lid}")
        if sid not in samples:
            samples.append(sid)
        if lid not in loci:
            loci.append(lid)
        cells[sid, lid] = sm
    if not cells:
        raise ParseError("measurement file has no rows")
    out = []
    for lid in loci:
        missing = [sid for sid in samples if (sid, lid) not in cells]
        if missing:
            raise ParseError(f"locus {lid} lacks samples {missing}")
        try:
            out.append(LocusMeasurement(lid, tuple(cells[sid, lid] for sid in samples)))
        except ValueError as exc:
            raise ParseError(str(exc)) from exc
    return out, samples


# -- ground truth ------------------------------------------------------------


def truth_json(sim, loci_names: Sequence[str], seed: int, coverage=None) -> str:
    obj = {
        "seed": seed,
        "n": len(sim.state_trees),
        "m": sim.usage.m,
        "coverage": coverage,
        "loci": list(loci_names),
        "tree_ids": list(sim.tree_ids),
        "state_trees": [state_tree_json(t) for t in sim.state_trees],
        "edges": edges_json(sim.tree),
        "usage": usage_json(sim.usage),
    }
    return dumps(obj)


def parse_truth_json(text: str) -> dict:
    obj = _load_json(text)
    try:
        tree = parse_edges(obj["edges"])
        loci = [str(x) for x in obj["loci"]]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"truth file lacks edges or loci: {exc}") from exc
    out = dict(obj)
    out["tree"] = tree
    out["loci"] = loci
    return out


def parse_solutions_json(text: str) -> dict:
    obj = _load_json(text)
    try:
        loci = [str(x) for x in obj["loci"]]
        sols = [dict(s, tree=parse_edges(s["edges"])) for s in obj["solutions"]]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"solution file lacks loci or solutions: {exc}") from exc
    out = dict(obj)
    out["loci"] = loci
    out["solutions"] = sols
    return out
