"""Command-line entry point: simulate, enumerate, evaluate.

Exit codes: 0 success (an empty solution set included), 1 usage error,
2 input that cannot be read or parsed, 3 internal error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path

from clonemix import formats
from clonemix.ancestry import build_cladistic_graph, build_noisy_graph
from clonemix.cna import Instance
from clonemix.core import FrequencyIntervalTensor, FrequencyTensor
from clonemix.errors import ClonemixError
from clonemix.metrics import concordance, representative, summarize
from clonemix.pipeline import JOBS_ENV, PipelineResult, default_jobs, merge, solve_measurements, solve_tensor
from clonemix.simulate import SimulationConfig, measurements, simulate_instance

log = logging.getLogger("clonemix")

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    try:
        x = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if x < 1:
        raise argparse.ArgumentTypeError(f"{text} must be at least 1")
    return x


def _nonneg_int(text):
    try:
        x = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if x < 0:
        raise argparse.ArgumentTypeError(f"{text} must be nonnegative")
    return x


def _positive_float(text):
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not x > 0:
        raise argparse.ArgumentTypeError(f"{text} must be positive")
    return x


def _confidence(text):
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not 0 < x < 1:
        raise argparse.ArgumentTypeError("confidence must lie in (0, 1)")
    return x


def _tree_ids(text):
    try:
        ids = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("tree ids must be comma-separated integers") from None
    if any(not 0 <= t <= 12 for t in ids):
        raise argparse.ArgumentTypeError("tree ids must lie in 0..12")
    return ids


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="clonemix", description="Enumerate perfect phylogeny mixtures from frequency data.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    sim = sub.add_parser("simulate", help="draw a ground-truth instance")
    sim.add_argument("--n", type=_positive_int, required=True, help="number of loci (characters)")
    sim.add_argument("--m", type=_positive_int, required=True, help="number of samples")
    sim.add_argument("--coverage", type=_positive_float, help="expected read depth; omit for error-free data")
    sim.add_argument("--seed", type=_nonneg_int, default=0)
    sim.add_argument("--confidence", type=_confidence, default=0.95, help="VAF interval level")
    sim.add_argument("--tree-ids", type=_tree_ids, help="force catalog state trees, e.g. 0,3,7")
    sim.add_argument("--out-dir", type=Path, required=True)

    enum = sub.add_parser("enumerate", help="enumerate solutions for measurements or a tensor")
    enum.add_argument("input", type=Path, help="measurement TSV or tensor JSON")
    enum.add_argument("--mode", choices=("exact", "noisy"), default="exact")
    enum.add_argument("--max-solutions", type=_positive_int, help="stop each combination after N trees")
    enum.add_argument("--largest-only", action="store_true", help="keep only trees with the most vertices")
    enum.add_argument(
        "--jobs", type=_positive_int, default=None, help=f"worker processes (default ${JOBS_ENV} or 1)"
    )
    enum.add_argument("--prune-zero", action="store_true", help="drop states that never carry frequency")
    enum.add_argument("--ancestry-dot", action="store_true", help="also write each ancestry graph as DOT")
    enum.add_argument("--out-dir", type=Path, required=True)

    ev = sub.add_parser("evaluate", help="score solutions against a ground truth")
    ev.add_argument("--truth", type=Path, required=True)
    ev.add_argument("--solutions", type=Path, required=True)
    ev.add_argument("--out-dir", type=Path, required=True)
    return parser


def _read(path: Path) -> str:
    try:
        return path.read_text()
    except OSError as exc:
        raise formats.ParseError(f"cannot read {path}: {exc.strerror}") from exc


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


# -- simulate ----------------------------------------------------------------


def cmd_simulate(args) -> int:
    if args.tree_ids is not None and len(args.tree_ids) != args.n:
        raise UsageError(f"--tree-ids lists {len(args.tree_ids)} trees for --n {args.n}")
    cfg = SimulationConfig(
        n=args.n, m=args.m, coverage=args.coverage, seed=args.seed, confidence=args.confidence, tree_ids=args.tree_ids
    )
    sim = simulate_instance(cfg)
    loci = measurements(sim, cfg)
    names = [locus.locus_id for locus in loci]
    out = args.out_dir
    _write(out / "truth.json", formats.truth_json(sim, names, args.seed, args.coverage))
    _write(out / "measurements.tsv", formats.measurement_tsv(loci))
    if args.coverage is None:
        _write(out / "tensor.json", formats.tensor_json(sim.tensor, sim.state_trees, names))
    print(f"simulated n={args.n} m={args.m} seed={args.seed} into {out}")
    return EXIT_OK


# -- enumerate ---------------------------------------------------------------


def _witness_json(sol) -> dict:
    W = sol.witness
    return {
        "loci": list(sol.loci),
        "states": [list(W.states(c)) for c in range(W.n)],
        "f": [[[formats._num(W.f(p, c, s)) for s in W.states(c)] for c in range(W.n)] for p in range(W.m)],
    }


def _solution_entry(k: int, sol) -> dict:
    entry = {"id": k, "combination": sol.combination, "vertices": sol.size, "edges": formats.edges_json(sol.tree)}
    if sol.usage is not None:
        entry["usage"] = formats.usage_json(sol.usage)
    if sol.witness is not None:
        entry["witness"] = _witness_json(sol)
    return entry


def _solutions_doc(result: PipelineResult, loci, samples, args) -> dict:
    combos = []
    for inst, sols in zip(result.instances, result.per_instance):
        combos.append(
            {
                "id": inst.key,
                "loci": list(inst.loci),
                "state_trees": [formats.state_tree_json(t) for t in inst.state_trees],
                "count": len(sols),
                "truncated": sols.truncated,
            }
        )
    return {
        "format": "clonemix-solutions",
        "mode": result.mode,
        "loci": list(loci),
        "samples": list(samples),
        "max_solutions": args.max_solutions,
        "largest_only": args.largest_only,
        "truncated": result.truncated,
        "count": len(result.solutions),
        "combinations": combos,
        "solutions": [_solution_entry(k, s) for k, s in enumerate(result.solutions)],
    }


def _load_input(args):
    """Return ``(result, loci_names, sample_ids, instances)`` for the input file."""
    text = _read(args.input)
    jobs = args.jobs if args.jobs is not None else default_jobs()
    if text.lstrip().startswith("{"):
        data, trees, names = formats.parse_tensor_json(text)
        if args.mode == "exact" and isinstance(data, FrequencyIntervalTensor):
            raise UsageError("interval tensors need --mode noisy")
        if args.mode == "noisy" and isinstance(data, FrequencyTensor):
            data = FrequencyIntervalTensor.point(data, open_root=True)
        if isinstance(data, FrequencyTensor):
            inst = Instance(("input",), tuple(range(data.n)), trees, tensor=data)
        else:
            inst = Instance(("input",), tuple(range(data.n)), trees, intervals=data)
        sols = solve_tensor(data, trees, limit=args.max_solutions, prune=args.prune_zero)
        merged = merge([inst], [sols], largest_only=args.largest_only)
        result = PipelineResult(args.mode, (inst,), (sols,), merged)
        samples = [f"sample{p}" for p in range(data.m)]
        return result, names, samples
    loci, samples = formats.parse_measurement_tsv(text)
    result = solve_measurements(
        loci,
        mode=args.mode,
        limit=args.max_solutions,
        largest_only=args.largest_only,
        jobs=jobs,
        prune=args.prune_zero,
    )
    return result, [locus.locus_id for locus in loci], samples


def cmd_enumerate(args) -> int:
    result, names, samples = _load_input(args)
    out = args.out_dir
    doc = _solutions_doc(result, names, samples, args)
    _write(out / "solutions.json", formats.dumps(doc))
    by_combo: dict[str, list] = {inst.key: [] for inst in result.instances}
    for entry in doc["solutions"]:
        by_combo[entry["combination"]].append(entry)
    for combo in doc["combinations"]:
        part = dict(combo, mode=result.mode, loci_names=list(names), solutions=by_combo[combo["id"]])
        _write(out / "combinations" / f"{combo['id']}.json", formats.dumps(part))
    if result.mode == "exact":
        for k, sol in enumerate(result.solutions):
            _write(out / "usage" / f"solution_{k}.tsv", formats.usage_tsv(sol.usage, samples))
    if result.solutions:
        _write(out / "summary.dot", summarize(result.trees()).to_dot())
    if args.ancestry_dot:
        for inst in result.instances:
            if inst.intervals is not None:
                G = build_noisy_graph(inst.intervals, inst.state_trees)
            else:
                G = build_cladistic_graph(inst.tensor, inst.state_trees)
            _write(out / "ancestry" / f"{inst.key}.dot", G.to_dot())
    note = " (truncated)" if result.truncated else ""
    print(f"{len(result.solutions)} solutions from {len(result.instances)} combinations{note}")
    return EXIT_OK


# -- evaluate ----------------------------------------------------------------


def _decimal(x: Fraction, places: int = 6) -> str:
    return f"{float(x):.{places}f}"


def cmd_evaluate(args) -> int:
    truth = formats.parse_truth_json(_read(args.truth))
    sols = formats.parse_solutions_json(_read(args.solutions))
    if truth["loci"] != sols["loci"]:
        raise formats.ParseError(f"truth loci {truth['loci']} do not match solution loci {sols['loci']}")
    out = args.out_dir
    T = truth["tree"]
    trees = [s["tree"] for s in sols["solutions"]]
    rows = ["solution_id\tcombination\tvertices\tconcordance\tconcordance_exact"]
    scores = []
    for s in sols["solutions"]:
        c = concordance(T, s["tree"])
        scores.append(c)
        rows.append(f"{s['id']}\t{s['combination']}\t{len(s['tree'])}\t{_decimal(c)}\t{c}")
    _write(out / "concordance.tsv", "\n".join(rows) + "\n")
    report = [f"solutions\t{len(trees)}"]
    if trees:
        summary = summarize(trees, reference=T)
        _write(out / "summary.dot", summary.to_dot())
        rep = representative(trees)
        rep_id = next(s["id"] for s in sols["solutions"] if s["tree"] == rep)
        _write(
            out / "representative.json",
            formats.dumps({"id": rep_id, "concordance": str(concordance(T, rep)), "edges": formats.edges_json(rep)}),
        )
        best = max(scores)
        report += [
            f"max_concordance\t{_decimal(best)}",
            f"mean_concordance\t{_decimal(sum(scores, Fraction(0)) / len(scores))}",
            f"truth_found\t{'yes' if T in trees else 'no'}",
            f"representative\t{rep_id}",
        ]
    else:
        report.append("note\t0 solutions")
    text = "\n".join(report) + "\n"
    _write(out / "report.tsv", text)
    sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "enumerate": cmd_enumerate, "evaluate": cmd_evaluate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"clonemix: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (formats.ParseError, ClonemixError) as exc:
        print(f"clonemix: input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"clonemix: cannot write output: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"clonemix: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
