"""Command-line front end: solve one instance, cross-check variants against
the brute-force oracle, or benchmark variants with repetitions.

Exit codes: 0 ok, 1 usage, 2 input error, 3 divergence (check), 4 timeout.
"""

from __future__ import annotations

import argparse
import re
import statistics
import sys
import time

try:
    import resource
except ImportError:  # pragma: no cover - non-POSIX fallback
    resource = None

from .grammar import (
    GrammarError,
    OPT_GRAMMAR_FOR,
    Symbol,
    WcnfGrammar,
    ensure_wcnf,
    parse_grammar,
    preset,
)
from .graph import GraphFormatError, LabeledGraph, chain_graph, grid_graph, load_graph
from .oracle import oracle_solve
from .semiring import HBLOCK, PLAIN, NontermMatrix
from .solver import VARIANT_NAMES, SolveTimeout, VariantFlags, solve

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_DIVERGENCE = 3
EXIT_TIMEOUT = 4

_SYNTHETIC = re.compile(r"^(chain|grid)\((\d+)\)$")


class CliInputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _peak_memory_bytes() -> int:
    """Best-effort OS high-water mark of this process."""
    if resource is None:
        return 0
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024


def _load_grammar(args) -> tuple[WcnfGrammar, str]:
    variant = getattr(args, "variant", None)
    if args.preset:
        name = args.preset
        if variant == "ma12345":
            opt = OPT_GRAMMAR_FOR.get(name)
            if opt is None:
                raise CliInputError(
                    f"variant ma12345 needs a grammar with a hand-tuned counterpart; "
                    f"preset {name!r} has none"
                )
            name = opt
        return ensure_wcnf(preset(name)), name
    if args.grammar:
        if variant == "ma12345":
            raise CliInputError(
                "variant ma12345 selects a hand-tuned preset grammar; use --preset"
            )
        try:
            with open(args.grammar, "r", encoding="utf-8") as fh:
                cfg = parse_grammar(fh.read())
        except OSError as exc:
            raise CliInputError(f"cannot read grammar: {exc}") from exc
        return ensure_wcnf(cfg), args.grammar
    if args.graph and _SYNTHETIC.match(args.graph):
        if variant == "ma12345":
            raise CliInputError(
                "variant ma12345 needs a grammar with a hand-tuned counterpart; "
                "the synthetic instances pair with 'dyck', which has none"
            )
        return ensure_wcnf(preset("dyck")), "dyck"
    raise CliInputError("a grammar is required: pass --grammar FILE or --preset NAME")


def _load_graph(args, g: WcnfGrammar) -> tuple[LabeledGraph, str]:
    spec = args.graph
    m = _SYNTHETIC.match(spec)
    if m:
        kind, size = m.group(1), int(m.group(2))
        try:
            graph = chain_graph(size) if kind == "chain" else grid_graph(size)
        except ValueError as exc:
            raise CliInputError(str(exc)) from exc
        return graph, spec
    try:
        with open(spec, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliInputError(f"cannot read graph: {exc}") from exc
    return load_graph(text, g, index_separator=args.index_separator), spec


def _pairs_for(matrices: NontermMatrix, name: str) -> list[tuple[int, int]] | None:
    for sym, repr_ in matrices.mats:
        if repr_ == PLAIN and sym.name() == name:
            return matrices.pairs(sym)
    for sym, repr_ in matrices.mats:
        if repr_ == HBLOCK:
            for tag in matrices.universe:
                if f"{sym.base}_{tag}" == name:
                    return matrices.pairs(Symbol(sym.kind, sym.base, tag))
    return None


def _format_pairs(graph: LabeledGraph, pairs: list[tuple[int, int]]) -> str:
    names = graph.vertex_names
    rows = [(names[u], names[v]) for u, v in pairs]
    if all(a.isdigit() and b.isdigit() for a, b in rows):
        rows.sort(key=lambda r: (int(r[0]), int(r[1])))
    else:
        rows.sort()
    return "".join(f"{a} {b}\n" for a, b in rows)


def _pair_counts(result) -> dict[str, int]:
    counts: dict[str, int] = {}
    for sym, _, _ in result.triples():
        counts[sym.name()] = counts.get(sym.name(), 0) + 1
    return dict(sorted(counts.items()))


def _report_record(
    variant: str,
    grammar_id: str,
    graph_id: str,
    flags: VariantFlags,
    threads: int,
    result,
    wall_seconds: float,
    extra: list[str] | None = None,
) -> str:
    counts = _pair_counts(result)
    lines = [
        f"variant={variant}",
        f"grammar={grammar_id}",
        f"graph={graph_id}",
        f"b={flags.b}",
        f"threads={threads}",
        f"iterations={result.iterations}",
        f"wall_seconds={wall_seconds:.6f}",
        f"peak_mem_bytes={_peak_memory_bytes()}",
        f"spgemm_calls={result.counters.spgemm_calls}",
        f"scalar_ops={result.counters.scalar_ops}",
        f"union_entries={result.counters.union_entries}",
        f"pairs_total={sum(counts.values())}",
    ]
    lines.extend(f"pairs.{name}={c}" for name, c in counts.items())
    if extra:
        lines.extend(extra)
    return "\n".join(lines) + "\n"


def _write(path: str | None, text: str, default_stream) -> None:
    if path == "-":
        stream = sys.stdout
    elif path is None:
        stream = default_stream
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        return
    stream.write(text)
    stream.flush()


# ---------------------------------------------------------------------------
# commands


def _cmd_solve(args) -> int:
    g, grammar_id = _load_grammar(args)
    graph, graph_id = _load_graph(args, g)
    flags = VariantFlags.named(args.variant, b=args.b)
    deadline = None
    if args.timeout_secs is not None:
        deadline = time.monotonic() + args.timeout_secs
    t0 = time.perf_counter()
    result = solve(graph, g, flags, threads=args.threads, deadline=deadline)
    wall = time.perf_counter() - t0

    target = args.nonterminal or g.start.name()
    pairs = _pairs_for(result.matrices, target)
    if pairs is None:
        known = sorted(
            {s.name() for s, _, _ in result.triples()} | {g.start.name()}
        )
        raise CliInputError(
            f"unknown nonterminal {target!r}; nonterminals with results: "
            + (", ".join(known) if known else "(none)")
        )
    _write(args.output, _format_pairs(graph, pairs), sys.stdout)
    report = _report_record(
        args.variant, grammar_id, graph_id, flags, args.threads, result, wall
    )
    _write(args.report, report, sys.stderr)
    return EXIT_OK


def run_check(
    graph: LabeledGraph,
    g: WcnfGrammar,
    variants: list[str],
    b: int = 10,
    threads: int = 1,
    solve_fn=solve,
    out=sys.stdout,
) -> int:
    """Solve with every variant and compare against the oracle; print the
    first divergence and return the matching exit code."""
    reference = oracle_solve(graph, g)
    for variant in variants:
        flags = VariantFlags.named(variant, b=b)
        got = solve_fn(graph, g, flags, threads=threads).triples()
        if got == reference:
            continue
        disagreements = sorted(
            reference.symmetric_difference(got),
            key=lambda t: (t[0].name(), t[1], t[2]),
        )
        sym, i, j = disagreements[0]
        in_oracle = (sym, i, j) in reference
        out.write(
            f"divergence: nonterminal={sym.name()} "
            f"pair=({graph.vertex_names[i]}, {graph.vertex_names[j]}) "
            f"oracle={'present' if in_oracle else 'absent'} "
            f"{variant}={'absent' if in_oracle else 'present'}\n"
        )
        return EXIT_DIVERGENCE
    out.write(f"check ok: {len(reference)} triples, variants: {', '.join(variants)}\n")
    return EXIT_OK


def _cmd_check(args) -> int:
    g, _ = _load_grammar(args)
    graph, _ = _load_graph(args, g)
    if graph.vertex_count > args.oracle_limit:
        raise CliInputError(
            f"instance has {graph.vertex_count} vertices, above the oracle guard "
            f"of {args.oracle_limit}; raise --oracle-limit to force"
        )
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    for v in variants:
        VariantFlags.named(v, b=args.b)  # reject unknown names before work
    return run_check(graph, g, variants, b=args.b, threads=args.threads)


def _cmd_bench(args) -> int:
    g, grammar_id = _load_grammar(args)
    graph, graph_id = _load_graph(args, g)
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    for v in variants:
        VariantFlags.named(v, b=args.b)
    records = []
    timed_out = False
    for variant in variants:
        flags = VariantFlags.named(variant, b=args.b)
        walls: list[float] = []
        result = None
        status = "ok"
        for _ in range(args.reps):
            deadline = time.monotonic() + args.timeout_secs
            t0 = time.perf_counter()
            try:
                result = solve(graph, g, flags, threads=args.threads, deadline=deadline)
            except SolveTimeout:
                status = "oot"
                timed_out = True
                break
            walls.append(time.perf_counter() - t0)
        if status == "oot" or result is None:
            records.append(
                f"variant={variant}\ngrammar={grammar_id}\ngraph={graph_id}\n"
                f"status=oot\ntimeout_secs={args.timeout_secs}\n"
            )
            continue
        mean = statistics.fmean(walls)
        std = f"{statistics.stdev(walls):.6f}" if len(walls) > 1 else "n/a"
        extra = [
            f"status=ok",
            f"reps={len(walls)}",
            f"mean_seconds={mean:.6f}",
            f"std_seconds={std}",
        ]
        records.append(
            _report_record(
                variant, grammar_id, graph_id, flags, args.threads, result, mean, extra
            )
        )
    _write(args.report, "\n".join(records), sys.stdout)
    return EXIT_TIMEOUT if timed_out else EXIT_OK


# ---------------------------------------------------------------------------
# argument wiring


def _add_common(p: argparse.ArgumentParser, with_variant: bool) -> None:
    p.add_argument("--graph", required=True, help="triple file, or chain(N) / grid(N)")
    p.add_argument("--grammar", help="grammar file")
    p.add_argument("--preset", help="built-in grammar name")
    if with_variant:
        p.add_argument("--variant", default="ma1234", choices=VARIANT_NAMES)
    p.add_argument("--b", type=int, default=10, help="forest growth factor (default 10)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--index-separator", default="_")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cflr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve one instance and print result pairs")
    _add_common(ps, with_variant=True)
    ps.add_argument("--nonterminal", help="symbol to print pairs for (default: start)")
    ps.add_argument("--output", help="pairs file ('-' or omit for stdout)")
    ps.add_argument("--report", help="run report file ('-' for stdout; default stderr)")
    ps.add_argument("--timeout-secs", type=float, default=None)
    ps.set_defaults(fn=_cmd_solve)

    pc = sub.add_parser("check", help="compare variants against the brute-force oracle")
    _add_common(pc, with_variant=False)
    pc.add_argument("--variants", default="ma,ma1,ma14,ma1234")
    pc.add_argument(
        "--oracle-limit",
        type=int,
        default=500,
        help="refuse instances with more vertices than this (default 500)",
    )
    pc.set_defaults(fn=_cmd_check, variant=None)

    pb = sub.add_parser("bench", help="time variants over repeated runs")
    _add_common(pb, with_variant=False)
    pb.add_argument("--variants", default="ma,ma1,ma14,ma1234")
    pb.add_argument("--reps", type=int, default=5)
    pb.add_argument("--timeout-secs", type=float, default=600.0)
    pb.add_argument("--report", help="report stream file (default stdout)")
    pb.set_defaults(fn=_cmd_bench, variant=None)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliInputError as exc:
        print(f"cflr: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (GrammarError, GraphFormatError) as exc:
        print(f"cflr: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolveTimeout:
        print("cflr: timed out", file=sys.stderr)
        return EXIT_TIMEOUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
