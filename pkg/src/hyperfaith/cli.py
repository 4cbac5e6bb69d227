"""
Command-line interface.

    hyperfaith gamma TABLE
    hyperfaith faithful TABLE [--tol 1e-10]
    hyperfaith strong TABLE --hypergraph ABC,ABD --lambda 1
    hyperfaith search COUNTS [--alpha 0.05] [--resample N --seed S]
    hyperfaith lambda-star --n N [--alpha A] [--epsilon E] --orders 1,2,3
    hyperfaith volume {nu,decomposable,chain,two-by-two,projected,bound} ...

Run any subcommand with --help for its options and formats.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .fit import FitConfig
from .hypergraph import Hypergraph, normalize_generating_class
from .inference import (
    backward_select,
    format_report,
    lambda_star,
    strong_faithfulness_check,
)
from .loglin import DEFAULT_TOL, faithful_hypergraph, interaction_vector
from .table import CountTable, JointDistribution, TableFormatError, format_float, read_table
from .volumes import (
    CURVE_HEADER,
    DEFAULT_SAMPLES,
    Method,
    VolumeEstimate,
    chain_statistic,
    curve,
    curve_csv,
    nu1_closed,
    nu_h_statistic,
    projected_statistic,
    two_by_two_statistic,
    unfaithful_proportion_decomposable,
    volume_lower_bound,
)

TABLE_HELP = """\
TABLE is a CSV file in one of two layouts:
  (a) a header with one column per variable (levels 0/1) and a 'count'
      column, then one row per cell in any order; absent cells count 0;
  (b) 2^K numbers in lexicographic cell order (last variable fastest),
      separated by commas or newlines, optionally under a 'count' header.
Values may be counts or probabilities; they are normalized."""


class CliError(Exception):
    pass


def _load_distribution(path: str, smoothing: bool) -> JointDistribution:
    values, labels = read_table(path)
    if smoothing:
        values = values + 0.5
    if np.any(values == 0):
        from .table import cell_label

        zero = int(np.flatnonzero(values == 0)[0])
        raise CliError(f"zero cell {cell_label(zero, len(labels))} (use --smoothing)")
    return JointDistribution.from_weights(values, labels)


def _load_counts(path: str) -> CountTable:
    values, labels = read_table(path)
    if np.any(values != np.round(values)):
        raise CliError("search needs integer counts")
    return CountTable(values.astype(np.int64), labels)


def _parse_hypergraph(text: str, vertices: Sequence[str]) -> Hypergraph:
    parts = [s.strip() for s in text.replace(";", ",").split(",") if s.strip()]
    if all(len(v) == 1 for v in vertices):
        return normalize_generating_class(parts, vertices)
    return normalize_generating_class([p.split() for p in parts], vertices)


def _parse_ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise CliError(f"expected comma-separated integers, got {text!r}") from None


def _parse_lambdas(args) -> list[float]:
    if args.lambdas:
        text = args.lambdas
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            n = int(round((stop - start) / step))
            return [round(start + i * step, 12) for i in range(n + 1)]
        return [float(x) for x in text.split(",") if x.strip()]
    if args.lam is None:
        raise CliError("give --lambda or --lambdas")
    return [args.lam]


def _emit(args, text: str) -> None:
    if args.output and args.output != "-":
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _curve_out(args, lams, ests: list[VolumeEstimate]) -> str:
    if args.format == "json":
        rows = [dict(zip(CURVE_HEADER, e.row(lam))) for lam, e in zip(lams, ests)]
        return json.dumps(rows) + "\n"
    return curve_csv(lams, ests)


# --------------------------------------------------------------------------
# subcommands


def cmd_gamma(args) -> str:
    iv = interaction_vector(_load_distribution(args.table, args.smoothing))
    if args.format == "json":
        return json.dumps({iv.subset_label(s): format_float(g) for s, g in iv.items()}) + "\n"
    return iv.to_csv()


def cmd_faithful(args) -> str:
    h = faithful_hypergraph(_load_distribution(args.table, args.smoothing), args.tol)
    if args.with_vertices:
        return h.to_json() + "\n"
    return json.dumps(h.edge_labels(), separators=(",", ":")) + "\n"


def cmd_strong(args) -> str:
    p = _load_distribution(args.table, args.smoothing)
    h = _parse_hypergraph(args.hypergraph, p.labels)
    return format_report(strong_faithfulness_check(p, h, args.lam)) + "\n"


def cmd_search(args) -> str:
    counts = _load_counts(args.counts)
    if args.resample:
        rng = np.random.default_rng(args.seed)
        w = counts.n / counts.n.sum()
        counts = CountTable(rng.multinomial(args.resample, w), counts.labels)
    cfg = FitConfig(args.tolerance, args.max_iterations)
    trace = backward_select(counts, args.alpha, cfg, args.smoothing)
    if not trace.completed:
        sys.stderr.write(f"search aborted: {trace.message}\n")
    return trace.to_jsonl()


def cmd_lambda_star(args) -> str:
    orders = _parse_ints(args.orders)
    lines = ["order,multiplier,lambda_star"]
    for h in orders:
        lines.append(
            f"{h},{format_float(2 ** ((h + 1) / 2))},"
            f"{format_float(lambda_star(args.n, args.alpha, args.epsilon, [h]))}"
        )
    lines.append(
        f"min,{format_float(2 ** ((min(orders) + 1) / 2))},"
        f"{format_float(lambda_star(args.n, args.alpha, args.epsilon, orders))}"
    )
    return "\n".join(lines) + "\n"


def cmd_volume(args) -> str:
    lams = _parse_lambdas(args)
    kind = args.kind
    if kind == "nu":
        if args.h == 1 and not args.monte_carlo:
            ests = [VolumeEstimate(nu1_closed(l), 0.0, 0, None, Method.CLOSED_FORM) for l in lams]
        else:
            stat = nu_h_statistic(args.h, args.samples, args.seed, args.threads)
            ests = curve(stat, lams, args.seed)
    elif kind == "decomposable":
        spec = _hypergraph_or_orders(args)
        ests = [
            unfaithful_proportion_decomposable(spec, l, args.samples, args.seed, args.threads)
            for l in lams
        ]
    elif kind == "chain":
        stat = chain_statistic(args.length, args.samples, args.seed, args.threads)
        ests = curve(stat, lams, args.seed)
    elif kind == "two-by-two":
        stat = two_by_two_statistic(args.measure, args.samples, args.seed, args.threads)
        ests = curve(stat, lams, args.seed)
    elif kind == "projected":
        h = _parse_hypergraph(args.hypergraph, _vertices(args.k))
        cfg = FitConfig(args.tolerance, args.max_iterations)
        stat = projected_statistic(h, args.samples, args.seed, cfg, args.threads)
        ests = curve(stat, lams, args.seed)
    elif kind == "bound":
        spec = _hypergraph_or_orders(args)
        orders = spec.orders() if isinstance(spec, Hypergraph) else spec
        ests = [
            VolumeEstimate(volume_lower_bound(orders, l), 0.0, 0, None, Method.LOWER_BOUND)
            for l in lams
        ]
    else:  # pragma: no cover - argparse restricts choices
        raise CliError(f"unknown volume kind {kind}")
    return _curve_out(args, lams, ests)


def _vertices(k: int) -> tuple[str, ...]:
    from .table import default_labels

    return default_labels(k)


def _hypergraph_or_orders(args):
    if args.hypergraph:
        letters = sorted(set(args.hypergraph) - set(",; "))
        k = args.k or (max(ord(c) - ord("A") for c in letters) + 1)
        return _parse_hypergraph(args.hypergraph, _vertices(k))
    if args.orders:
        return _parse_ints(args.orders)
    raise CliError("give --hypergraph or --orders")


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperfaith",
        description="Learn hypergraphs of binary contingency tables and compute "
        "strong-faithfulness volumes.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=TABLE_HELP,
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help, epilog=None):
        p = sub.add_parser(
            name, help=help, description=help, epilog=epilog,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        p.add_argument("-o", "--output", help="write here instead of stdout")
        p.set_defaults(func=func)
        return p

    p = add("gamma", cmd_gamma, "emit all corner interaction parameters",
            TABLE_HELP + "\n\nOutput CSV columns: subset (labels, empty for the "
            "intercept), gamma (natural log scale).  Rows follow subset size, then "
            "lexicographic order.")
    p.add_argument("table")
    p.add_argument("--smoothing", action="store_true", help="add 0.5 to every cell")
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = add("faithful", cmd_faithful, "emit the hypergraph the table is faithful to",
            TABLE_HELP + '\n\nOutput: compact JSON list of hyperedges, each a list of labels,\n'
            'e.g. [["A","B","C"],["A","B","D"]]; [] when every interaction vanishes.\n'
            'With --with-vertices: {"vertices": [...], "hyperedges": [[...], ...]}.')
    p.add_argument("table")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL,
                   help="|gamma| at or below this counts as zero (default 1e-10)")
    p.add_argument("--smoothing", action="store_true")
    p.add_argument("--with-vertices", action="store_true",
                   help="emit an object that also lists the vertices")

    p = add("strong", cmd_strong, "check lambda-strong faithfulness to a hypergraph",
            TABLE_HELP + "\n\nOutput JSON: lambda, gammas per hyperedge, "
            "min_abs_gamma, satisfied.")
    p.add_argument("table")
    p.add_argument("--hypergraph", required=True, help="hyperedges, e.g. ABC,ABD")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--smoothing", action="store_true")

    p = add("search", cmd_search, "backward selection by one-hyperedge Wald tests",
            TABLE_HELP + "\n\nOutput JSON lines: one per test with model, tested, "
            "gamma_hat, std_error, statistic, p_value, action (keep|remove|defer); "
            "a last line with final, completed, message.")
    p.add_argument("counts")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--resample", type=int, metavar="N",
                   help="first draw a multinomial sample of size N from the table")
    p.add_argument("--seed", type=int, default=0, help="seed for --resample")
    p.add_argument("--smoothing", action="store_true")
    p.add_argument("--tolerance", type=float, default=1e-10, help="IPF tolerance")
    p.add_argument("--max-iterations", type=int, default=10_000)

    p = add("lambda-star", cmd_lambda_star, "thresholds z_{1-a/2} N^{-(1/2-eps)} 2^{(h+1)/2}",
            "Output CSV columns: order, multiplier, lambda_star; the last row "
            "('min') uses the smallest order.")
    p.add_argument("--n", type=int, required=True, help="sample size N")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--orders", default="1", help="comma-separated interaction orders")

    p = add("volume", cmd_volume, "proportions of strong-unfaithful distributions",
            "kinds:\n"
            "  nu            single hyperedge of order --h (closed form for h=1)\n"
            "  decomposable  1 - prod(1 - nu_h) for --hypergraph or --orders\n"
            "  chain         Monte Carlo over a first-order chain of --length\n"
            "  two-by-two    2x2 table under --measure phi1|phi2|phi3\n"
            "  projected     KL projection of simplex draws onto --hypergraph (--k)\n"
            "  bound         lower bound max_t nu1(l/2^(h-1))^(2^(h-1))\n\n"
            "Output CSV columns: lambda, estimate, std_error, n_samples, method.")
    p.add_argument("kind", choices=("nu", "decomposable", "chain", "two-by-two", "projected", "bound"))
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--lambdas", help="grid 'start:stop:step' or comma list")
    p.add_argument("--h", type=int, default=1)
    p.add_argument("--monte-carlo", action="store_true", help="simulate nu_1 too")
    p.add_argument("--hypergraph")
    p.add_argument("--orders")
    p.add_argument("--k", type=int)
    p.add_argument("--length", type=int, default=3)
    p.add_argument("--measure", choices=("phi1", "phi2", "phi3"), default="phi1")
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: all cores); results do not depend on it")
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.add_argument("--max-iterations", type=int, default=10_000)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "volume" and args.kind == "projected" and not args.k:
            if not args.hypergraph:
                raise CliError("projected needs --hypergraph")
            letters = sorted(set(args.hypergraph) - set(",; "))
            args.k = max(ord(c) - ord("A") for c in letters) + 1
        text = args.func(args)
    except (CliError, TableFormatError, ValueError, OSError) as exc:
        sys.stderr.write(f"hyperfaith {args.command}: error: {exc}\n")
        return 1
    _emit(args, text)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
