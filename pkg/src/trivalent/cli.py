"""Command-line front end.

Exit codes: 0 success or a true answer, 1 a definitive negative (invalid
graph, failed verification, unsaturated-but-complete closure), 2 an
inconclusive oracle run (budget exhausted), 3 usage or parse errors.
All reports are stable line-oriented text.
"""

from __future__ import annotations

import argparse
import sys

from trivalent.autos import (
    AutomorphismError,
    automorphism_group,
    format_automorphism,
    orbit_report,
    order,
    parse_automorphism,
)
from trivalent.certs import format_certificate, parse_certificate, verify_certificate
from trivalent.decomp import decompose
from trivalent.graphs import (
    GraphError,
    ParseError,
    enumerate_iso_classes,
    format_graph,
    graph_digest,
    parse_graph,
    validate,
)
from trivalent.moves import (
    MoveError,
    NotInvariant,
    apply_fmove,
    parse_fmove,
    transport,
)
from trivalent.oracle import closure_E, move_graph_components

EXIT_OK = 0
EXIT_NO = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 3


def _read(path):
    try:
        with open(path) as handle:
            return handle.read()
    except OSError as exc:
        raise ParseError("cannot read %s: %s" % (path, exc))


def _write_or_print(text, out):
    if out:
        with open(out, "w") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _load_graph(path):
    graph = parse_graph(_read(path))
    report = validate(graph)
    if not report:
        raise GraphError("; ".join(report.problems))
    return graph


def cmd_validate(args):
    graph = parse_graph(_read(args.graph))
    report = validate(graph)
    if report:
        print("valid g=%d b=%d edges=%d class=%s" % (graph.g, graph.b, graph.n_edges(), graph_digest(graph)))
        return EXIT_OK
    for problem in report:
        print("invalid: %s" % problem)
    return EXIT_NO


def cmd_enumerate(args):
    classes = enumerate_iso_classes(args.g, args.b, args.edge_cap)
    lines = []
    for i, graph in enumerate(classes):
        lines.append("# class %d %s" % (i, graph_digest(graph)))
        lines.append(format_graph(graph).rstrip("\n"))
        lines.append("")
    lines.append("classes %d" % len(classes))
    _write_or_print("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_aut(args):
    graph = _load_graph(args.graph)
    group = automorphism_group(graph)
    if args.pick is not None:
        if not 0 <= args.pick < len(group):
            raise ParseError("--pick out of range 0..%d" % (len(group) - 1))
        _write_or_print(format_automorphism(group[args.pick]), args.output)
        return EXIT_OK
    lines = ["aut-count %d" % len(group)]
    for i, phi in enumerate(group):
        lines.append("aut %d order=%d perm=%s" % (i, order(phi), ",".join(map(str, phi.perm))))
    _write_or_print("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_orbits(args):
    graph = _load_graph(args.graph)
    phi = parse_automorphism(_read(args.aut), graph)
    report = orbit_report(phi)
    lines = ["ord %d" % report.ord_phi]
    lines.append("edge-order-set %s" % ",".join(map(str, report.edge_order_set)))
    for cell in graph.cells:
        lines.append("vertex %s order=%d" % ("-".join(map(str, cell)), report.vertex_orders[cell]))
    for e in graph.edges():
        lines.append("edge %d:%d order=%d" % (e[0], e[1], report.edge_orders[e]))
    _write_or_print("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_fmove(args):
    graph = _load_graph(args.graph)
    spec = parse_fmove(_read(args.move), graph)
    result = apply_fmove(graph, spec)
    _write_or_print(format_graph(result.graph), args.output)
    return EXIT_OK


def cmd_transport(args):
    graph = _load_graph(args.graph)
    phi = parse_automorphism(_read(args.aut), graph)
    spec = parse_fmove(_read(args.move), graph)
    moved = transport(phi, spec)
    if isinstance(moved, NotInvariant):
        print("not-invariant: %s" % moved.reason)
        return EXIT_NO
    _write_or_print(format_automorphism(moved), args.output)
    return EXIT_OK


def cmd_decompose(args):
    graph = _load_graph(args.graph)
    phi = parse_automorphism(_read(args.aut), graph)
    cert = decompose(phi)
    _write_or_print(format_certificate(cert), args.output)
    return EXIT_OK


def cmd_verify(args):
    graph = _load_graph(args.graph)
    phi = parse_automorphism(_read(args.aut), graph)
    cert = parse_certificate(_read(args.cert), [graph])
    ok, diag = verify_certificate(cert, phi)
    print("verified" if ok else "rejected: %s" % diag)
    return EXIT_OK if ok else EXIT_NO


def cmd_oracle_closure(args):
    report = closure_E(args.g, args.b, budget=args.budget, max_tree_ends=args.max_tree_ends)
    for line in report.summary_lines():
        print(line)
    if not report.saturated:
        return EXIT_INCONCLUSIVE
    return EXIT_OK if report.is_full() else EXIT_NO


def cmd_oracle_components(args):
    from trivalent.graphs import code_digest

    components = move_graph_components(args.g, args.b)
    for i, comp in enumerate(components):
        codes = " ".join(code_digest(c) for c in comp)
        print("component %d size=%d classes %s" % (i, len(comp), codes))
    print("components %d" % len(components))
    return EXIT_OK if len(components) == 1 else EXIT_NO


def build_parser():
    parser = argparse.ArgumentParser(
        prog="trivalent",
        description="F-moves and switch decompositions on uni/trivalent graphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, *specs):
        p = sub.add_parser(name)
        for spec in specs:
            flags, opts = spec
            p.add_argument(*flags, **opts)
        p.add_argument("--jobs", type=int, default=1, help="accepted for compatibility")
        p.set_defaults(fn=fn)
        return p

    graph_arg = (("graph",), {"help": "graph file"})
    aut_arg = (("aut",), {"help": "automorphism file"})
    out_arg = (("-o", "--output"), {"default": None, "help": "write the report here"})
    g_arg = (("--g",), {"type": int, "required": True})
    b_arg = (("--b",), {"type": int, "required": True})

    add("validate", cmd_validate, graph_arg)
    add(
        "enumerate",
        cmd_enumerate,
        g_arg,
        b_arg,
        (("--edge-cap",), {"type": int, "default": 12}),
        out_arg,
    )
    add(
        "aut",
        cmd_aut,
        graph_arg,
        (("--pick",), {"type": int, "default": None, "help": "write one automorphism"}),
        out_arg,
    )
    add("orbits", cmd_orbits, graph_arg, aut_arg, out_arg)
    add("fmove", cmd_fmove, graph_arg, (("move",), {"help": "move file"}), out_arg)
    add(
        "transport",
        cmd_transport,
        graph_arg,
        aut_arg,
        (("move",), {"help": "move file"}),
        out_arg,
    )
    add("decompose", cmd_decompose, graph_arg, aut_arg, out_arg)
    add("verify", cmd_verify, graph_arg, aut_arg, (("cert",), {"help": "certificate file"}))
    add(
        "oracle-closure",
        cmd_oracle_closure,
        g_arg,
        b_arg,
        (("--budget",), {"type": int, "default": 20000}),
        (("--max-tree-ends",), {"type": int, "default": 6}),
    )
    add("oracle-components", cmd_oracle_components, g_arg, b_arg)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except (ParseError, MoveError, AutomorphismError, GraphError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
