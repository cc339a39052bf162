"""Replayable derivation certificates: switch leaves, compositions, and
transports across F-moves.

A certificate evaluates bottom-up to a concrete automorphism of a concrete
graph.  Every node re-derives its own claim during evaluation (a switch
leaf re-runs the switch construction, a transport node re-checks the
invariance of its move), so a verified certificate is a machine-checked
membership proof in the switch-generated closure.
"""

from __future__ import annotations

from trivalent.autos import (
    Automorphism,
    AutomorphismError,
    compose,
    identity,
    make_switch,
    order,
)
from trivalent.graphs import Graph, ParseError, graph_digest
from trivalent.moves import (
    FMoveSpec,
    MoveError,
    NotInvariant,
    Replacement,
    apply_fmove,
    read_sexpr,
    tokenize_sexpr,
    transport,
)


class CertificateError(ValueError):
    pass


class Certificate:
    """Base node; subclasses implement _evaluate()."""

    __slots__ = ("graph",)

    def __init__(self, graph: Graph):
        self.graph = graph

    def evaluate(self) -> Automorphism:
        phi = self._evaluate()
        if phi.graph != self.graph:
            raise CertificateError("node evaluated on the wrong graph")
        return phi

    def nodes(self):
        yield self


class IdentityLeaf(Certificate):
    __slots__ = ()

    def _evaluate(self):
        return identity(self.graph)


class SwitchLeaf(Certificate):
    __slots__ = ("e1", "e2")

    def __init__(self, graph, e1, e2):
        super().__init__(graph)
        self.e1 = tuple(sorted(e1))
        self.e2 = tuple(sorted(e2))

    def _evaluate(self):
        try:
            return make_switch(self.graph, self.e1, self.e2)
        except AutomorphismError as exc:
            raise CertificateError("switch leaf is not a genuine switch: %s" % exc)


class ComposeNode(Certificate):
    """Composition of children; the rightmost child applies first."""

    __slots__ = ("children",)

    def __init__(self, graph, children):
        super().__init__(graph)
        self.children = tuple(children)
        for c in self.children:
            if c.graph != graph:
                raise CertificateError("composition mixes graphs")

    def _evaluate(self):
        result = identity(self.graph)
        for child in reversed(self.children):
            result = compose(child.evaluate(), result)
        return result

    def nodes(self):
        yield self
        for c in self.children:
            yield from c.nodes()


class TransportNode(Certificate):
    """This node's automorphism transports to the child's across `move`.

    `move` is an F-move on this node's graph whose result is the child's
    graph; evaluation carries the child's automorphism back across the
    inverse move, re-checking invariance and order preservation.
    """

    __slots__ = ("move", "child")

    def __init__(self, graph, move: FMoveSpec, child: Certificate):
        super().__init__(graph)
        self.move = move
        self.child = child

    def _evaluate(self):
        try:
            result = apply_fmove(self.graph, self.move)
        except MoveError as exc:
            raise CertificateError("transport move does not apply: %s" % exc)
        if result.graph != self.child.graph:
            raise CertificateError("transport move does not reach the child graph")
        psi = self.child.evaluate()
        phi = transport(psi, result.inverse)
        if isinstance(phi, NotInvariant):
            raise CertificateError("move is not invariant for the child: %s" % phi.reason)
        if order(phi) != order(psi):
            raise CertificateError("transport changed the order")
        return phi

    def nodes(self):
        yield self
        yield from self.child.nodes()


def verify_certificate(cert: Certificate, phi: Automorphism):
    """(ok, diagnostic): ok iff the certificate evaluates exactly to phi."""
    try:
        value = cert.evaluate()
    except CertificateError as exc:
        return False, str(exc)
    if value.graph != phi.graph:
        return False, "certificate proves an automorphism of a different graph"
    if value != phi:
        return False, "certificate evaluates to a different automorphism"
    return True, "ok"


# -- text format ---------------------------------------------------------------
#
# S-expressions, one node kind per head symbol.  Each node carries its
# graph digest; the digests let a reader check a certificate file against
# the graph file it came with.


def _fmt_edge(e):
    return "%d:%d" % tuple(sorted(e))


def _fmt_move(spec: FMoveSpec):
    parts = []
    for rep in spec:
        edges = " ".join(_fmt_edge(e) for e in sorted(rep.edges))
        splits = []
        for s in sorted(rep.target, key=lambda s: sorted(tuple(sorted(side)) for side in s)):
            sides = sorted((tuple(sorted(side)) for side in s))
            splits.append(
                "(split (%s) (%s))"
                % (" ".join(map(str, sides[0])), " ".join(map(str, sides[1])))
            )
        parts.append("(tree (edges %s) %s)" % (edges, " ".join(splits)))
    return "(move %s)" % " ".join(parts)


def format_certificate(cert: Certificate) -> str:
    def fmt(node, indent):
        pad = "  " * indent
        g = graph_digest(node.graph)
        if isinstance(node, IdentityLeaf):
            return "%s(identity :graph %s)" % (pad, g)
        if isinstance(node, SwitchLeaf):
            return "%s(switch :graph %s :aut %s :edges %s %s)" % (
                pad,
                g,
                node.evaluate().digest(),
                _fmt_edge(node.e1),
                _fmt_edge(node.e2),
            )
        if isinstance(node, ComposeNode):
            inner = "\n".join(fmt(c, indent + 1) for c in node.children)
            return "%s(compose :graph %s :aut %s\n%s)" % (
                pad,
                g,
                node.evaluate().digest(),
                inner,
            )
        if isinstance(node, TransportNode):
            return "%s(transport :graph %s :aut %s\n%s  %s\n%s)" % (
                pad,
                g,
                node.evaluate().digest(),
                pad,
                _fmt_move(node.move),
                fmt(node.child, indent + 1),
            )
        raise CertificateError("unknown node type %r" % type(node))

    return fmt(cert, 0) + "\n"


def _parse_edge(tok):
    a, b = tok.split(":")
    return (int(a), int(b))


def _graph_lookup(graphs):
    return {graph_digest(g): g for g in graphs}


def parse_certificate(text: str, graphs) -> Certificate:
    """Read a certificate; `graphs` supplies every graph digest it uses.

    Graphs reached through transports are reconstructed by applying the
    moves, so only the root graph normally needs to be supplied.
    """
    tokens = tokenize_sexpr(text)
    if not tokens:
        raise ParseError("empty certificate")
    sexpr, pos = read_sexpr(tokens, 0)
    if pos != len(tokens):
        raise ParseError("trailing tokens after the certificate")
    known = _graph_lookup(graphs)

    def keywords(items):
        opts = {}
        rest = []
        i = 0
        while i < len(items):
            if isinstance(items[i], str) and items[i].startswith(":"):
                opts[items[i]] = items[i + 1]
                i += 2
            else:
                rest.append(items[i])
                i += 1
        return opts, rest

    def find_graph(opts):
        dig = opts.get(":graph")
        if dig is None:
            raise ParseError("node without :graph digest")
        if dig not in known:
            raise ParseError("certificate references unknown graph %s" % dig)
        return known[dig]

    def parse_move(items, graph):
        if not items or items[0] != "move":
            raise ParseError("transport node without a move")
        reps = []
        for tree in items[1:]:
            if tree[0] != "tree":
                raise ParseError("move entries must be trees")
            edges = []
            splits = []
            for part in tree[1:]:
                if part[0] == "edges":
                    edges = [_parse_edge(t) for t in part[1:]]
                elif part[0] == "split":
                    sides = [frozenset(int(t) for t in side) for side in part[1:]]
                    if len(sides) != 2:
                        raise ParseError("split needs two sides")
                    splits.append(frozenset(sides))
                else:
                    raise ParseError("unknown tree part %r" % part[0])
            cells = {graph.vertex_of(d) for e in edges for d in e}
            reps.append(Replacement(cells, edges, splits))
        return FMoveSpec(reps)

    def build(sx):
        if not isinstance(sx, list) or not sx:
            raise ParseError("malformed certificate node")
        head = sx[0]
        opts, rest = keywords(sx[1:])
        graph = find_graph(opts)
        if head == "identity":
            return IdentityLeaf(graph)
        if head == "switch":
            if ":edges" not in opts or len(rest) != 1:
                raise ParseError("switch needs :edges <e> <e>")
            return SwitchLeaf(graph, _parse_edge(opts[":edges"]), _parse_edge(rest[0]))
        if head == "compose":
            return ComposeNode(graph, [build(c) for c in rest])
        if head == "transport":
            if len(rest) != 2:
                raise ParseError("transport needs a move and one child")
            move = parse_move(rest[0], graph)
            result = apply_fmove(graph, move)
            known[graph_digest(result.graph)] = result.graph
            child = build(rest[1])
            return TransportNode(graph, move, child)
        raise ParseError("unknown certificate node %r" % head)

    return build(sexpr)
