"""Dart-based uni/trivalent multigraphs.

A graph is stored as a set of darts (half-edges) 0..2E-1 together with a
fixed-point-free involution pairing the two darts of each edge, and a
partition of the darts into vertex cells of size 1 (free end) or 3
(trivalent vertex).  Loops and parallel edges are unambiguous in this
model, and automorphisms that reverse an edge are representable.
"""

from __future__ import annotations

import hashlib
from functools import lru_cache

FORBIDDEN_GB = frozenset({(0, 0), (0, 1), (0, 2), (1, 0)})

# An edge is the sorted pair of its two darts; a vertex is its sorted cell.
EdgeRef = tuple
VertexRef = tuple


class GraphError(ValueError):
    """Raised for malformed graphs or out-of-contract arguments."""


class Graph:
    """Immutable connected uni/trivalent multigraph with genus g and b free ends.

    `theta[d]` is the other dart of d's edge; `cells` lists the vertex
    cells as sorted tuples.  Construction freezes and sorts everything so
    equal graphs compare and hash equal.
    """

    __slots__ = ("n_darts", "theta", "cells", "g", "b", "_cell_of", "_hash")

    def __init__(self, theta, cells, g, b, _skip_checks=False):
        theta = tuple(theta)
        cells = tuple(sorted(tuple(sorted(c)) for c in cells))
        self.n_darts = len(theta)
        self.theta = theta
        self.cells = cells
        self.g = int(g)
        self.b = int(b)
        cell_of = {}
        for cell in cells:
            for d in cell:
                if d in cell_of:
                    raise GraphError("dart %d appears in two cells" % d)
                cell_of[d] = cell
        self._cell_of = cell_of
        self._hash = hash((self.theta, self.cells, self.g, self.b))
        if not _skip_checks:
            self._check_basic()

    def _check_basic(self):
        n = self.n_darts
        if n % 2 != 0:
            raise GraphError("odd number of darts")
        seen = set()
        for d in range(n):
            if d >= len(self.theta):
                raise GraphError("theta not defined on dart %d" % d)
            e = self.theta[d]
            if not 0 <= e < n or e == d or self.theta[e] != d:
                raise GraphError("theta is not a fixed-point-free involution")
            seen.add(d)
        if set(self._cell_of) != set(range(n)):
            raise GraphError("vertex cells do not partition the darts")
        for cell in self.cells:
            if len(cell) not in (1, 3):
                raise GraphError("vertex cell %r has size %d" % (cell, len(cell)))

    def __eq__(self, other):
        return (
            isinstance(other, Graph)
            and self.theta == other.theta
            and self.cells == other.cells
            and self.g == other.g
            and self.b == other.b
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return "Graph(g=%d, b=%d, edges=%d)" % (self.g, self.b, self.n_edges())

    # -- basic queries ---------------------------------------------------

    def darts(self):
        return range(self.n_darts)

    def vertex_of(self, dart) -> VertexRef:
        return self._cell_of[dart]

    def edge_of(self, dart) -> EdgeRef:
        e = self.theta[dart]
        return (dart, e) if dart < e else (e, dart)

    def edges(self):
        """Sorted list of all edges as dart pairs."""
        return [(d, self.theta[d]) for d in range(self.n_darts) if d < self.theta[d]]

    def n_edges(self):
        return self.n_darts // 2

    def vertices(self):
        return self.cells

    def ends(self, edge: EdgeRef):
        """The two (possibly equal) vertex cells at an edge."""
        return self.vertex_of(edge[0]), self.vertex_of(edge[1])

    def is_loop(self, edge: EdgeRef) -> bool:
        return self.vertex_of(edge[0]) == self.vertex_of(edge[1])

    def degree(self, vertex: VertexRef) -> int:
        return len(vertex)

    def trivalent_vertices(self):
        return [c for c in self.cells if len(c) == 3]

    def univalent_vertices(self):
        return [c for c in self.cells if len(c) == 1]

    def classify_edge(self, edge: EdgeRef) -> str:
        """'terminal' if exactly one end is a free end, else 'internal'."""
        edge = _as_edge(self, edge)
        v, w = self.ends(edge)
        univ = (len(v) == 1) + (len(w) == 1)
        if univ == 2:
            raise GraphError("edge %r joins two free ends" % (edge,))
        return "terminal" if univ == 1 else "internal"

    def is_connected(self) -> bool:
        if not self.cells:
            return False
        start = self.cells[0]
        seen = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for d in v:
                w = self.vertex_of(self.theta[d])
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self.cells)

    def other_edges_at(self, vertex: VertexRef, edge: EdgeRef):
        """Edges at `vertex` other than `edge`, one entry per incidence."""
        out = []
        for d in vertex:
            if self.edge_of(d) != edge:
                out.append(self.edge_of(d))
        return out


def _as_edge(graph: Graph, edge) -> EdgeRef:
    e = tuple(sorted(edge))
    if len(e) != 2 or e[1] != graph.theta[e[0]]:
        raise GraphError("%r is not an edge of this graph" % (edge,))
    return e


# -- validation ------------------------------------------------------------


class ValidationReport:
    """List of violated invariants; empty means the graph is admissible."""

    def __init__(self, problems):
        self.problems = list(problems)

    def __bool__(self):
        return not self.problems

    def __iter__(self):
        return iter(self.problems)

    def __repr__(self):
        return "ValidationReport(%r)" % (self.problems,)


def validate(graph: Graph) -> ValidationReport:
    """Check every membership condition for the class of (g, b) graphs."""
    return _validate_cached(graph)


@lru_cache(maxsize=None)
def _validate_cached(graph: Graph) -> ValidationReport:
    problems = []
    g, b = graph.g, graph.b
    if g < 0 or b < 0:
        problems.append("g and b must be nonnegative")
    if (g, b) in FORBIDDEN_GB:
        problems.append("(g,b)=(%d,%d) admits no graph" % (g, b))
    n_tri = len(graph.trivalent_vertices())
    n_uni = len(graph.univalent_vertices())
    n_edges = graph.n_edges()
    n_vertices = len(graph.cells)
    if n_tri == 0:
        problems.append("no trivalent vertex")
    if n_uni != b:
        problems.append("free ends: expected %d, found %d" % (b, n_uni))
    if n_tri != 2 * g - 2 + b:
        problems.append("trivalent vertices: expected %d, found %d" % (2 * g - 2 + b, n_tri))
    if n_edges != 3 * g - 3 + 2 * b:
        problems.append("edges: expected %d, found %d" % (3 * g - 3 + 2 * b, n_edges))
    if n_edges - n_vertices + 1 != g:
        problems.append("first Betti number %d != g" % (n_edges - n_vertices + 1))
    if not graph.is_connected():
        problems.append("not connected")
    for e in graph.edges():
        v, w = graph.ends(e)
        if len(v) == 1 and len(w) == 1:
            problems.append("edge %r joins two free ends" % (e,))
    return ValidationReport(problems)


def check_valid(graph: Graph) -> Graph:
    report = validate(graph)
    if not report:
        raise GraphError("invalid graph: " + "; ".join(report.problems))
    return graph


# -- canonical form ----------------------------------------------------------
#
# Isomorphism of dart structures is equivalent to isomorphism of the
# underlying vertex multigraphs (any incidence-preserving vertex/edge
# bijection lifts to darts, choosing arbitrarily on loops and parallel
# bundles).  So the canonical code is a canonical labeling of the vertex
# multigraph, found by backtracking over labelings seeded with iterated
# degree/loop refinement.


def _adjacency(graph: Graph):
    """(vertex list, loops per vertex, multiplicity matrix) of the quotient."""
    verts = list(graph.cells)
    index = {v: i for i, v in enumerate(verts)}
    n = len(verts)
    mult = [[0] * n for _ in range(n)]
    loops = [0] * n
    for e in graph.edges():
        v, w = graph.ends(e)
        if v == w:
            loops[index[v]] += 1
        else:
            mult[index[v]][index[w]] += 1
            mult[index[w]][index[v]] += 1
    return verts, loops, mult


def _refine_colors(n, loops, mult, degrees):
    colors = [(degrees[i], loops[i]) for i in range(n)]
    while True:
        sigs = []
        for i in range(n):
            neigh = sorted((mult[i][j], colors[j]) for j in range(n) if mult[i][j])
            sigs.append((colors[i], tuple(neigh)))
        order = sorted(set(sigs))
        new = [order.index(s) for s in sigs]
        if len(set(new)) == len(set(colors)) and all(
            (new[i] == new[j]) == (colors[i] == colors[j]) for i in range(n) for j in range(i)
        ):
            return new
        colors = new


def _canonical_labeling(graph: Graph):
    """Vertex order minimizing the adjacency code within refinement classes."""
    verts, loops, mult, colors = _refined_quotient(graph)
    n = len(verts)
    by_color = sorted(range(n), key=lambda i: (colors[i], i))
    best = {"code": None, "perm": None}

    def code_row(label, perm):
        i = perm[label]
        row = [mult[i][perm[k]] for k in range(label)]
        row.append(loops[i])
        return tuple(row)

    def extend(perm, partial):
        label = len(perm)
        if label == n:
            code = tuple(partial)
            if best["code"] is None or code < best["code"]:
                best["code"] = code
                best["perm"] = list(perm)
            return
        # candidates: unused vertices of the (forced) next color class
        used = set(perm)
        remaining_colors = sorted(colors[i] for i in range(n) if i not in used)
        want = remaining_colors[0]
        for i in by_color:
            if i in used or colors[i] != want:
                continue
            perm.append(i)
            row = code_row(label, perm)
            cand = partial + [row]
            key = tuple(cand)
            if best["code"] is None or key <= tuple(best["code"][: len(cand)]):
                extend(perm, cand)
            perm.pop()

    extend([], [])
    perm = best["perm"]
    ordered_colors = tuple(colors[i] for i in perm)
    code = (graph.g, graph.b, n, ordered_colors, best["code"])
    return code, [verts[i] for i in perm]


def _refined_quotient(graph: Graph):
    verts, loops, mult = _adjacency(graph)
    n = len(verts)
    degrees = [len(v) for v in verts]
    colors = _refine_colors(n, loops, mult, degrees)
    return verts, loops, mult, colors


@lru_cache(maxsize=None)
def _canonical_cached(graph: Graph):
    code, vertex_order = _canonical_labeling(graph)
    # Derive a deterministic dart relabeling from the vertex order: edges
    # sorted by endpoint labels (ties by original darts), edge k getting
    # darts 2k at its smaller-labeled endpoint.
    vlabel = {v: i for i, v in enumerate(vertex_order)}
    keyed = []
    for e in graph.edges():
        v, w = graph.ends(e)
        a, bb = sorted((vlabel[v], vlabel[w]))
        keyed.append((a, bb, e))
    keyed.sort()
    dart_map = {}
    for k, (a, bb, e) in enumerate(keyed):
        d0, d1 = e
        if vlabel[graph.vertex_of(d0)] <= vlabel[graph.vertex_of(d1)]:
            first, second = d0, d1
        else:
            first, second = d1, d0
        dart_map[first] = 2 * k
        dart_map[second] = 2 * k + 1
    return code, dart_map


def canonical_form(graph: Graph):
    """Canonical code; equal codes iff the graphs are isomorphic."""
    check_valid(graph)
    return _canonical_cached(graph)[0]


def canonical_dart_map(graph: Graph):
    """A fixed isomorphism (dart map) onto the canonical representative."""
    check_valid(graph)
    return dict(_canonical_cached(graph)[1])


def canonical_graph(graph: Graph):
    """The canonical representative itself (relabeled copy of `graph`)."""
    m = canonical_dart_map(graph)
    theta = [0] * graph.n_darts
    for d in range(graph.n_darts):
        theta[m[d]] = m[graph.theta[d]]
    cells = [tuple(sorted(m[d] for d in c)) for c in graph.cells]
    return Graph(theta, cells, graph.g, graph.b)


def code_digest(code) -> str:
    """Short stable digest of a canonical code, used in text formats."""
    return hashlib.sha256(repr(code).encode()).hexdigest()[:16]


def graph_digest(graph: Graph) -> str:
    return code_digest(canonical_form(graph))


def relabel(graph: Graph, dart_map) -> Graph:
    theta = [0] * graph.n_darts
    for d in range(graph.n_darts):
        theta[dart_map[d]] = dart_map[graph.theta[d]]
    cells = [tuple(sorted(dart_map[d] for d in c)) for c in graph.cells]
    return Graph(theta, cells, graph.g, graph.b)


def isomorphism(g1: Graph, g2: Graph):
    """A dart map g1 -> g2 if the graphs are isomorphic, else None."""
    if canonical_form(g1) != canonical_form(g2):
        return None
    m1 = canonical_dart_map(g1)
    m2 = canonical_dart_map(g2)
    inv2 = {v: k for k, v in m2.items()}
    return {d: inv2[m1[d]] for d in range(g1.n_darts)}


# -- enumeration -------------------------------------------------------------


def admissible(g: int, b: int) -> bool:
    return g >= 0 and b >= 0 and (g, b) not in FORBIDDEN_GB


DEFAULT_EDGE_CAP = 12


def enumerate_iso_classes(g: int, b: int, edge_cap: int = DEFAULT_EDGE_CAP):
    """One representative per isomorphism class, sorted by canonical code.

    Generation goes through all distributions of the b free ends over the
    2g-2+b trivalent vertices and all loop/multiplicity matrices on the
    trivalent core with matching degrees, then dedups by canonical form.
    """
    if not admissible(g, b):
        raise GraphError("(g,b)=(%d,%d) is not admissible" % (g, b))
    n_edges = 3 * g - 3 + 2 * b
    if n_edges > edge_cap:
        raise GraphError("3g-3+2b = %d exceeds the %d-edge cap" % (n_edges, edge_cap))
    t = 2 * g - 2 + b
    found = {}
    for leaf_counts in _compositions(b, t):
        core_degrees = [3 - leaf_counts[i] for i in range(t)]
        if any(d < 0 for d in core_degrees):
            continue
        for loops, mult in _core_matrices(core_degrees):
            graph = _assemble(g, b, leaf_counts, loops, mult)
            if graph is None or not graph.is_connected():
                continue
            code = canonical_form(graph)
            if code not in found:
                found[code] = canonical_graph(graph)
    return [found[c] for c in sorted(found)]


def _compositions(total, parts):
    """Weakly decreasing distributions only differ by vertex relabeling,
    but emit all of them; the canonical dedup absorbs the redundancy."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(min(total, 3) + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _core_matrices(degrees):
    """All loop vectors + symmetric multiplicity matrices with row sums
    2*loops[i] + sum(mult[i]) == degrees[i]."""
    t = len(degrees)

    def fill(i, loops, mult):
        if i == t:
            yield loops[:], [row[:] for row in mult]
            return
        used = 2 * loops[i] + sum(mult[i])
        need = degrees[i] - used
        if need < 0:
            return
        # place loops at i, then edges to j > i
        for li in range(need // 2 + 1):
            loops[i] += li
            rem = need - 2 * li
            for combo in _distribute(rem, t - i - 1):
                for j, c in enumerate(combo):
                    mult[i][i + 1 + j] += c
                    mult[i + 1 + j][i] += c
                yield from fill(i + 1, loops, mult)
                for j, c in enumerate(combo):
                    mult[i][i + 1 + j] -= c
                    mult[i + 1 + j][i] -= c
            loops[i] -= li

    loops0 = [0] * t
    mult0 = [[0] * t for _ in range(t)]
    for loops, mult in fill(0, loops0, mult0):
        yield loops, mult


def _distribute(total, slots):
    if slots == 0:
        if total == 0:
            yield ()
        return
    for first in range(total + 1):
        for rest in _distribute(total - first, slots - 1):
            yield (first,) + rest


def _assemble(g, b, leaf_counts, loops, mult):
    """Build the dart structure for one core matrix + leaf distribution."""
    t = len(leaf_counts)
    darts_at = [[] for _ in range(t)]
    leaf_cells = []
    theta = {}
    next_dart = 0

    def new_dart():
        nonlocal next_dart
        d = next_dart
        next_dart += 1
        return d

    for i in range(t):
        for _ in range(loops[i]):
            d1, d2 = new_dart(), new_dart()
            theta[d1], theta[d2] = d2, d1
            darts_at[i] += [d1, d2]
        for j in range(i + 1, t):
            for _ in range(mult[i][j]):
                d1, d2 = new_dart(), new_dart()
                theta[d1], theta[d2] = d2, d1
                darts_at[i].append(d1)
                darts_at[j].append(d2)
        for _ in range(leaf_counts[i]):
            d1, d2 = new_dart(), new_dart()
            theta[d1], theta[d2] = d2, d1
            darts_at[i].append(d1)
            leaf_cells.append((d2,))
    cells = [tuple(sorted(ds)) for ds in darts_at if ds] + leaf_cells
    for ds in darts_at:
        if len(ds) != 3:
            return None
    n = next_dart
    graph = Graph([theta[d] for d in range(n)], cells, g, b, _skip_checks=True)
    try:
        graph._check_basic()
    except GraphError:
        return None
    return graph


# -- reference graphs used throughout the tests and docs ---------------------


def tripod() -> Graph:
    """One trivalent vertex with three free ends ((g,b) = (0,3))."""
    theta = (1, 0, 3, 2, 5, 4)
    cells = [(0, 2, 4), (1,), (3,), (5,)]
    return Graph(theta, cells, 0, 3)


def theta_graph() -> Graph:
    """Two vertices joined by three parallel edges ((g,b) = (2,0))."""
    theta = (1, 0, 3, 2, 5, 4)
    cells = [(0, 2, 4), (1, 3, 5)]
    return Graph(theta, cells, 2, 0)


def dumbbell() -> Graph:
    """Two loops joined by a bridge ((g,b) = (2,0))."""
    theta = (1, 0, 3, 2, 5, 4)
    cells = [(0, 1, 4), (2, 3, 5)]
    return Graph(theta, cells, 2, 0)


def loop_with_tail() -> Graph:
    """A loop with a pendant terminal edge ((g,b) = (1,1))."""
    theta = (1, 0, 3, 2)
    cells = [(0, 1, 2), (3,)]
    return Graph(theta, cells, 1, 1)


# -- text format --------------------------------------------------------------
#
#   graph g=<int> b=<int>
#   edge <edge-id> <vertex-id> <vertex-id>
#   leaf <vertex-id>
#
# Edge k in file order owns darts 2k and 2k+1, dart 2k at the first listed
# endpoint.  '#' starts a comment.


class ParseError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__("line %s: %s" % (line, message) if line else message)


def parse_graph(text: str) -> Graph:
    g = b = None
    edge_rows = []
    declared_leaves = set()
    edge_ids = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "graph":
            opts = dict(p.split("=", 1) for p in parts[1:] if "=" in p)
            if "g" not in opts or "b" not in opts:
                raise ParseError("graph line needs g=<int> b=<int>", lineno)
            try:
                g, b = int(opts["g"]), int(opts["b"])
            except ValueError:
                raise ParseError("g and b must be integers", lineno)
        elif parts[0] == "edge":
            if len(parts) != 4:
                raise ParseError("edge needs: edge <id> <vertex> <vertex>", lineno)
            if parts[1] in edge_ids:
                raise ParseError("duplicate edge id %r" % parts[1], lineno)
            edge_ids.add(parts[1])
            edge_rows.append((parts[2], parts[3]))
        elif parts[0] == "leaf":
            if len(parts) != 2:
                raise ParseError("leaf needs: leaf <vertex>", lineno)
            declared_leaves.add(parts[1])
        else:
            raise ParseError("unknown record %r" % parts[0], lineno)
    if g is None:
        raise ParseError("missing 'graph g=.. b=..' line")
    darts_at = {}
    for k, (v, w) in enumerate(edge_rows):
        darts_at.setdefault(v, []).append(2 * k)
        darts_at.setdefault(w, []).append(2 * k + 1)
    theta = []
    for k in range(len(edge_rows)):
        theta += [2 * k + 1, 2 * k]
    cells = []
    for name, ds in darts_at.items():
        if name in declared_leaves and len(ds) != 1:
            raise ParseError("leaf %r has degree %d" % (name, len(ds)))
        cells.append(tuple(sorted(ds)))
    for name in declared_leaves:
        if name not in darts_at:
            raise ParseError("leaf %r never used by an edge" % name)
    try:
        return Graph(theta, cells, g, b)
    except GraphError as exc:
        raise ParseError(str(exc))


def format_graph(graph: Graph) -> str:
    names = {}
    for i, cell in enumerate(graph.cells):
        names[cell] = "v%d" % i
    lines = ["graph g=%d b=%d" % (graph.g, graph.b)]
    for k, e in enumerate(graph.edges()):
        v, w = graph.ends(e)
        lines.append("edge e%d %s %s" % (k, names[v], names[w]))
    for cell in graph.univalent_vertices():
        lines.append("leaf %s" % names[cell])
    return "\n".join(lines) + "\n"
