"""Automorphisms of dart graphs: group computation, orders, orbits, switches.

An automorphism is a permutation of the darts commuting with the edge
involution and mapping vertex cells to vertex cells.  Acting on darts
rather than vertices keeps loop reversals and parallel-edge exchanges
distinct from the identity.
"""

from __future__ import annotations

import hashlib
from functools import lru_cache
from math import lcm

from trivalent.graphs import Graph, ParseError, check_valid, graph_digest


class AutomorphismError(ValueError):
    pass


class StructuralViolation(AssertionError):
    """An internal invariant guaranteed by the theory failed: a bug."""


class Automorphism:
    """A dart permutation of a fixed graph, immutable and hashable."""

    __slots__ = ("graph", "perm", "_hash")

    def __init__(self, graph: Graph, perm, _skip_checks=False):
        self.graph = graph
        self.perm = tuple(perm)
        self._hash = hash((graph, self.perm))
        if not _skip_checks:
            self._check()

    def _check(self):
        g, p = self.graph, self.perm
        n = g.n_darts
        if len(p) != n or sorted(p) != list(range(n)):
            raise AutomorphismError("not a permutation of the darts")
        for d in range(n):
            if p[g.theta[d]] != g.theta[p[d]]:
                raise AutomorphismError("does not commute with the edge pairing")
        for cell in g.cells:
            image = tuple(sorted(p[d] for d in cell))
            if image not in g.cells:
                raise AutomorphismError("cell %r is not mapped to a cell" % (cell,))

    def __eq__(self, other):
        return (
            isinstance(other, Automorphism)
            and self.graph == other.graph
            and self.perm == other.perm
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return "Automorphism(%s)" % (self.perm,)

    def __call__(self, dart: int) -> int:
        return self.perm[dart]

    def is_identity(self) -> bool:
        return all(self.perm[d] == d for d in range(self.graph.n_darts))

    def apply_vertex(self, cell):
        return tuple(sorted(self.perm[d] for d in cell))

    def apply_edge(self, edge):
        a, b = self.perm[edge[0]], self.perm[edge[1]]
        return (a, b) if a < b else (b, a)

    def digest(self) -> str:
        return hashlib.sha256(repr(self.perm).encode()).hexdigest()[:16]


def identity(graph: Graph) -> Automorphism:
    return Automorphism(graph, range(graph.n_darts), _skip_checks=True)


def compose(a: Automorphism, b: Automorphism) -> Automorphism:
    """a after b (apply b first)."""
    if a.graph != b.graph:
        raise AutomorphismError("automorphisms live on different graphs")
    return Automorphism(a.graph, tuple(a.perm[b.perm[d]] for d in range(a.graph.n_darts)), _skip_checks=True)


def inverse(a: Automorphism) -> Automorphism:
    inv = [0] * a.graph.n_darts
    for d in range(a.graph.n_darts):
        inv[a.perm[d]] = d
    return Automorphism(a.graph, inv, _skip_checks=True)


def power(a: Automorphism, k: int) -> Automorphism:
    n = order(a)
    k %= n
    result = identity(a.graph)
    step = a
    while k:
        if k & 1:
            result = compose(step, result)
        step = compose(step, step)
        k >>= 1
    return result


def order(a: Automorphism) -> int:
    n = 1
    seen = [False] * a.graph.n_darts
    for d in range(a.graph.n_darts):
        if seen[d]:
            continue
        length = 0
        x = d
        while not seen[x]:
            seen[x] = True
            x = a.perm[x]
            length += 1
        n = lcm(n, length)
    return n


# -- full group by depth-first dart-image backtracking -----------------------


def _bfs_dart_order(graph: Graph):
    """Visit darts so each new one is constrained by an earlier neighbor."""
    seen = []
    seen_set = set()
    queue = [0] if graph.n_darts else []
    while queue:
        d = queue.pop(0)
        if d in seen_set:
            continue
        seen.append(d)
        seen_set.add(d)
        partner = graph.theta[d]
        if partner not in seen_set:
            queue.append(partner)
        for x in graph.vertex_of(d):
            if x not in seen_set:
                queue.append(x)
    return seen


@lru_cache(maxsize=None)
def _group_cached(graph: Graph):
    order_of_visit = _bfs_dart_order(graph)
    n = graph.n_darts
    results = []

    def candidates(d, mapping):
        cell = graph.vertex_of(d)
        opts = None
        partner = graph.theta[d]
        if mapping[partner] >= 0:
            opts = {graph.theta[mapping[partner]]}
        placed = [x for x in cell if x != d and mapping[x] >= 0]
        if placed:
            target_cell = graph.vertex_of(mapping[placed[0]])
            used = {mapping[x] for x in placed}
            cell_opts = {y for y in target_cell if y not in used}
            opts = cell_opts if opts is None else opts & cell_opts
        if opts is None:
            opts = {y for y in range(n) if len(graph.vertex_of(y)) == len(cell)}
        return sorted(y for y in opts if len(graph.vertex_of(y)) == len(cell))

    def extend(i, mapping, used):
        if i == len(order_of_visit):
            results.append(Automorphism(graph, mapping))
            return
        d = order_of_visit[i]
        if mapping[d] >= 0:
            extend(i + 1, mapping, used)
            return
        for y in candidates(d, mapping):
            if used[y]:
                continue
            mapping[d] = y
            used[y] = True
            extend(i + 1, mapping, used)
            mapping[d] = -1
            used[y] = False

    extend(0, [-1] * n, [False] * n)
    results.sort(key=lambda a: a.perm)
    return tuple(results)


def automorphism_group(graph: Graph):
    """All automorphisms, identity included, sorted by dart map."""
    check_valid(graph)
    return list(_group_cached(graph))


# -- orders and orbits --------------------------------------------------------


def vertex_order(phi: Automorphism, cell) -> int:
    k = 1
    image = phi.apply_vertex(cell)
    while image != tuple(cell):
        image = phi.apply_vertex(image)
        k += 1
    return k


def edge_orbit_size(phi: Automorphism, edge) -> int:
    k = 1
    image = phi.apply_edge(edge)
    while image != tuple(edge):
        image = phi.apply_edge(image)
        k += 1
    return k


def edge_order(phi: Automorphism, edge) -> int:
    """Least k with phi^k fixing both darts of the edge.

    This is the paper-level order read at the dart level: it equals the
    LCM of the end orders except when parallel edges are permuted among
    themselves, and it counts a reversed edge (loops included) twice.
    """
    d = edge[0]
    k = 1
    x = phi.perm[d]
    while x != d:
        x = phi.perm[x]
        k += 1
    return k


def vertex_orbit(phi: Automorphism, cell):
    out = [tuple(cell)]
    image = phi.apply_vertex(cell)
    while image != tuple(cell):
        out.append(image)
        image = phi.apply_vertex(image)
    return out


def edge_orbit(phi: Automorphism, edge):
    out = [tuple(edge)]
    image = phi.apply_edge(edge)
    while image != tuple(edge):
        out.append(image)
        image = phi.apply_edge(image)
    return out


class OrbitReport:
    """Vertex and edge orders of one automorphism plus their verified shape.

    The edge-order set of a connected graph is {m, 2m, ..., 2^k m} with
    ord(phi) = 2^k m; vertex orders are the 2^i m and possibly some
    2^j m / 3.  Violations raise StructuralViolation: they cannot happen
    unless the implementation is wrong.
    """

    def __init__(self, phi: Automorphism):
        graph = phi.graph
        self.phi = phi
        self.ord_phi = order(phi)
        self.vertex_orders = {c: vertex_order(phi, c) for c in graph.cells}
        self.edge_orders = {e: edge_order(phi, e) for e in graph.edges()}
        self.edge_order_set = sorted(set(self.edge_orders.values()))
        self._verify()

    def _verify(self):
        n = self.ord_phi
        s = self.edge_order_set
        if not s:
            raise StructuralViolation("graph without edges")
        m = s[0]
        if s[-1] != n:
            raise StructuralViolation("maximal edge order %d != ord(phi) %d" % (s[-1], n))
        expected = []
        o = m
        while o <= n:
            expected.append(o)
            o *= 2
        if s != expected:
            raise StructuralViolation("edge orders %r not of the form {m,2m,...,2^k m}" % (s,))
        k = len(s) - 1
        dyadic = set(expected)
        h = -1
        for v_ord in self.vertex_orders.values():
            if v_ord in dyadic:
                h = max(h, expected.index(v_ord))
            elif 3 * v_ord in dyadic:
                if m % 3 != 0:
                    raise StructuralViolation("vertex order %d = 2^j m/3 but 3 does not divide m" % v_ord)
            else:
                raise StructuralViolation("vertex order %d fits no case of the order lemma" % v_ord)
        if h < k - 1:
            raise StructuralViolation("largest dyadic vertex order 2^%d m with k=%d" % (h, k))
        present = {expected[i] for i in range(h + 1)} if h >= 0 else set()
        dyadic_vertex_orders = {v for v in self.vertex_orders.values() if v in dyadic}
        if dyadic_vertex_orders != present:
            raise StructuralViolation("dyadic vertex orders %r are not an initial run" % sorted(dyadic_vertex_orders))

    def per_edge_checks(self):
        """LCM identity and orbit-or-double rule, per edge.

        Returns (edge, ord, lcm_of_ends, orbit, doubled) rows after
        asserting: ord is always a multiple of the end LCM, and equals it
        for a non-loop edge with no parallel partner; a loop's order is the
        LCM or (when reversed) its double; ord is the orbit size or its
        double; and a doubled non-loop has phi-equivalent reversed ends.
        """
        graph = self.phi.graph
        phi = self.phi
        rows = []
        for e in graph.edges():
            v, w = graph.ends(e)
            ell = lcm(self.vertex_orders[v], self.vertex_orders[w])
            o = self.edge_orders[e]
            orb = edge_orbit_size(phi, e)
            if o % ell != 0:
                raise StructuralViolation("edge order %d not a multiple of end LCM %d" % (o, ell))
            if v == w:
                if o not in (ell, 2 * ell):
                    raise StructuralViolation("loop order %d vs end order %d" % (o, ell))
            else:
                parallel = any(
                    f != e and set(graph.ends(f)) == {v, w} for f in graph.other_edges_at(v, e)
                )
                if not parallel and o != ell:
                    raise StructuralViolation(
                        "edge order %d != end LCM %d on a non-parallel edge" % (o, ell)
                    )
            if o not in (orb, 2 * orb):
                raise StructuralViolation("edge order %d vs orbit %d" % (o, orb))
            doubled = o == 2 * orb
            if doubled and v != w:
                if not _ordered_pair_reversed(phi, v, w):
                    raise StructuralViolation("doubled edge without phi-equivalent reversed ends")
            rows.append((e, o, ell, orb, doubled))
        return rows


def _ordered_pair_reversed(phi, v, w):
    pair = (tuple(v), tuple(w))
    target = (tuple(w), tuple(v))
    current = pair
    for _ in range(order(phi)):
        current = (phi.apply_vertex(current[0]), phi.apply_vertex(current[1]))
        if current == target:
            return True
        if current == pair:
            return False
    return False


def orbit_report(phi: Automorphism) -> OrbitReport:
    return OrbitReport(phi)


# -- switches ------------------------------------------------------------------


def make_switch(graph: Graph, e1, e2) -> Automorphism:
    """The elementary automorphism interchanging adjacent edges e1 and e2.

    For e1 == e2 a loop, this is the reversal of the loop: the degenerate
    internal switch that exchanges the loop's two darts.  Without it the
    switches would not determine automorphisms up to their vertex action.
    """
    e1 = tuple(sorted(e1))
    e2 = tuple(sorted(e2))
    for e in (e1, e2):
        if e[1] != graph.theta[e[0]]:
            raise AutomorphismError("%r is not an edge" % (e,))
    n = graph.n_darts
    if e1 == e2:
        if not graph.is_loop(e1):
            raise AutomorphismError("switch of an edge with itself needs a loop")
        perm = list(range(n))
        perm[e1[0]], perm[e1[1]] = e1[1], e1[0]
        return Automorphism(graph, perm)
    shared = [v for v in set(graph.ends(e1)) & set(graph.ends(e2)) if len(v) == 3]
    if not shared:
        raise AutomorphismError("edges %r and %r are not adjacent" % (e1, e2))
    if graph.is_loop(e1) or graph.is_loop(e2):
        raise AutomorphismError("a loop cannot be switched with another edge")
    v = sorted(shared)[0]
    d1 = next(d for d in e1 if graph.vertex_of(d) == v)
    d2 = next(d for d in e2 if graph.vertex_of(d) == v)
    f1 = graph.theta[d1]
    f2 = graph.theta[d2]
    perm = list(range(n))
    perm[d1], perm[d2] = d2, d1
    perm[f1], perm[f2] = f2, f1
    try:
        return Automorphism(graph, perm)
    except AutomorphismError:
        raise AutomorphismError(
            "swapping %r and %r does not extend to an automorphism fixing the rest" % (e1, e2)
        )


def switch_kind(graph: Graph, e1, e2) -> str:
    k1 = graph.classify_edge(e1)
    k2 = graph.classify_edge(e2)
    if k1 != k2:
        raise AutomorphismError("switch mixes a terminal and an internal edge")
    return k1


def all_switches(graph: Graph):
    """Every valid switch, loop reversals included, with its edge pair."""
    out = []
    edges = graph.edges()
    for i, e1 in enumerate(edges):
        if graph.is_loop(e1):
            out.append((e1, e1, make_switch(graph, e1, e1)))
        for e2 in edges[i + 1 :]:
            if graph.is_loop(e1) or graph.is_loop(e2):
                continue
            if not set(graph.ends(e1)) & set(graph.ends(e2)):
                continue
            try:
                s = make_switch(graph, e1, e2)
            except AutomorphismError:
                continue
            out.append((e1, e2, s))
    return out


# -- primary decomposition -----------------------------------------------------


def primary_decomposition(phi: Automorphism):
    """Commuting prime-power-order powers of phi whose product is phi."""
    n = order(phi)
    if n == 1:
        return []
    factors = []
    remaining = n
    p = 2
    primes = []
    while remaining > 1:
        if remaining % p == 0:
            q = 1
            while remaining % p == 0:
                remaining //= p
                q *= p
            primes.append(q)
        p += 1
    if len(primes) == 1:
        return [phi]
    for q in primes:
        k = n // q
        t = pow(k, -1, q)
        factors.append(power(phi, k * t))
    return factors


# -- text format ----------------------------------------------------------------
#
#   aut <graph-digest>
#   dart <i> -> <j>


def format_automorphism(phi: Automorphism) -> str:
    lines = ["aut %s" % graph_digest(phi.graph)]
    for d in range(phi.graph.n_darts):
        lines.append("dart %d -> %d" % (d, phi.perm[d]))
    return "\n".join(lines) + "\n"


def parse_automorphism(text: str, graph: Graph) -> Automorphism:
    expected = graph_digest(graph)
    mapping = {}
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "aut":
            if len(parts) != 2:
                raise ParseError("aut line needs the graph digest", lineno)
            if parts[1] != expected:
                raise ParseError(
                    "automorphism is for graph %s, not %s" % (parts[1], expected), lineno
                )
            header_seen = True
        elif parts[0] == "dart":
            if len(parts) != 4 or parts[2] != "->":
                raise ParseError("dart line needs: dart <i> -> <j>", lineno)
            try:
                i, j = int(parts[1]), int(parts[3])
            except ValueError:
                raise ParseError("dart indices must be integers", lineno)
            if i in mapping:
                raise ParseError("dart %d mapped twice" % i, lineno)
            mapping[i] = j
        else:
            raise ParseError("unknown record %r" % parts[0], lineno)
    if not header_seen:
        raise ParseError("missing 'aut <digest>' header")
    if sorted(mapping) != list(range(graph.n_darts)):
        raise ParseError("dart map does not cover darts 0..%d" % (graph.n_darts - 1))
    try:
        return Automorphism(graph, [mapping[d] for d in range(graph.n_darts)])
    except AutomorphismError as exc:
        raise ParseError(str(exc))
