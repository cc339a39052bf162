"""Constructive reduction of automorphisms to elementary switches.

The pipeline follows the proof layout: split into prime-power-order
factors, normalize minimal-path orbits into cycles / tripods / diagonals
by invariant sliding moves, factor each prime-power automorphism into two
involutions by the growing-subgraph recursion, and reduce involutions to
the identity through edge-order halving.  Every construction is verified
as it is built; a failed assertion means a bug, never bad input.
"""

from __future__ import annotations

from math import gcd

from trivalent.autos import (
    Automorphism,
    StructuralViolation,
    compose,
    edge_order,
    identity,
    make_switch,
    order,
    power,
    primary_decomposition,
    vertex_order,
    vertex_orbit,
)
from trivalent.certs import (
    Certificate,
    ComposeNode,
    IdentityLeaf,
    SwitchLeaf,
    TransportNode,
    verify_certificate,
)
from trivalent.graphs import Graph, check_valid
from trivalent.moves import (
    FMoveSpec,
    MoveError,
    NotInvariant,
    Replacement,
    enumerate_invariant_fmoves,
    transport,
)


class PipelineError(StructuralViolation):
    """The constructive pipeline hit a state the theory rules out."""


# -- dart paths -----------------------------------------------------------------
#
# A path is a tuple of darts; dart i leaves the i-th vertex of the path,
# and its edge ends at the vertex owning theta(dart).


def path_vertices(graph: Graph, path):
    verts = [graph.vertex_of(path[0])]
    for d in path:
        verts.append(graph.vertex_of(graph.theta[d]))
    return verts


def path_edges(graph: Graph, path):
    return [graph.edge_of(d) for d in path]


def map_path(perm, path):
    return tuple(perm[d] for d in path)


def reverse_path(graph: Graph, path):
    return tuple(graph.theta[d] for d in reversed(path))


def _simple_paths_of_length(graph: Graph, length, edge_ok=None, start_cells=None):
    """All simple dart paths of the given length, in lexicographic order."""
    results = []
    darts = sorted(graph.darts())

    def ok(d):
        return edge_ok is None or edge_ok(graph.edge_of(d))

    def extend(path, visited):
        if len(path) == length:
            results.append(tuple(path))
            return
        last_cell = graph.vertex_of(graph.theta[path[-1]])
        for d in sorted(last_cell):
            if d == graph.theta[path[-1]] or not ok(d):
                continue
            nxt = graph.vertex_of(graph.theta[d])
            if nxt in visited:
                continue
            path.append(d)
            visited.add(nxt)
            extend(path, visited)
            visited.remove(nxt)
            path.pop()

    for d in darts:
        if not ok(d):
            continue
        if start_cells is not None and graph.vertex_of(d) not in start_cells:
            continue
        start = graph.vertex_of(d)
        end = graph.vertex_of(graph.theta[d])
        if start == end:
            continue
        extend([d], {start, end})
    return results


def minimal_vertex_path(phi: Automorphism):
    """Globally shortest simple path joining two distinct vertices of one
    phi-orbit, lexicographically first among the shortest; None if no
    orbit contains two distinct vertices."""
    graph = phi.graph
    if all(phi.apply_vertex(c) == c for c in graph.cells):
        return None
    orbits = {}
    for c in graph.cells:
        orbits.setdefault(frozenset(vertex_orbit(phi, c)), []).append(c)
    for length in range(1, len(graph.cells)):
        for path in _simple_paths_of_length(graph, length):
            verts = path_vertices(graph, path)
            v, w = verts[0], verts[-1]
            if v != w and w in {tuple(x) for x in vertex_orbit(phi, v)}:
                return path
    return None


# -- the four minimal-path interaction patterns ----------------------------------


class PathOrbitClass:
    """How two translates of a minimal path meet: disjoint, sharing one
    end, sharing both ends crosswise, or sharing both ends directly."""

    def __init__(self, kind, i, j, delta_i=None, delta_j=None, commons=None):
        self.kind = kind
        self.i = i
        self.j = j
        self.delta_i = delta_i or []
        self.delta_j = delta_j or []
        self.commons = commons or []

    def __repr__(self):
        return "PathOrbitClass(%r, i=%d, j=%d)" % (self.kind, self.i, self.j)


def _runs(graph, path, common_edges):
    """Split a path into maximal private/common runs: list of (kind, length)."""
    runs = []
    for d in path:
        kind = "common" if graph.edge_of(d) in common_edges else "private"
        if runs and runs[-1][0] == kind:
            runs[-1][1] += 1
        else:
            runs.append([kind, 1])
    return [(k, n) for k, n in runs]


def classify_pair(phi: Automorphism, alpha, i: int, j: int) -> PathOrbitClass:
    """Classify the interaction of phi^i(alpha) and phi^j(alpha).

    alpha must be a simple path whose distinct ends lie in one phi-orbit
    and which is minimal among paths joining vertices of that orbit; the
    structural facts of the four configuration lemmas are asserted.
    """
    graph = phi.graph
    n = order(phi)
    if (i - j) % n == 0:
        raise PipelineError("need i != j mod ord(phi)")
    verts = path_vertices(graph, alpha)
    if len(set(verts)) != len(verts):
        raise PipelineError("alpha is not simple")
    v, w = verts[0], verts[-1]
    if v == w or tuple(w) not in {tuple(x) for x in vertex_orbit(phi, v)}:
        raise PipelineError("the ends of alpha are not distinct phi-equivalent vertices")
    pi = map_path(power(phi, i).perm, alpha)
    pj = map_path(power(phi, j).perm, alpha)
    vi, wi = path_vertices(graph, pi)[0], path_vertices(graph, pi)[-1]
    vj, wj = path_vertices(graph, pj)[0], path_vertices(graph, pj)[-1]
    shared_edges = set(path_edges(graph, pi)) & set(path_edges(graph, pj))
    if len({vi, wi, vj, wj}) == 4:
        if set(path_vertices(graph, pi)) & set(path_vertices(graph, pj)):
            raise StructuralViolation("translates with four distinct ends must be disjoint")
        return PathOrbitClass("disjoint", i, j)
    if vi == vj and wi == wj:
        kind = "doubled"
        if pi != pj:
            if n % 2 != 0 and n % 3 != 0:
                raise StructuralViolation("nontrivial doubled translates need ord even or a multiple of 3")
            if n % 2 != 0 and shared_edges:
                # odd orders admit doubled translates only edge-disjoint
                raise StructuralViolation("odd-order doubled translates sharing an edge")
    elif vi == wj and vj == wi:
        kind = "diagonal"
        if n % 2 != 0:
            raise StructuralViolation("diagonal translates need ord(phi) even")
    else:
        kind = "adjacent"
    runs_i = _runs(graph, pi, shared_edges)
    runs_j = _runs(graph, pj, shared_edges)
    delta_i = [ln for k, ln in runs_i if k == "private"]
    delta_j = [ln for k, ln in runs_j if k == "private"]
    commons = [ln for k, ln in runs_i if k == "common"]
    if kind == "adjacent":
        # orient so the shared end is the head of pj and the tail of pi
        if vi == wj or wi == vj:
            if len(delta_i) != len(delta_j):
                raise StructuralViolation("adjacent translates with unbalanced private pieces")
            for h in range(len(delta_i)):
                if delta_i[h] != delta_j[len(delta_j) - 1 - h]:
                    raise StructuralViolation("adjacent private pieces fail the mirrored lengths")
            if delta_i and 2 * max(delta_i[0], delta_i[-1]) < len(alpha):
                raise StructuralViolation("outermost private piece shorter than half of alpha")
    if kind == "diagonal" and shared_edges:
        if len(delta_i) != len(delta_j):
            raise StructuralViolation("diagonal translates with unbalanced private pieces")
    if kind == "doubled" and pi != pj and shared_edges:
        # unlike the adjacent case the private pieces pair up in order
        if delta_i != delta_j:
            raise StructuralViolation("doubled private pieces fail the matched lengths")
    return PathOrbitClass(kind, i, j, delta_i, delta_j, commons)


# -- derivations: the running chain from the original automorphism ---------------


class Derivation:
    """Chain of switch compositions and invariant moves from a start
    automorphism, replayable into certificate nodes."""

    def __init__(self, phi: Automorphism):
        self.original = phi
        self.current = phi
        self.steps = []

    def compose_switch(self, e1, e2):
        s = make_switch(self.current.graph, e1, e2)
        self.steps.append(("switch", self.current.graph, (tuple(sorted(e1)), tuple(sorted(e2)))))
        self.current = compose(s, self.current)
        return self.current

    def apply_move(self, spec: FMoveSpec):
        before = self.current
        moved = transport(before, spec)
        if isinstance(moved, NotInvariant):
            raise PipelineError("pipeline move is not invariant: %s" % moved.reason)
        if order(moved) != order(before):
            raise PipelineError("pipeline move changed the order")
        self.steps.append(("move", before.graph, spec))
        self.current = moved
        return self.current

    def unwind(self, inner: Certificate) -> Certificate:
        cert = inner
        for kind, graph, data in reversed(self.steps):
            if kind == "switch":
                cert = ComposeNode(graph, [SwitchLeaf(graph, *data), cert])
            else:
                cert = TransportNode(graph, data, cert)
        return cert


# -- reduction to uniform edge orders (order 2^m) ---------------------------------


def _log2_exact(n):
    k = n.bit_length() - 1
    if 1 << k != n:
        raise PipelineError("%d is not a power of two" % n)
    return k


def reduction_measure(phi: Automorphism):
    """(m, n_m): the exponent of ord(phi) = 2^m and the count of edges of
    order 2^m; the reduction strictly decreases it lexicographically."""
    n = order(phi)
    m = _log2_exact(n)
    n_m = sum(1 for e in phi.graph.edges() if edge_order(phi, e) == n)
    return (m, n_m)


def reduce_edge_orders(phi: Automorphism):
    """Halve maximal edge orders until they all equal ord(phi).

    Follows the inductive proof: compose with a terminal or internal
    switch when the two maximal-order edges at the chosen vertex have
    free or coinciding far ends, reverse a maximal-order loop through
    the degenerate loop switch, and split the orbit with the invariant
    five-end move when the far ends are distinct trivalent vertices.
    Returns the derivation; its .measures list is the strictly
    decreasing sequence of (m, n_m) values.
    """
    if order(phi) != 1:
        _log2_exact(order(phi))
    der = Derivation(phi)
    der.measures = []
    while True:
        cur = der.current
        n = order(cur)
        if n == 1:
            break
        graph = cur.graph
        orders = {e: edge_order(cur, e) for e in graph.edges()}
        if min(orders.values()) == n:
            break
        der.measures.append(reduction_measure(cur))
        half = power(cur, n // 2)
        site_v = None
        for cell in sorted(graph.cells):
            if len(cell) != 3 or vertex_order(cur, cell) != n // 2:
                continue
            if any(orders[graph.edge_of(d)] == n for d in cell):
                site_v = cell
                break
        if site_v is None:
            raise PipelineError("no reduction vertex exists; the order lemma fails")
        e1 = min(graph.edge_of(d) for d in site_v if orders[graph.edge_of(d)] == n)
        if graph.is_loop(e1):
            der.compose_switch(e1, e1)
            continue
        e2 = half.apply_edge(e1)
        if e2 == e1 or site_v not in graph.ends(e2):
            raise PipelineError("half-power does not pair the maximal edges at the vertex")
        v1 = next(c for c in graph.ends(e1) if c != site_v)
        v2 = next(c for c in graph.ends(e2) if c != site_v)
        if v1 == v2 or (len(v1) == 1 and len(v2) == 1):
            der.compose_switch(e1, e2)
            continue
        if len(v1) != 3 or len(v2) != 3:
            raise PipelineError("mixed far ends in the reduction step")
        spec = _orbit_split_move(cur, site_v, e1, e2, v1, v2)
        der.apply_move(spec)
    der.measures.append(reduction_measure(der.current) if order(der.current) > 1 else (0, 0))
    for a, b in zip(der.measures, der.measures[1:]):
        if not b < a:
            raise PipelineError("reduction measure failed to decrease: %r -> %r" % (a, b))
    cur = der.current
    if order(cur) > 1:
        final = order(cur)
        if any(edge_order(cur, e) != final for e in cur.graph.edges()):
            raise PipelineError("reduction ended without uniform edge orders")
    return der


def _orbit_split_move(phi: Automorphism, v, e1, e2, v1, v2):
    """The invariant five-end move that splits the orbit of e1 into two
    orbits of half cardinality (distinct trivalent far ends)."""
    graph = phi.graph
    n = order(phi)
    half = power(phi, n // 2)
    a1d, b1d = sorted(d for d in v1 if graph.edge_of(d) != e1)
    # couple each far-end dart with its half-power image; the five-end
    # site needs two splits, each cutting off one coupled pair
    e0d = next(d for d in v if graph.edge_of(d) not in (e1, e2))
    pair_a = frozenset({a1d, half.perm[a1d]})
    pair_b = frozenset({b1d, half.perm[b1d]})
    bdarts = frozenset({e0d}) | pair_a | pair_b
    target = frozenset(
        {
            frozenset({pair_a, frozenset(bdarts - pair_a)}),
            frozenset({pair_b, frozenset(bdarts - pair_b)}),
        }
    )
    reps = []
    seen_sites = set()
    cells = frozenset({v, v1, v2})
    edges = frozenset({e1, e2})
    for j in range(n):
        pw = power(phi, j)
        c = frozenset(pw.apply_vertex(x) for x in cells)
        ed = frozenset(pw.apply_edge(e) for e in edges)
        key = (tuple(sorted(c)), tuple(sorted(ed)))
        if key in seen_sites:
            continue
        seen_sites.add(key)
        t = frozenset(
            frozenset(frozenset(pw.perm[d] for d in side) for side in s) for s in target
        )
        reps.append(Replacement(c, ed, t))
    used = set()
    for rep in reps:
        if used & rep.cells:
            raise PipelineError("orbit-split sites overlap; the reduction figure degenerates")
        used |= rep.cells
    return FMoveSpec(reps)


# -- shared slide machinery --------------------------------------------------------


def _orbit_family(phi: Automorphism, cells, edges, target):
    """The phi-orbit of one replacement, with equivariant targets."""
    n = order(phi)
    reps = []
    seen = set()
    for j in range(n):
        pw = power(phi, j)
        c = frozenset(pw.apply_vertex(x) for x in cells)
        ed = frozenset(pw.apply_edge(e) for e in edges)
        key = (tuple(sorted(c)), tuple(sorted(ed)))
        if key in seen:
            continue
        seen.add(key)
        t = frozenset(
            frozenset(frozenset(pw.perm[d] for d in side) for side in s) for s in target
        )
        reps.append(Replacement(c, ed, t))
    used = set()
    for rep in reps:
        if used & rep.cells:
            raise MoveError("orbit family sites overlap")
        used |= rep.cells
    return FMoveSpec(reps)


def _power_index(phi: Automorphism, cell, image):
    """The j with phi^j(cell) == image, unique mod the cell's order."""
    cur = tuple(cell)
    for j in range(order(phi)):
        if cur == tuple(image):
            return j
        cur = phi.apply_vertex(cur)
    raise PipelineError("cells are not in one orbit")


def _verify_cycle_union(phi: Automorphism, alpha, s):
    """The translates of alpha must tile disjoint cycles, consecutive
    copies meeting exactly at their shared junction vertex."""
    graph = phi.graph
    n = order(phi)
    copies = [map_path(power(phi, j).perm, alpha) for j in range(n)]
    edge_lists = [set(path_edges(graph, p)) for p in copies]
    all_edges = [e for s_ in edge_lists for e in s_]
    if len(set(all_edges)) != n * len(alpha):
        return False
    vert_lists = [path_vertices(graph, p) for p in copies]
    for i in range(n):
        for j in range(i + 1, n):
            shared = set(map(tuple, vert_lists[i])) & set(map(tuple, vert_lists[j]))
            expected = set()
            if (j - i) % n == s % n:
                expected.add(tuple(vert_lists[j][0]))
            if (i - j) % n == s % n:
                expected.add(tuple(vert_lists[i][0]))
            if shared != expected:
                return False
    return True


def _slide_spec(phi: Automorphism, graph, w0_cell, w1_cell, inner_dart, pair_a, pair_b):
    """One equivariant family of edge moves at the orbit of an alpha edge.

    inner_dart's edge is replaced; pair_a and pair_b partition the four
    boundary darts into the new couplings.
    """
    e = graph.edge_of(inner_dart)
    target = frozenset({frozenset({frozenset(pair_a), frozenset(pair_b)})})
    return _orbit_family(phi, [w0_cell, w1_cell], [e], target)


def _slide_first_edge(der: Derivation, alpha, s):
    """Shorten a cycle-pattern minimal path by sliding its first edges."""
    phi = der.current
    graph = phi.graph
    n = order(phi)
    w0 = graph.vertex_of(alpha[0])
    w1 = graph.vertex_of(graph.theta[alpha[0]])
    z_dart = graph.theta[power(phi, (n - s) % n).perm[alpha[-1]]]
    if z_dart not in w0:
        raise PipelineError("translates do not meet end to end at the path start")
    g_dart = next(d for d in w0 if d not in (alpha[0], z_dart))
    a2_dart = alpha[1]
    f_dart = next(d for d in w1 if d not in (graph.theta[alpha[0]], a2_dart))
    spec = _slide_spec(phi, graph, w0, w1, alpha[0], (z_dart, a2_dart), (g_dart, f_dart))
    der.apply_move(spec)
    return der.current


def _second_edge_slide_spec(phi: Automorphism, alpha):
    """The family shortening a terminal-path at its second vertex."""
    graph = phi.graph
    x1 = graph.vertex_of(alpha[1])
    x2 = graph.vertex_of(alpha[2])
    in1 = graph.theta[alpha[0]]
    f1 = next(d for d in x1 if d not in (in1, alpha[1]))
    out2 = alpha[2]
    f2 = next(d for d in x2 if d not in (graph.theta[alpha[1]], out2))
    return _slide_spec(phi, graph, x1, x2, alpha[1], (in1, out2), (f1, f2))


class CycleStructure:
    """Normal form of a minimal-path orbit union."""

    def __init__(self, kind, n, alpha, s=None, base=0):
        self.kind = kind
        self.n = n
        self.alpha = tuple(alpha) if alpha is not None else None
        self.s = s
        self.base = base
        if kind == "cycle":
            self.ell = n // gcd(n, s)
        elif kind == "diagonal":
            self.ell = 2
        else:
            self.ell = None

    def __repr__(self):
        return "CycleStructure(%r, s=%r)" % (self.kind, self.s)


def _tripod_pattern(phi: Automorphism, alpha):
    if len(alpha) != 2:
        return False
    graph = phi.graph
    n = order(phi)
    if n % 3 != 0:
        return False
    mid = graph.vertex_of(graph.theta[alpha[0]])
    if vertex_order(phi, mid) * 3 != n:
        return False
    inner = graph.theta[alpha[0]]
    third = power(phi, n // 3).perm[inner]
    return alpha[1] in (third, power(phi, 2 * n // 3).perm[inner])


def _verify_tripod_union(phi: Automorphism, alpha):
    graph = phi.graph
    n = order(phi)
    k = n // 3
    a_rev = reverse_path(graph, alpha[:1])
    b = map_path(power(phi, k).perm, a_rev)
    if (alpha[1],) not in (b, map_path(power(phi, 2 * k).perm, a_rev)):
        return False
    # the star copies are pairwise disjoint
    legs = {power(phi, j).perm[alpha[0]] for j in range(n)}
    if len(legs) != n:
        return False
    centers = {tuple(power(phi, j).apply_vertex(graph.vertex_of(graph.theta[alpha[0]]))) for j in range(n)}
    return len(centers) == k


def normalize_cycle(phi: Automorphism, alpha=None):
    """Slide a minimal vertex-joining path down to its lemma normal form.

    Returns (phi', structure, derivation); the derivation holds the
    invariant moves that realize the normalization.
    """
    n = order(phi)
    if n <= 1:
        raise PipelineError("normalize_cycle needs a nontrivial automorphism")
    der = Derivation(phi)
    current = minimal_vertex_path(der.current)
    if alpha is not None and current is not None and len(alpha) != len(current):
        raise PipelineError("supplied path is not minimal")
    if current is None:
        if n % 3 == 0 and n % 2 != 0:
            struct = _fixed_vertex_triple(der.current)
            return der.current, struct, der
        raise PipelineError("no two distinct equivalent vertices exist")
    while True:
        cur_phi = der.current
        graph = cur_phi.graph
        L = len(current)
        if n % 3 == 0 and n % 2 != 0 and _tripod_pattern(cur_phi, current):
            if not _verify_tripod_union(cur_phi, current):
                raise PipelineError("tripod pattern failed its structure checks")
            return cur_phi, CycleStructure("tripod", n, current), der
        start = graph.vertex_of(current[0])
        end = graph.vertex_of(graph.theta[current[-1]])
        s = _power_index(cur_phi, start, end)
        if L == 1:
            if n % 2 == 0 and power(cur_phi, n // 2).perm[current[0]] == graph.theta[current[0]]:
                return cur_phi, CycleStructure("diagonal", n, current, s=n // 2), der
            if not _verify_cycle_union(cur_phi, current, s):
                raise PipelineError("single-edge path is not in cycle position")
            return cur_phi, CycleStructure("cycle", n, current, s=s), der
        _slide_first_edge(der, current, s)
        current = minimal_vertex_path(der.current)
        if current is None or len(current) >= L:
            raise PipelineError("slide did not shorten the minimal path")


def _fixed_vertex_triple(phi: Automorphism):
    """The all-vertices-fixed start: a cyclically permuted parallel triple."""
    graph = phi.graph
    n = order(phi)
    if n != 3:
        raise PipelineError("all vertices fixed with order %d" % n)
    moved = sorted(e for e in graph.edges() if phi.apply_edge(e) != e)
    if not moved:
        raise PipelineError("identity reached the tripod start")
    e = moved[0]
    center = min(graph.ends(e))
    inner = next(d for d in e if graph.vertex_of(d) == center)
    alpha = (graph.theta[inner], power(phi, 1).perm[inner])
    return CycleStructure("tripod", n, alpha)


# -- the growing-subgraph recursion ------------------------------------------------
#
# The involution sigma is built as a dart map, orbit by orbit: each step
# adds generators sigma(x) = y and propagates sigma(phi^j x) = phi^-j y.
# Ports mark where the processed subgraph meets the rest; they are plain
# (kind, carrier) pairs stable under all the moves the steps perform,
# since moves never touch a cell holding a sigma-defined dart.


class _Onion:
    def __init__(self, phi: Automorphism, kind: str):
        self.kind = kind
        self.der = Derivation(phi)
        self.n = order(phi)
        self.sigma = {}
        self.core_edges = set()
        self.ports = None
        if kind == "p" and (self.n % 2 == 0 or self.n % 3 == 0):
            raise PipelineError("kind p needs an order coprime to 6")
        if kind == "3" and (self.n % 3 != 0 or self.n % 2 == 0):
            raise PipelineError("kind 3 needs an odd multiple of 3")
        if kind == "2":
            _log2_exact(self.n)
            cur = phi
            if any(edge_order(cur, e) != self.n for e in cur.graph.edges()):
                raise PipelineError("kind 2 needs uniform edge orders")

    # -- small helpers ----------------------------------------------------

    @property
    def phi(self):
        return self.der.current

    @property
    def graph(self):
        return self.der.current.graph

    def pw(self, j):
        return power(self.phi, j % self.n).perm

    def set_sigma(self, x, y):
        old = self.sigma.get(x)
        if old is None:
            self.sigma[x] = y
        elif old != y:
            raise PipelineError("inconsistent sigma assignment at dart %d" % x)

    def extend_orbit(self, x, y):
        n = self.n
        for j in range(n):
            self.set_sigma(self.pw(j)[x], self.pw((n - j) % n)[y])
            self.set_sigma(self.pw(j)[y], self.pw((n - j) % n)[x])

    def extend_edge_orbit(self, x, y):
        theta = self.graph.theta
        self.extend_orbit(x, y)
        self.extend_orbit(theta[x], theta[y])

    def finished(self):
        return len(self.sigma) == self.graph.n_darts

    # -- ports and stubs ---------------------------------------------------

    def set_ports(self, kind, carrier):
        ports = []
        for j in range(self.n):
            if kind == "v":
                ports.append(("v", tuple(power(self.phi, j).apply_vertex(carrier))))
            else:
                ports.append((kind, self.pw(j)[carrier]))
        if len(set(ports)) != self.n:
            raise PipelineError("port orbit has fewer than ord(phi) members")
        self.ports = ports

    def port_stub_dart(self, port):
        """The Delta-side dart of the port's terminal stub, at its attach
        vertex; None-safe only for well-formed states."""
        kind, carrier = port
        graph = self.graph
        if kind == "v":
            free = [d for d in carrier if d not in self.sigma]
            if len(free) != 1:
                raise PipelineError("port cell with %d undefined darts" % len(free))
            return graph.theta[free[0]]
        if kind == "h":
            return graph.theta[carrier]
        return carrier

    def port_attach(self, port):
        return self.graph.vertex_of(self.port_stub_dart(port))

    def stub_key(self, port):
        kind, carrier = port
        if kind == "v":
            return ("edge", self.graph.edge_of(self.port_stub_dart(port)))
        return (kind, carrier)

    def sigma_port(self, port):
        kind, carrier = port
        if kind == "v":
            defined = [d for d in carrier if d in self.sigma]
            if not defined:
                raise PipelineError("port cell with no sigma data")
            return ("v", tuple(self.graph.vertex_of(self.sigma[defined[0]])))
        return (kind, self.sigma[carrier])

    def port_offset(self):
        image = self.sigma_port(self.ports[0])
        if image not in self.ports:
            raise PipelineError("sigma does not act on the port orbit")
        return self.ports.index(image)

    # -- Delta traversal ---------------------------------------------------

    def walkable(self, edge):
        if edge in self.core_edges:
            return False
        if edge in self._stub_edges:
            return False
        d1, d2 = edge
        return d1 not in self.sigma and d2 not in self.sigma

    def refresh_stubs(self):
        self._stub_edges = set()
        for port in self.ports:
            kind, carrier = port
            if kind in ("v", "h"):
                self._stub_edges.add(self.graph.edge_of(self.port_stub_dart(port)))

    def minimal_stub_path(self):
        """(alpha, ai, bi) for the shortest lex-least path joining the
        attach vertices of two distinct stubs; None when no path exists."""
        graph = self.graph
        attach_of = {}
        for j, port in enumerate(self.ports):
            attach_of.setdefault(self.port_attach(port), []).append(j)
        starts = set(attach_of)
        for length in range(1, len(graph.cells) + 1):
            for path in _simple_paths_of_length(
                graph, length, edge_ok=self.walkable, start_cells=starts
            ):
                verts = path_vertices(graph, path)
                if verts[-1] in starts and verts[0] != verts[-1]:
                    ai = attach_of[verts[0]][0]
                    bi = attach_of[verts[-1]][0]
                    return path, ai, bi
        return None

    def component_darts(self, attach_cell):
        """All darts of the Delta component hanging at one attach vertex."""
        graph = self.graph
        seen_cells = {attach_cell}
        stack = [attach_cell]
        darts = set()
        while stack:
            cell = stack.pop()
            for d in cell:
                darts.add(d)
                e = graph.edge_of(d)
                if not self.walkable(e):
                    continue
                nxt = graph.vertex_of(graph.theta[d])
                if nxt not in seen_cells:
                    seen_cells.add(nxt)
                    stack.append(nxt)
        for d in list(darts):
            partner = graph.theta[d]
            if partner not in darts and partner not in self.sigma:
                darts.add(partner)
        return darts

    # -- the run -----------------------------------------------------------

    def run(self):
        self.start_step()
        guard = 0
        while not self.finished():
            guard += 1
            if guard > 4 * self.graph.n_edges() + 8:
                raise PipelineError("recursion failed to terminate")
            self.recursive_step()
        sigma = Automorphism(self.graph, [self.sigma[d] for d in range(self.graph.n_darts)])
        if not compose(sigma, sigma).is_identity():
            raise PipelineError("sigma is not an involution")
        tau = compose(self.phi, sigma)
        if not compose(tau, tau).is_identity():
            raise PipelineError("tau is not an involution")
        if compose(tau, sigma) != self.phi:
            raise PipelineError("tau after sigma does not recover the automorphism")
        return self.der, sigma, tau

    def start_step(self):
        phi, struct, der = normalize_cycle(self.phi, None)
        # splice the normalization moves into our derivation
        for kind, graph, data in der.steps:
            if kind != "move":
                raise PipelineError("cycle normalization may only move")
            self.der.apply_move(data)
        alpha = struct.alpha
        graph = self.graph
        if struct.kind == "cycle":
            s = struct.s
            a = alpha[0]
            self.extend_edge_orbit(a, self.pw(self.n - s)[graph.theta[a]])
            self.set_ports("v", graph.vertex_of(a))
        elif struct.kind == "tripod":
            if self.kind != "3":
                raise PipelineError("tripod start outside the 3-power case")
            inner = graph.theta[alpha[0]]
            self.extend_orbit(inner, inner)
            self.set_ports("h", inner)
        elif struct.kind == "diagonal":
            d1 = min(alpha[0], graph.theta[alpha[0]])
            if self.kind != "2":
                raise PipelineError("diagonal start outside the 2-power case")
            self.extend_orbit(d1, d1)
            for j in range(self.n):
                self.core_edges.add(graph.edge_of(self.pw(j)[d1]))
            self.set_ports("q", d1)
        else:
            raise PipelineError("unknown start structure %r" % struct.kind)

    def recursive_step(self):
        self.refresh_stubs()
        # coincident terminal stubs: the diagonal-edge ending
        by_key = {}
        for j, port in enumerate(self.ports):
            by_key.setdefault(self.stub_key(port), []).append(j)
        coincident = [(k, v) for k, v in by_key.items() if len(v) > 1]
        if coincident:
            if self.kind != "2":
                raise PipelineError("coincident stubs outside the 2-power case")
            self.end_with_coincident_stubs()
            return
        # degenerate joining path: the hat ending
        attaches = {}
        for j, port in enumerate(self.ports):
            attaches.setdefault(self.port_attach(port), []).append(j)
        shared = [v for v in attaches.values() if len(v) > 1]
        if shared:
            if self.kind != "3":
                raise PipelineError("shared stub attach outside the 3-power case")
            self.end_with_hats()
            return
        found = self.minimal_stub_path()
        if found is None:
            self.end_with_components()
            return
        alpha, ai, bi = self.normalize_step_path(found)
        self.apply_step_structure(alpha, ai, bi)

    # -- step normalization -------------------------------------------------

    def step_measure(self):
        self.refresh_stubs()
        found = self.minimal_stub_path()
        if found is None:
            return (0, 0)
        alpha, ai, bi = found
        L = len(alpha)
        if L <= 2 and self.classify_step(alpha, ai, bi) is not None:
            return (L, 0)
        return (L, 1)

    def classify_step(self, alpha, ai, bi):
        """'cycle' / 'tripod' / 'diagonal' when alpha is in normal form."""
        phi = self.phi
        graph = self.graph
        L = len(alpha)
        s = (bi - ai) % self.n
        if self.kind == "3" and L == 2 and _tripod_pattern(phi, alpha):
            if _verify_tripod_union(phi, alpha):
                return "tripod"
            return None
        if (
            self.kind == "2"
            and L == 1
            and power(phi, self.n // 2).perm[alpha[0]] == graph.theta[alpha[0]]
        ):
            diag = {graph.edge_of(self.pw(j)[alpha[0]]) for j in range(self.n)}
            if len(diag) == self.n // 2:
                return "diagonal"
            return None
        if L <= 2 and _verify_cycle_union(phi, alpha, s):
            return "cycle"
        return None

    def uniformity_ok(self, phi):
        if self.kind != "2":
            return True
        return all(edge_order(phi, e) == self.n for e in phi.graph.edges())

    def try_slide(self, alpha):
        try:
            spec = _second_edge_slide_spec(self.phi, alpha)
        except (MoveError, StopIteration):
            return False
        moved = transport(self.phi, spec)
        if isinstance(moved, NotInvariant) or not self.uniformity_ok(moved):
            return False
        self.der.apply_move(spec)
        return True

    def normalize_step_path(self, found):
        alpha, ai, bi = found
        measure = self.step_measure()
        while True:
            if self.classify_step(alpha, ai, bi) is not None:
                return alpha, ai, bi
            if len(alpha) < 3 or not self.try_slide(alpha):
                self.fallback_search()
            new_measure = self.step_measure()
            if not new_measure < measure:
                self.fallback_search()
                new_measure = self.step_measure()
                if not new_measure < measure:
                    raise PipelineError("step normalization failed to make progress")
            measure = new_measure
            self.refresh_stubs()
            found = self.minimal_stub_path()
            if found is None:
                raise PipelineError("step normalization lost the joining path")
            alpha, ai, bi = found

    def fallback_search(self):
        """Bounded search over invariant families for a measure decrease."""
        baseline = self.step_measure()
        start = self.phi
        frontier = [(start, [])]
        seen = {(start.graph, start.perm)}
        budget = 3000
        for _depth in range(4):
            next_frontier = []
            for cur, chain in frontier:
                for spec in self.filtered_moves(cur):
                    budget -= 1
                    if budget <= 0:
                        raise PipelineError("fallback search budget exhausted")
                    moved = transport(cur, spec)
                    if isinstance(moved, NotInvariant) or not self.uniformity_ok(moved):
                        continue
                    key = (moved.graph, moved.perm)
                    if key in seen:
                        continue
                    seen.add(key)
                    new_chain = chain + [spec]
                    measure = self.probe_measure(new_chain)
                    if measure < baseline:
                        for step_spec in new_chain:
                            self.der.apply_move(step_spec)
                        return
                    next_frontier.append((moved, new_chain))
            frontier = next_frontier
        raise PipelineError("fallback search found no progress")

    def probe_measure(self, chain):
        saved_steps = list(self.der.steps)
        saved_current = self.der.current
        try:
            for spec in chain:
                self.der.apply_move(spec)
            return self.step_measure()
        finally:
            self.der.steps = saved_steps
            self.der.current = saved_current

    def filtered_moves(self, phi):
        """Invariant families whose replaced edges lie strictly inside the
        unprocessed region: processed edges, cores, and the current
        terminal stubs survive every move untouched."""
        self.refresh_stubs()
        out = []
        for spec in enumerate_invariant_fmoves(phi, 5):
            ok = True
            for rep in spec:
                for e in rep.edges:
                    if (
                        e in self.core_edges
                        or e in self._stub_edges
                        or e[0] in self.sigma
                        or e[1] in self.sigma
                    ):
                        ok = False
            if ok:
                out.append(spec)
        return out

    # -- step endings and continuations ---------------------------------------

    def extend_stub_sigma(self):
        """Define sigma on the stub orbit, forced by the port action."""
        port = self.ports[0]
        kind, carrier = port
        graph = self.graph
        if kind == "q":
            return
        if kind == "h":
            outer = graph.theta[carrier]
            self.extend_orbit(outer, graph.theta[self.sigma[carrier]])
            return
        q = next(d for d in carrier if d not in self.sigma)
        c0 = self.port_offset()
        self.extend_edge_orbit(q, self.pw(c0)[q])

    def end_with_coincident_stubs(self):
        c0 = self.port_offset()
        port = self.ports[0]
        q = next(d for d in port[1] if d not in self.sigma)
        self.extend_edge_orbit(q, self.pw(c0)[q])
        if not self.finished():
            raise PipelineError("coincident-stub ending left darts uncovered")

    def end_with_hats(self):
        c0 = self.port_offset()
        port = self.ports[0]
        kind, carrier = port
        graph = self.graph
        if kind == "h":
            outer = graph.theta[carrier]
            self.extend_orbit(outer, graph.theta[self.sigma[carrier]])
        else:
            q = next(d for d in port[1] if d not in self.sigma)
            self.extend_edge_orbit(q, self.pw(c0)[q])
        if not self.finished():
            raise PipelineError("hat ending left darts uncovered")

    def end_with_components(self):
        c0 = self.port_offset()
        self.refresh_stubs()
        comp = self.component_darts(self.port_attach(self.ports[0]))
        for d in sorted(comp):
            if d not in self.sigma:
                self.extend_orbit(d, self.pw(c0)[d])
        if not self.finished():
            raise PipelineError("component ending left darts uncovered")

    def apply_step_structure(self, alpha, ai, bi):
        kind = self.classify_step(alpha, ai, bi)
        graph = self.graph
        n = self.n
        s = (bi - ai) % n
        attach0 = self.port_attach(self.ports[0])
        self.extend_stub_sigma()
        c0 = self.port_offset()
        if kind == "tripod":
            c = (c0 - 2 * ai) % n
            self.extend_edge_orbit(alpha[0], self.pw(c)[alpha[0]])
            self.set_ports("v", attach0)
            return
        if kind == "diagonal":
            c = (c0 - 2 * ai - s) % n
            self.extend_edge_orbit(alpha[0], self.pw(c)[graph.theta[alpha[0]]])
            self.set_ports("v", attach0)
            return
        if kind != "cycle":
            raise PipelineError("unclassified step structure")
        c = (c0 - 2 * ai - s) % n
        L = len(alpha)
        for i in range(L):
            self.extend_edge_orbit(alpha[i], self.pw(c)[graph.theta[alpha[L - 1 - i]]])
        if L == 2:
            middle = graph.vertex_of(alpha[1])
            self.set_ports("v", middle)
        elif not self.finished():
            raise PipelineError("single-edge cycle step did not close the graph")


# -- the public pipeline -------------------------------------------------------


def factor_into_involutions(phi: Automorphism):
    """F-equivalently rewrite phi as tau after sigma with both involutions.

    For orders coprime to six and odd multiples of three this is the
    growing-subgraph recursion directly; for two-power orders the edge
    orders are first made uniform (recording switch compositions), so the
    derivation may mix switches and moves.  Orders of at most two are
    rejected: involutions are reduced directly, without factoring.
    """
    n = order(phi)
    if n <= 2:
        raise PipelineError("orders up to two are reduced directly, not factored")
    return _factor_involutions_any(phi)


def _factor_involutions_any(phi: Automorphism):
    n = order(phi)
    if n == 1:
        raise PipelineError("nothing to factor in the identity")
    if n % 6 == 0:
        raise PipelineError("orders divisible by six are split by primary decomposition")
    if n % 2 == 0:
        der = reduce_edge_orders(phi)
        if der.current.is_identity():
            return der, identity(der.current.graph), identity(der.current.graph)
        onion = _Onion(der.current, "2")
        der2, sigma, tau = onion.run()
        der.steps.extend(der2.steps)
        der.current = der2.current
        return der, sigma, tau
    kind = "3" if n % 3 == 0 else "p"
    onion = _Onion(phi, kind)
    return onion.run()


def _pointwise_fixed_edge(phi: Automorphism):
    for e in phi.graph.edges():
        if phi.perm[e[0]] == e[0] and phi.perm[e[1]] == e[1]:
            return e
    return None


def _reversed_invariant_edge(phi: Automorphism):
    for e in phi.graph.edges():
        if phi.perm[e[0]] == e[1] and not phi.graph.is_loop(e):
            return e
    return None


def _reversal_fixing_move(phi: Automorphism, e):
    """The invariant edge move turning a reversed edge into a fixed one."""
    graph = phi.graph
    v, w = graph.ends(e)
    p1, p2 = sorted(d for d in v if d not in e)
    target = frozenset(
        {
            frozenset(
                {frozenset({p1, phi.perm[p1]}), frozenset({p2, phi.perm[p2]})}
            )
        }
    )
    return FMoveSpec([Replacement([v, w], [e], target)])


def reduce_order2(phi: Automorphism) -> Certificate:
    """Certificate for an involution that fixes an edge or reverses an
    invariant one, via edge-order reduction down to the identity."""
    if phi.is_identity():
        return IdentityLeaf(phi.graph)
    if order(phi) != 2:
        raise PipelineError("reduce_order2 needs an involution")
    if _pointwise_fixed_edge(phi) is not None:
        der = reduce_edge_orders(phi)
        if not der.current.is_identity():
            raise PipelineError("an involution with a fixed edge must reduce to the identity")
        return der.unwind(IdentityLeaf(der.current.graph))
    e = _reversed_invariant_edge(phi)
    if e is None:
        raise PipelineError("involution with neither a fixed nor a reversed invariant edge")
    der = Derivation(phi)
    der.apply_move(_reversal_fixing_move(phi, e))
    if _pointwise_fixed_edge(der.current) is None:
        raise PipelineError("reversal-fixing move produced no fixed edge")
    return der.unwind(reduce_order2(der.current))


def _prime_power_certificate(psi: Automorphism) -> Certificate:
    n = order(psi)
    if n == 1:
        return IdentityLeaf(psi.graph)
    if n == 2:
        if _pointwise_fixed_edge(psi) is not None or _reversed_invariant_edge(psi) is not None:
            return reduce_order2(psi)
    der, sigma, tau = _factor_involutions_any(psi)
    graph_r = der.current.graph
    if sigma.is_identity() and tau.is_identity():
        inner = IdentityLeaf(graph_r)
    else:
        inner = ComposeNode(graph_r, [reduce_order2(tau), reduce_order2(sigma)])
    return der.unwind(inner)


def decompose(phi: Automorphism) -> Certificate:
    """A switch/composition/transport certificate evaluating to phi."""
    check_valid(phi.graph)
    if phi.is_identity():
        return IdentityLeaf(phi.graph)
    factors = primary_decomposition(phi)
    certs = [_prime_power_certificate(f) for f in factors]
    if len(certs) == 1:
        cert = certs[0]
    else:
        cert = ComposeNode(phi.graph, certs)
    ok, diag = verify_certificate(cert, phi)
    if not ok:
        raise PipelineError("decomposition certificate failed verification: %s" % diag)
    return cert


# -- the graph-level step normalization (terminal-edge orbits) -------------------


def normalize_step(phi: Automorphism, alpha=None):
    """Normalize a minimal path joining equivalent terminal edges of the
    graph itself; returns (phi', structure, derivation)."""
    n = order(phi)
    if n <= 1:
        raise PipelineError("normalize_step needs a nontrivial automorphism")
    graph = phi.graph
    leaves = [c for c in graph.cells if len(c) == 1]
    if not leaves:
        raise PipelineError("the graph has no terminal edges")
    moved = [c for c in leaves if phi.apply_vertex(c) != c]
    if not moved:
        raise PipelineError("no terminal-edge orbit has two distinct members")
    base = min(moved)
    if n % 2 == 0:
        kind = "2"
    elif n % 3 == 0:
        kind = "3"
    else:
        kind = "p"
    onion = _Onion.__new__(_Onion)
    onion.kind = kind
    onion.der = Derivation(phi)
    onion.n = n
    onion.sigma = {}
    onion.core_edges = set()
    onion.set_ports("v", base)
    onion.refresh_stubs()
    if len({onion.port_attach(p) for p in onion.ports}) < n:
        struct = CycleStructure("hat", n, None)
        return phi, struct, onion.der
    found = onion.minimal_stub_path()
    if found is None:
        raise PipelineError("no path joins distinct terminal edges of the orbit")
    if alpha is not None and len(alpha) != len(found[0]):
        raise PipelineError("supplied path is not minimal")
    a2, ai, bi = onion.normalize_step_path(found)
    kind2 = onion.classify_step(a2, ai, bi)
    s = (bi - ai) % n
    struct = CycleStructure(
        kind2, n, a2, s=s if kind2 in ("cycle", "diagonal") else None, base=ai
    )
    return onion.der.current, struct, onion.der
