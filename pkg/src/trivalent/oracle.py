"""Brute-force ground truth: F-equivalence BFS, closure of the switch set,
and connectivity of the elementary-move graph.

States are (graph, automorphism) pairs up to simultaneous relabeling, so
the search works on abstract pairs exactly as the equivalence is defined.
Inconclusive answers are first-class: the generated relation carries no a
priori bound, so running out of budget never counts as a "no".
"""

from __future__ import annotations

from collections import deque

from trivalent.autos import (
    Automorphism,
    all_switches,
    automorphism_group,
    order,
)
from trivalent.graphs import (
    Graph,
    canonical_dart_map,
    canonical_form,
    canonical_graph,
    enumerate_iso_classes,
    isomorphism,
)
from trivalent.moves import (
    COUPLINGS,
    NotInvariant,
    apply_edge_fmove,
    enumerate_invariant_fmoves,
    transport,
)


class OracleBudgetExceeded(RuntimeError):
    pass


def conjugate_to_canonical(phi: Automorphism) -> Automorphism:
    """The image of phi on the canonical representative of its graph."""
    graph = phi.graph
    m = canonical_dart_map(graph)
    target = canonical_graph(graph)
    perm = [0] * graph.n_darts
    for d in range(graph.n_darts):
        perm[m[d]] = m[phi.perm[d]]
    return Automorphism(target, perm)


def state_key(phi: Automorphism):
    """Canonical code of the pair (graph, automorphism).

    Equal keys exactly when the pairs are isomorphic as graphs with a
    distinguished automorphism: the graph code is canonical, and the dart
    map is minimized over the automorphism group of the canonical graph.
    """
    canon = conjugate_to_canonical(phi)
    graph = canon.graph
    best = None
    for a in automorphism_group(graph):
        inv = [0] * graph.n_darts
        for d in range(graph.n_darts):
            inv[a.perm[d]] = d
        conj = tuple(a.perm[canon.perm[inv[d]]] for d in range(graph.n_darts))
        if best is None or conj < best:
            best = conj
    return (canonical_form(graph), best)


class EquivalenceResult:
    """yes(path) / no / inconclusive, with the witnessing move chain."""

    def __init__(self, status, path=None, states=0):
        self.status = status
        self.path = path or []
        self.states = states

    @property
    def definitely_yes(self):
        return self.status == "yes"

    @property
    def definitely_no(self):
        return self.status == "no"

    def __repr__(self):
        return "EquivalenceResult(%r, path_len=%d)" % (self.status, len(self.path))


def f_equivalent(
    phi: Automorphism, psi: Automorphism, budget: int = 2000, max_tree_ends: int = 6
) -> EquivalenceResult:
    """Breadth-first search for a chain of invariant moves from phi to psi."""
    g1, g2 = phi.graph, psi.graph
    if (g1.g, g1.b) != (g2.g, g2.b):
        return EquivalenceResult("no")
    if order(phi) != order(psi):
        # orders are preserved by every invariant move
        return EquivalenceResult("no")
    goal = state_key(psi)
    start_key = state_key(phi)
    if start_key == goal:
        return EquivalenceResult("yes", [])
    seen = {start_key}
    queue = deque([(phi, [])])
    explored = 0
    while queue:
        current, path = queue.popleft()
        explored += 1
        if explored > budget:
            return EquivalenceResult("inconclusive", states=explored)
        for spec in enumerate_invariant_fmoves(current, max_tree_ends):
            image = transport(current, spec)
            if isinstance(image, NotInvariant):
                continue
            key = state_key(image)
            if key in seen:
                continue
            seen.add(key)
            new_path = path + [(current, spec)]
            if key == goal:
                return EquivalenceResult("yes", new_path, states=explored)
            queue.append((image, new_path))
    return EquivalenceResult("no", states=explored)


# -- the closure of the switches ------------------------------------------------


class ClosureReport:
    """Per-class subsets of the automorphism groups reached from switches."""

    def __init__(self, g, b, reps, reached, saturated, states):
        self.g = g
        self.b = b
        self.reps = reps
        self.reached = reached
        self.saturated = saturated
        self.states = states

    def is_full(self) -> bool:
        return all(
            len(self.reached[i]) == len(automorphism_group(rep))
            for i, rep in enumerate(self.reps)
        )

    def summary_lines(self):
        from trivalent.graphs import graph_digest

        lines = []
        for i, rep in enumerate(self.reps):
            total = len(automorphism_group(rep))
            got = len(self.reached[i])
            lines.append(
                "class %s aut=%d closure=%d %s"
                % (graph_digest(rep), total, got, "full" if got == total else "PARTIAL")
            )
        lines.append(
            "closure %s after %d state expansions"
            % ("saturated" if self.saturated else "NOT saturated", self.states)
        )
        lines.append("theorem holds: %s" % ("yes" if self.is_full() else "no"))
        return lines


def _subgroup_closure(graph: Graph, perms: set):
    """Close a set of dart permutations of one graph under composition."""
    idn = tuple(range(graph.n_darts))
    closed = {idn} | set(perms)
    frontier = list(closed)
    while frontier:
        new = []
        for p in frontier:
            for q in list(closed):
                for r in (
                    tuple(p[q[d]] for d in range(len(p))),
                    tuple(q[p[d]] for d in range(len(p))),
                ):
                    if r not in closed:
                        closed.add(r)
                        new.append(r)
        frontier = new
    return closed


def closure_E(
    g: int, b: int, budget: int = 20000, max_tree_ends: int = 6, edge_cap: int = 12
) -> ClosureReport:
    """Least subset containing all switches, closed under composition and
    one-step invariant moves, computed per isomorphism class."""
    reps = enumerate_iso_classes(g, b, edge_cap)
    index = {canonical_form(r): i for i, r in enumerate(reps)}
    reached = [set() for _ in reps]
    for i, rep in enumerate(reps):
        perms = {s.perm for _, _, s in all_switches(rep)}
        reached[i] = _subgroup_closure(rep, perms)
    pending = deque()
    seen_states = set()
    for i, rep in enumerate(reps):
        for perm in reached[i]:
            pending.append((i, perm))
            seen_states.add((i, perm))
    states = 0
    saturated = True
    while pending:
        states += 1
        if states > budget:
            saturated = False
            break
        i, perm = pending.popleft()
        rep = reps[i]
        phi = Automorphism(rep, perm, _skip_checks=True)
        for spec in enumerate_invariant_fmoves(phi, max_tree_ends):
            image = transport(phi, spec)
            if isinstance(image, NotInvariant):
                continue
            target = image.graph
            j = index[canonical_form(target)]
            iso = isomorphism(target, reps[j])
            conj = [0] * target.n_darts
            for d in range(target.n_darts):
                conj[iso[d]] = iso[image.perm[d]]
            conj = tuple(conj)
            if conj in reached[j]:
                continue
            # membership is a property of the abstract pair, so the whole
            # conjugacy orbit under Aut(rep) arrives together
            orbit = set()
            for a in automorphism_group(reps[j]):
                inv = [0] * len(conj)
                for d in range(len(conj)):
                    inv[a.perm[d]] = d
                orbit.add(tuple(a.perm[conj[inv[d]]] for d in range(len(conj))))
            before = reached[j]
            after = _subgroup_closure(reps[j], before | orbit)
            reached[j] = after
            for new_perm in after - before:
                if (j, new_perm) not in seen_states:
                    seen_states.add((j, new_perm))
                    pending.append((j, new_perm))
    return ClosureReport(g, b, reps, reached, saturated, states)


def smallest_sufficient_tree_ends(g: int, b: int, budget: int = 20000):
    """The least max_tree_ends in 4..6 whose closure already saturates."""
    for ends in (4, 5, 6):
        report = closure_E(g, b, budget=budget, max_tree_ends=ends)
        if report.saturated and report.is_full():
            return ends, report
    return None, report


# -- connectivity of the elementary-move graph -----------------------------------


def move_graph_components(g: int, b: int, edge_cap: int = 12):
    """Partition of the iso classes under single elementary edge moves."""
    reps = enumerate_iso_classes(g, b, edge_cap)
    codes = [canonical_form(r) for r in reps]
    index = {c: i for i, c in enumerate(codes)}
    parent = list(range(len(reps)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[rx] = ry

    for i, rep in enumerate(reps):
        for e in rep.edges():
            if rep.classify_edge(e) != "internal" or rep.is_loop(e):
                continue
            for c in COUPLINGS:
                image = apply_edge_fmove(rep, e, c).graph
                union(i, index[canonical_form(image)])
    groups = {}
    for i in range(len(reps)):
        groups.setdefault(find(i), []).append(codes[i])
    return sorted(sorted(v) for v in groups.values())
