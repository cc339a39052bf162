"""F-moves on dart graphs: elementary edge moves, tree moves, families.

A move site is a set of trivalent vertex cells spanned by a tree of
internal edges.  Removing the site's cells frees m = |cells| + 2 boundary
darts; the replacement is described by a system of m-3 splits (the
bipartitions induced by the internal edges of the new tree) over those
boundary darts.  Darts and the edge involution never change, so an edge
keeps its identity across a move and certificates can replay moves
bit-exactly.  Working with boundary darts rather than neighbor edges
makes moves at sites whose outer edges coincide (loops, parallel edges)
well-defined.
"""

from __future__ import annotations

from trivalent.autos import Automorphism, AutomorphismError, order
from trivalent.graphs import Graph, ParseError, validate


class MoveError(ValueError):
    pass


class NotInvariant:
    """Returned by transport when the move is not invariant; holds why."""

    def __init__(self, reason):
        self.reason = reason

    def __repr__(self):
        return "NotInvariant(%r)" % (self.reason,)

    def __bool__(self):
        return False


# -- sites, splits, replacements ----------------------------------------------


def site_key(cells, edges):
    return (tuple(sorted(cells)), tuple(sorted(edges)))


def split_key(split):
    return tuple(sorted(tuple(sorted(side)) for side in split))


def target_key(target):
    return tuple(sorted(split_key(s) for s in target))


class Replacement:
    """One tree replacement: a site plus the target split system.

    `assignment` optionally pins which reused internal dart lands on which
    side of each target split, as a set of (dart, side) pairs; without it
    the low dart of each pair goes to the lexicographically smaller side.
    Inverse moves record the source placement here so that applying a move
    and then its inverse reproduces the original graph bit for bit.  The
    assignment decorates the move without entering its identity key.
    """

    __slots__ = ("cells", "edges", "target", "assignment", "_key")

    def __init__(self, cells, edges, target, assignment=None):
        self.cells = frozenset(cells)
        self.edges = frozenset(tuple(sorted(e)) for e in edges)
        self.target = frozenset(frozenset(frozenset(side) for side in s) for s in target)
        if assignment is None:
            self.assignment = None
        else:
            self.assignment = frozenset((d, frozenset(side)) for d, side in assignment)
        self._key = (site_key(self.cells, self.edges), target_key(self.target))

    def key(self):
        return self._key

    def __eq__(self, other):
        return isinstance(other, Replacement) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return "Replacement(site=%r)" % (sorted(self.cells),)


class FMoveSpec:
    """A family of simultaneous replacements with pairwise disjoint sites."""

    __slots__ = ("replacements", "_key")

    def __init__(self, replacements):
        reps = sorted(replacements, key=lambda r: r.key())
        self.replacements = tuple(reps)
        self._key = tuple(r.key() for r in reps)

    def key(self):
        return self._key

    def __eq__(self, other):
        return isinstance(other, FMoveSpec) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __len__(self):
        return len(self.replacements)

    def __iter__(self):
        return iter(self.replacements)

    def __repr__(self):
        return "FMoveSpec(%d replacements)" % len(self.replacements)


def boundary_darts(graph: Graph, cells, edges):
    internal = set()
    for e in edges:
        internal.update(e)
    out = []
    for cell in cells:
        for d in cell:
            if d not in internal:
                out.append(d)
    return sorted(out)


def check_site(graph: Graph, cells, edges):
    """A site must be a tree of trivalent cells joined by internal edges."""
    cells = sorted(cells)
    edges = sorted(tuple(sorted(e)) for e in edges)
    if len(cells) < 2:
        raise MoveError("a site needs at least two vertices (m >= 4 free ends)")
    cellset = set(cells)
    for c in cells:
        if c not in graph.cells:
            raise MoveError("%r is not a vertex of the graph" % (c,))
        if len(c) != 3:
            raise MoveError("site vertex %r is not trivalent" % (c,))
    if len(edges) != len(cells) - 1:
        raise MoveError("site needs |cells|-1 internal edges")
    adj = {c: [] for c in cells}
    for e in edges:
        if e[1] != graph.theta[e[0]]:
            raise MoveError("%r is not an edge" % (e,))
        v, w = graph.ends(e)
        if v == w:
            raise MoveError("internal site edge %r is a loop" % (e,))
        if v not in cellset or w not in cellset:
            raise MoveError("internal site edge %r leaves the site" % (e,))
        adj[v].append(w)
        adj[w].append(v)
    if len(set(edges)) != len(edges):
        raise MoveError("repeated internal edge")
    seen = {cells[0]}
    stack = [cells[0]]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    if len(seen) != len(cells):
        raise MoveError("site edges do not span the site vertices")


def source_splits(graph: Graph, cells, edges, with_assignment=False):
    """The split system induced by the site's current tree structure."""
    bdarts = set(boundary_darts(graph, cells, edges))
    splits = set()
    placement = set()
    edges = [tuple(sorted(e)) for e in edges]
    for e in edges:
        side = set()
        stack = [graph.vertex_of(e[0])]
        seen = {graph.vertex_of(e[0])}
        while stack:
            v = stack.pop()
            for d in v:
                if d in bdarts:
                    side.add(d)
                f = graph.edge_of(d)
                if f == e or f not in edges:
                    continue
                for x in f:
                    w = graph.vertex_of(x)
                    if w in cells and w not in seen:
                        seen.add(w)
                        stack.append(w)
        other = frozenset(bdarts - side)
        splits.add(frozenset({frozenset(side), other}))
        placement.add((e[0], frozenset(side)))
    if with_assignment:
        return frozenset(splits), frozenset(placement)
    return frozenset(splits)


def _split_dart_assignment(edges, target, override=None):
    """Assign the reused internal dart pairs to the target splits.

    With no override, the i-th sorted dart pair serves the i-th sorted
    split, low dart on the lexicographically smaller side; an override
    set of (dart, side) pairs pins the placement explicitly.
    """
    pairs = sorted(tuple(sorted(e)) for e in edges)
    if override is not None:
        partner = {}
        for a, b in pairs:
            partner[a], partner[b] = b, a
        by_side = {frozenset(side): d for d, side in override}
        assign = {}
        for split in target:
            sides = [frozenset(side) for side in split]
            placed = [s for s in sides if s in by_side]
            if len(placed) != 1:
                raise MoveError("override must place exactly one dart per split")
            d = by_side[placed[0]]
            other = sides[0] if sides[1] == placed[0] else sides[1]
            assign[frozenset(split)] = {placed[0]: d, other: partner[d]}
        if len(assign) != len(pairs):
            raise MoveError("override does not cover every split")
        used = sorted(tuple(sorted(m.values())) for m in assign.values())
        if used != pairs:
            raise MoveError("override does not use the site's dart pairs")
        return assign
    splits = sorted(target, key=split_key)
    assign = {}
    for pair, split in zip(pairs, splits):
        low, high = pair
        sides = sorted(split, key=lambda side: tuple(sorted(side)))
        assign[frozenset(split)] = {frozenset(sides[0]): low, frozenset(sides[1]): high}
    return assign


def _build_cells(bdarts, target, assign):
    """Cells of the replacement tree, via repeated cherry collapse."""
    if len(bdarts) < 3:
        raise MoveError("fewer than three boundary darts")
    if len(target) != len(bdarts) - 3:
        raise MoveError("target needs %d splits, has %d" % (len(bdarts) - 3, len(target)))
    reps = {d: d for d in bdarts}
    leaves = set(bdarts)
    remaining = {frozenset(s): [frozenset(side) for side in sorted(s, key=lambda x: tuple(sorted(x)))] for s in target}
    for s, sides in remaining.items():
        union = sides[0] | sides[1]
        if sides[0] & sides[1] or union != frozenset(bdarts):
            raise MoveError("split does not bipartition the boundary darts")
        if min(len(sides[0]), len(sides[1])) < 2:
            raise MoveError("trivial split")
    cells = []
    work = dict(remaining)
    while work:
        progressed = False
        for s in sorted(work, key=split_key):
            for side in work[s]:
                img = {reps[d] for d in side}
                if len(img) == 2:
                    d_in = assign[s][side]
                    other = next(x for x in work[s] if x != side)
                    d_out = assign[s][other]
                    cells.append(tuple(sorted(img | {d_in})))
                    for d in side:
                        reps[d] = d_out
                    leaves -= img
                    leaves.add(d_out)
                    del work[s]
                    progressed = True
                    break
            if progressed:
                break
        if not progressed:
            raise MoveError("incompatible split system")
    final = {reps[d] for d in bdarts}
    if len(final) != 3:
        raise MoveError("split system does not resolve to a trivalent tree")
    cells.append(tuple(sorted(final)))
    return cells


# -- applying moves ------------------------------------------------------------


class EdgeCorrespondence:
    """Edge identity map across a move, with the replaced site edges marked."""

    def __init__(self, graph, new_graph, replaced):
        self.edge_map = {e: e for e in graph.edges()}
        self.replaced = frozenset(replaced)

    def __getitem__(self, edge):
        return self.edge_map[tuple(sorted(edge))]


class MoveResult:
    __slots__ = ("graph", "correspondence", "inverse")

    def __init__(self, graph, correspondence, inverse):
        self.graph = graph
        self.correspondence = correspondence
        self.inverse = inverse


def validate_spec(graph: Graph, spec: FMoveSpec):
    used_cells = set()
    for rep in spec:
        check_site(graph, rep.cells, rep.edges)
        if used_cells & rep.cells:
            raise MoveError("sites share a vertex")
        used_cells |= rep.cells
        src = source_splits(graph, rep.cells, rep.edges)
        if frozenset(rep.target) == src:
            raise MoveError("replacement tree equals the source tree")


def apply_fmove(graph: Graph, spec: FMoveSpec) -> MoveResult:
    """Apply a family of tree replacements; (g, b) and all counts persist."""
    validate_spec(graph, spec)
    site_cells = set()
    replaced = set()
    new_cells = []
    inverse_reps = []
    for rep in spec:
        site_cells |= rep.cells
        replaced |= rep.edges
        bdarts = boundary_darts(graph, rep.cells, rep.edges)
        assign = _split_dart_assignment(rep.edges, rep.target, rep.assignment)
        built = _build_cells(bdarts, rep.target, assign)
        new_cells.extend(built)
        src, placement = source_splits(graph, rep.cells, rep.edges, with_assignment=True)
        inverse_reps.append((built, rep.edges, src, placement))
    for cell in graph.cells:
        if cell not in site_cells:
            new_cells.append(cell)
    new_graph = Graph(graph.theta, new_cells, graph.g, graph.b)
    report = validate(new_graph)
    if not report:
        raise MoveError("move produced an invalid graph: %s" % "; ".join(report.problems))
    inverse = FMoveSpec(
        [
            Replacement(cells, edges, target, assignment=placement)
            for cells, edges, target, placement in inverse_reps
        ]
    )
    return MoveResult(new_graph, EdgeCorrespondence(graph, new_graph, replaced), inverse)


COUPLINGS = ("pair-low", "pair-cross")


def edge_move_targets(graph: Graph, e):
    """The two alternative couplings at an internal non-loop edge."""
    e = tuple(sorted(e))
    v, w = graph.ends(e)
    if len(v) != 3 or len(w) != 3:
        raise MoveError("edge %r is terminal" % (e,))
    if v == w:
        raise MoveError("edge %r is a loop" % (e,))
    p = sorted(d for d in v if d not in e)
    q = sorted(d for d in w if d not in e)
    low = frozenset({frozenset({frozenset({p[0], q[0]}), frozenset({p[1], q[1]})})})
    cross = frozenset({frozenset({frozenset({p[0], q[1]}), frozenset({p[1], q[0]})})})
    return {"pair-low": low, "pair-cross": cross}


def edge_move_spec(graph: Graph, e, coupling) -> FMoveSpec:
    if coupling not in COUPLINGS:
        raise MoveError("coupling must be one of %r" % (COUPLINGS,))
    e = tuple(sorted(e))
    targets = edge_move_targets(graph, e)
    v, w = graph.ends(e)
    return FMoveSpec([Replacement([v, w], [e], targets[coupling])])


def apply_edge_fmove(graph: Graph, e, coupling) -> MoveResult:
    """The elementary edge F-move, replacing one internal edge's coupling."""
    return apply_fmove(graph, edge_move_spec(graph, e, coupling))


# -- transport -----------------------------------------------------------------


def map_replacement(phi: Automorphism, rep: Replacement) -> Replacement:
    cells = [phi.apply_vertex(c) for c in rep.cells]
    edges = [phi.apply_edge(e) for e in rep.edges]
    target = [
        [sorted(phi.perm[d] for d in side) for side in s] for s in rep.target
    ]
    assignment = None
    if rep.assignment is not None:
        assignment = [(phi.perm[d], [phi.perm[x] for x in side]) for d, side in rep.assignment]
    return Replacement(cells, edges, target, assignment=assignment)


def transport(phi: Automorphism, spec: FMoveSpec):
    """Carry phi across the move, or say why the move is not invariant.

    The family must be phi-closed with equivariant targets; the unique
    candidate extension agrees with phi away from the sites and follows
    the split correspondence on the reused internal darts.
    """
    graph = phi.graph
    byname = {r.key(): r for r in spec}
    image_of = {}
    for rep in spec:
        img = map_replacement(phi, rep)
        if img.key() not in byname:
            if site_key(img.cells, img.edges) in {site_key(r.cells, r.edges) for r in spec}:
                return NotInvariant("replacement targets are not phi-equivariant")
            return NotInvariant("the family of subtrees is not phi-invariant")
        image_of[rep.key()] = img
    result = apply_fmove(graph, spec)
    new_graph = result.graph
    perm = list(phi.perm)
    for rep in spec:
        img = image_of[rep.key()]
        actual = byname[img.key()]
        assign_src = _split_dart_assignment(rep.edges, rep.target, rep.assignment)
        assign_dst = _split_dart_assignment(actual.edges, actual.target, actual.assignment)
        for s in rep.target:
            sides = list(s)
            s_img = frozenset(frozenset(phi.perm[d] for d in side) for side in s)
            for side in sides:
                side_img = frozenset(phi.perm[d] for d in side)
                d_src = assign_src[frozenset(s)][frozenset(side)]
                d_dst = assign_dst[s_img][side_img]
                perm[d_src] = d_dst
    try:
        phi2 = Automorphism(new_graph, perm)
    except AutomorphismError as exc:
        return NotInvariant("no automorphism extends over the replacement: %s" % exc)
    return phi2


def transport_back(spec_result: MoveResult, psi: Automorphism):
    """Transport an automorphism of the moved graph back across the move."""
    return transport(psi, spec_result.inverse)


# -- enumeration of invariant families -----------------------------------------


def all_sites(graph: Graph, max_site_vertices: int):
    """Every (cells, tree-edges) site with at most the given vertex count."""
    tri = [c for c in graph.cells if len(c) == 3]
    internal = [
        e
        for e in graph.edges()
        if not graph.is_loop(e)
        and len(graph.vertex_of(e[0])) == 3
        and len(graph.vertex_of(e[1])) == 3
    ]
    sites = []
    seen = set()

    def grow(cells, edges):
        key = site_key(cells, edges)
        if key in seen:
            return
        seen.add(key)
        if len(cells) >= 2:
            sites.append((frozenset(cells), frozenset(edges)))
        if len(cells) >= max_site_vertices:
            return
        for e in internal:
            if e in edges:
                continue
            v, w = graph.ends(e)
            inside = (v in cells) + (w in cells)
            if inside != 1:
                continue
            new_cell = w if v in cells else v
            grow(cells | {new_cell}, edges | {e})

    for c in tri:
        grow(frozenset([c]), frozenset())
    unique = {}
    for cells, edges in sites:
        unique[site_key(cells, edges)] = (cells, edges)
    return [unique[k] for k in sorted(unique)]


def all_split_systems(leaves):
    """Every trivalent-tree split system on the given leaf darts."""
    leaves = sorted(leaves)
    if len(leaves) < 3:
        raise MoveError("need at least three leaves")
    systems = [frozenset()]
    placed = leaves[:3]
    rest = frozenset(leaves)
    for x in leaves[3:]:
        grown = []
        for sys in systems:
            # attach x at the pendant edge of an existing leaf y
            for y in leaves[: leaves.index(x)]:
                new = set()
                ok = True
                for s in sys:
                    sides = list(s)
                    a, b = sides
                    if y in a:
                        new.add(frozenset({frozenset(a | {x}), frozenset(b)}))
                    else:
                        new.add(frozenset({frozenset(a), frozenset(b | {x})}))
                pend = frozenset({frozenset({x, y}), frozenset(set(leaves[: leaves.index(x) + 1]) - {x, y})})
                new.add(pend)
                grown.append(frozenset(new))
            # attach x inside an existing internal edge s0
            for s0 in sys:
                a0, b0 = list(s0)
                new = set()
                for s in sys:
                    if s == s0:
                        continue
                    a, b = list(s)
                    if a0 < a or b0 < a:
                        new.add(frozenset({frozenset(a | {x}), frozenset(b)}))
                    else:
                        new.add(frozenset({frozenset(a), frozenset(b | {x})}))
                new.add(frozenset({frozenset(a0 | {x}), frozenset(b0)}))
                new.add(frozenset({frozenset(a0), frozenset(b0 | {x})}))
                grown.append(frozenset(new))
        systems = grown
        placed.append(x)
    return systems


def _site_orbit(phi: Automorphism, cells, edges):
    """The phi-orbit of a site, or None if its members overlap."""
    orbit = [(cells, edges)]
    cur_c, cur_e = cells, edges
    while True:
        cur_c = frozenset(phi.apply_vertex(c) for c in cur_c)
        cur_e = frozenset(phi.apply_edge(e) for e in cur_e)
        if (cur_c, cur_e) == (cells, edges):
            break
        orbit.append((cur_c, cur_e))
    used = set()
    for c, _ in orbit:
        if used & c:
            return None
        used |= c
    return orbit


def _map_target(phi: Automorphism, target):
    return frozenset(
        frozenset(frozenset(phi.perm[d] for d in side) for side in s) for s in target
    )


def enumerate_invariant_fmoves(phi: Automorphism, max_tree_ends: int = 6):
    """All phi-invariant families with trees of at most max_tree_ends ends.

    Families are unions of phi-orbits of sites with disjoint vertex
    supports; each orbit carries an equivariant assignment of targets,
    pinned down by a stabilizer-invariant target on the orbit leader.
    """
    if max_tree_ends < 4:
        raise MoveError("max_tree_ends must be at least 4")
    graph = phi.graph
    sites = all_sites(graph, max_tree_ends - 2)
    orbit_of = {}
    orbits = []
    for cells, edges in sites:
        key = site_key(cells, edges)
        if key in orbit_of:
            continue
        orbit = _site_orbit(phi, cells, edges)
        if orbit is None:
            for_keys = [key]
        else:
            for_keys = [site_key(c, e) for c, e in orbit]
            orbits.append(orbit)
        for k in for_keys:
            orbit_of[k] = orbit
    # leader targets: stabilizer-invariant split systems, excluding the source
    decorated = []
    for orbit in orbits:
        cells, edges = orbit[0]
        bdarts = boundary_darts(graph, cells, edges)
        src = source_splits(graph, cells, edges)
        stab = _stabilizer_power(phi, orbit)
        options = []
        for target in all_split_systems(bdarts):
            if target == src:
                continue
            if stab is not None and _map_target(stab, target) != target:
                continue
            options.append(target)
        if options:
            decorated.append((orbit, options))
    # combine vertex-disjoint orbit choices
    results = []

    def covered(orbit):
        out = set()
        for c, _ in orbit:
            out |= c
        return out

    def rec(i, chosen, used):
        if chosen:
            for combo in _target_combos(phi, chosen):
                results.append(FMoveSpec(combo))
        for j in range(i, len(decorated)):
            orbit, options = decorated[j]
            cov = covered(orbit)
            if cov & used:
                continue
            rec_chosen = chosen + [(orbit, options)]
            rec(j + 1, rec_chosen, used | cov)

    def _target_combos(phi, chosen):
        if not chosen:
            yield []
            return
        (orbit, options), rest = chosen[0], chosen[1:]
        for tail in _target_combos(phi, rest):
            for target in options:
                reps = []
                cur = target
                for cells, edges in orbit:
                    reps.append(Replacement(cells, edges, cur))
                    cur = _map_target(phi, cur)
                yield reps + tail

    rec(0, [], set())
    unique = {}
    for spec in results:
        unique[spec.key()] = spec
    return [unique[k] for k in sorted(unique)]


def _stabilizer_power(phi: Automorphism, orbit):
    """phi^len(orbit) if it stabilizes the leader site, else None."""
    r = len(orbit)
    n = order(phi)
    if r % n == 0 or r == 0:
        return None
    from trivalent.autos import power

    stab = power(phi, r)
    if stab.is_identity():
        return None
    return stab


# -- text format -----------------------------------------------------------------
#
#   fmove
#   tree <edge>* -> coupling <nested parens over boundary darts>
#
# Edges print as dart pairs d:d'; the coupling expression is a rooted
# rendering of the target tree whose leaves are boundary dart ids.


def _render_target(bdarts, target):
    # root the tree at the largest boundary dart
    root = max(bdarts)

    def render(at_leaves, splits):
        if len(at_leaves) == 1:
            return str(next(iter(at_leaves)))
        best = None
        for s in splits:
            for side in s:
                if side == at_leaves:
                    continue
                if side < at_leaves:
                    if best is None or len(side) > len(best):
                        best = side
        if best is None:
            parts = sorted(at_leaves)
            return "(%s)" % " ".join(str(p) for p in parts)
        rest = at_leaves - best
        sub = [render(frozenset(best), splits), render(frozenset(rest), splits)]
        return "(%s)" % " ".join(sorted(sub))

    others = frozenset(set(bdarts) - {root})
    return "(%s %s)" % (root, render(others, target))


def format_fmove(graph: Graph, spec: FMoveSpec) -> str:
    lines = ["fmove"]
    for rep in spec.replacements:
        edges = " ".join("%d:%d" % e for e in sorted(rep.edges))
        bdarts = boundary_darts(graph, rep.cells, rep.edges)
        lines.append("tree %s -> coupling %s" % (edges, _render_target(bdarts, rep.target)))
    return "\n".join(lines) + "\n"


def tokenize_sexpr(text):
    out = []
    token = ""
    for ch in text:
        if ch in "()":
            if token:
                out.append(token)
                token = ""
            out.append(ch)
        elif ch.isspace():
            if token:
                out.append(token)
                token = ""
        else:
            token += ch
    if token:
        out.append(token)
    return out


def read_sexpr(tokens, pos):
    if pos >= len(tokens):
        raise ParseError("unexpected end of expression")
    if tokens[pos] != "(":
        return tokens[pos], pos + 1
    pos += 1
    items = []
    while pos < len(tokens) and tokens[pos] != ")":
        item, pos = read_sexpr(tokens, pos)
        items.append(item)
    if pos >= len(tokens):
        raise ParseError("unbalanced parentheses")
    return items, pos + 1


def _coupling_splits(expr, bdarts):
    """Splits of the target tree from its parenthesized rendering."""
    m = len(bdarts)
    ball = frozenset(bdarts)
    clusters = []

    def leafset(node):
        if isinstance(node, str):
            try:
                return frozenset({int(node)})
            except ValueError:
                raise ParseError("coupling leaves must be dart ids, got %r" % node)
        total = frozenset()
        for child in node:
            total |= leafset(child)
        clusters.append(total)
        return total

    total = leafset(expr)
    if total != ball:
        raise ParseError("coupling leaves do not match the boundary darts")
    splits = set()
    for c in clusters:
        if 2 <= len(c) <= m - 2:
            splits.add(frozenset({c, ball - c}))
    if len(splits) != m - 3:
        raise ParseError("coupling describes %d splits, needs %d" % (len(splits), m - 3))
    return frozenset(splits)


def parse_fmove(text: str, graph: Graph) -> FMoveSpec:
    """Read the move text format against a concrete graph."""
    lines = [l.split("#", 1)[0].strip() for l in text.splitlines()]
    lines = [l for l in lines if l]
    if not lines or lines[0] != "fmove":
        raise ParseError("move file must start with 'fmove'")
    reps = []
    for line in lines[1:]:
        if not line.startswith("tree "):
            raise ParseError("unknown move record %r" % line.split()[0])
        body = line[len("tree ") :]
        if "->" not in body:
            raise ParseError("tree line needs '-> coupling <expr>'")
        left, right = body.split("->", 1)
        right = right.strip()
        if not right.startswith("coupling"):
            raise ParseError("tree line needs '-> coupling <expr>'")
        edges = []
        for tok in left.split():
            if ":" not in tok:
                raise ParseError("edges are written <dart>:<dart>, got %r" % tok)
            a, b = tok.split(":")
            try:
                e = tuple(sorted((int(a), int(b))))
            except ValueError:
                raise ParseError("edge darts must be integers in %r" % tok)
            if e[1] != graph.theta[e[0]]:
                raise ParseError("%r is not an edge of the graph" % (tok,))
            edges.append(e)
        expr_text = right[len("coupling") :].strip()
        expr, pos = read_sexpr(tokenize_sexpr(expr_text), 0)
        cells = {graph.vertex_of(d) for e in edges for d in e}
        bdarts = boundary_darts(graph, cells, edges)
        target = _coupling_splits(expr, bdarts)
        reps.append(Replacement(cells, edges, target))
    if not reps:
        raise ParseError("move file without tree records")
    return FMoveSpec(reps)
