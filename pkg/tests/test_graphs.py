"""Core graph model: validation, canonical form, enumeration, text format."""

import itertools
import random

import pytest

from trivalent.graphs import (
    Graph,
    GraphError,
    ParseError,
    canonical_form,
    canonical_graph,
    dumbbell,
    enumerate_iso_classes,
    format_graph,
    isomorphism,
    loop_with_tail,
    parse_graph,
    relabel,
    theta_graph,
    tripod,
    validate,
)


# -- independent oracle: enumeration by perfect matchings on dart slots ------
#
# Build every pairing of the darts of a fixed degree sequence (3..3, 1..1)
# directly, keep the connected admissible ones, and count iso classes by
# exhaustive vertex-bijection isomorphism.  Only feasible for tiny (g, b);
# the values it produces are frozen below as regression constants.


def _matching_enumeration(g, b):
    t = 2 * g - 2 + b
    slots = []
    for v in range(t):
        slots += [v] * 3
    for v in range(t, t + b):
        slots.append(v)
    n = len(slots)
    classes = []

    def all_matchings(remaining):
        if not remaining:
            yield []
            return
        first = remaining[0]
        for i in range(1, len(remaining)):
            partner = remaining[i]
            rest = remaining[1:i] + remaining[i + 1 :]
            for m in all_matchings(rest):
                yield [(first, partner)] + m

    for matching in all_matchings(list(range(n))):
        theta = [0] * n
        ok = True
        for a, bb in matching:
            theta[a], theta[bb] = bb, a
            if slots[a] == slots[bb] and slots[a] >= t:
                ok = False
        if not ok:
            continue
        cells = {}
        for d in range(n):
            cells.setdefault(slots[d], []).append(d)
        graph = Graph(theta, list(cells.values()), g, b, _skip_checks=True)
        try:
            graph._check_basic()
        except GraphError:
            continue
        if not validate(graph):
            continue
        if not any(_multigraph_isomorphic(graph, other) for other in classes):
            classes.append(graph)
    return classes


def _quotient(graph):
    verts = list(graph.cells)
    idx = {v: i for i, v in enumerate(verts)}
    n = len(verts)
    mat = [[0] * n for _ in range(n)]
    for e in graph.edges():
        v, w = graph.ends(e)
        mat[idx[v]][idx[w]] += 1
        if v != w:
            mat[idx[w]][idx[v]] += 1
    return [len(v) for v in verts], mat


def _multigraph_isomorphic(g1, g2):
    deg1, m1 = _quotient(g1)
    deg2, m2 = _quotient(g2)
    if sorted(deg1) != sorted(deg2):
        return False
    n = len(deg1)
    for perm in itertools.permutations(range(n)):
        if any(deg1[i] != deg2[perm[i]] for i in range(n)):
            continue
        if all(m1[i][j] == m2[perm[i]][perm[j]] for i in range(n) for j in range(n)):
            return True
    return False


# Frozen from the matching oracle (checked live for the smallest cases).
KNOWN_CLASS_COUNTS = {
    (0, 3): 1,
    (2, 0): 2,
    (1, 1): 1,
    (0, 4): 1,
    (1, 2): 2,
    (2, 1): 3,
}


@pytest.mark.parametrize("g,b", sorted(KNOWN_CLASS_COUNTS))
def test_enumeration_matches_matching_oracle(g, b):
    oracle = _matching_enumeration(g, b)
    assert len(oracle) == KNOWN_CLASS_COUNTS[(g, b)]
    assert len(enumerate_iso_classes(g, b)) == len(oracle)


def test_validate_reference_graphs():
    for graph in (tripod(), theta_graph(), dumbbell(), loop_with_tail()):
        assert validate(graph)


def test_validate_theta_counts_by_hand():
    # beta_1 = 3 edges - 2 vertices + 1 = 2 = g, checked by direct count
    th = theta_graph()
    assert th.n_edges() - len(th.cells) + 1 == 2


def test_validate_rejects_forbidden_gb():
    # single loop, declared (1,0): forbidden pair and no trivalent vertex
    graph = Graph((1, 0), [(0, 1)], 1, 0, _skip_checks=True)
    report = validate(graph)
    assert not report
    text = " ".join(report.problems)
    assert "admits no graph" in text
    assert "no trivalent vertex" in text


def test_validate_catches_wrong_counts():
    th = theta_graph()
    wrong = Graph(th.theta, th.cells, 1, 2)
    assert not validate(wrong)


def test_classify_edges():
    tri = tripod()
    assert all(tri.classify_edge(e) == "terminal" for e in tri.edges())
    th = theta_graph()
    assert all(th.classify_edge(e) == "internal" for e in th.edges())
    db = dumbbell()
    kinds = sorted(db.classify_edge(e) for e in db.edges())
    assert kinds == ["internal", "internal", "internal"]
    # loops are internal; the bridge is the non-loop one
    bridge = [e for e in db.edges() if not db.is_loop(e)]
    assert len(bridge) == 1


def test_canonical_form_relabeling_invariance():
    rng = random.Random(7)
    for graph in (tripod(), theta_graph(), dumbbell(), loop_with_tail()):
        base = canonical_form(graph)
        for _ in range(25):
            perm = list(range(graph.n_darts))
            rng.shuffle(perm)
            shuffled = relabel(graph, {d: perm[d] for d in range(graph.n_darts)})
            assert canonical_form(shuffled) == base


def test_canonical_form_distinguishes_theta_dumbbell():
    assert canonical_form(theta_graph()) != canonical_form(dumbbell())


def test_isomorphism_map_is_structural():
    th = theta_graph()
    perm = {0: 3, 3: 0, 1: 2, 2: 1, 4: 5, 5: 4}
    other = relabel(th, perm)
    iso = isomorphism(th, other)
    assert iso is not None
    for d in th.darts():
        assert iso[th.theta[d]] == other.theta[iso[d]]
    assert isomorphism(th, dumbbell()) is None


def test_enumeration_members_are_valid_and_deduped():
    for g, b in [(0, 3), (0, 4), (2, 0), (1, 2), (2, 1), (1, 3), (3, 0)]:
        classes = enumerate_iso_classes(g, b)
        codes = [canonical_form(x) for x in classes]
        assert len(set(codes)) == len(codes)
        assert codes == sorted(codes)
        for graph in classes:
            assert validate(graph)
            n_tri = len(graph.trivalent_vertices())
            assert n_tri == 2 * g - 2 + b
            assert graph.n_edges() == 3 * g - 3 + 2 * b
            terminal = [e for e in graph.edges() if graph.classify_edge(e) == "terminal"]
            assert len(terminal) == b
            assert graph.n_edges() - len(terminal) == 3 * g - 3 + b


def test_enumeration_rejects_bad_arguments():
    with pytest.raises(GraphError):
        enumerate_iso_classes(0, 2)
    with pytest.raises(GraphError):
        enumerate_iso_classes(5, 5, edge_cap=12)


def test_text_format_round_trip():
    for graph in (tripod(), theta_graph(), dumbbell(), loop_with_tail()):
        text = format_graph(graph)
        back = parse_graph(text)
        assert back == canonical_round_trip(back)
        assert canonical_form(back) == canonical_form(graph)


def canonical_round_trip(graph):
    return parse_graph(format_graph(graph))


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ParseError):
        parse_graph("edge e0 a b\n")  # no graph line
    with pytest.raises(ParseError) as err:
        parse_graph("graph g=0 b=3\nbogus record\n")
    assert "line 2" in str(err.value)


def test_parse_dart_convention():
    text = "graph g=2 b=0\nedge x u w\nedge y u w\nedge z u w\n"
    graph = parse_graph(text)
    # edge 0 owns darts 0,1 with dart 0 at u: so u's cell is {0, 2, 4}
    assert (0, 2, 4) in graph.cells
    assert graph.theta[0] == 1
