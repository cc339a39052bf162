"""Uni/trivalent graphs, their automorphisms, F-moves, and switch decompositions."""

from trivalent.autos import (
    Automorphism,
    AutomorphismError,
    OrbitReport,
    StructuralViolation,
    all_switches,
    automorphism_group,
    compose,
    edge_orbit_size,
    edge_order,
    format_automorphism,
    identity,
    inverse,
    make_switch,
    orbit_report,
    order,
    parse_automorphism,
    power,
    primary_decomposition,
    vertex_order,
)
from trivalent.certs import (
    Certificate,
    CertificateError,
    ComposeNode,
    IdentityLeaf,
    SwitchLeaf,
    TransportNode,
    format_certificate,
    parse_certificate,
    verify_certificate,
)
from trivalent.decomp import (
    CycleStructure,
    Derivation,
    PathOrbitClass,
    PipelineError,
    classify_pair,
    decompose,
    factor_into_involutions,
    minimal_vertex_path,
    normalize_cycle,
    normalize_step,
    reduce_edge_orders,
    reduce_order2,
)
from trivalent.graphs import (
    Graph,
    GraphError,
    ParseError,
    ValidationReport,
    canonical_form,
    canonical_graph,
    dumbbell,
    enumerate_iso_classes,
    format_graph,
    graph_digest,
    loop_with_tail,
    parse_graph,
    theta_graph,
    tripod,
    validate,
)
from trivalent.moves import (
    COUPLINGS,
    FMoveSpec,
    MoveError,
    NotInvariant,
    Replacement,
    apply_edge_fmove,
    apply_fmove,
    enumerate_invariant_fmoves,
    format_fmove,
    parse_fmove,
    transport,
)
from trivalent.oracle import (
    ClosureReport,
    EquivalenceResult,
    closure_E,
    f_equivalent,
    move_graph_components,
    smallest_sufficient_tree_ends,
    state_key,
)

__all__ = [
    "Automorphism",
    "AutomorphismError",
    "COUPLINGS",
    "Certificate",
    "CertificateError",
    "ClosureReport",
    "ComposeNode",
    "CycleStructure",
    "Derivation",
    "EquivalenceResult",
    "FMoveSpec",
    "Graph",
    "GraphError",
    "IdentityLeaf",
    "MoveError",
    "NotInvariant",
    "OrbitReport",
    "ParseError",
    "PathOrbitClass",
    "PipelineError",
    "Replacement",
    "StructuralViolation",
    "SwitchLeaf",
    "TransportNode",
    "ValidationReport",
    "all_switches",
    "apply_edge_fmove",
    "apply_fmove",
    "automorphism_group",
    "canonical_form",
    "canonical_graph",
    "classify_pair",
    "closure_E",
    "compose",
    "decompose",
    "dumbbell",
    "edge_orbit_size",
    "edge_order",
    "enumerate_invariant_fmoves",
    "enumerate_iso_classes",
    "f_equivalent",
    "factor_into_involutions",
    "format_automorphism",
    "format_certificate",
    "format_fmove",
    "format_graph",
    "graph_digest",
    "identity",
    "inverse",
    "loop_with_tail",
    "make_switch",
    "minimal_vertex_path",
    "move_graph_components",
    "normalize_cycle",
    "normalize_step",
    "orbit_report",
    "order",
    "parse_automorphism",
    "parse_certificate",
    "parse_fmove",
    "parse_graph",
    "power",
    "primary_decomposition",
    "reduce_edge_orders",
    "reduce_order2",
    "smallest_sufficient_tree_ends",
    "state_key",
    "theta_graph",
    "transport",
    "tripod",
    "validate",
    "verify_certificate",
]
