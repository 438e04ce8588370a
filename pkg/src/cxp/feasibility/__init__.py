"""IXP feasibility analysis: address coverage and pathlet-map path diversity."""

from cxp.feasibility.coverage import (
    address_set,
    coverage_curve,
    expand_customer_cone,
    ixp_address_sets,
    marginal_gains,
)
from cxp.feasibility.dataset import CoverageDataset
from cxp.feasibility.diversity import (
    FlowNetwork,
    FlowResult,
    MapEdge,
    PathletMap,
    build_pathlet_map,
    cut_edges,
    decompose,
    diversity_matrix,
    min_cut_diversity,
)
from cxp.feasibility.intervals import IntervalSet, parse_prefix, prefix_union

__all__ = [
    "CoverageDataset",
    "FlowNetwork",
    "FlowResult",
    "IntervalSet",
    "MapEdge",
    "PathletMap",
    "address_set",
    "build_pathlet_map",
    "coverage_curve",
    "cut_edges",
    "decompose",
    "diversity_matrix",
    "expand_customer_cone",
    "ixp_address_sets",
    "marginal_gains",
    "min_cut_diversity",
    "parse_prefix",
    "prefix_union",
]
