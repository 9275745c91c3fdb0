"""Gravity-law city networks, strategic-centrality conflict risk, and
cultural-influence simulation."""

from .abm import (
    AbmConfig,
    AbmRun,
    adopt_state,
    adoption_probabilities,
    dissimilar_neighbors,
    flip_betweenness_report,
    influence_field,
    influence_share,
    modularity,
    toroidal_geometric_graph,
)
from .abm import run as run_abm
from .abm import step as abm_step
from .centrality import (
    CentralityConfig,
    CityCentrality,
    betweenness_all,
    centrality_table,
    degree_all,
    edge_weight,
    strategic_all,
)
from .errors import (
    DegeneratePairError,
    GeostratError,
    InsufficientDataError,
    MalformedInputError,
    ScenarioError,
    ValidationError,
)
from .fragmentation import (
    RelayCoreSpec,
    build_relay_core_graph,
    fragment_city,
    merge_cities,
    relay_betweenness,
    relay_degree,
    relay_strategic,
)
from .geometry import EARTH_RADIUS_KM, haversine_km
from .graph import (
    City,
    Edge,
    GraphConfig,
    SpatialGraph,
    build_graph,
    build_graph_report,
    connected_components,
    gravity_flow,
)
from .ingest import (
    ConflictEvent,
    assign_nearest_city,
    attack_counts_by_city,
    parse_events,
)
from .zones import (
    RiskFit,
    ZoneMetrics,
    fit_power_law,
    holdout_proximity,
    make_zones,
    predict_attacks,
    threshold_report,
    vulnerability_outliers,
)

__version__ = "0.1.0"
