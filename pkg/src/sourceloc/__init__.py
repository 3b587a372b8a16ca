"""Information source localization under the Independent Cascade model."""

from .baselines import ecce_estimate, netsleuth_estimate, rum_estimate, rumor_centrality
from .diffusion import (
    ICProcess,
    LiveEdgeGraph,
    Snapshot,
    Truth,
    load_snapshot,
    sample_binomial_tree_window,
    sample_live_edge,
    sample_snapshot_window,
    save_snapshot,
    simulate_ic,
    snapshot_from_live_edge,
)
from .graph import (
    UNREACHABLE,
    Graph,
    assign_weights,
    bfs_distances,
    build_graph,
    gen_binomial_tree,
    gen_er,
    read_edge_list,
    write_edge_list,
)
from .localization import (
    LocalizationResult,
    bnd,
    boundary_nodes,
    eccentricities,
    infection_subgraph,
    jordan_centers,
    sft_estimate,
    wbnd,
)

__version__ = "0.1.0"
