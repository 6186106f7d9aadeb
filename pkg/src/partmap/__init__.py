"""Part-level analogical mapping between attributed graphs.

Builds part graphs from embedding + coordinate inputs, finds a soft
node-to-node correspondence by graduated assignment, and transfers labels
or markers across it, with an evaluation harness and a CLI (`partmap`).
"""

from .clustering import (
    Clustering,
    PointSet,
    closest_cluster,
    clusters_to_nodes,
    kmeans_fit,
    kmeanspp_seed,
    lloyd,
)
from .edges import (
    angular_relation,
    build_edges_2d,
    build_edges_3d,
    compute_centroid,
    coordinate_extent,
    vector_diff_relation,
)
from .errors import (
    InvalidInputError,
    NumericalError,
    ProblemFileError,
    ProjectionError,
    UndefinedCorrelationError,
)
from .evaluate import (
    EvalReport,
    ProblemInstance,
    ablation_sweep,
    balanced_accuracy,
    closest_cluster_distance,
    distance_to_mean,
    evaluate_problems,
    mapping_accuracy,
    pearson_r,
    synth_generate,
)
from .graph import (
    ALPHA_2D,
    ALPHA_3D,
    AttributedGraph,
    EdgeAttr,
    MappingMatrix,
    NodeAttr,
    SolverConfig,
    cosine_similarity,
    edge_similarity,
    node_similarity_matrix,
    validate_graph,
)
from .io import (
    LoadedProblem,
    ProblemFile,
    RunConfig,
    atomic_write_json,
    load_placements,
    load_problem_file,
    save_problem_file,
)
from .solver import (
    BruteForceResult,
    CompatibilityMatrix,
    SolveTrace,
    brute_force_details,
    brute_force_map,
    compatibility_matrix,
    energy,
    ga_step,
    hard_assignment,
    init_mapping,
    likelihood,
    log_prior,
    solve,
)
from .transfer import (
    Camera,
    Marker,
    map_marker_end_to_end,
    mapped_target_cluster,
    project_point,
    transfer_labels,
    transfer_marker,
)

__version__ = "0.1.0"
