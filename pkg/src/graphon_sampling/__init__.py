"""Average sampling of Paley-Wiener functions on step graphons."""

from .core import (
    AnalyticGraphon,
    Grid,
    StepFunction,
    StepGraphon,
    ValidationError,
    average_graphon,
    closed_form_graphon,
    common_refinement,
    constant_graphon,
    degree_function,
    is_connected,
    make_step_graphon,
    sbm_graphon,
    sup_norm_diff,
)
from .graphs import (
    Graph,
    graph_to_graphon,
    homomorphism_density,
    homomorphism_density_graphon,
    sample_w_random_graph,
)
from .cutnorm import cut_norm, cut_norm_exact, cut_norm_lower
from .spectral import (
    dirichlet_energy,
    discretize,
    eigendecompose,
    operator_norm_diff,
    pw_basis,
    pw_project,
    wot_pairing,
)
from .sampling import (
    Partition,
    build_sampling_system,
    corollary2_bound,
    corollary3_bounds,
    frame_bounds,
    measure_samples,
    optimal_epsilon,
    restrict,
    spectral_gap,
    theorem1_bound,
)

__version__ = "0.1.0"
