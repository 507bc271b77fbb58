"""Delay-time distributions of wave packets scattered on quantum graphs."""

from .classical import (
    classical_asymptote,
    classical_cumulative_exact,
    classical_delay_mc,
    classical_jumps,
    decay_constant,
    decay_law,
    decay_prefactor,
    ks_critical_value,
    ks_statistic,
    laplace_determinant,
    laplace_map,
    tjunction_classical_cumulative,
    tjunction_decay_law,
)
from .errors import (
    BudgetExceeded,
    GraphSpecError,
    NearSingularWarning,
    NumericalError,
    PreconditionError,
    RegimeWarning,
)
from .evolution import (
    classical_map,
    eigenphase_wraps,
    evolution_operator,
    find_spectrum,
    is_irreducible,
    propagate_classical,
    secular_real,
    secular_value,
)
from .graph import (
    GOLDEN_L1,
    GOLDEN_L2,
    MetricGraph,
    VertexMatrix,
    build_graph,
    explicit_vertex_matrix,
    graph_from_edges,
    load_graph,
    neumann_vertex_matrix,
    tjunction_graph,
)
from .paths import (
    PathFamily,
    TopologicalDistribution,
    count_paths,
    diagonal_split,
    enumerate_families,
    enumerate_paths,
    family_probabilities,
    metric_bounds,
    metric_cumulative,
    tjunction_ct,
    tjunction_families,
    tjunction_pt,
    tjunction_pt_sum,
    tjunction_topological,
    topological_cumulative,
    topological_distribution,
)
from .resonances import (
    ResonancePole,
    find_poles,
    find_poles_graph,
    longtime_cumulative_integral,
    longtime_cumulative_resonances,
    near_degenerate_pairs,
    pole_from_pair,
    refine_pole,
    resonance_density,
    width_histogram,
)
from .scattering import (
    open_evolution,
    pathsum_tail_bound,
    smatrix_function,
    smatrix_pathsum,
    smatrix_resolvent,
    tjunction_smatrix,
)
from .wavepacket import (
    DelayDistribution,
    Envelope,
    delay_density_families,
    delay_density_fft,
    delay_density_fourier,
    fourier_delay_distribution,
    gaussian_envelope,
)

__version__ = "0.1.0"
