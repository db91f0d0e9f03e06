"""Relational probability-amplitude matrices.

Probabilities, entanglement, evolution and lattice path sums built around an
``N x M`` complex matrix relating system events to apparatus events.
"""

from ._kernels import BACKEND
from .dynamics import (
    HermitianOperator,
    LocalOperator,
    UnitaryMatrix,
    apply_bipartite,
    apply_local,
    evolve_density,
    evolve_relational,
    expm_hermitian,
    kron,
    kron_sum,
    liouville_rhs,
    relational_rhs,
    schrodinger_evolve,
)
from .entangle import (
    DynamicsKind,
    ProductFactors,
    SchmidtDecomposition,
    TraceSide,
    check_unentangled,
    classify_dynamics,
    entropy,
    partial_trace,
    product_decompose,
    schmidt,
    schmidt_spectrum,
)
from .errors import (
    DimensionError,
    EntangledStateError,
    NotHermitianError,
    NotProductError,
    NotProjectorError,
    NotUnitaryError,
    RelqmError,
    ZeroMatrixError,
)
from .pathint import (
    ActionSpec,
    Bilinear,
    Harmonic,
    Kernel,
    Lattice1D,
    Quartic,
    Zero,
    density_tensor_paths,
    influence_functional,
    kernel_single,
    propagate_wf,
    reduced_density_paths,
    relational_from_paths,
    stacked_relational,
    transition_prob_paths,
)
from .prob import (
    OutcomeSet,
    Projector,
    configuration_sum,
    prob_apparatus,
    prob_coherent,
    prob_incoherent,
    prob_joint,
    prob_projection,
    prob_transition,
    weight,
)
from .relcore import (
    CompositeState,
    DensityKind,
    DensityMatrix,
    NormMode,
    RelationalMatrix,
    WaveFunction,
    as_relational,
    build_relational,
    coherent_density,
    composite_state,
    reduced_density,
    wave_function,
)

__version__ = "0.1.0"
