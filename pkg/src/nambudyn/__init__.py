"""Structure-preserving simulator for multi-bracket density-matrix dynamics."""

from . import errors
from ._kernels import BACKEND, NATIVE_DIM_LIMIT
from .brackets import (
    MAX_ARITY,
    BracketSpec,
    antisym_product,
    default_multiplier,
    duality_rotate,
    eom_rhs,
    jacobi_defect,
    linear_multi_hamiltonian_spec,
    quantized_nambu_spec,
    scalar_bracket,
    theorem1_check,
)
from .catalog import (
    KIND_NAMES,
    CatalogTerm,
    Grid1D,
    as_map,
    bbm_additivity_check,
    build_hamiltonian,
    linear_grid_hamiltonian,
    nonlinear_values,
    psi_form_values,
    two_particle_nl_potential,
)
from .core import (
    DensityMatrix,
    Generator,
    Operator,
    SpectrumRecord,
    casimir,
    casimir_list,
    gradient,
    partial_trace,
    spectrum,
    tensor_product,
)
from .dynamics import (
    IntegratorConfig,
    PureTrajectory,
    Trajectory,
    evolve_pure,
    integrate,
    spectrum_drift,
    taylor_oracle,
    trajectory_to_csv,
    trajectory_to_json,
)
from .identities import (
    IDENTITY_NAMES,
    TensorIdentityCase,
    verify_tensor_identity,
)
from .matio import (
    matrix_from_json,
    matrix_to_json,
    vector_from_json,
    vector_to_json,
)
from .multiparticle import (
    CompositeSystem,
    HamiltonianMap,
    bb_correlated_state,
    big_brother_rate,
    big_brother_rate_fd,
    extend_rhs,
    extend_rhs_array,
    gisin_extension,
    lie_poisson_extension,
    separability_defect,
    singlet_state,
    subsystem_energy_drift,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CatalogTerm",
    "CompositeSystem",
    "DensityMatrix",
    "Generator",
    "Grid1D",
    "HamiltonianMap",
    "IDENTITY_NAMES",
    "IntegratorConfig",
    "KIND_NAMES",
    "MAX_ARITY",
    "NATIVE_DIM_LIMIT",
    "BracketSpec",
    "Operator",
    "PureTrajectory",
    "SpectrumRecord",
    "TensorIdentityCase",
    "Trajectory",
    "antisym_product",
    "as_map",
    "bb_correlated_state",
    "bbm_additivity_check",
    "big_brother_rate",
    "big_brother_rate_fd",
    "build_hamiltonian",
    "casimir",
    "casimir_list",
    "default_multiplier",
    "duality_rotate",
    "eom_rhs",
    "errors",
    "evolve_pure",
    "extend_rhs",
    "extend_rhs_array",
    "gisin_extension",
    "gradient",
    "integrate",
    "jacobi_defect",
    "lie_poisson_extension",
    "linear_grid_hamiltonian",
    "linear_multi_hamiltonian_spec",
    "matrix_from_json",
    "matrix_to_json",
    "nonlinear_values",
    "partial_trace",
    "psi_form_values",
    "quantized_nambu_spec",
    "scalar_bracket",
    "separability_defect",
    "singlet_state",
    "spectrum",
    "spectrum_drift",
    "subsystem_energy_drift",
    "taylor_oracle",
    "tensor_product",
    "theorem1_check",
    "trajectory_to_csv",
    "trajectory_to_json",
    "two_particle_nl_potential",
    "vector_from_json",
    "vector_to_json",
]
