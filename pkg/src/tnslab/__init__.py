"""Finite tensor-network state laboratory: chain, tree, loop, and
multiscale parametrizations, exact certification of ranks and dimensions,
explicit state families, and regularized alternating optimization."""
from __future__ import annotations

from .errors import (
    CapacityError,
    DegeneracyError,
    DimensionMismatchError,
    InvertibilityError,
    NormalizationError,
    RankError,
    TnsError,
)
from .geometry import (
    DimensionReport,
    PredictedDims,
    geometry_report,
    jacobian_rank,
    predicted_dims,
    stabilizer_lie_dim,
)
from .mera import (
    CausalCone,
    IsometryReport,
    Mera,
    MeraLayer,
    causal_cone,
    eval_mera,
    random_mera,
    validate_isometries,
)
from .mps_obc import (
    MpsObc,
    SchmidtData,
    eval_obc,
    from_state_obc,
    gauge_transform,
    right_canonicalize,
    schmidt,
)
from .mps_pbc import (
    CanonicalBlocks,
    MpsPbc,
    block_tensor,
    eval_pbc,
    injectivity_length,
    is_primitive,
    ti_canonical_blocks,
    ti_mps,
    transfer_matrix,
    wielandt_bound,
)
from .optimize import (
    Objective,
    RunTrace,
    TraceRecord,
    als_sweep,
    distance_objective,
    energy_objective,
    objective_value,
    run_experiment,
    site_gradient,
)
from .peps import (
    Peps,
    PepsNetwork,
    eval_peps,
    grid_network,
    loop_limit_state,
    mu_peps,
    psi_t_peps,
    ring_network,
    single_site_rho,
)
from .serialize import load_state, save_state, state_from_obj, state_to_obj
from .tensors import DenseTensor, SvdResult, contract, svd
from .ttns import (
    TreeNetwork,
    Ttns,
    eval_ttns,
    from_state_ttns,
    orthonormalize_ttns,
)
from .zoo import (
    FineGrainSpec,
    aklt_tensor,
    blbq_hamiltonian,
    block_cluster,
    fine_grain_A,
    fine_grained_psi_tau,
    psi_tau_tensors,
    psi_w,
    psi_w_timps_tensor,
    spin1_matrices,
    two_domain_state,
    w_obc_mps,
    w_state,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "DegeneracyError",
    "DimensionMismatchError",
    "InvertibilityError",
    "NormalizationError",
    "RankError",
    "TnsError",
    "DimensionReport",
    "PredictedDims",
    "geometry_report",
    "jacobian_rank",
    "predicted_dims",
    "stabilizer_lie_dim",
    "CausalCone",
    "IsometryReport",
    "Mera",
    "MeraLayer",
    "causal_cone",
    "eval_mera",
    "random_mera",
    "validate_isometries",
    "MpsObc",
    "SchmidtData",
    "eval_obc",
    "from_state_obc",
    "gauge_transform",
    "right_canonicalize",
    "schmidt",
    "CanonicalBlocks",
    "MpsPbc",
    "block_tensor",
    "eval_pbc",
    "injectivity_length",
    "is_primitive",
    "ti_canonical_blocks",
    "ti_mps",
    "transfer_matrix",
    "wielandt_bound",
    "Objective",
    "RunTrace",
    "TraceRecord",
    "als_sweep",
    "distance_objective",
    "energy_objective",
    "objective_value",
    "run_experiment",
    "site_gradient",
    "Peps",
    "PepsNetwork",
    "eval_peps",
    "grid_network",
    "loop_limit_state",
    "mu_peps",
    "psi_t_peps",
    "ring_network",
    "single_site_rho",
    "load_state",
    "save_state",
    "state_from_obj",
    "state_to_obj",
    "DenseTensor",
    "SvdResult",
    "contract",
    "svd",
    "TreeNetwork",
    "Ttns",
    "eval_ttns",
    "from_state_ttns",
    "orthonormalize_ttns",
    "FineGrainSpec",
    "aklt_tensor",
    "blbq_hamiltonian",
    "block_cluster",
    "fine_grain_A",
    "fine_grained_psi_tau",
    "psi_tau_tensors",
    "psi_w",
    "psi_w_timps_tensor",
    "spin1_matrices",
    "two_domain_state",
    "w_obc_mps",
    "w_state",
    "__version__",
]
