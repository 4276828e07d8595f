"""Rate-distortion toolkit for state-observation (semantic) sources.

Computes the minimum coding rate R(D_s, D_a) that meets a semantic
distortion budget on an unobserved source state and an appearance
budget on the encoded observation simultaneously: closed forms where
they exist (scalar and aligned-vector Gaussian, semantic-only limits),
convex solvers where they do not (two-multiplier Blahut-Arimoto for
finite alphabets, a log-det barrier method for general jointly Gaussian
sources), and an achievable bound for binary-state classification.
"""

from .classification import (
    SoftDecisionRule,
    classification_baselines,
    classification_g,
    classification_semantic_rate,
    classification_upper_bound,
    local_classification_baseline,
    solve_lambda,
)
from .config import ConfigError, GridSpec, RunConfig, SolverOverrides, parse_config
from .discrete import (
    BAConfig,
    BASolution,
    ba_fixed_multipliers,
    ba_target,
    oracle_grid_search,
)
from .gaussian_closed import (
    AlignedRegion,
    AllocationSolution,
    aligned_eigenbasis,
    aligned_sordf_allocation,
    aligned_sordf_closed_form,
    gaussian_rd_rate,
    gaussian_semantic_only_rate,
    reverse_waterfill,
    scalar_sordf,
)
from .gaussian_detmax import (
    DetMaxConfig,
    DetMaxSolution,
    FeasibleSetSpec,
    achieving_reproduction,
    detmax_sordf,
)
from .model import (
    AlignedGaussianParams,
    ClassificationParams,
    DiscreteSemanticSource,
    DistortionTable,
    GaussianSource,
    RDPoint,
    RDSurface,
    mmse_of,
    reduce_distortion,
    verify_distortion_equivalence,
)
from .quadrature import QuadratureConfig, adaptive_simpson
from .sweep import SweepResult, run_sweep

__version__ = "0.1.0"

__all__ = [
    "AlignedGaussianParams",
    "AlignedRegion",
    "AllocationSolution",
    "BAConfig",
    "BASolution",
    "ClassificationParams",
    "ConfigError",
    "DetMaxConfig",
    "DetMaxSolution",
    "DiscreteSemanticSource",
    "DistortionTable",
    "FeasibleSetSpec",
    "GaussianSource",
    "GridSpec",
    "QuadratureConfig",
    "RDPoint",
    "RDSurface",
    "RunConfig",
    "SoftDecisionRule",
    "SolverOverrides",
    "SweepResult",
    "achieving_reproduction",
    "adaptive_simpson",
    "aligned_eigenbasis",
    "aligned_sordf_allocation",
    "aligned_sordf_closed_form",
    "ba_fixed_multipliers",
    "ba_target",
    "classification_baselines",
    "classification_g",
    "classification_semantic_rate",
    "classification_upper_bound",
    "detmax_sordf",
    "gaussian_rd_rate",
    "gaussian_semantic_only_rate",
    "local_classification_baseline",
    "mmse_of",
    "oracle_grid_search",
    "parse_config",
    "reduce_distortion",
    "reverse_waterfill",
    "run_sweep",
    "scalar_sordf",
    "solve_lambda",
    "verify_distortion_equivalence",
]
