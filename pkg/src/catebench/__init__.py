"""catebench: deterministic CATE benchmark generation and scoring.

Builds a 32-DGP synthetic causal-inference challenge (4 error families x 8
settings, 250 replicates each) over a shared covariate table, with exact
ground-truth treatment effects, and scores estimator submissions on RMSE and
coverage criteria.
"""

__version__ = "0.1.0"

from catebench.covariates import (
    SCHEMA,
    CovariateTable,
    correlation_matrix,
    load_covariate_table,
    standardize_columns,
    synthesize_covariates,
)
from catebench.dgp import ScenarioConfig, compute_surfaces
from catebench.engine import (
    ChallengeLayout,
    DgpCode,
    build_challenge,
    generate_replicate,
    plan_challenge,
    validate_challenge_tree,
)
from catebench.exceptions import (
    CalibrationError,
    CatebenchError,
    ConfigError,
    ValidationError,
    VerificationFailure,
)

__all__ = [
    "__version__",
    "SCHEMA",
    "CovariateTable",
    "correlation_matrix",
    "load_covariate_table",
    "standardize_columns",
    "synthesize_covariates",
    "ScenarioConfig",
    "compute_surfaces",
    "ChallengeLayout",
    "DgpCode",
    "build_challenge",
    "generate_replicate",
    "plan_challenge",
    "validate_challenge_tree",
    "CatebenchError",
    "ConfigError",
    "ValidationError",
    "CalibrationError",
    "VerificationFailure",
]
