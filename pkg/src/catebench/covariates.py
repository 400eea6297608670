"""Shared covariate matrix: loading, validation, transformation, synthesis.

Every DGP in the benchmark runs over one fixed table of eight mixed-type
covariates. When the restricted source data is unavailable, a statistical
stand-in is synthesized from a Gaussian copula calibrated to hit the published
pairwise correlations on the *output* (post-margin) scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr, ndtri

from catebench._csvio import read_columns, write_columns
from catebench.exceptions import CalibrationError, ValidationError

CONTINUOUS = "continuous"
BINARY = "binary"
CATEGORICAL = "categorical"

#: levels of the single categorical column (also the group count for the
#: group-correlated error family)
N_LEVELS = 16


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str
    levels: int | None = None


@dataclass(frozen=True)
class CovariateSchema:
    """The fixed eight-column schema every table must match."""

    columns: tuple[ColumnSpec, ...]

    def __post_init__(self):
        expected = [
            ("X1", CONTINUOUS),
            ("X3", CONTINUOUS),
            ("X10", BINARY),
            ("X14", BINARY),
            ("X15", BINARY),
            ("X21", CATEGORICAL),
            ("X24", BINARY),
            ("X43", CONTINUOUS),
        ]
        got = [(c.name, c.kind) for c in self.columns]
        if got != expected:
            raise ValidationError(f"schema must be exactly {expected}, got {got}")
        x21 = self.columns[5]
        if x21.levels != N_LEVELS:
            raise ValidationError(f"X21 must declare {N_LEVELS} levels, got {x21.levels}")

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def index(self, name: str) -> int:
        return self.names.index(name)


SCHEMA = CovariateSchema(
    columns=(
        ColumnSpec("X1", CONTINUOUS),
        ColumnSpec("X3", CONTINUOUS),
        ColumnSpec("X10", BINARY),
        ColumnSpec("X14", BINARY),
        ColumnSpec("X15", BINARY),
        ColumnSpec("X21", CATEGORICAL, levels=N_LEVELS),
        ColumnSpec("X24", BINARY),
        ColumnSpec("X43", CONTINUOUS),
    )
)

#: Reference pairwise correlations of the eight study covariates, used as the
#: default synthesis target (row/column order matches SCHEMA).
DEFAULT_CORRELATION_TARGETS = np.array(
    [
        [1.00, 0.04, -0.07, -0.03, -0.04, -0.07, 0.03, -0.01],
        [0.04, 1.00, -0.02, 0.03, -0.02, -0.10, -0.16, 0.13],
        [-0.07, -0.02, 1.00, 0.04, 0.09, -0.02, -0.10, -0.07],
        [-0.03, 0.03, 0.04, 1.00, 0.09, -0.03, -0.08, 0.07],
        [-0.04, -0.02, 0.09, 0.09, 1.00, -0.03, 0.04, -0.04],
        [-0.07, -0.10, -0.02, -0.03, -0.03, 1.00, 0.20, -0.00],
        [0.03, -0.16, -0.10, -0.08, 0.04, 0.20, 1.00, -0.11],
        [-0.01, 0.13, -0.07, 0.07, -0.04, -0.00, -0.11, 1.00],
    ]
)


@dataclass(frozen=True)
class CovariateTable:
    """Immutable n-by-8 covariate matrix plus its provenance.

    Binary columns are coded {1, 2}; X21 is an integer level in 1..16.
    """

    schema: CovariateSchema
    values: np.ndarray
    provenance: str

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        _validate_values(self.schema, vals)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.schema.index(name)]


def _validate_values(schema: CovariateSchema, values: np.ndarray, path=None) -> None:
    where = f"{path}: " if path else ""
    if values.ndim != 2 or values.shape[1] != len(schema.columns):
        raise ValidationError(f"{where}expected {len(schema.columns)} columns, got shape {values.shape}")
    if values.shape[0] < 2:
        raise ValidationError(f"{where}need at least 2 rows, got {values.shape[0]}")
    if not np.all(np.isfinite(values)):
        i, j = np.argwhere(~np.isfinite(values))[0]
        raise ValidationError(
            f"{where}missing or non-finite value at row {i + 1}, column {schema.columns[j].name}"
        )
    for j, col in enumerate(schema.columns):
        v = values[:, j]
        if col.kind == BINARY:
            bad = ~np.isin(v, (1.0, 2.0))
            if bad.any():
                i = int(np.argmax(bad))
                raise ValidationError(
                    f"{where}column {col.name} must be coded 1 or 2; got {v[i]:g} at row {i + 1}"
                )
        elif col.kind == CATEGORICAL:
            bad = (v != np.floor(v)) | (v < 1) | (v > col.levels)
            if bad.any():
                i = int(np.argmax(bad))
                raise ValidationError(
                    f"{where}column {col.name} must be an integer in 1..{col.levels}; "
                    f"got {v[i]:g} at row {i + 1}"
                )


def load_covariate_table(path, schema: CovariateSchema = SCHEMA) -> CovariateTable:
    """Load and validate a covariate file.

    The header must match the schema names in order; binary and categorical
    codings are enforced cell by cell with the offending row/column named in
    the error.
    """
    _, values = read_columns(path, expected_header=schema.names)
    _validate_values(schema, values, path=path)
    return CovariateTable(schema=schema, values=values, provenance=f"real-file:{Path(path)}")


def write_table(table: CovariateTable, path) -> None:
    """Write a table so that ``load_covariate_table`` round-trips it bit-exactly."""
    kinds = ["float" if c.kind == CONTINUOUS else "int" for c in table.schema.columns]
    write_columns(path, table.schema.names, list(table.values.T), kinds)


def standardize_columns(table: CovariateTable) -> CovariateTable:
    """Rescale continuous columns to mean 0 and sample (n-1) sd 1.

    Binary and categorical columns pass through untouched. This is the
    modeling-scale transform the surface functions assume; it is idempotent
    up to floating-point noise.
    """
    values = table.values.copy()
    for j, col in enumerate(table.schema.columns):
        if col.kind != CONTINUOUS:
            continue
        v = values[:, j]
        sd = v.std(ddof=1)
        if sd == 0.0:
            raise CalibrationError(f"column {col.name} has zero variance; cannot standardize")
        values[:, j] = (v - v.mean()) / sd
    return replace(table, values=values)


def correlation_matrix(table: CovariateTable) -> np.ndarray:
    """Pearson correlations of the eight columns (exactly symmetric, unit diagonal)."""
    sds = table.values.std(axis=0, ddof=1)
    if np.any(sds == 0.0):
        name = table.schema.columns[int(np.argmax(sds == 0.0))].name
        raise CalibrationError(f"column {name} has zero variance; correlation undefined")
    corr = np.corrcoef(table.values, rowvar=False)
    corr = (corr + corr.T) / 2.0
    np.fill_diagonal(corr, 1.0)
    return corr


# --- synthesis -------------------------------------------------------------

_MARGINS_FILE = Path(__file__).with_name("synthetic_margins.json")

#: internal seed for the copula calibration reference sample; independent of
#: the user's synthesis seed by construction
_CALIBRATION_SEED = 715517299
_CALIBRATION_DRAWS = 400_000


def _load_margin_config() -> dict:
    with open(_MARGINS_FILE, encoding="utf-8") as fh:
        return json.load(fh)


def _margin_transforms(config: dict) -> list:
    """One monotone transform of a latent standard normal per schema column.

    The margins are plumbing constants (see synthetic_margins.json), not
    ground truth: continuous columns are standard normal except X3, which is
    zero-inflated half-normal and gets z-scored after generation; binaries
    threshold the latent at the configured prevalence of code 2; X21
    quantile-bins the latent into 16 uniform levels.
    """
    prevalences = config["binary_prevalence_of_code2"]
    zero_mass = config["x3_zero_mass"]

    def x3_raw(z):
        u = ndtr(z)
        out = np.zeros_like(u)
        tail = u > zero_mass
        # half-normal quantile of the renormalized upper tail
        q = (u[tail] - zero_mass) / (1.0 - zero_mass)
        out[tail] = ndtri((1.0 + q) / 2.0)
        return out

    def binary(p):
        cut = ndtri(1.0 - p)
        return lambda z, cut=cut: 1.0 + (z > cut)

    def x21(z):
        return np.clip(np.floor(ndtr(z) * N_LEVELS) + 1.0, 1.0, float(N_LEVELS))

    return [
        lambda z: z,  # X1
        x3_raw,  # X3 (z-scored later)
        binary(prevalences["X10"]),
        binary(prevalences["X14"]),
        binary(prevalences["X15"]),
        x21,
        binary(prevalences["X24"]),
        lambda z: z,  # X43
    ]


def _pair_latent_rho(target_r, g_i, g_j, w1, w2) -> float:
    """Latent correlation that induces ``target_r`` between two margins.

    Uses a fixed latent reference sample (w1, w2): for candidate rho the
    second latent is rho*w1 + sqrt(1-rho^2)*w2, so the induced product-moment
    correlation is a smooth monotone function of rho and brentq applies.
    Targets beyond the attainable range saturate at the boundary.
    """
    if abs(target_r) < 1e-12:
        return 0.0
    v1 = g_i(w1)

    def induced(rho):
        z2 = rho * w1 + np.sqrt(1.0 - rho * rho) * w2
        v2 = g_j(z2)
        return float(np.corrcoef(v1, v2)[0, 1]) - target_r

    lo, hi = -0.9999, 0.9999
    f_lo, f_hi = induced(lo), induced(hi)
    if f_lo >= 0.0:
        return lo
    if f_hi <= 0.0:
        return hi
    return float(brentq(induced, lo, hi, xtol=5e-4))


def _nearest_psd_correlation(mat: np.ndarray) -> np.ndarray:
    """Eigenvalue-clip repair to the nearest feasible correlation matrix."""
    sym = (mat + mat.T) / 2.0
    vals, vecs = np.linalg.eigh(sym)
    repaired = (vecs * np.maximum(vals, 1e-10)) @ vecs.T
    d = np.sqrt(np.diag(repaired))
    repaired = repaired / np.outer(d, d)
    repaired = (repaired + repaired.T) / 2.0
    np.fill_diagonal(repaired, 1.0)
    if np.max(np.abs(repaired - sym)) > 0.1:
        raise CalibrationError(
            "target correlation matrix is not repairable to a nearby PSD matrix"
        )
    return repaired


def _validate_target(target: np.ndarray) -> np.ndarray:
    target = np.asarray(target, dtype=np.float64)
    k = len(SCHEMA.columns)
    if target.shape != (k, k):
        raise ValidationError(f"target correlation matrix must be {k}x{k}, got {target.shape}")
    if not np.all(np.isfinite(target)):
        raise ValidationError("target correlation matrix contains non-finite entries")
    if np.max(np.abs(target - target.T)) > 1e-8:
        raise ValidationError("target correlation matrix must be symmetric")
    if np.max(np.abs(np.diag(target) - 1.0)) > 1e-8:
        raise ValidationError("target correlation matrix must have unit diagonal")
    if np.max(np.abs(target)) > 1.0 + 1e-8:
        raise ValidationError("target correlations must lie in [-1, 1]")
    return target


_calibration_cache: dict[bytes, np.ndarray] = {}


def _calibrated_latent_matrix(target: np.ndarray, margins) -> np.ndarray:
    key = target.tobytes()
    cached = _calibration_cache.get(key)
    if cached is not None:
        return cached
    rng = np.random.default_rng(np.random.SeedSequence(_CALIBRATION_SEED))
    w = rng.standard_normal((_CALIBRATION_DRAWS, 2))
    k = target.shape[0]
    latent = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            rho = _pair_latent_rho(target[i, j], margins[i], margins[j], w[:, 0], w[:, 1])
            latent[i, j] = latent[j, i] = rho
    latent = _nearest_psd_correlation(latent)
    _calibration_cache[key] = latent
    return latent


def synthesize_covariates(
    n: int,
    seed: int,
    target: np.ndarray | None = None,
) -> CovariateTable:
    """Generate a deterministic synthetic stand-in covariate table.

    A Gaussian copula draws jointly-normal latents whose correlation matrix
    is calibrated per pair so that the *discretized/transformed* columns hit
    ``target`` (default: the reference correlations of the study covariates),
    then each column is pushed through its margin.

    Parameters
    ----------
    n : number of units (>= 2)
    seed : nonnegative 64-bit master seed; same (n, seed, target) gives a
        bit-identical table
    target : optional 8x8 symmetric unit-diagonal correlation matrix
    """
    if n < 2:
        raise ValidationError(f"need n >= 2 synthetic units, got {n}")
    if target is None:
        target = DEFAULT_CORRELATION_TARGETS
    target = _validate_target(target)
    margins = _margin_transforms(_load_margin_config())
    latent_corr = _calibrated_latent_matrix(target, margins)

    chol = np.linalg.cholesky(latent_corr)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x636F7661]))
    z = rng.standard_normal((n, len(SCHEMA.columns))) @ chol.T

    values = np.empty_like(z)
    for j, g in enumerate(margins):
        values[:, j] = g(z[:, j])

    # X3 is generated on its raw zero-inflated scale; z-score it so the table
    # is already on the modeling scale like the other continuous columns.
    j3 = SCHEMA.index("X3")
    sd = values[:, j3].std(ddof=1)
    if sd == 0.0:
        raise CalibrationError("synthesized X3 column degenerate; increase n")
    values[:, j3] = (values[:, j3] - values[:, j3].mean()) / sd

    return CovariateTable(schema=SCHEMA, values=values, provenance=f"synthetic(seed={int(seed)})")
