"""Additive-error data generating processes.

Surface functions, propensity, noise calibration, treatment draws, and
outcome generation for the i.i.d., group-correlated, and heteroskedastic
error families. Everything here is a pure function of its inputs; random
draws always come from explicitly passed generators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from catebench.covariates import N_LEVELS, CovariateTable
from catebench.exceptions import ValidationError

# family names double as the on-disk folder names
IID = "iid"
GROUP_CORRELATED = "group_corr"
HETEROSKEDASTIC = "heteroskedastic"
NON_ADDITIVE = "non-additive"
ADDITIVE_FAMILIES = (IID, GROUP_CORRELATED, HETEROSKEDASTIC)
FAMILIES = (GROUP_CORRELATED, HETEROSKEDASTIC, IID, NON_ADDITIVE)

# the two levels of each setting axis
XI_LOW, XI_HIGH = 1.0 / 3.0, 2.0
ETA_LOW, ETA_HIGH = 0.25, 1.25
KAPPA_WEAK, KAPPA_STRONG = (0.5, 0.0), (3.0, -1.0)

#: propensities are kept this far away from {0, 1} for numerical safety
PROPENSITY_CLAMP = 1e-12

#: weights of the idiosyncratic and shared components in the group family
GROUP_IDIOSYNCRATIC_WEIGHT = 0.9
GROUP_SHARED_WEIGHT = 0.1


def normal_cdf(x):
    """Standard normal CDF, accurate to well under 1e-12 absolute.

    Delegates to the erfc-based SciPy routine; the baseline surface composes
    this with a sine, and the ground-truth treatment effects inherit its
    accuracy, so a cheap polynomial approximation would not do.
    """
    return ndtr(x)


@dataclass(frozen=True)
class ScenarioConfig:
    """One DGP: effect magnitude, noise level, selection strength, error family.

    ``extended=True`` lifts the restriction that the three settings match one
    of the eight tabled cases.
    """

    xi: float
    eta: float
    kappa: tuple[float, float]
    family: str
    extended: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kappa", (float(self.kappa[0]), float(self.kappa[1])))
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown error family {self.family!r}; expected one of {FAMILIES}")
        if self.extended:
            return
        if self.xi not in (XI_LOW, XI_HIGH):
            raise ValidationError(f"xi must be {XI_LOW} or {XI_HIGH} unless extended, got {self.xi}")
        if self.eta not in (ETA_LOW, ETA_HIGH):
            raise ValidationError(f"eta must be {ETA_LOW} or {ETA_HIGH} unless extended, got {self.eta}")
        if self.kappa not in (KAPPA_WEAK, KAPPA_STRONG):
            raise ValidationError(
                f"kappa must be {KAPPA_WEAK} or {KAPPA_STRONG} unless extended, got {self.kappa}"
            )

    @classmethod
    def from_levels(cls, family: str, xi_high: bool, eta_high: bool, kappa_strong: bool) -> "ScenarioConfig":
        return cls(
            xi=XI_HIGH if xi_high else XI_LOW,
            eta=ETA_HIGH if eta_high else ETA_LOW,
            kappa=KAPPA_STRONG if kappa_strong else KAPPA_WEAK,
            family=family,
        )


@dataclass(frozen=True)
class CalibratedSurfaces:
    """Per-unit surface values plus the scalar outcome-noise scale."""

    config: ScenarioConfig
    f: np.ndarray
    pi: np.ndarray
    mu: np.ndarray
    tau: np.ndarray
    sigma_x: np.ndarray
    sigma_y: float

    def __post_init__(self):
        if not (np.all(self.pi > 0.0) and np.all(self.pi < 1.0)):
            raise ValidationError("propensities must lie strictly inside (0, 1)")
        if not (np.all(self.sigma_x >= 0.4) and np.all(self.sigma_x <= 1.4)):
            raise ValidationError("sigma(x) must lie in [0.4, 1.4]")
        expected = calibrate_noise_scale(self.mu, self.pi, self.tau, self.config.eta)
        if abs(self.sigma_y - expected) > 1e-10:
            raise ValidationError(
                f"sigma_y fails its recomputation check: {self.sigma_y} vs {expected}"
            )

    @property
    def n(self) -> int:
        return self.f.shape[0]


def raw_score(x1, x43, x10):
    """Linear score feeding the propensity: x1 + x43 + 0.3*(x10 - 1)."""
    return x1 + x43 + 0.3 * (x10 - 1.0)


def propensity(f_value, kappa):
    """Treatment probability (1 + exp(k1*f + k2))^-1, clamped away from {0, 1}.

    As defined, the probability *decreases* in the score for k1 > 0; that is
    deliberate and kept as-is (see README).
    """
    k1, k2 = kappa
    p = 1.0 / (1.0 + np.exp(k1 * np.asarray(f_value, dtype=np.float64) + k2))
    return np.clip(p, PROPENSITY_CLAMP, 1.0 - PROPENSITY_CLAMP)


def mu_baseline(pi_value, x43):
    """Untreated response surface -sin(Phi(pi)) + x43.

    The normal CDF is evaluated *at the propensity value*, which wires the
    treatment mechanism directly into the prognosis (targeted selection):
    units with equal propensity and equal x43 have identical baselines.
    """
    return -np.sin(normal_cdf(pi_value)) + x43


def tau_additive(x3, x24, x14, x15, xi):
    """Heterogeneous treatment effect xi*(x3*x24 + (x14 - 1) - (x15 - 1))."""
    return xi * (x3 * x24 + (x14 - 1.0) - (x15 - 1.0))


def sigma_multiplier(x21):
    """Per-unit noise multiplier 0.4 + (x21 - 1)/15, from 0.4 up to 1.4."""
    x21 = np.asarray(x21, dtype=np.float64)
    if np.any((x21 < 1) | (x21 > N_LEVELS) | (x21 != np.floor(x21))):
        raise ValidationError(f"x21 levels must be integers in 1..{N_LEVELS}")
    return 0.4 + (x21 - 1.0) / 15.0


def calibrate_noise_scale(mu, pi, tau, eta, ddof: int = 0) -> float:
    """Outcome-noise scale eta * sqrt(Var(mu + pi*tau)) over the sample.

    The variance uses the population (divide-by-n) denominator by default;
    pass ddof=1 for the n-1 convention (at realistic n the difference is
    under 0.03%).
    """
    mu, pi, tau = (np.asarray(v, dtype=np.float64) for v in (mu, pi, tau))
    if not (mu.shape == pi.shape == tau.shape):
        raise ValidationError(f"mismatched surface lengths: {mu.shape}, {pi.shape}, {tau.shape}")
    if mu.shape[0] < 2:
        raise ValidationError("noise calibration needs at least 2 units")
    return float(eta) * float(np.sqrt(np.var(mu + pi * tau, ddof=ddof)))


def compute_surfaces(table: CovariateTable, config: ScenarioConfig) -> CalibratedSurfaces:
    """Evaluate all per-unit surfaces and calibrate sigma_y for one DGP."""
    x1, x3, x43 = table.column("X1"), table.column("X3"), table.column("X43")
    x10, x14, x15 = table.column("X10"), table.column("X14"), table.column("X15")
    x21, x24 = table.column("X21"), table.column("X24")

    f = raw_score(x1, x43, x10)
    pi = propensity(f, config.kappa)
    mu = mu_baseline(pi, x43)
    tau = tau_additive(x3, x24, x14, x15, config.xi)
    sigma_x = sigma_multiplier(x21)
    sigma_y = calibrate_noise_scale(mu, pi, tau, config.eta)
    return CalibratedSurfaces(
        config=config, f=f, pi=pi, mu=mu, tau=tau, sigma_x=sigma_x, sigma_y=sigma_y
    )


def draw_treatment(pi, rng: np.random.Generator) -> np.ndarray:
    """Independent Bernoulli(pi) indicators via inverse-CDF on uniform draws."""
    pi = np.asarray(pi, dtype=np.float64)
    return (rng.random(pi.shape) < pi).astype(np.int64)


def generate_additive_outcome(
    surfaces: CalibratedSurfaces,
    z: np.ndarray,
    family: str,
    x21,
    rng: np.random.Generator,
    group_rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Draw one outcome vector under an additive error family.

    ``rng`` supplies the per-unit noise; the group-correlated family also
    needs ``group_rng`` for the 16 shared draws (fresh each replicate, one
    per x21 level).
    """
    if family not in ADDITIVE_FAMILIES:
        raise ValidationError(f"unknown additive family {family!r}; expected one of {ADDITIVE_FAMILIES}")
    z = np.asarray(z)
    n = surfaces.n
    if z.shape[0] != n:
        raise ValidationError(f"treatment vector has length {z.shape[0]}, expected {n}")

    signal = surfaces.mu + surfaces.tau * z
    eps = rng.standard_normal(n)

    if family == IID:
        return signal + surfaces.sigma_y * eps
    if family == GROUP_CORRELATED:
        if group_rng is None:
            raise ValidationError("group_correlated generation requires a dedicated group stream")
        levels = np.asarray(x21)
        if levels.shape[0] != n:
            raise ValidationError(f"x21 vector has length {levels.shape[0]}, expected {n}")
        shared = group_rng.standard_normal(N_LEVELS)
        mix = GROUP_IDIOSYNCRATIC_WEIGHT * eps + GROUP_SHARED_WEIGHT * shared[levels.astype(np.int64) - 1]
        return signal + surfaces.sigma_y * mix
    # heteroskedastic
    return signal + surfaces.sigma_x * surfaces.sigma_y * eps
