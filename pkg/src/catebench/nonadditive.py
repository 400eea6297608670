"""Non-additive error family: bounded squash of a latent additive outcome.

The latent outcome is generated exactly like the i.i.d. additive case, then
pushed through a scaled normal CDF. The treatment effect is no longer the
latent tau; it has an exact closed form via the normal-CDF mixture identity,
which is also what the Monte Carlo oracle in ``verify`` checks against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from catebench.dgp import CalibratedSurfaces, normal_cdf
from catebench.exceptions import CalibrationError, ValidationError

# fixed constants of the squash; chosen once so the transformed outcome looks
# like the additive ones, and never varied
SQUASH_SCALE = 13.0
SQUASH_SHIFT = -6.0
LATENT_SD_INFLATION = 1.25

_LOWER = SQUASH_SHIFT  # -6
_UPPER = SQUASH_SCALE + SQUASH_SHIFT  # 7


@dataclass(frozen=True)
class TransformParams:
    """Calibrated squash parameters for one DGP.

    a and b are the latent mean and (inflated) latent sd; s = sigma_y / b;
    m1 and m0 are the per-unit standardized latent means under treatment and
    control. ``denom`` caches sqrt(s^2 + 1) so every closed-form expression
    uses the identical quantity.
    """

    a: float
    b: float
    s: float
    m1: np.ndarray
    m0: np.ndarray

    def __post_init__(self):
        if not self.b > 0.0:
            raise CalibrationError(f"latent scale b must be positive, got {self.b}")
        if self.s < 0.0:
            raise CalibrationError(f"noise ratio s must be nonnegative, got {self.s}")
        if self.m1.shape != self.m0.shape:
            raise ValidationError("m1 and m0 must have equal length")
        object.__setattr__(self, "denom", float(np.sqrt(self.s * self.s + 1.0)))

    @property
    def n(self) -> int:
        return self.m1.shape[0]


def gaussian_cdf_mixture_mean(m, s):
    """E[Phi(m + s*W)] for W standard normal: equals Phi(m / sqrt(1 + s^2))."""
    if np.any(np.asarray(s) < 0):
        raise ValidationError("mixture sd s must be nonnegative")
    return normal_cdf(m / np.sqrt(1.0 + np.square(s)))


def compute_transform_params(mu_tilde, tau_tilde, pi, sigma_y: float) -> TransformParams:
    """Calibrate (a, b) from the latent surfaces and derive the unit terms.

    a is the sample mean of mu + tau*pi; b inflates the latent sd by 1.25,
    where Var(latent) decomposes as sigma_y^2 plus the population variance of
    mu + tau*pi.
    """
    mu_tilde, tau_tilde, pi = (np.asarray(v, dtype=np.float64) for v in (mu_tilde, tau_tilde, pi))
    if not (mu_tilde.shape == tau_tilde.shape == pi.shape):
        raise ValidationError("mu, tau, pi must have equal length")
    if mu_tilde.shape[0] < 2:
        raise ValidationError("transform calibration needs at least 2 units")
    if sigma_y < 0:
        raise ValidationError(f"sigma_y must be nonnegative, got {sigma_y}")

    latent_mean = mu_tilde + tau_tilde * pi
    a = float(np.mean(latent_mean))
    b = float(LATENT_SD_INFLATION * np.sqrt(sigma_y**2 + np.var(latent_mean)))
    if b == 0.0:
        raise CalibrationError(
            "degenerate transform: sigma_y = 0 and mu + tau*pi constant leave nothing to squash"
        )
    return TransformParams(
        a=a,
        b=b,
        s=float(sigma_y) / b,
        m1=(mu_tilde + tau_tilde - a) / b,
        m0=(mu_tilde - a) / b,
    )


def squash_outcome(y_tilde, params: TransformParams):
    """Map a latent outcome through 13*Phi((y - a)/b) - 6.

    Outputs are clamped to the nearest representable values inside (-6, 7);
    the clamp only ever fires when Phi saturates in float64, i.e. at latent
    values tens of latent sds from a.
    """
    y = SQUASH_SCALE * normal_cdf((np.asarray(y_tilde, dtype=np.float64) - params.a) / params.b) + SQUASH_SHIFT
    return np.clip(y, np.nextafter(_LOWER, _UPPER), np.nextafter(_UPPER, _LOWER))


def potential_outcome_means(params: TransformParams) -> tuple[np.ndarray, np.ndarray]:
    """Exact per-unit E[Y^1 | x] and E[Y^0 | x] on the squashed scale."""
    ey1 = SQUASH_SCALE * normal_cdf(params.m1 / params.denom) + SQUASH_SHIFT
    ey0 = SQUASH_SCALE * normal_cdf(params.m0 / params.denom) + SQUASH_SHIFT
    return ey1, ey0


def cate_all(params: TransformParams) -> np.ndarray:
    """Closed-form treatment effect for every unit (difference of the two arms)."""
    ey1, ey0 = potential_outcome_means(params)
    return ey1 - ey0


def cate_nonadditive(unit_index: int, params: TransformParams, sigma_y: float | None = None):
    """Closed-form treatment effect and E[Y^0 | x] for one unit.

    ``sigma_y``, when given, is cross-checked against the calibrated s = sigma_y/b
    to catch params mixed up between DGPs.
    """
    if not 0 <= unit_index < params.n:
        raise ValidationError(f"unit index {unit_index} out of range [0, {params.n})")
    if sigma_y is not None and abs(sigma_y - params.s * params.b) > 1e-10 * max(1.0, abs(sigma_y)):
        raise ValidationError(
            f"sigma_y {sigma_y} does not match the calibrated transform (s*b = {params.s * params.b})"
        )
    ey1, ey0 = potential_outcome_means(params)
    return float(ey1[unit_index] - ey0[unit_index]), float(ey0[unit_index])


def generate_nonadditive_outcome(
    surfaces: CalibratedSurfaces,
    z: np.ndarray,
    params: TransformParams,
    rng: np.random.Generator,
) -> np.ndarray:
    """Latent additive draw with i.i.d. errors, then the squash, per unit."""
    z = np.asarray(z)
    n = surfaces.n
    if z.shape[0] != n or params.n != n:
        raise ValidationError(
            f"length mismatch: n={n}, z has {z.shape[0]}, params cover {params.n}"
        )
    latent = surfaces.mu + surfaces.tau * z + surfaces.sigma_y * rng.standard_normal(n)
    return squash_outcome(latent, params)
