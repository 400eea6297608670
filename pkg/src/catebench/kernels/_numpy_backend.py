"""Vectorized fallback for the Monte Carlo kernels (used when the compiled
extension is unavailable). Same call signatures, same draws, same statistics;
only the accumulation strategy differs."""

import numpy as np
from scipy.special import ndtr


def shifted_cdf_sums(draws, m, s):
    v = ndtr(m + s * draws)
    return float(v.sum()), float(v @ v)


def squash_contrast_sums(draws, m1, m0, s):
    sw = s * draws
    d = 13.0 * (ndtr(m1 + sw) - ndtr(m0 + sw))
    return float(d.sum()), float(d @ d)
