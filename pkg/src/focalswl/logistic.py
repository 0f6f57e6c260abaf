"""Logistic link helpers used by every likelihood in the package.

All probabilities here use F(t) = 1 / (1 + exp(-t)).
"""
from __future__ import annotations

import numpy as np
from scipy.special import expit


def cdf(t):
    """Logistic CDF, elementwise; handles +/-inf."""
    return expit(t)


def pdf(t):
    """Logistic density f = F (1 - F); zero at +/-inf."""
    p = expit(t)
    return p * (1.0 - p)


def interval_prob(upper, lower):
    """P(lower < T <= upper) for logistic T, computed stably in the tails.

    Uses F(a) - F(b) = F(a) * F(-b) * (-expm1(b - a)), which stays accurate
    when both arguments sit far in the same tail.  Infinite bounds follow
    IEEE semantics: upper=+inf or lower=-inf reduce to single-CDF terms,
    and upper == lower gives exactly zero.
    """
    upper = np.asarray(upper, dtype=float)
    lower = np.asarray(lower, dtype=float)
    with np.errstate(invalid="ignore"):
        out = expit(upper) * expit(-lower) * (-np.expm1(lower - upper))
    return out


def logit(p):
    """log(p / (1 - p)) for a probability in (0, 1)."""
    return float(np.log(p) - np.log1p(-p))
