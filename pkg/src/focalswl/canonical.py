"""Canonical estimators: weighted OLS, ordered logit, and step-wise binary logits.

These are the standard approaches that treat the ordinal response either
as cardinal (OLS) or as perfectly ordered (ordered logit).  They ignore
focal-value behavior, which is exactly why the package exists: their
coefficients are the baseline against which corrections are measured.
"""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np

from . import logistic
from .data import DropFocal, ResponsePair, ResponseRange, SurveyDataset, subset
from .errors import DataError, EstimationError, RankDeficiencyError, SeparationError
from .optim import newton_maximize

log = logging.getLogger(__name__)

CONSTANT = "constant"


@dataclass(frozen=True)
class CanonicalFit:
    """Result of one canonical regression.

    thresholds (ordered logit only) are strictly increasing boundaries,
    named by the category pair they separate.  log_likelihood is None for
    OLS, where rss is set instead; goodness of fit is McFadden pseudo-R2
    for likelihood fits and adjusted R2 for OLS.
    """

    kind: str
    coefficients: dict[str, float]
    standard_errors: dict[str, float]
    n_obs: int
    thresholds: np.ndarray | None = None
    threshold_names: tuple[str, ...] = ()
    threshold_standard_errors: np.ndarray | None = None
    log_likelihood: float | None = None
    rss: float | None = None
    pseudo_r2: float | None = None
    adjusted_r2: float | None = None
    dropped_covariates: tuple[str, ...] = ()
    notes: dict = field(default_factory=dict)

    def coef_vector(self, names) -> np.ndarray:
        return np.array([self.coefficients[nm] for nm in names])


def _design_with_constant(dataset: SurveyDataset, covariates):
    x, names = dataset.design(covariates)
    design = np.column_stack([np.ones(dataset.n), x])
    return design, (CONSTANT, *names)


def _check_rank(design, weights, names):
    rank = np.linalg.matrix_rank(design * np.sqrt(weights)[:, None])
    if rank < design.shape[1]:
        raise RankDeficiencyError(
            f"design matrix with columns {names} is rank deficient (rank {rank})"
        )


def fit_ols(dataset: SurveyDataset, covariates=None) -> CanonicalFit:
    """Weighted least squares of the response on covariates plus a constant.

    Standard errors come from the classical variance formula
    sigma^2 (X'WX)^-1 with sigma^2 = sum(w e^2) / (n - k).
    """
    design, names = _design_with_constant(dataset, covariates)
    w = dataset.weights
    y = dataset.responses.astype(float)
    _check_rank(design, w, names)

    xtwx = design.T @ (design * w[:, None])
    xtwy = design.T @ (w * y)
    beta = np.linalg.solve(xtwx, xtwy)
    resid = y - design @ beta
    n, k = design.shape
    rss = float(w @ resid**2)
    sigma2 = rss / (n - k)
    cov = sigma2 * np.linalg.inv(xtwx)
    se = np.sqrt(np.diag(cov))

    ybar = float(w @ y / w.sum())
    tss = float(w @ (y - ybar) ** 2)
    r2 = 1.0 - rss / tss if tss > 0 else 0.0
    adj = 1.0 - (1.0 - r2) * (n - 1) / (n - k)
    return CanonicalFit(
        kind="ols",
        coefficients=dict(zip(names, beta)),
        standard_errors=dict(zip(names, se)),
        n_obs=n,
        rss=rss,
        adjusted_r2=adj,
    )


def _ordered_logit_objective(x, cat, w, n_cuts):
    """(loglik, gradient, hessian) factory over theta = (beta, cuts)."""
    k = x.shape[1]
    upper_valid = cat <= n_cuts - 1
    lower_valid = cat >= 1

    def objective(theta):
        beta, cuts = theta[:k], theta[k:]
        eta = x @ beta
        a = np.where(upper_valid, cuts[np.minimum(cat, n_cuts - 1)] - eta, np.inf)
        b = np.where(lower_valid, cuts[np.maximum(cat - 1, 0)] - eta, -np.inf)
        prob = logistic.interval_prob(a, b)
        if np.any(prob <= 0):
            return -np.inf, None, None
        value = float(w @ np.log(prob))

        fa, fb = logistic.pdf(a), logistic.pdf(b)
        ra, rb = w * fa / prob, w * fb / prob
        grad_beta = x.T @ (rb - ra)
        grad_cuts = (np.bincount(cat[upper_valid], weights=ra[upper_valid],
                                 minlength=n_cuts)
                     - np.bincount(cat[lower_valid] - 1, weights=rb[lower_valid],
                                   minlength=n_cuts))
        grad = np.concatenate([grad_beta, grad_cuts])

        # second derivatives of log interval probability wrt (a, b)
        fpa = fa * (1.0 - 2.0 * logistic.cdf(a))
        fpb = fb * (1.0 - 2.0 * logistic.cdf(b))
        haa = w * (fpa / prob - (fa / prob) ** 2)
        hbb = w * (-fpb / prob - (fb / prob) ** 2)
        hab = w * fa * fb / prob**2

        hess = np.zeros((k + n_cuts, k + n_cuts))
        s_all = haa + hbb + 2.0 * hab
        hess[:k, :k] = x.T @ (x * s_all[:, None])
        # beta-cut cross terms: d(bound)/dbeta = -x for both bounds
        col_a = -(x * (haa + hab)[:, None])
        col_b = -(x * (hbb + hab)[:, None])
        for j in range(k):
            hess[j, k:] = (np.bincount(cat[upper_valid], weights=col_a[upper_valid, j],
                                       minlength=n_cuts)
                           + np.bincount(cat[lower_valid] - 1, weights=col_b[lower_valid, j],
                                         minlength=n_cuts))
        hess[k:, :k] = hess[:k, k:].T
        diag = (np.bincount(cat[upper_valid], weights=haa[upper_valid], minlength=n_cuts)
                + np.bincount(cat[lower_valid] - 1, weights=hbb[lower_valid],
                              minlength=n_cuts))
        hess[k:, k:] += np.diag(diag)
        both = upper_valid & lower_valid  # rows touching two adjacent cuts
        off = np.bincount(cat[both] - 1, weights=hab[both], minlength=n_cuts)
        for j in range(n_cuts - 1):
            hess[k + j, k + j + 1] += off[j]
            hess[k + j + 1, k + j] += off[j]
        return value, grad, hess

    return objective


def _cut_start(cat, w, n_cats):
    """Thresholds implied by the intercept-only model: logits of cumulative shares."""
    shares = np.bincount(cat, weights=w, minlength=n_cats) / w.sum()
    cum = np.cumsum(shares)[:-1]
    cum = np.clip(cum, 1e-9, 1 - 1e-9)
    return np.array([logistic.logit(c) for c in cum])


def fit_ordered_logit(dataset: SurveyDataset, covariates=None) -> CanonicalFit:
    """Weighted ordered logit with no constant in the index.

    P(y = j) = F(cut_j - x'b) - F(cut_{j-1} - x'b) with logistic F; the
    thresholds absorb location, one per adjacent pair of observed
    categories.  Fit by damped Newton on the analytic gradient/Hessian.
    """
    x, names = dataset.design(covariates)
    observed = np.unique(dataset.responses)
    if len(observed) < 2:
        raise DataError("ordered logit needs at least two observed categories")
    cat = np.searchsorted(observed, dataset.responses)
    w = dataset.weights
    n_cuts = len(observed) - 1
    _check_rank(x, w, names)

    theta0 = np.concatenate([np.zeros(x.shape[1]), _cut_start(cat, w, len(observed))])
    objective = _ordered_logit_objective(x, cat, w, n_cuts)
    ll_null = float(objective(theta0)[0])
    theta, ll = newton_maximize(objective, theta0)

    k = x.shape[1]
    cov = np.linalg.inv(-objective(theta)[2])
    se = np.sqrt(np.diag(cov))
    cut_names = tuple(f"cut_{observed[j]}_{observed[j + 1]}" for j in range(n_cuts))
    return CanonicalFit(
        kind="ordered-logit",
        coefficients=dict(zip(names, theta[:k])),
        standard_errors=dict(zip(names, se[:k])),
        n_obs=dataset.n,
        thresholds=theta[k:],
        threshold_names=cut_names,
        threshold_standard_errors=se[k:],
        log_likelihood=ll,
        pseudo_r2=1.0 - ll / ll_null if ll_null != 0 else 0.0,
    )


def predict_ordered_logit_probs(fit: CanonicalFit, dataset: SurveyDataset,
                                covariates=None) -> np.ndarray:
    """Per-row category probabilities (columns follow the fitted categories)."""
    names = [nm for nm in (covariates or fit.coefficients) if nm != CONSTANT]
    x, _ = dataset.design(names)
    eta = x @ fit.coef_vector(names)
    cuts = np.concatenate([[-np.inf], fit.thresholds, [np.inf]])
    return logistic.interval_prob(cuts[1:][None, :] - eta[:, None],
                                  cuts[:-1][None, :] - eta[:, None])


def _binary_logit_objective(design, y, w):
    def objective(theta):
        p = logistic.cdf(design @ theta)
        eps = 1e-300
        value = float(w @ (y * np.log(np.maximum(p, eps))
                           + (1 - y) * np.log(np.maximum(1 - p, eps))))
        grad = design.T @ (w * (y - p))
        hess = -(design.T @ (design * (w * p * (1 - p))[:, None]))
        return value, grad, hess
    return objective


def fit_binary_logit(design, y, w, names) -> CanonicalFit:
    """Weighted binary logit (design already includes any constant)."""
    _check_rank(design, w, names)
    objective = _binary_logit_objective(design, y, w)
    share = float(np.clip(w @ y / w.sum(), 1e-9, 1 - 1e-9))
    theta0 = np.zeros(design.shape[1])
    if CONSTANT in names:
        theta0[names.index(CONSTANT)] = logistic.logit(share)
    ll_null = float(w.sum() * (share * np.log(share) + (1 - share) * np.log(1 - share)))
    theta, ll = newton_maximize(objective, theta0)
    se = np.sqrt(np.diag(np.linalg.inv(-objective(theta)[2])))
    return CanonicalFit(
        kind="binary-logit",
        coefficients=dict(zip(names, theta)),
        standard_errors=dict(zip(names, se)),
        n_obs=len(y),
        log_likelihood=ll,
        pseudo_r2=1.0 - ll / ll_null if ll_null != 0 else 0.0,
    )


def fit_stepwise_logits(dataset: SurveyDataset, covariates=None) -> dict[str, CanonicalFit]:
    """Binary logit of choosing j+1 on each adjacent response pair (j, j+1).

    Each pair is an independent estimation on its own subsample, so
    standard errors across pairs are not jointly estimated.  Covariates
    that are constant within a pair subset are dropped and recorded on the
    fit; pairs with perfect separation or a missing outcome are skipped
    with a warning.
    """
    scale = dataset.scale
    fits: dict[str, CanonicalFit] = {}
    for low in range(scale.min_value, scale.max_value):
        label = f"{low}_{low + 1}"
        try:
            pair = subset(dataset, ResponsePair(low))
        except DataError:
            log.warning("stepwise pair %s: no observations; skipped", label)
            continue
        y = pair.pair_indicator
        if y.min() == y.max():
            log.warning("stepwise pair %s: only one outcome present; skipped", label)
            continue
        x, names = pair.design(covariates)
        keep = [j for j in range(x.shape[1]) if np.ptp(x[:, j]) > 0]
        dropped = tuple(names[j] for j in range(x.shape[1]) if j not in keep)
        if dropped:
            log.warning("stepwise pair %s: dropping constant columns %s", label, dropped)
        design = np.column_stack([np.ones(pair.n), x[:, keep]])
        kept_names = (CONSTANT, *(names[j] for j in keep))
        try:
            fit = fit_binary_logit(design, y.astype(float), pair.weights, kept_names)
        except SeparationError:
            log.warning("stepwise pair %s: perfect separation; skipped", label)
            continue
        fits[label] = dataclasses.replace(fit, dropped_covariates=dropped)
    if not fits:
        raise EstimationError("no estimable adjacent response pairs")
    return fits


def fit_subset_models(dataset: SurveyDataset, covariates=None) -> dict[str, CanonicalFit]:
    """The five-column subset comparison.

    Full-sample ordered logit and OLS, OLS with focal responses dropped,
    and ordered logits on the two non-focal runs below and above the
    scale midpoint.
    """
    mid = dataset.scale.focal_set[1]
    lo, hi = dataset.scale.min_value, dataset.scale.max_value
    return {
        "ologit_full": fit_ordered_logit(dataset, covariates),
        "ols_full": fit_ols(dataset, covariates),
        "ols_dropfocal": fit_ols(subset(dataset, DropFocal()), covariates),
        "ologit_below": fit_ordered_logit(
            subset(dataset, ResponseRange(lo + 1, mid - 1)), covariates),
        "ologit_above": fit_ordered_logit(
            subset(dataset, ResponseRange(mid + 1, hi - 1)), covariates),
    }
