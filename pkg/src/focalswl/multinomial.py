"""Multinomial logit over the full response scale, and its marginal effects.

Each response value gets its own score equation, relaxing the ordinality
assumption so heterogeneous focal-value behavior can show up as negative
outliers in the per-response marginal effects.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import SurveyDataset
from .errors import DataError
from .optim import newton_maximize
from .parallel import parallel_map

PROFILE_SUM_TOL = 1e-10


@dataclass(frozen=True)
class MultinomialFit:
    """Coefficient matrix of the response-score system.

    coefficients has one row per non-base category (constant first, then
    covariates); the base category's row is implicitly zero.  categories
    lists the response values in column order of predicted profiles.
    """

    base_category: int
    categories: tuple[int, ...]
    coefficient_names: tuple[str, ...]
    coefficients: np.ndarray
    log_likelihood: float
    n_obs: int

    @property
    def covariate_names(self) -> tuple[str, ...]:
        return self.coefficient_names[1:]

    def full_coefficients(self) -> np.ndarray:
        """Coefficient matrix including the zero row of the base category."""
        full = np.zeros((len(self.categories), len(self.coefficient_names)))
        non_base = [j for j, c in enumerate(self.categories) if c != self.base_category]
        full[non_base] = self.coefficients
        return full


@dataclass(frozen=True)
class MarginalEffectsTable:
    """Mean marginal effects dP_j/dx per response value, with intervals.

    effects maps covariate name -> vector over response values (aligned
    with categories).  Intervals are 95% percentile bootstrap unless the
    method tag says analytic-delta.
    """

    categories: tuple[int, ...]
    effects: dict[str, np.ndarray]
    ci_lo: dict[str, np.ndarray]
    ci_hi: dict[str, np.ndarray]
    method: str
    n_boot: int = 0


def validate_profile(probs: np.ndarray) -> np.ndarray:
    """Assert the probability-profile invariants and return the array."""
    probs = np.asarray(probs, dtype=float)
    if np.any(probs < 0):
        raise DataError("profile has negative entries")
    sums = probs.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > PROFILE_SUM_TOL):
        raise DataError("profile does not sum to 1")
    return probs


def _augmented_design(dataset: SurveyDataset, covariates):
    x, names = dataset.design(covariates)
    return np.column_stack([np.ones(dataset.n), x]), ("constant", *names)


def _softmax_profiles(design, full_coef):
    scores = design @ full_coef.T
    scores -= scores.max(axis=1, keepdims=True)
    np.exp(scores, out=scores)
    scores /= scores.sum(axis=1, keepdims=True)
    return scores


def _mlogit_objective(design, onehot, w, n_free, free_rows):
    n_cats = onehot.shape[1]
    kp = design.shape[1]

    def objective(theta):
        coef = np.zeros((n_cats, kp))
        coef[free_rows] = theta.reshape(n_free, kp)
        probs = _softmax_profiles(design, coef)
        value = float(w @ np.log(np.maximum((probs * onehot).sum(axis=1), 1e-300)))
        resid = (onehot - probs)[:, free_rows]
        grad = (design.T @ (resid * w[:, None])).T.reshape(-1)
        pf = probs[:, free_rows]
        # H[(j,a),(l,b)] = -sum_i w_i (diag(p)-pp')_jl x_ia x_ib
        cross = np.einsum("ij,il,ia,ib->jalb", pf * w[:, None], pf, design, design,
                          optimize=True)
        diag = np.einsum("ij,ia,ib->jab", pf * w[:, None], design, design,
                         optimize=True)
        hess = cross.copy()
        for j in range(n_free):
            hess[j, :, j, :] -= diag[j]
        dim = n_free * kp
        return value, grad, hess.reshape(dim, dim)

    return objective


def fit_multinomial_logit(dataset: SurveyDataset, covariates=None,
                          base_category: int | None = None,
                          init: np.ndarray | None = None) -> MultinomialFit:
    """Weighted multinomial logit MLE over all scale categories.

    Every category of the scale must be observed at least once; an absent
    cell is reported by name.  Probabilities are softmax over the score
    equations with the base category's scores fixed at zero.  init can
    warm-start the Newton iterations with a free-row coefficient matrix.
    """
    scale = dataset.scale
    base = scale.min_value if base_category is None else int(base_category)
    categories = tuple(int(v) for v in scale.values)
    if base not in categories:
        raise DataError(f"base category {base} not on the scale")
    counts = np.bincount(scale.position(dataset.responses), minlength=scale.n_categories)
    empty = [categories[j] for j in range(len(categories)) if counts[j] == 0]
    if empty:
        raise DataError(f"empty response categories: {empty}")

    design, names = _augmented_design(dataset, covariates)
    w = dataset.weights
    onehot = np.zeros((dataset.n, len(categories)))
    onehot[np.arange(dataset.n), scale.position(dataset.responses)] = 1.0
    free_rows = np.array([j for j, c in enumerate(categories) if c != base])

    if init is not None:
        theta0 = np.asarray(init, dtype=float)
        if theta0.shape != (len(free_rows), design.shape[1]):
            raise DataError("init has the wrong shape for this design")
    else:
        # start at the constants-only optimum: log share ratios to the base
        shares = (onehot * w[:, None]).sum(axis=0) / w.sum()
        theta0 = np.zeros((len(free_rows), design.shape[1]))
        theta0[:, 0] = np.log(shares[free_rows] / shares[categories.index(base)])
    objective = _mlogit_objective(design, onehot, w, len(free_rows), free_rows)
    theta, ll = newton_maximize(objective, theta0.reshape(-1))
    return MultinomialFit(
        base_category=base,
        categories=categories,
        coefficient_names=names,
        coefficients=theta.reshape(len(free_rows), design.shape[1]),
        log_likelihood=ll,
        n_obs=dataset.n,
    )


def predict_profiles(fit: MultinomialFit, dataset: SurveyDataset) -> np.ndarray:
    """N x n_categories matrix of response probabilities, one row per individual."""
    x, _ = dataset.design(fit.covariate_names)
    design = np.column_stack([np.ones(dataset.n), x])
    return _softmax_profiles(design, fit.full_coefficients())


def _ame_matrix(fit: MultinomialFit, dataset: SurveyDataset) -> np.ndarray:
    """Weighted-average marginal effects, shape (n_covariates, n_categories).

    dP_ij/dx_k = P_ij (B_jk - sum_l P_il B_lk); averaging over individuals
    makes each covariate's row sum to zero by construction.
    """
    probs = predict_profiles(fit, dataset)
    full = fit.full_coefficients()[:, 1:]  # drop constants: (C, K)
    w = dataset.weights / dataset.weights.sum()
    pbar = probs @ full  # (N, K), the probability-weighted mean coefficient
    effects = np.einsum("i,ij,jk->kj", w, probs, full) - np.einsum(
        "i,ij,ik->kj", w, probs, pbar)
    return effects


def _bootstrap_ames(fit, dataset, seed, n_boot, workers=None):
    """Row-resampled AME replicates, each refit warm-started at the point fit."""
    children = np.random.SeedSequence(seed).spawn(n_boot)

    def one_replicate(child):
        rng = np.random.default_rng(child)
        idx = rng.integers(0, dataset.n, size=dataset.n)
        resampled = SurveyDataset(
            responses=dataset.responses[idx],
            covariates=dataset.covariates[idx],
            covariate_names=dataset.covariate_names,
            weights=dataset.weights[idx],
            scale=dataset.scale,
            numeracy_covariates=dataset.numeracy_covariates,
        )
        try:
            refit = fit_multinomial_logit(resampled, fit.covariate_names,
                                          fit.base_category, init=fit.coefficients)
        except DataError:
            return None  # replicate lost a category; drop it
        return _ame_matrix(refit, resampled)

    draws = [d for d in parallel_map(one_replicate, children, workers=workers)
             if d is not None]
    return np.array(draws)


def marginal_effects_by_response(fit: MultinomialFit, dataset: SurveyDataset,
                                 covariates=None, *, n_boot: int = 200,
                                 seed: int = 0, workers=None) -> MarginalEffectsTable:
    """Mean marginal effect of each covariate on every response probability.

    Point effects are analytic averages of the per-individual derivative;
    intervals are nonparametric bootstrap over rows (percentile, 95%).
    Pass n_boot=0 to skip the bootstrap.
    """
    names = list(covariates) if covariates is not None else list(fit.covariate_names)
    missing = set(names) - set(fit.covariate_names)
    if missing:
        raise DataError(f"covariates not in fit: {sorted(missing)}")
    rows = [fit.covariate_names.index(nm) for nm in names]
    point = _ame_matrix(fit, dataset)

    if n_boot > 0:
        draws = _bootstrap_ames(fit, dataset, seed, n_boot, workers=workers)
        lo = np.percentile(draws, 2.5, axis=0)
        hi = np.percentile(draws, 97.5, axis=0)
        method = "bootstrap"
    else:
        lo = np.full_like(point, np.nan)
        hi = np.full_like(point, np.nan)
        method = "analytic-point"
    return MarginalEffectsTable(
        categories=fit.categories,
        effects={nm: point[r] for nm, r in zip(names, rows)},
        ci_lo={nm: lo[r] for nm, r in zip(names, rows)},
        ci_hi={nm: hi[r] for nm, r in zip(names, rows)},
        method=method,
        n_boot=n_boot,
    )


def expected_swl_marginal_effect(fit: MultinomialFit, dataset: SurveyDataset,
                                 covariate: str, *, n_boot: int = 200,
                                 seed: int = 0, workers=None):
    """Marginal effect on E[S] = sum_j j dP_j/dx, with a bootstrap interval.

    Returns (effect, (ci_lo, ci_hi)); the point value equals the dot
    product of the response values with the per-response mean effects.
    """
    if covariate not in fit.covariate_names:
        raise DataError(f"covariate {covariate!r} not in fit")
    r = fit.covariate_names.index(covariate)
    values = np.asarray(fit.categories, dtype=float)
    point = float(values @ _ame_matrix(fit, dataset)[r])
    if n_boot > 0:
        draws = _bootstrap_ames(fit, dataset, seed, n_boot, workers=workers)
        scalar = draws[:, r, :] @ values
        return point, (float(np.percentile(scalar, 2.5)),
                       float(np.percentile(scalar, 97.5)))
    return point, (np.nan, np.nan)
