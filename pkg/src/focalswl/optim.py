"""Damped Newton ascent for the concave single-model likelihoods."""
from __future__ import annotations

import numpy as np

from .errors import ConvergenceError, SeparationError

GRAD_TOL = 1e-8
MAX_ITER = 200
MAX_PARAM_NORM = 50.0


def newton_maximize(objective, theta0, *, grad_tol=GRAD_TOL, max_iter=MAX_ITER,
                    separation_norm=MAX_PARAM_NORM):
    """Maximize a concave log-likelihood by damped Newton with step halving.

    objective(theta) must return (value, gradient, hessian).  Convergence
    is max-norm of the gradient below grad_tol.  A diverging parameter
    norm is reported as separation; hitting the iteration cap raises
    ConvergenceError.
    """
    theta = np.asarray(theta0, dtype=float).copy()
    value, grad, hess = objective(theta)
    if not np.isfinite(value):
        raise ConvergenceError("objective not finite at the starting point")

    for _ in range(max_iter):
        if np.max(np.abs(grad)) < grad_tol:
            return theta, value
        step = _newton_step(grad, hess)
        lam = 1.0
        for _ in range(60):
            candidate = theta + lam * step
            cand_value, cand_grad, cand_hess = objective(candidate)
            if np.isfinite(cand_value) and cand_value >= value - 1e-13:
                break
            lam *= 0.5
        else:
            raise ConvergenceError("step halving failed to find an ascent step")
        theta, value, grad, hess = candidate, cand_value, cand_grad, cand_hess
        if np.max(np.abs(theta)) > separation_norm:
            raise SeparationError(
                f"parameter norm exceeded {separation_norm}; likely perfect separation"
            )
    if np.max(np.abs(grad)) < grad_tol:
        return theta, value
    raise ConvergenceError(f"no convergence in {max_iter} iterations "
                           f"(|grad|_max = {np.max(np.abs(grad)):.2e})")


def _newton_step(grad, hess):
    """Solve -H s = g, ridging the Hessian if it is numerically singular."""
    neg_hess = -hess
    ridge = 0.0
    eye = np.eye(len(grad))
    for _ in range(12):
        try:
            step = np.linalg.solve(neg_hess + ridge * eye, grad)
        except np.linalg.LinAlgError:
            ridge = max(2.0 * ridge, 1e-10)
            continue
        if np.isfinite(step).all():
            return step
        ridge = max(2.0 * ridge, 1e-10)
    raise ConvergenceError("Newton step could not be computed")
