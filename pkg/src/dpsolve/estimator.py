"""Scikit-learn style front end for the solver.

Lets the solver sit in the usual estimator workflow: construct with
hyperparameters, ``fit`` on a model, read trailing-underscore
attributes, ``predict`` greedy actions for state indices, and clone or
grid-search via ``get_params``/``set_params``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .fixed_point import DEFAULT_MAX_ITERS
from .mdp import FiniteMdp, require_valid
from .solver import solve


class ValueIterationSolver(BaseEstimator):
    """Optimal-value solver with the scikit-learn estimator interface.

    Parameters
    ----------
    tol : float, default=1e-8
        Sup-norm accuracy of the fitted value function.
    max_iters : int, default=100_000
        Iteration budget; exceeding it raises NonConvergenceError.

    Attributes
    ----------
    values_ : ndarray of shape (n_states,)
        Fitted optimal values, within ``tol`` of the true optimum.
    policy_ : ndarray of shape (n_states,)
        Greedy stationary policy for ``values_``.
    n_iter_ : int
        Backup applications consumed.
    residuals_ : ndarray
        Sup-norm step sizes of the iteration, geometrically decaying.
    bellman_residual_ : float
        Sup-norm defect of ``values_`` under one more backup.
    epsilon_certificate_ : float
        Guaranteed bound on the sup-norm optimality gap of ``policy_``.

    Examples
    --------
    >>> from dpsolve import zoo
    >>> est = ValueIterationSolver(tol=1e-10).fit(zoo.build("machine_replacement").model)
    >>> est.predict([0, 3])
    array([0, 1])
    """

    def __init__(self, tol: float = 1e-8, max_iters: int = DEFAULT_MAX_ITERS):
        self.tol = tol
        self.max_iters = max_iters

    def fit(self, X: FiniteMdp, y=None):
        """Solve the model ``X``; ``y`` is ignored (present for API compatibility)."""
        if not isinstance(X, FiniteMdp):
            raise TypeError(f"X must be a FiniteMdp, got {type(X).__name__}")
        require_valid(X)
        result = solve(X, tol=self.tol, max_iters=self.max_iters)
        self.model_ = X
        self.values_ = result.values
        self.policy_ = result.policy
        self.n_iter_ = result.trace.iterations
        self.residuals_ = np.asarray(result.trace.residuals)
        self.bellman_residual_ = result.bellman_residual
        self.epsilon_certificate_ = result.epsilon_certificate
        return self

    def _check_states(self, X) -> np.ndarray:
        if not hasattr(self, "policy_"):
            raise NotFittedError(
                "this ValueIterationSolver is not fitted yet; call fit first"
            )
        states = np.asarray(X)
        if states.ndim == 2 and states.shape[1] == 1:
            states = states[:, 0]
        if states.ndim != 1:
            raise ValueError(f"expected a 1-d array of state indices, got shape {states.shape}")
        if not np.issubdtype(states.dtype, np.integer):
            rounded = states.astype(int)
            if np.any(rounded != states):
                raise ValueError("state indices must be integers")
            states = rounded
        if states.size and (states.min() < 0 or states.max() >= self.model_.n_states):
            raise ValueError(
                f"state indices must lie in [0, {self.model_.n_states}), "
                f"got range [{states.min()}, {states.max()}]"
            )
        return states

    def predict(self, X) -> np.ndarray:
        """Greedy action for each state index in ``X``."""
        states = self._check_states(X)
        return self.policy_[states]

    def state_values(self, X) -> np.ndarray:
        """Fitted optimal value for each state index in ``X``."""
        states = self._check_states(X)
        return self.values_[states]
