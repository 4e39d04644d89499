"""Scikit-learn style estimators wrapping the set searches.

Both estimators are fitted on ``(X, y, env)`` where env is the binary
environment label, and afterwards act as feature selectors: ``transform``
keeps the selected columns.  Selected features are exposed both as
0-based column indices (sklearn convention) and as a boolean support
mask; the underlying reports use the package's 1-based predictor
indices.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .invariance import DecisionConfig
from .scm import Dataset
from .search import ias_search, icp_search, screen_markov_boundary
from .varset import VarSet


def _as_dataset(X, y, env) -> Dataset:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    env = np.asarray(env).ravel()
    if X.ndim != 2:
        raise ValueError("X must be a 2d array")
    return Dataset(env=env, x=X, y=y)


def _support_from(varset: VarSet, d: int) -> np.ndarray:
    support = np.zeros(d, dtype=bool)
    for k in varset:
        support[k - 1] = True
    return support


class InvariantAncestrySearch(BaseEstimator):
    """Select features that are ancestors of the target.

    Parameters mirror :class:`~iaskit.invariance.DecisionConfig`:
    ``alpha`` is the familywise level, ``alpha0`` the guarded level for
    the empty set, ``alpha1`` an optional laxer level for sets of the
    maximum searched size, ``correction`` the multiplicity rule and
    ``max_set_size`` the search-size cap (None searches all sizes).

    Attributes after fit: ``ancestors_`` (0-based column indices),
    ``support_`` (boolean mask), ``report_`` (full search report).
    """

    def __init__(
        self,
        alpha=0.05,
        alpha0=1e-6,
        alpha1=None,
        correction="auto",
        max_set_size=None,
    ):
        self.alpha = alpha
        self.alpha0 = alpha0
        self.alpha1 = alpha1
        self.correction = correction
        self.max_set_size = max_set_size

    def fit(self, X, y, env):
        data = _as_dataset(X, y, env)
        config = DecisionConfig(
            alpha=self.alpha,
            alpha0=self.alpha0,
            alpha1=self.alpha1,
            correction=self.correction,
            m=self.max_set_size,
        )
        self.report_ = ias_search(data, config)
        self.support_ = _support_from(self.report_.s_hat, data.d)
        self.ancestors_ = np.flatnonzero(self.support_)
        self.n_features_in_ = data.d
        return self

    def get_support(self):
        self._check_fitted()
        return self.support_

    def transform(self, X):
        self._check_fitted()
        X = np.asarray(X)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise ValueError(f"X must have {self.n_features_in_} columns")
        return X[:, self.support_]

    def fit_transform(self, X, y, env):
        return self.fit(X, y, env).transform(X)

    def _check_fitted(self):
        if not hasattr(self, "support_"):
            raise RuntimeError("estimator is not fitted; call fit first")


class InvariantCausalPrediction(BaseEstimator):
    """Select features accepted as direct causes by invariant prediction.

    Tests every subset of the candidate features at level ``alpha`` and
    intersects the accepted ones.  With ``screen`` set, candidates are
    first reduced to at most that many features by an L1 path on the
    pooled regression (for wide data).

    Attributes after fit: ``parents_`` (0-based column indices),
    ``support_`` (boolean mask), ``candidates_`` (0-based indices that
    entered the subset search).
    """

    def __init__(self, alpha=0.05, screen=None):
        self.alpha = alpha
        self.screen = screen

    def fit(self, X, y, env):
        data = _as_dataset(X, y, env)
        if self.screen is not None and self.screen < data.d:
            candidates = screen_markov_boundary(data, self.screen)
        else:
            candidates = VarSet.full(data.d)
        selected = icp_search(data, candidates, alpha=self.alpha)
        self.support_ = _support_from(selected, data.d)
        self.parents_ = np.flatnonzero(self.support_)
        self.candidates_ = np.flatnonzero(_support_from(candidates, data.d))
        self.n_features_in_ = data.d
        return self

    def get_support(self):
        self._check_fitted()
        return self.support_

    def transform(self, X):
        self._check_fitted()
        X = np.asarray(X)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise ValueError(f"X must have {self.n_features_in_} columns")
        return X[:, self.support_]

    def fit_transform(self, X, y, env):
        return self.fit(X, y, env).transform(X)

    def _check_fitted(self):
        if not hasattr(self, "support_"):
            raise RuntimeError("estimator is not fitted; call fit first")
