"""scikit-learn style wrapper around the map."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .map_core import MapParams, Nonlinearity, evaluate_f, step_array
from .trapping import certified_domain


class HenonLikeMap(TransformerMixin, BaseEstimator):
    """The map as a transformer on rows ``(x, y_1, ..., y_n)``.

    ``fit`` validates the parameters and stores the closed-form trapping
    domain in ``domain_`` (``None`` when there is none). ``transform``
    applies ``n_steps`` steps of the map. Nothing is learned from ``X``
    beyond its width.

    >>> import numpy as np
    >>> m = HenonLikeMap(mu=1.4, b=0.3).fit()
    >>> m.transform(np.array([[0.0, 0.0]]))
    array([[1.4, 0. ]])
    """

    def __init__(self, kind="quadratic", mu=1.4, b=0.3, a=(), coeffs=(), n_steps=1):
        self.kind = kind
        self.mu = mu
        self.b = b
        self.a = a
        self.coeffs = coeffs
        self.n_steps = n_steps

    def _params(self) -> MapParams:
        f = Nonlinearity(self.kind, mu=self.mu, coeffs=tuple(self.coeffs))
        return MapParams(f, self.b, tuple(self.a))

    def fit(self, X=None, y=None):
        if int(self.n_steps) < 0:
            raise ValueError("n_steps must be non-negative")
        self.params_ = self._params()
        self.domain_ = certified_domain(self.params_)
        self.n_features_in_ = self.params_.dim
        if X is not None:
            self._check(X)
        return self

    def _check(self, X) -> np.ndarray:
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} columns, the map needs {self.n_features_in_}")
        return X

    def transform(self, X):
        check_is_fitted(self, "params_")
        X = self._check(X)
        for _ in range(int(self.n_steps)):
            X = step_array(self.params_, X)
        return X

    def inverse_transform(self, X):
        """Undo ``n_steps`` steps; needs ``b`` and every ``a_i`` nonzero."""
        check_is_fitted(self, "params_")
        p = self.params_
        if p.b == 0 or any(ai == 0 for ai in p.a):
            raise ValueError("map is not invertible when b or some a_i is zero")
        X = self._check(X)
        a = np.asarray(p.a, dtype=float)
        for _ in range(int(self.n_steps)):
            Z = np.empty_like(X)
            Z[:, 0] = X[:, 1] / p.b
            Z[:, 1:-1] = X[:, 2:] / a
            Z[:, -1] = X[:, 0] - evaluate_f(p.f, Z[:, 0]) - Z[:, 1:-1].sum(axis=1)
            X = Z
        return X

    def contains(self, X) -> np.ndarray:
        """Rows of ``X`` inside the certified domain."""
        check_is_fitted(self, "params_")
        if self.domain_ is None:
            raise ValueError("no certified domain for these parameters")
        return self.domain_.contains(self._check(X))
