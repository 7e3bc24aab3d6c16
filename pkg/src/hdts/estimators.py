"""scikit-learn style wrappers around the functional procedures.

Hyper-parameters go in the constructor, ``fit(X)`` runs the procedure on an
``n x p`` series and stores results in trailing-underscore attributes.
``random_state`` is an integer seed for the bootstrap stream.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from hdts.blocksize import select_block_size
from hdts.numerics import RngStream, check_series
from hdts.procedures import autocov_structure_test, bandedness_test, uniform_confidence_band, white_noise_test


def _stream(random_state) -> RngStream:
    if isinstance(random_state, RngStream):
        return random_state
    return RngStream(0 if random_state is None else int(random_state))


class _TestMixin:
    def _store(self, result):
        self.result_ = result
        self.statistic_ = result.statistic
        self.critical_value_ = result.critical_value
        self.p_value_ = result.p_value
        self.reject_ = result.reject
        return self


class UniformConfidenceBand(BaseEstimator):
    """Simultaneous confidence band for the mean vector.

    Attributes
    ----------
    center_ : ndarray of shape (p,)
    half_width_ : float
    lower_, upper_ : ndarray of shape (p,)
    """

    def __init__(self, block_size=10, alpha=0.05, b_reps=499, random_state=None):
        self.block_size = block_size
        self.alpha = alpha
        self.b_reps = b_reps
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_series(X)
        self.band_ = uniform_confidence_band(X, self.block_size, self.b_reps, self.alpha, _stream(self.random_state))
        self.center_ = self.band_.center
        self.half_width_ = self.band_.half_width
        self.lower_ = self.center_ - self.half_width_
        self.upper_ = self.center_ + self.half_width_
        self.n_features_in_ = X.shape[1]
        return self

    def contains(self, mu) -> bool:
        check_is_fitted(self, "band_")
        return self.band_.contains(mu)


class WhiteNoiseTest(_TestMixin, BaseEstimator):
    """Max-type test that the autocovariances at lags ``1..n_lags`` vanish."""

    def __init__(self, n_lags=1, block_size=1, alpha=0.05, b_reps=499, random_state=None):
        self.n_lags = n_lags
        self.block_size = block_size
        self.alpha = alpha
        self.b_reps = b_reps
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_series(X)
        self.n_features_in_ = X.shape[1]
        res = white_noise_test(X, self.n_lags, self.block_size, self.b_reps, self.alpha, _stream(self.random_state))
        return self._store(res)


class AutocovarianceTest(_TestMixin, BaseEstimator):
    """Test ``gamma(l) = target[l]`` for every lag in ``target``."""

    def __init__(self, target=None, block_size=1, alpha=0.05, b_reps=499, random_state=None):
        self.target = target
        self.block_size = block_size
        self.alpha = alpha
        self.b_reps = b_reps
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_series(X)
        if not self.target:
            raise ValueError("target must map each lag to a p x p matrix")
        self.n_features_in_ = X.shape[1]
        res = autocov_structure_test(
            X, list(self.target), self.target, self.block_size, self.b_reps, self.alpha, _stream(self.random_state)
        )
        return self._store(res)


class BandednessTest(_TestMixin, BaseEstimator):
    """Test that correlations vanish at distance ``iota`` or more."""

    def __init__(self, iota=1, block_size=1, alpha=0.05, b_reps=499, random_state=None):
        self.iota = iota
        self.block_size = block_size
        self.alpha = alpha
        self.b_reps = b_reps
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_series(X)
        self.n_features_in_ = X.shape[1]
        res = bandedness_test(X, self.iota, self.block_size, self.b_reps, self.alpha, _stream(self.random_state))
        return self._store(res)


class BlockSizeSelector(BaseEstimator):
    """Coverage-matching block-size choice for the confidence band."""

    def __init__(
        self, b_int=6, candidates=(4, 6, 8, 10, 12, 15, 20), b_outer=500, b_reps=499, alpha=0.05,
        max_iterations=1, random_state=None,
    ):
        self.b_int = b_int
        self.candidates = candidates
        self.b_outer = b_outer
        self.b_reps = b_reps
        self.alpha = alpha
        self.max_iterations = max_iterations
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_series(X)
        self.n_features_in_ = X.shape[1]
        self.report_ = select_block_size(
            X, self.b_int, self.candidates, self.b_outer, self.b_reps, self.alpha,
            _stream(self.random_state), self.max_iterations,
        )
        self.block_size_ = self.report_.chosen
        self.coverage_ = np.asarray(self.report_.empirical_coverage)
        return self
