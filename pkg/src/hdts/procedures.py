"""Uniform confidence band for the mean, autocovariance tests and the bandedness test.

Every procedure compares a max-type statistic with the ``1 - alpha`` quantile
of a blockwise multiplier bootstrap built from centred block sums.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass

import numpy as np

from hdts.blockcore import (
    BlockScheme,
    BootstrapDistribution,
    block_sums_centered,
    make_scheme_single,
    multiplier_bootstrap,
    sample_autocov,
)
from hdts.exceptions import DegenerateVariance, InvalidBandwidth, LagTooLarge, MissingTarget
from hdts.numerics import RngStream, check_series


@dataclass(frozen=True)
class TestResult:
    statistic: float
    critical_value: float
    p_value: float
    reject: bool
    alpha: float
    b_reps: int
    scheme: BlockScheme
    distribution: BootstrapDistribution | None = None

    __test__ = False  # keep pytest from collecting this class

    def at_alpha(self, alpha: float) -> TestResult:
        """Same statistic and bootstrap draws, decided at another level."""
        return _decide(self.statistic, self.distribution, alpha, self.scheme)


def _decide(statistic: float, dist: BootstrapDistribution, alpha: float, scheme: BlockScheme) -> TestResult:
    crit = dist.critical_value(alpha)
    return TestResult(
        statistic=float(statistic),
        critical_value=crit,
        p_value=dist.p_value(statistic),
        reject=bool(statistic > crit),
        alpha=alpha,
        b_reps=dist.b_reps,
        scheme=scheme,
        distribution=dist,
    )


@dataclass(frozen=True)
class ConfidenceBand:
    center: np.ndarray
    half_width: float
    alpha: float
    critical_value: float
    n: int
    scheme: BlockScheme
    distribution: BootstrapDistribution

    def contains(self, mu) -> bool:
        """``sqrt(n) max_j |mu_j - xbar_j| <= c(alpha)``."""
        mu = np.broadcast_to(np.asarray(mu, dtype=float), self.center.shape)
        return bool(np.sqrt(self.n) * np.abs(mu - self.center).max() <= self.critical_value)

    def at_alpha(self, alpha: float) -> ConfidenceBand:
        crit = self.distribution.critical_value(alpha)
        return ConfidenceBand(self.center, crit / np.sqrt(self.n), alpha, crit, self.n, self.scheme, self.distribution)


def uniform_confidence_band(X, b_n: int, b_reps: int, alpha: float, stream: RngStream) -> ConfidenceBand:
    """Simultaneous band for the mean vector with a multiplier-bootstrap half width."""
    X = check_series(X)
    _check_alpha(alpha)
    n = X.shape[0]
    scheme = make_scheme_single(n, b_n)
    dist = multiplier_bootstrap(block_sums_centered(X, scheme), np.sqrt(n), b_reps, stream)
    crit = dist.critical_value(alpha)
    return ConfidenceBand(X.mean(axis=0), crit / np.sqrt(n), alpha, crit, n, scheme, dist)


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")


def lagged_products(X: np.ndarray, lags: Iterable[int]) -> np.ndarray:
    """Rows ``nu_i = (vec(x_i x_{i+l}'))_{l in lags}`` for ``i = 1..n - max(lags)``.

    ``vec`` stacks columns, so entry ``j + k p`` of a lag block is ``x_ij x_{i+l,k}``.
    """
    lags = list(lags)
    n, p = X.shape
    N = n - max(lags)
    blocks = [(X[l : l + N, :, None] * X[:N, None, :]).reshape(N, p * p) for l in lags]
    return np.concatenate(blocks, axis=1)


def autocov_structure_test(
    X,
    lags: Iterable[int],
    target: Mapping[int, np.ndarray],
    b_n: int,
    b_reps: int,
    alpha: float,
    stream: RngStream,
) -> TestResult:
    """Test ``gamma(l) = target[l]`` for every ``l`` in ``lags``.

    Statistic ``sqrt(n) max_l max_jk |gamma_hat_jk(l) - target_jk(l)|``;
    the bootstrap works on the stacked lagged products centred at their mean
    over the ``n - max(lags)`` available rows and is scaled by ``sqrt(n)``.
    """
    X = check_series(X)
    _check_alpha(alpha)
    n, p = X.shape
    lags = sorted(set(int(l) for l in lags))
    if not lags:
        raise ValueError("lags must be non-empty")
    if lags[0] < 0 or lags[-1] >= n:
        raise LagTooLarge(f"lags must lie in [0, {n - 1}]")
    deviation = 0.0
    for lag in lags:
        if lag not in target:
            raise MissingTarget(f"no target autocovariance for lag {lag}")
        tgt = np.broadcast_to(np.asarray(target[lag], dtype=float), (p, p))
        deviation = max(deviation, np.abs(sample_autocov(X, lag) - tgt).max())
    statistic = np.sqrt(n) * deviation
    nu = lagged_products(X, lags)
    scheme = make_scheme_single(nu.shape[0], b_n)
    dist = multiplier_bootstrap(block_sums_centered(nu, scheme), np.sqrt(n), b_reps, stream)
    return _decide(statistic, dist, alpha, scheme)


def white_noise_test(X, L: int, b_n: int, b_reps: int, alpha: float, stream: RngStream) -> TestResult:
    """Test that the autocovariances at lags ``1..L`` all vanish."""
    X = check_series(X)
    if not 1 <= L < X.shape[0]:
        raise LagTooLarge(f"L must lie in [1, {X.shape[0] - 1}]")
    zero = np.zeros((X.shape[1], X.shape[1]))
    return autocov_structure_test(X, range(1, L + 1), {l: zero for l in range(1, L + 1)}, b_n, b_reps, alpha, stream)


def band_pairs(p: int, iota: int) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs ``j < k`` with ``k - j >= iota``."""
    j, k = np.triu_indices(p, k=iota)
    return j, k


def bandedness_test(X, iota: int, b_n: int, b_reps: int, alpha: float, stream: RngStream) -> TestResult:
    """Test ``gamma_jk(0) = 0`` for ``|j - k| >= iota`` using sample correlations.

    Raises
    ------
    InvalidBandwidth
        If ``iota`` is not in ``[1, p - 1]``.
    DegenerateVariance
        If some coordinate has ``gamma_hat_jj(0) = 0``.
    """
    X = check_series(X)
    _check_alpha(alpha)
    n, p = X.shape
    if not 1 <= iota < p:
        raise InvalidBandwidth(f"iota must lie in [1, {p - 1}] for p = {p}")
    gamma0 = X.T @ X / n
    var = np.diag(gamma0)
    if np.any(var <= 0.0):
        raise DegenerateVariance("a coordinate has zero sample second moment")
    j, k = band_pairs(p, iota)
    norm = np.sqrt(var[j] * var[k])
    statistic = np.sqrt(n) * np.abs(gamma0[j, k] / norm).max()
    # Column means of the normalised products are gamma_jk(0)/norm, so
    # block_sums_centered reproduces the (x_lj x_lk - gamma_jk(0))/norm sums.
    products = X[:, j] * X[:, k] / norm
    scheme = make_scheme_single(n, b_n)
    dist = multiplier_bootstrap(block_sums_centered(products, scheme), np.sqrt(n), b_reps, stream)
    return _decide(statistic, dist, alpha, scheme)
