"""Bootstrap tests for approximately linear statistics.

A statistic of interest is a functional of the empirical distribution of the
overlapping windows ``v_i = (u_i, ..., u_{i+d0-1})``, ``i = 1..N0`` with
``N0 = n - d0 + 1``.  An :class:`InfluenceSpec` supplies the estimate and an
estimated influence panel; the tests then reuse the block engines of
:mod:`hdts.blockcore`.

Windows are passed around as arrays of shape ``(N0, d0, p)``; ``V[i, h]`` is
``u_{i+h}``.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from hdts.blockcore import (
    BlockScheme,
    BootstrapDistribution,
    StatisticKind,
    block_sums_bigsmall,
    double_coordinates,
    make_scheme_single,
    multiplier_draws,
)
from hdts.exceptions import DegenerateVariance, DimensionMismatch, InvalidBlockSize, TruncationTooLarge
from hdts.numerics import RngStream, as_generator, check_series
from hdts.procedures import TestResult, _decide


def windows(U: np.ndarray, d0: int) -> np.ndarray:
    """Read-only ``(N0, d0, p)`` view of the overlapping windows of ``U``."""
    if not 1 <= d0 <= U.shape[0]:
        raise InvalidBlockSize(f"window length {d0} outside [1, {U.shape[0]}]")
    return sliding_window_view(U, d0, axis=0).transpose(0, 2, 1)


@dataclass(frozen=True)
class InfluenceSpec:
    """An approximately linear statistic and its estimated influence function.

    Parameters
    ----------
    d0 : int
        Window length.
    estimate : callable
        Maps a window array ``(N0, d0, p)`` to the ``q0`` estimates.  Must be
        re-entrant: the block bootstrap calls it on resampled windows.
    influence : callable
        Maps the window array to the ``(N0, q0)`` panel of estimated
        influence values.
    q0 : int, optional
        Parameter dimension; inferred from ``estimate`` when omitted.
    root : {"windows", "series"}
        Whether the test statistic is scaled by ``sqrt(N0)`` (the default) or
        by ``sqrt(n)``.
    """

    d0: int
    estimate: Callable[[np.ndarray], np.ndarray]
    influence: Callable[[np.ndarray], np.ndarray]
    q0: int | None = None
    root: str = "windows"

    def __post_init__(self):
        if self.d0 < 1:
            raise ValueError("d0 must be positive")
        if self.root not in ("windows", "series"):
            raise ValueError("root must be 'windows' or 'series'")

    def influence_hat(self, i: int, U) -> np.ndarray:
        """Estimated influence of window ``i`` (0-based) within the sample ``U``."""
        return self.influence(windows(check_series(U), self.d0))[i]

    def root_size(self, n_windows: int) -> int:
        return n_windows if self.root == "windows" else n_windows + self.d0 - 1


def mean_spec() -> InfluenceSpec:
    """Mean vector: ``IF_hat(v_i) = u_i - ubar``."""

    def estimate(V):
        return V[:, 0, :].mean(axis=0)

    def influence(V):
        return V[:, 0, :] - V[:, 0, :].mean(axis=0)

    return InfluenceSpec(1, estimate, influence)


def autocov_spec(lags: Iterable[int]) -> InfluenceSpec:
    """Stacked ``vec(gamma(l))`` over ``lags`` with the sample-autocovariance divisor ``n``.

    With ``root="series"`` the statistic equals the one of
    :func:`hdts.procedures.autocov_structure_test` on the same data; the
    influence panel is the lagged-product panel centred at its mean.
    """
    lags = sorted(set(int(l) for l in lags))
    d0 = lags[-1] + 1

    def products(V):
        p = V.shape[2]
        return np.concatenate(
            [(V[:, l, :, None] * V[:, 0, None, :]).reshape(len(V), p * p) for l in lags], axis=1
        )

    def estimate(V):
        n_windows, _, p = V.shape
        n = n_windows + d0 - 1
        totals = products(V).sum(axis=0)
        # products x_i x_{i+l} with i past the last window start sit inside
        # the last window; add them so every lag sums over n - l terms
        last = V[-1]
        for pos, l in enumerate(lags):
            tail = sum(
                (np.outer(last[m + l], last[m]).reshape(p * p) for m in range(1, d0 - l)),
                np.zeros(p * p),
            )
            totals[pos * p * p : (pos + 1) * p * p] += tail
        return totals / n

    def influence(V):
        nu = products(V)
        return nu - nu.mean(axis=0)

    return InfluenceSpec(d0, estimate, influence, root="series")


def _evaluate(U, spec: InfluenceSpec, target):
    U = check_series(U)
    V = windows(U, spec.d0)
    theta = np.atleast_1d(np.asarray(spec.estimate(V), dtype=float))
    infl = np.asarray(spec.influence(V), dtype=float)
    if infl.ndim == 1:
        infl = infl[:, None]
    q0 = theta.shape[0]
    if infl.shape != (V.shape[0], q0) or (spec.q0 is not None and spec.q0 != q0):
        raise DimensionMismatch(
            f"estimate has {q0} coordinates, influence panel has shape {infl.shape}, spec.q0={spec.q0}"
        )
    target = np.broadcast_to(np.asarray(target, dtype=float), (q0,))
    return U, V, theta, infl, target


def _check_bigsmall(scheme: BlockScheme, n_windows: int):
    if scheme.kind != "BigSmall":
        raise InvalidBlockSize("linear-statistic tests need a BigSmall scheme")
    if scheme.n != n_windows:
        raise InvalidBlockSize(f"scheme built for {scheme.n} windows, sample has {n_windows}")


def linstat_test(U, spec: InfluenceSpec, target, scheme: BlockScheme, b_reps: int, alpha: float, stream: RngStream) -> TestResult:
    """Multiplier-bootstrap test of ``theta = target``.

    Statistic ``max_j sqrt(N0) |theta_hat_j - target_j|``; the critical value
    is the ``1 - alpha`` quantile of ``max_j n^{-1/2} sum_i D_ij`` over the
    doubled influence panel ``(IF_hat, -IF_hat)`` with two-block weights.
    """
    U, V, theta, infl, target = _evaluate(U, spec, target)
    _check_bigsmall(scheme, V.shape[0])
    statistic = np.sqrt(spec.root_size(V.shape[0])) * np.abs(theta - target).max()
    sums = block_sums_bigsmall(double_coordinates(infl), scheme)
    draws = multiplier_draws(sums.interleaved(), np.sqrt(U.shape[0]), b_reps, stream, StatisticKind.SIGNED)
    return _decide(statistic, BootstrapDistribution(draws, StatisticKind.SIGNED), alpha, scheme)


def linstat_test_blockboot(U, spec: InfluenceSpec, target, b_n: int, b_reps: int, alpha: float, stream: RngStream) -> TestResult:
    """Non-overlapping block bootstrap over windows; no influence estimate needed.

    Critical value: ``1 - alpha`` quantile of ``max_j sqrt(N0) |theta*_j - theta_hat_j|``
    where ``theta*`` re-estimates on ``l_n`` whole window blocks drawn with
    replacement.  When ``b_n`` does not divide ``N0`` the resampled tail is
    dropped and ``theta_hat`` in the bootstrap centring uses the same
    truncated windows.
    """
    U = check_series(U)
    V = windows(U, spec.d0)
    theta = np.atleast_1d(np.asarray(spec.estimate(V), dtype=float))
    target = np.broadcast_to(np.asarray(target, dtype=float), theta.shape)
    n_windows = V.shape[0]
    scheme = make_scheme_single(n_windows, b_n)
    if b_reps < 1:
        raise ValueError("b_reps must be at least 1")
    root = np.sqrt(spec.root_size(n_windows))
    statistic = root * np.abs(theta - target).max()
    used = V[: scheme.used]
    center = theta if scheme.truncated == 0 else np.atleast_1d(np.asarray(spec.estimate(used), dtype=float))
    blocks = used.reshape(scheme.l_n, b_n, *V.shape[1:])
    idx = as_generator(stream).integers(0, scheme.l_n, size=(b_reps, scheme.l_n))
    draws = np.empty(b_reps)
    for b in range(b_reps):
        star = blocks[idx[b]].reshape(used.shape)
        draws[b] = root * np.abs(np.asarray(spec.estimate(star), dtype=float) - center).max()
    return _decide(statistic, BootstrapDistribution(draws), alpha, scheme)


def studentized_variant(U, spec: InfluenceSpec, target, scheme: BlockScheme, b_reps: int, alpha: float, stream: RngStream) -> TestResult:
    """Studentized form: each coordinate divided by ``sigma_hat_j``.

    ``sigma_hat_j^2 = (1/n) sum_i (A_ij^2 + B_ij^2)`` over the influence
    block sums, i.e. the diagonal of the two-block covariance estimate.
    """
    U, V, theta, infl, target = _evaluate(U, spec, target)
    _check_bigsmall(scheme, V.shape[0])
    sums = block_sums_bigsmall(infl, scheme)
    n = U.shape[0]
    sigma = np.sqrt(((sums.a_sums**2).sum(axis=0) + (sums.b_sums**2).sum(axis=0)) / n)
    if np.any(sigma <= 0.0):
        raise DegenerateVariance("an influence coordinate has zero block variance")
    statistic = np.sqrt(spec.root_size(V.shape[0])) * (np.abs(theta - target) / sigma).max()
    rows = sums.interleaved() / sigma
    draws = multiplier_draws(rows, np.sqrt(n), b_reps, stream, StatisticKind.ABSOLUTE)
    return _decide(statistic, BootstrapDistribution(draws), alpha, scheme)


@dataclass(frozen=True)
class SpectralMeanSpec:
    """Fourier coefficients of the spectral weight functions ``phi_k``.

    ``fourier_coeffs[(h, k)]`` is the ``p x p`` real matrix
    ``int phi_k(lam) exp(i h lam) dlam / (2 pi)``; absent entries are zero.
    ``truncation`` keeps lags ``|h| < truncation``; ``None`` means
    ``ceil(n^(1/3))`` for a sample of length ``n``.
    """

    fourier_coeffs: Mapping[tuple[int, int], np.ndarray]
    truncation: int | None = None

    def __post_init__(self):
        coeffs = {(int(h), int(k)): np.asarray(c, dtype=float) for (h, k), c in self.fourier_coeffs.items()}
        if not coeffs:
            raise ValueError("at least one Fourier coefficient is required")
        shapes = {c.shape for c in coeffs.values()}
        if len(shapes) != 1 or len(next(iter(shapes))) != 2 or len(set(next(iter(shapes)))) != 1:
            raise DimensionMismatch("Fourier coefficients must all be square and of one size")
        if any(k < 0 for _, k in coeffs):
            raise ValueError("direction indices must be non-negative")
        if self.truncation is not None and self.truncation < 1:
            raise ValueError("truncation must be positive")
        object.__setattr__(self, "fourier_coeffs", coeffs)

    @property
    def p(self) -> int:
        return next(iter(self.fourier_coeffs.values())).shape[0]

    @property
    def q0(self) -> int:
        return max(k for _, k in self.fourier_coeffs) + 1

    def resolved_truncation(self, n: int) -> int:
        trunc = self.truncation
        if trunc is None:
            trunc = math.ceil(round(n ** (1.0 / 3.0), 9))
        if trunc > n:
            raise TruncationTooLarge(f"truncation {trunc} exceeds the sample length {n}")
        return trunc

    def lag_terms(self, trunc: int):
        """``(h, k, coeff)`` for every stored lag with ``|h| < trunc``."""
        return [(h, k, c) for (h, k), c in sorted(self.fourier_coeffs.items()) if abs(h) < trunc]


def spectral_mean_estimate(U, spec: SpectralMeanSpec) -> np.ndarray:
    """``sum_{|h| < trunc} tr(phi_hk Gamma_hat_h)`` per direction ``k``.

    ``Gamma_hat_h = (1/n) sum_j u_{j+h} u_j'`` and ``Gamma_hat_{-h} = Gamma_hat_h'``.
    """
    U = check_series(U)
    n, p = U.shape
    if p != spec.p:
        raise DimensionMismatch(f"coefficients are {spec.p} x {spec.p}, data has p = {p}")
    trunc = spec.resolved_truncation(n)
    out = np.zeros(spec.q0)
    for h, k, coeff in spec.lag_terms(trunc):
        lag = abs(h)
        gamma = U[lag:].T @ U[: n - lag] / n
        if h < 0:
            gamma = gamma.T
        out[k] += np.sum(coeff * gamma.T)
    return out


def spectral_mean_influence(U, spec: SpectralMeanSpec) -> InfluenceSpec:
    """Influence spec for the truncated spectral mean on windows of length ``trunc``.

    ``IF_hat_k(v_i) = sum_h tr(phi_hk (u_{i+h} u_i' - Gamma_h))`` with negative
    lags rewritten inside the window as ``tr(phi_{-h,k} (u_i u_{i+h}' - Gamma_h'))``.
    ``Gamma_h`` is estimated by the window average, so the panel is exactly
    centred and the window estimate is exactly linear in it.
    """
    U = check_series(U)
    n, p = U.shape
    if p != spec.p:
        raise DimensionMismatch(f"coefficients are {spec.p} x {spec.p}, data has p = {p}")
    trunc = spec.resolved_truncation(n)
    terms = spec.lag_terms(trunc)
    q0 = spec.q0

    def raw(V):
        # per-window values of tr(phi (u_{i+h} u_i')) accumulated per direction
        vals = np.zeros((V.shape[0], q0))
        for h, k, coeff in terms:
            lead, base = (V[:, h], V[:, 0]) if h >= 0 else (V[:, 0], V[:, -h])
            vals[:, k] += np.einsum("ij,jk,ik->i", base, coeff, lead)
        return vals

    def estimate(V):
        return raw(V).mean(axis=0)

    def influence(V):
        vals = raw(V)
        return vals - vals.mean(axis=0)

    return InfluenceSpec(trunc, estimate, influence, q0=q0)
