"""Block decompositions, block sums and the two bootstrap engines.

Both engines approximate the law of a max-type statistic
``max_j n^{-1/2} sum_i x_ij`` (signed) or ``max_j n^{-1/2} |sum_i x_ij|``
(absolute).  The absolute form is the signed form applied to the doubled
panel ``[x, -x]``; see :func:`double_coordinates`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from hdts.exceptions import InvalidBlockSize, LagTooLarge
from hdts.numerics import RngStream, as_generator, check_series, empirical_upper_quantile


class StatisticKind(str, enum.Enum):
    SIGNED = "signed"
    ABSOLUTE = "absolute"


@dataclass(frozen=True)
class BlockScheme:
    """Partition of ``n`` time points into whole blocks.

    ``SingleSize``: ``l_n`` blocks of length ``b_n``.  ``BigSmall``: ``r``
    pairs of a big block (length ``N``) followed by a small block (length
    ``M``).  Any tail that does not fill a whole block (pair) is truncated and
    reported in :attr:`truncated`.
    """

    kind: str
    n: int
    b_n: int | None = None
    l_n: int | None = None
    N: int | None = None
    M: int | None = None
    r: int | None = None

    @property
    def used(self) -> int:
        if self.kind == "SingleSize":
            return self.b_n * self.l_n
        return (self.N + self.M) * self.r

    @property
    def truncated(self) -> int:
        return self.n - self.used

    @property
    def n_blocks(self) -> int:
        return self.l_n if self.kind == "SingleSize" else 2 * self.r


def make_scheme_single(n: int, b_n: int) -> BlockScheme:
    if not 1 <= b_n <= n:
        raise InvalidBlockSize(f"block size {b_n} outside [1, {n}]")
    return BlockScheme("SingleSize", n, b_n=b_n, l_n=n // b_n)


def make_scheme_bigsmall(n: int, N: int, M: int) -> BlockScheme:
    if M < 1 or N < M:
        raise InvalidBlockSize(f"need N >= M >= 1, got N={N}, M={M}")
    r = n // (N + M)
    if r < 1:
        raise InvalidBlockSize(f"N + M = {N + M} exceeds n = {n}")
    return BlockScheme("BigSmall", n, N=N, M=M, r=r)


@dataclass(frozen=True)
class BlockSums:
    scheme: BlockScheme
    a_sums: np.ndarray
    b_sums: np.ndarray | None = None

    def interleaved(self) -> np.ndarray:
        """Rows ordered as the blocks occur in time (A_1, B_1, A_2, B_2, ...)."""
        if self.b_sums is None:
            return self.a_sums
        r, p = self.a_sums.shape
        out = np.empty((2 * r, p))
        out[0::2] = self.a_sums
        out[1::2] = self.b_sums
        return out


def _check_scheme(X: np.ndarray, scheme: BlockScheme, kind: str):
    if scheme.kind != kind:
        raise InvalidBlockSize(f"expected a {kind} scheme, got {scheme.kind}")
    if scheme.n != X.shape[0]:
        raise InvalidBlockSize(f"scheme built for n={scheme.n}, data has {X.shape[0]} rows")


def block_sums_centered(X, scheme: BlockScheme) -> BlockSums:
    """Sums of ``x_lj - xbar_j`` over each block; ``xbar`` uses all ``n`` rows."""
    X = check_series(X)
    _check_scheme(X, scheme, "SingleSize")
    centered = X[: scheme.used] - X.mean(axis=0)
    sums = centered.reshape(scheme.l_n, scheme.b_n, -1).sum(axis=1)
    return BlockSums(scheme, sums)


def block_sums_bigsmall(X, scheme: BlockScheme, center: bool = False) -> BlockSums:
    """Big-block sums ``A`` and small-block sums ``B`` laid out N, M, N, M, ..."""
    X = check_series(X)
    _check_scheme(X, scheme, "BigSmall")
    Z = X - X.mean(axis=0) if center else X
    pairs = Z[: scheme.used].reshape(scheme.r, scheme.N + scheme.M, -1)
    return BlockSums(scheme, pairs[:, : scheme.N].sum(axis=1), pairs[:, scheme.N :].sum(axis=1))


def double_coordinates(X: np.ndarray) -> np.ndarray:
    """Append the negated coordinates: a signed max over the result is an absolute max."""
    return np.concatenate([X, -X], axis=-1)


@dataclass
class BootstrapDistribution:
    draws: np.ndarray
    statistic_kind: StatisticKind = StatisticKind.ABSOLUTE
    b_reps: int = field(init=False)

    def __post_init__(self):
        self.draws = np.sort(np.asarray(self.draws, dtype=float))
        self.b_reps = self.draws.shape[0]
        if self.b_reps < 1:
            raise ValueError("a bootstrap distribution needs at least one draw")

    def critical_value(self, alpha: float) -> float:
        return empirical_upper_quantile(self.draws, alpha)

    def p_value(self, statistic: float) -> float:
        """``(1 + #{draws >= statistic}) / (B + 1)``."""
        exceed = self.b_reps - np.searchsorted(self.draws, statistic, side="left")
        return float((1 + exceed) / (self.b_reps + 1))


def _reduce_max(values: np.ndarray, kind: StatisticKind) -> np.ndarray:
    if kind is StatisticKind.ABSOLUTE:
        return np.abs(values).max(axis=-1)
    return values.max(axis=-1)


def multiplier_draws(rows: np.ndarray, scale: float, b_reps: int, stream, kind=StatisticKind.ABSOLUTE) -> np.ndarray:
    """Unsorted draws of ``max_j |sum_i rows_ij e_i| / scale`` (or the signed max).

    The multiplier matrix is ``b_reps x len(rows)`` standard normals read
    row-major from ``stream``.
    """
    kind = StatisticKind(kind)
    if b_reps < 1:
        raise ValueError("b_reps must be at least 1")
    if scale <= 0:
        raise ValueError("scale must be positive")
    e = as_generator(stream).standard_normal((b_reps, rows.shape[0]))
    return _reduce_max(e @ rows, kind) / scale


def multiplier_bootstrap(
    sums: BlockSums, scale: float, b_reps: int, stream: RngStream, statistic_kind=StatisticKind.ABSOLUTE
) -> BootstrapDistribution:
    """Blockwise multiplier (wild) bootstrap.

    Each block sum gets its own N(0, 1) weight; for a big/small scheme the
    pair ``(e_i, e~_i)`` weighs ``(A_i, B_i)``.  Weights are assigned to the
    blocks in time order, so a big/small scheme with ``N = M = b`` consumes
    the stream exactly as a single-size scheme with block size ``b``.
    """
    kind = StatisticKind(statistic_kind)
    draws = multiplier_draws(sums.interleaved(), scale, b_reps, stream, kind)
    return BootstrapDistribution(draws, kind)


def nonoverlap_block_bootstrap(
    X, b_n: int, b_reps: int, stream: RngStream, statistic_kind=StatisticKind.ABSOLUTE
) -> BootstrapDistribution:
    """Non-overlapping block bootstrap of ``max_j n^{-1/2} (sum_i x*_ij - xbar_j)``.

    Works on the uncentred block sums: ``sum_i (A*_ij - Abar_j)`` where the
    ``A*`` are drawn with replacement from the ``l_n`` block sums.
    """
    X = check_series(X)
    kind = StatisticKind(statistic_kind)
    scheme = make_scheme_single(X.shape[0], b_n)
    if b_reps < 1:
        raise ValueError("b_reps must be at least 1")
    l_n = scheme.l_n
    sums = X[: scheme.used].reshape(l_n, b_n, -1).sum(axis=1)
    deviations = sums - sums.mean(axis=0)
    idx = as_generator(stream).integers(0, l_n, size=(b_reps, l_n))
    counts = np.zeros((b_reps, l_n))
    np.add.at(counts, (np.arange(b_reps)[:, None], idx), 1.0)
    draws = _reduce_max(counts @ deviations, kind) / np.sqrt(X.shape[0])
    return BootstrapDistribution(draws, kind)


def sample_autocov(X, lag: int) -> np.ndarray:
    """Non-centred sample autocovariance ``(1/n) sum_{i<=n-l} x_i x_{i+l}'``.

    Entry ``[j, k]`` pairs coordinate ``j`` at time ``i`` with ``k`` at ``i + lag``.
    """
    X = check_series(X)
    n = X.shape[0]
    if not 0 <= lag < n:
        raise LagTooLarge(f"lag {lag} outside [0, {n - 1}]")
    return X[: n - lag].T @ X[lag:] / n


@dataclass(frozen=True)
class LongRunCovDiag:
    e_a: float
    e_b: float | None
    e_ab: float
    reference_cov: np.ndarray


def longrun_cov_reference(autocovs) -> np.ndarray:
    """``sigma^(n) = (1/n) sum_{|l|<n} (n - |l|) gamma(l)`` from ``gamma(0..n-1)``.

    ``autocovs[l]`` is ``E x_i x_{i+l}'``; negative lags use the transpose.
    """
    gammas = np.asarray(autocovs, dtype=float)
    n = gammas.shape[0]
    weights = (n - np.arange(n)) / n
    out = gammas[0].copy()
    for lag in range(1, n):
        out += weights[lag] * (gammas[lag] + gammas[lag].T)
    return out


def longrun_cov_diag(X, scheme: BlockScheme, reference, center: bool = False) -> LongRunCovDiag:
    """Max-abs errors of the big-block, small-block and pooled covariance estimates."""
    sums = block_sums_bigsmall(X, scheme, center=center)
    ref = np.asarray(reference, dtype=float)
    a, b = sums.a_sums, sums.b_sums
    r, N, M = scheme.r, scheme.N, scheme.M
    e_a = np.abs(a.T @ a / (r * N) - ref).max()
    e_b = np.abs(b.T @ b / (r * M) - ref).max()
    e_ab = np.abs((a.T @ a + b.T @ b) / scheme.used - ref).max()
    return LongRunCovDiag(float(e_a), float(e_b), float(e_ab), ref)
