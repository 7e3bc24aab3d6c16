"""Seeded random streams, small linear-algebra helpers and quantile conventions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.utils import check_array

from hdts.exceptions import EmptyDistribution, NotPositiveDefinite

_MASK64 = (1 << 64) - 1
_PIVOT_RTOL = 1e-12


@dataclass(frozen=True)
class RngStream:
    """Handle on an independent, reproducible random stream.

    The stream is a Philox counter-based generator keyed by
    ``(seed, stream_id)``.  ``substream`` selects a disjoint region of the
    counter space (the upper 128 bits of the 256-bit counter), so nested
    work can derive independent streams with :meth:`spawn` without any
    shared state.  Two handles with equal fields always yield identical
    draws, whichever process or thread consumes them.
    """

    seed: int
    stream_id: int = 0
    substream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not 0 <= self.stream_id <= _MASK64:
            raise ValueError("stream_id must be a 64-bit unsigned integer")
        if not 0 <= self.substream < (1 << 128):
            raise ValueError("substream exhausted (nesting too deep)")

    @classmethod
    def for_replication(cls, seed: int, rep: int, slot: int) -> RngStream:
        """Stream for Monte Carlo replication ``rep``, purpose ``slot``."""
        if not (0 <= rep < (1 << 32) and 0 <= slot < (1 << 32)):
            raise ValueError("rep and slot must fit in 32 bits")
        return cls(seed, (rep << 32) | slot)

    def spawn(self, index: int) -> RngStream:
        """Child stream; distinct ``index`` values give independent children."""
        if not 0 <= index < (1 << 32) - 1:
            raise ValueError("spawn index must fit in 32 bits")
        return RngStream(self.seed, self.stream_id, (self.substream << 32) | (index + 1))

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of this stream."""
        counter = [0, 0, self.substream & _MASK64, self.substream >> 64]
        bitgen = np.random.Philox(key=[self.seed, self.stream_id], counter=counter)
        return np.random.Generator(bitgen)


def as_generator(stream: RngStream | np.random.Generator) -> np.random.Generator:
    if isinstance(stream, np.random.Generator):
        return stream
    return stream.generator()


def standard_normal(stream: RngStream, count: int) -> np.ndarray:
    if count < 0:
        raise ValueError("count must be non-negative")
    return as_generator(stream).standard_normal(count)


def sample_centered_gamma41(stream: RngStream, count: int) -> np.ndarray:
    """Gamma(shape=4, scale=1) draws shifted to mean zero (variance 4)."""
    if count < 0:
        raise ValueError("count must be non-negative")
    return centered_gamma41(as_generator(stream), count)


def centered_gamma41(rng: np.random.Generator, size) -> np.ndarray:
    # Gamma(4, 1) is exactly a sum of four unit exponentials.
    size = (size,) if np.isscalar(size) else tuple(size)
    return rng.standard_exponential(size + (4,)).sum(axis=-1) - 4.0


def sample_scaled_t4(stream: RngStream, count: int) -> np.ndarray:
    """Student t(4) draws divided by sqrt(2), i.e. unit variance."""
    if count < 0:
        raise ValueError("count must be non-negative")
    return scaled_t4(as_generator(stream), count)


def scaled_t4(rng: np.random.Generator, size) -> np.ndarray:
    # t4 = Z / sqrt(chi2_4 / 4) with chi2_4 = 2 (E1 + E2); dividing by sqrt(2)
    # leaves Z / sqrt(E1 + E2).
    size = (size,) if np.isscalar(size) else tuple(size)
    z = rng.standard_normal(size)
    e = rng.standard_exponential(size + (2,)).sum(axis=-1)
    return z / np.sqrt(e)


def cholesky(matrix) -> np.ndarray:
    """Lower-triangular Cholesky factor ``L`` with ``L @ L.T == matrix``.

    Raises
    ------
    NotPositiveDefinite
        If the matrix is not symmetric positive definite, or a pivot falls
        below ``1e-12`` times the largest diagonal entry.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    scale = np.max(np.abs(a)) if a.size else 0.0
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(scale, 1.0)):
        raise NotPositiveDefinite("matrix is not symmetric")
    try:
        low = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    pivots = np.diag(low) ** 2
    if a.size and pivots.min() <= _PIVOT_RTOL * np.max(np.diag(a)):
        raise NotPositiveDefinite("pivot underflows the positive-definiteness threshold")
    return low


def rank_one_cholesky_apply(w: np.ndarray, c: float, eps: np.ndarray) -> np.ndarray:
    """Compute ``chol(I + c w w') @ eps`` row by row in O(p).

    ``w`` and ``eps`` have shape ``(..., p)``; each leading index is an
    independent problem.  Uses the product form of the rank-one update:
    the factor is ``(I + strict_lower(w beta')) diag(sqrt(d))`` with
    ``s_j = 1 + c * sum_{k<j} w_k^2``, ``d_j = s_{j+1}/s_j`` and
    ``beta_j = c w_j / s_{j+1}``.
    """
    if c < 0:
        raise ValueError("c must be non-negative")
    w = np.asarray(w, dtype=float)
    eps = np.asarray(eps, dtype=float)
    s_next = 1.0 + c * np.cumsum(w * w, axis=-1)
    s_prev = np.concatenate([np.ones(w.shape[:-1] + (1,)), s_next[..., :-1]], axis=-1)
    y = np.sqrt(s_next / s_prev) * eps
    beta_y = (c * w / s_next) * y
    acc = np.cumsum(beta_y, axis=-1) - beta_y
    return y + w * acc


def empirical_upper_quantile(sorted_draws, alpha: float) -> float:
    """Bootstrap critical value: the ``ceil((1 - alpha)(B + 1))``-th order statistic.

    The index is clipped to ``[1, B]``.
    """
    draws = np.asarray(sorted_draws, dtype=float)
    b = draws.shape[0]
    if b == 0:
        raise EmptyDistribution("no bootstrap draws")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    # round() strips representation noise such as 0.95 * 500 = 474.99999...
    k = math.ceil(round((1.0 - alpha) * (b + 1), 9))
    k = min(max(k, 1), b)
    return float(draws[k - 1])


def check_series(X, *, min_samples: int = 1, name: str = "X") -> np.ndarray:
    """Validate an ``n x p`` panel (1-D input is read as a single column)."""
    X = np.asarray(X, dtype=float) if not hasattr(X, "to_numpy") else X.to_numpy(dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return check_array(X, dtype=np.float64, ensure_min_samples=min_samples, input_name=name)
