"""Monte Carlo diagnostics for the Gaussian approximation of max statistics.

Compares the law of ``T_X = max_j n^{-1/2} sum_i x_ij`` for a data-generating
process with that of its Gaussian analogue ``T_Y`` via the two-sample
Kolmogorov distance and P-P curves.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from hdts.blockcore import StatisticKind
from hdts.dgp import DEFAULT_BURN_IN, _arch_fig1_paths, equicorrelation
from hdts.numerics import RngStream, cholesky

_CHUNK = 50


@dataclass(frozen=True)
class MaxStatSample:
    draws: np.ndarray
    reps: int
    label: str = "X"

    def __post_init__(self):
        draws = np.asarray(self.draws, dtype=float)
        if draws.ndim != 1 or draws.shape[0] != self.reps or self.reps < 1:
            raise ValueError("draws must be a non-empty vector of length reps")
        if not np.all(np.isfinite(draws)):
            raise ValueError("draws must be finite")
        object.__setattr__(self, "draws", draws)


@dataclass(frozen=True)
class PPCurve:
    grid: np.ndarray
    x_cdf_at_y_quantiles: np.ndarray

    @property
    def max_deviation(self) -> float:
        return float(np.abs(self.x_cdf_at_y_quantiles - self.grid).max())


class ArchFig1:
    """ARCH design with t(4) innovations; simulates many replications at once."""

    def __init__(self, beta0: float, burn_in: int = DEFAULT_BURN_IN):
        if not 0.0 <= beta0 < 1.0:
            raise ValueError("beta0 must lie in [0, 1)")
        self.beta0 = beta0
        self.burn_in = burn_in

    def __call__(self, n: int, p: int, stream: RngStream) -> np.ndarray:
        return _arch_fig1_paths(n, p, self.beta0, [stream], self.burn_in, "panel")[0]

    def column_sums(self, n: int, p: int, streams) -> np.ndarray:
        return _arch_fig1_paths(n, p, self.beta0, list(streams), self.burn_in, "sums")


class GaussianAnalog:
    """I.i.d. ``N(0, cov)`` rows; ``cov`` defaults to the equicorrelation ``D_p``."""

    def __init__(self, cov=None):
        self.cov = None if cov is None else np.asarray(cov, dtype=float)
        self._factors: dict[int, np.ndarray] = {}

    def _factor(self, p: int) -> np.ndarray:
        if p not in self._factors:
            cov = equicorrelation(p) if self.cov is None else self.cov
            if cov.shape != (p, p):
                raise ValueError(f"cov must be {p} x {p}")
            self._factors[p] = cholesky(cov)
        return self._factors[p]

    def __call__(self, n: int, p: int, stream: RngStream) -> np.ndarray:
        return stream.generator().standard_normal((n, p)) @ self._factor(p).T

    def column_sums(self, n: int, p: int, streams) -> np.ndarray:
        # sum before rotating: same law and stream use, p times fewer flops
        z = np.stack([s.generator().standard_normal((n, p)).sum(axis=0) for s in streams])
        return z @ self._factor(p).T


def max_stat_draws(generator, n: int, p: int, stream: RngStream, start: int, stop: int, statistic_kind=StatisticKind.SIGNED) -> np.ndarray:
    """Max-statistic draws for replications ``start..stop-1``; replication ``r`` uses ``stream.spawn(r)``.

    Generators exposing ``column_sums(n, p, streams)`` are run in chunks
    aligned to multiples of a fixed size, so any split of the replication
    range gives the same numbers.
    """
    kind = StatisticKind(statistic_kind)
    sums = np.empty((stop - start, p))
    if hasattr(generator, "column_sums"):
        lo = start
        while lo < stop:
            hi = min((lo // _CHUNK + 1) * _CHUNK, stop)
            sums[lo - start : hi - start] = generator.column_sums(n, p, [stream.spawn(r) for r in range(lo, hi)])
            lo = hi
    else:
        for r in range(start, stop):
            sums[r - start] = np.asarray(generator(n, p, stream.spawn(r))).sum(axis=0)
    z = sums / np.sqrt(n)
    return np.abs(z).max(axis=1) if kind is StatisticKind.ABSOLUTE else z.max(axis=1)


def sample_max_stat(
    generator: Callable[[int, int, RngStream], np.ndarray],
    n: int,
    p: int,
    reps: int,
    stream: RngStream,
    statistic_kind=StatisticKind.SIGNED,
    label: str = "X",
) -> MaxStatSample:
    """``reps`` independent draws of ``T = max_j n^{-1/2} sum_i x_ij``.

    ``generator(n, p, stream)`` returns one ``n x p`` panel.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    return MaxStatSample(max_stat_draws(generator, n, p, stream, 0, reps, statistic_kind), reps, label)


def _ecdf(sorted_draws: np.ndarray, points: np.ndarray) -> np.ndarray:
    return np.searchsorted(sorted_draws, points, side="right") / sorted_draws.shape[0]


def estimate_kolmogorov_distance(sx: MaxStatSample, sy: MaxStatSample) -> float:
    """``sup_t |F_X(t) - F_Y(t)|`` for the two empirical CDFs."""
    x, y = np.sort(sx.draws), np.sort(sy.draws)
    points = np.concatenate([x, y])
    return float(np.abs(_ecdf(x, points) - _ecdf(y, points)).max())


def pp_curve(sx: MaxStatSample, sy: MaxStatSample, grid_size: int = 199) -> PPCurve:
    """``F_X(F_Y^{-1}(q))`` on ``q = i/(grid_size + 1)``, ``i = 1..grid_size``.

    ``F_Y^{-1}(q) = inf{t : F_Y(t) >= q}``, the ``ceil(q B)``-th order statistic.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    grid = np.arange(1, grid_size + 1) / (grid_size + 1)
    x, y = np.sort(sx.draws), np.sort(sy.draws)
    k = np.ceil(np.round(grid * y.shape[0], 9)).astype(int)
    quantiles = y[np.clip(k, 1, y.shape[0]) - 1]
    return PPCurve(grid, _ecdf(x, quantiles))
