"""Data-driven block-size choice for the uniform confidence band.

Pseudo-series are drawn by the non-overlapping block bootstrap with a pilot
block size.  The sample mean is the true mean of every pseudo-series, so the
candidate whose band covers it most often, closest to the nominal rate,
is chosen.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from hdts.blockcore import make_scheme_single
from hdts.exceptions import InvalidBlockSize
from hdts.numerics import RngStream, check_series, empirical_upper_quantile


@dataclass(frozen=True)
class BlockSizeReport:
    candidates: tuple[int, ...]
    empirical_coverage: tuple[float, ...]
    chosen: int
    b_int: int
    b_boot_reps: int
    iterations: int = 1


def _band_covers(Xs: np.ndarray, truth: np.ndarray, b_n: int, b_reps: int, alpha: float, stream: RngStream) -> bool:
    """Whether the band on one series covers ``truth``; mirrors uniform_confidence_band."""
    n = Xs.shape[0]
    l_n = n // b_n
    sums = (Xs[: l_n * b_n] - Xs.mean(axis=0)).reshape(l_n, b_n, -1).sum(axis=1)
    e = stream.generator().standard_normal((b_reps, l_n))
    draws = np.sort(np.abs(e @ sums).max(axis=1)) / np.sqrt(n)
    crit = empirical_upper_quantile(draws, alpha)
    return bool(np.sqrt(n) * np.abs(truth - Xs.mean(axis=0)).max() <= crit)


def _coverage(X, b_int, candidates, B_outer, b_reps, alpha, stream):
    n = X.shape[0]
    l_int = n // b_int
    blocks = X[: l_int * b_int].reshape(l_int, b_int, -1)
    truth = X.mean(axis=0)
    # one substream for the resampling indices, one per (outer draw, candidate)
    idx = stream.spawn(0).generator().integers(0, l_int, size=(B_outer, l_int))
    hits = np.zeros(len(candidates), dtype=int)
    for b in range(B_outer):
        pseudo = blocks[idx[b]].reshape(l_int * b_int, -1)
        outer = stream.spawn(b + 1)
        for c, b_n in enumerate(candidates):
            hits[c] += _band_covers(pseudo, truth, b_n, b_reps, alpha, outer.spawn(c))
    return hits / B_outer


def select_block_size(
    X,
    b_int: int,
    candidates: Sequence[int],
    B_outer: int,
    b_reps: int,
    alpha: float,
    stream: RngStream,
    max_iterations: int = 1,
) -> BlockSizeReport:
    """Pick the candidate block size whose band coverage of ``xbar`` is closest to ``1 - alpha``.

    Ties go to the smallest candidate.  With ``max_iterations > 1`` the
    procedure is repeated using the previous choice as the pilot size
    (experimental).

    Raises
    ------
    InvalidBlockSize
        If the pilot size is invalid, or a candidate leaves fewer than two
        blocks in the series.
    """
    X = check_series(X)
    n = X.shape[0]
    cands = sorted(set(int(c) for c in candidates))
    if not cands:
        raise ValueError("candidates must be non-empty")
    if B_outer < 1:
        raise ValueError("B_outer must be at least 1")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    scheme = make_scheme_single(n, b_int)
    if scheme.truncated:
        raise InvalidBlockSize(f"pilot block size {b_int} must divide n = {n}")
    for c in cands:
        make_scheme_single(n, c)
        if n // c < 2:
            raise InvalidBlockSize(f"candidate {c} leaves fewer than two blocks")
    pilot = b_int
    for it in range(max_iterations):
        cover = _coverage(X, pilot, cands, B_outer, b_reps, alpha, stream.spawn(it))
        gaps = np.abs(cover - (1.0 - alpha))
        # argmin returns the first minimiser, i.e. the smallest block size
        chosen = cands[int(np.argmin(np.round(gaps, 12)))]
        if chosen == pilot or n % chosen:
            break
        pilot = chosen
    return BlockSizeReport(
        candidates=tuple(cands),
        empirical_coverage=tuple(float(c) for c in cover),
        chosen=chosen,
        b_int=b_int,
        b_boot_reps=B_outer,
        iterations=it + 1,
    )
