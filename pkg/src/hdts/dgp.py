"""Simulated data-generating processes.

All generators return an ``n x p`` array whose row ``i`` is the observation at
time ``i``.  They are pure functions of their arguments and the supplied
:class:`~hdts.numerics.RngStream`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from hdts.numerics import RngStream, as_generator, centered_gamma41, cholesky, rank_one_cholesky_apply, scaled_t4

DEFAULT_BURN_IN = 200


class Model(str, enum.Enum):
    VAR1 = "Var1"
    MARCH = "MArch"
    ARCH_FIG1 = "ArchFig1"
    IID_MA_COV = "IidMaCov"


class ErrorCase(str, enum.Enum):
    COMMON_FACTOR = "CommonFactor"
    MA_UNIF = "MaUnif"
    MA_GAMMA = "MaGamma"

    @classmethod
    def parse(cls, value) -> ErrorCase:
        aliases = {"i": cls.COMMON_FACTOR, "ii": cls.MA_UNIF, "iii": cls.MA_GAMMA}
        if isinstance(value, cls):
            return value
        key = str(value).strip()
        if key.lower() in aliases:
            return aliases[key.lower()]
        return cls(key)

    @property
    def roman(self) -> str:
        return {"CommonFactor": "i", "MaUnif": "ii", "MaGamma": "iii"}[self.value]


@dataclass(frozen=True)
class DgpConfig:
    model: Model = Model.VAR1
    n: int = 120
    p: int = 500
    rho: float = 0.0
    error_case: ErrorCase = ErrorCase.COMMON_FACTOR
    beta0: float = 0.0
    burn_in: int = DEFAULT_BURN_IN

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        object.__setattr__(self, "error_case", ErrorCase.parse(self.error_case))
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")
        if not 0.0 <= self.beta0 < 1.0:
            raise ValueError("beta0 must lie in [0, 1)")
        if self.burn_in < 0:
            raise ValueError("burn_in must be non-negative")


def _ma_panel(zeta: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """``out[t, j] = sum_m coeffs[m] * zeta[t, j + m]`` for a ``T x (2p-1)`` panel."""
    p = coeffs.shape[0]
    toeplitz = np.zeros((2 * p - 1, p))
    cols = np.arange(p)
    for m in range(p):
        toeplitz[cols + m, cols] = coeffs[m]
    return zeta @ toeplitz


def gen_error_process(case, n: int, p: int, stream: RngStream) -> np.ndarray:
    """Innovation panel for the three VAR(1) error cases.

    ``CommonFactor``: ``(e_tj + e_t0)/sqrt(2)`` with a shared normal factor.
    ``MaUnif`` / ``MaGamma``: ``sum_m r_m zeta_{t, j+m-1}`` with ``r_m ~ U(2, 3)``
    redrawn per call and normal or centred Gamma(4, 1) noise ``zeta``.

    Draws are laid out row-major so the leading ``k`` rows of a longer panel
    coincide with a ``k``-row panel from the same stream.
    """
    case = ErrorCase.parse(case)
    if n < 1 or p < 1:
        raise ValueError("n and p must be positive")
    rng = as_generator(stream)
    if case is ErrorCase.COMMON_FACTOR:
        e = rng.standard_normal((n, p + 1))
        return (e[:, 1:] + e[:, :1]) / np.sqrt(2.0)
    coeffs = rng.uniform(2.0, 3.0, size=p)
    if case is ErrorCase.MA_UNIF:
        zeta = rng.standard_normal((n, 2 * p - 1))
    else:
        zeta = centered_gamma41(rng, (n, 2 * p - 1))
    return _ma_panel(zeta, coeffs)


def gen_var1(config: DgpConfig, stream: RngStream) -> np.ndarray:
    """``x_t = rho x_{t-1} + sqrt(1 - rho^2) eps_t`` from ``x_0 = 0``."""
    n, burn = config.n, config.burn_in
    eps = gen_error_process(config.error_case, n + burn, config.p, stream)
    # Burn-in consumes the trailing rows so that rho = 0 reproduces
    # gen_error_process(case, n, p, stream) exactly.
    eps = np.concatenate([eps[n:], eps[:n]], axis=0)
    if config.rho == 0.0:
        return eps[burn:]
    x = lfilter([np.sqrt(1.0 - config.rho**2)], [1.0, -config.rho], eps, axis=0)
    return x[burn:]


def gen_march(n: int, p: int, stream: RngStream, burn_in: int = DEFAULT_BURN_IN) -> np.ndarray:
    """Multivariate ARCH: ``x_i = chol(0.1 I + 0.9 x_{i-1} x_{i-1}') eps_i`` from ``x_0 = 0``."""
    if n < 1 or p < 1:
        raise ValueError("n and p must be positive")
    rng = as_generator(stream)
    eps = rng.standard_normal((burn_in + n, p))
    out = np.empty_like(eps)
    x = np.zeros(p)
    base = 0.1 * np.eye(p)
    for t in range(burn_in + n):
        low = cholesky(base + 0.9 * np.outer(x, x))
        x = low @ eps[t]
        out[t] = x
    return out[burn_in:]


def equicorrelation(p: int, rho: float = 0.5) -> np.ndarray:
    """Unit diagonal, ``rho`` off the diagonal (the ``D_p`` of the ARCH study)."""
    return np.full((p, p), rho) + (1.0 - rho) * np.eye(p)


def _arch_fig1_paths(n, p, beta0, streams, burn_in, keep):
    """Batched ARCH recursion ``Sigma_i = (1-b) D_p + b x_{i-1} x_{i-1}'``.

    Each replication draws its own variates from its own stream; the
    recursion itself is vectorised across replications.  With
    ``L0 = chol((1-b) D_p)`` the Cholesky factor of ``Sigma_i`` is
    ``L0 chol(I + b w w')`` where ``w = L0^{-1} x_{i-1}``, so the state is
    carried as ``w_i = chol(I + b w_{i-1} w_{i-1}') eps_i`` at O(p) per step
    and ``x_i = L0 w_i`` is formed once at the end.
    """
    low0 = cholesky((1.0 - beta0) * equicorrelation(p))
    steps = burn_in + n
    reps = len(streams)
    w = np.empty((reps, p))
    eps = np.empty((reps, steps, p))
    for r, stream in enumerate(streams):
        rng = as_generator(stream)
        # x_0 = chol(D_p) z, hence w_0 = z / sqrt(1 - b)
        w[r] = rng.standard_normal(p) / np.sqrt(1.0 - beta0)
        eps[r] = scaled_t4(rng, (steps, p))
    out = np.empty((reps, n, p)) if keep == "panel" else np.zeros((reps, p))
    for t in range(steps):
        w = rank_one_cholesky_apply(w, beta0, eps[:, t]) if beta0 > 0.0 else eps[:, t]
        if t >= burn_in:
            if keep == "panel":
                out[:, t - burn_in] = w
            else:
                out += w
    return out @ low0.T


def gen_arch_fig1(
    n: int, p: int, beta0: float, stream: RngStream, burn_in: int = DEFAULT_BURN_IN
) -> np.ndarray:
    """ARCH model with scaled t(4) innovations and ``x_0 ~ N(0, D_p)``.

    Stationary, serially uncorrelated, ``cov(x_i) = D_p``.
    """
    if not 0.0 <= beta0 < 1.0:
        raise ValueError("beta0 must lie in [0, 1)")
    if n < 1 or p < 1:
        raise ValueError("n and p must be positive")
    return _arch_fig1_paths(n, p, beta0, [stream], burn_in, "panel")[0]


def gen_gaussian_analog(n: int, p: int, cov, stream: RngStream) -> np.ndarray:
    """Rows i.i.d. ``N(0, cov)``."""
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (p, p):
        raise ValueError(f"cov must be {p} x {p}")
    low = cholesky(cov)
    return as_generator(stream).standard_normal((n, p)) @ low.T


def simulate(config: DgpConfig, stream: RngStream) -> np.ndarray:
    """Dispatch on ``config.model``."""
    if config.model is Model.VAR1:
        return gen_var1(config, stream)
    if config.model is Model.IID_MA_COV:
        return gen_error_process(ErrorCase.MA_UNIF, config.n, config.p, stream)
    if config.model is Model.MARCH:
        return gen_march(config.n, config.p, stream, burn_in=config.burn_in)
    return gen_arch_fig1(config.n, config.p, config.beta0, stream, burn_in=config.burn_in)
