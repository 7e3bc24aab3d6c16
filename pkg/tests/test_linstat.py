import itertools

import numpy as np
import pytest

from hdts.blockcore import make_scheme_bigsmall
from hdts.dgp import DgpConfig, gen_var1
from hdts.exceptions import DegenerateVariance, DimensionMismatch, InvalidBlockSize, TruncationTooLarge
from hdts.linstat import (
    InfluenceSpec,
    SpectralMeanSpec,
    autocov_spec,
    linstat_test,
    linstat_test_blockboot,
    mean_spec,
    spectral_mean_estimate,
    spectral_mean_influence,
    studentized_variant,
    windows,
)
from hdts.numerics import RngStream
from hdts.procedures import uniform_confidence_band, white_noise_test


def _normal(n, p, seed):
    return np.random.default_rng(seed).standard_normal((n, p))


def test_windows_layout():
    U = np.arange(12.0).reshape(6, 2)
    V = windows(U, 3)
    assert V.shape == (4, 3, 2)
    np.testing.assert_array_equal(V[1, 2], U[3])
    with pytest.raises(InvalidBlockSize):
        windows(U, 7)


class TestMeanFunctional:
    def test_expansion_is_exact(self):
        U = _normal(50, 4, 1) + 3.0
        spec = mean_spec()
        V = windows(U, 1)
        theta, infl = spec.estimate(V), spec.influence(V)
        target = U.mean(0) - 0.2
        np.testing.assert_allclose(theta - target - infl.mean(0), 0.2, atol=1e-12)
        assert np.abs(infl.mean(0)).max() <= 1e-8 * np.abs(U).max()

    def test_influence_hat(self):
        U = _normal(10, 2, 2)
        np.testing.assert_allclose(mean_spec().influence_hat(3, U), U[3] - U.mean(0))

    def test_matches_band(self):
        for seed in range(10):
            U = _normal(48, 6, seed)
            target = np.random.default_rng(100 + seed).normal(0, 0.25, size=6)
            band = uniform_confidence_band(U, 4, 199, 0.05, RngStream(seed))
            res = linstat_test(U, mean_spec(), target, make_scheme_bigsmall(48, 4, 4), 199, 0.05, RngStream(seed))
            assert res.critical_value == pytest.approx(band.critical_value, rel=1e-12)
            assert res.reject == (not band.contains(target))

    def test_constant_functional(self):
        spec = InfluenceSpec(1, lambda V: np.array([1.5]), lambda V: np.zeros((len(V), 1)))
        U = _normal(20, 2, 3)
        scheme = make_scheme_bigsmall(20, 5, 5)
        hit = linstat_test(U, spec, [1.5], scheme, 99, 0.05, RngStream(1))
        miss = linstat_test(U, spec, [1.4], scheme, 99, 0.05, RngStream(1))
        assert hit.critical_value == 0.0 and not hit.reject
        assert miss.reject and miss.statistic == pytest.approx(np.sqrt(20) * 0.1)

    def test_dimension_mismatch(self):
        spec = InfluenceSpec(1, lambda V: np.zeros(2), lambda V: np.zeros((len(V), 3)))
        with pytest.raises(DimensionMismatch):
            linstat_test(_normal(20, 2, 1), spec, 0.0, make_scheme_bigsmall(20, 5, 5), 9, 0.05, RngStream(1))

    def test_scheme_checks(self):
        U = _normal(20, 2, 1)
        with pytest.raises(InvalidBlockSize):
            linstat_test(U, mean_spec(), 0.0, make_scheme_bigsmall(21, 5, 5), 9, 0.05, RngStream(1))


class TestAutocovFunctional:
    @pytest.mark.parametrize("L", [1, 3])
    def test_statistic_matches_white_noise(self, L):
        U = _normal(60, 4, L)
        spec = autocov_spec(range(1, L + 1))
        wn = white_noise_test(U, L, 2, 99, 0.05, RngStream(1))
        res = linstat_test(U, spec, 0.0, make_scheme_bigsmall(60 - L, 2, 2), 99, 0.05, RngStream(1))
        assert res.statistic == pytest.approx(wn.statistic, rel=1e-12)

    def test_influence_panel_is_centred_products(self):
        U = _normal(30, 2, 5)
        V = windows(U, 3)
        infl = autocov_spec([1, 2]).influence(V)
        assert infl.shape == (28, 8)
        np.testing.assert_allclose(infl.mean(0), 0.0, atol=1e-12)


class TestBlockBoot:
    def test_constant_data(self):
        res = linstat_test_blockboot(np.ones((30, 2)), mean_spec(), [1.0, 1.0], 5, 99, 0.05, RngStream(1))
        assert np.all(res.distribution.draws == 0.0) and not res.reject

    def test_enumeration(self):
        U = _normal(6, 1, 2)
        sums = U.reshape(3, 2, 1).sum(axis=1)[:, 0]
        atoms = np.sort([abs(sums[list(t)].sum() - sums.sum()) / np.sqrt(6) for t in itertools.product(range(3), repeat=3)])
        reps = 20_000
        draws = linstat_test_blockboot(U, mean_spec(), 0.0, 2, reps, 0.05, RngStream(3)).distribution.draws
        grid = np.unique(atoms)
        mc = np.searchsorted(draws, grid + 1e-12, side="right") / reps
        exact = np.searchsorted(atoms, grid + 1e-12, side="right") / 27
        assert np.abs(mc - exact).max() < np.sqrt(np.log(2 / 0.01) / (2 * reps))

    def test_truncated_windows(self):
        U = _normal(23, 2, 4)
        res = linstat_test_blockboot(U, mean_spec(), 0.0, 5, 50, 0.05, RngStream(5))
        assert res.scheme.truncated == 3 and res.distribution.b_reps == 50

    def test_agrees_with_multiplier(self):
        n = 10_000
        U = _normal(n, 5, 6)
        c1 = linstat_test(U, mean_spec(), 0.0, make_scheme_bigsmall(n, 10, 10), 3000, 0.05, RngStream(7)).critical_value
        c2 = linstat_test_blockboot(U, mean_spec(), 0.0, 10, 3000, 0.05, RngStream(8)).critical_value
        assert abs(c2 / c1 - 1.0) < 0.05


class TestStudentized:
    def test_equal_variance_same_decision(self):
        # influence columns with identical block variances: raw and studentized differ by one factor
        base = _normal(40, 1, 1)
        U = np.hstack([base, -base])
        scheme = make_scheme_bigsmall(40, 5, 5)
        raw = linstat_test(U, mean_spec(), [0.3, -0.3], scheme, 199, 0.05, RngStream(2))
        stu = studentized_variant(U, mean_spec(), [0.3, -0.3], scheme, 199, 0.05, RngStream(2))
        assert raw.reject == stu.reject

    def test_coordinate_scale_cancels(self):
        U = _normal(60, 3, 3)
        scheme = make_scheme_bigsmall(60, 5, 5)
        a = studentized_variant(U, mean_spec(), 0.0, scheme, 199, 0.05, RngStream(4))
        b = studentized_variant(U * [1.0, 40.0, 0.01], mean_spec(), 0.0, scheme, 199, 0.05, RngStream(4))
        assert a.statistic == pytest.approx(b.statistic, rel=1e-10)
        assert a.critical_value == pytest.approx(b.critical_value, rel=1e-10)

    def test_degenerate(self):
        U = _normal(20, 2, 5)
        U[:, 1] = 4.0
        with pytest.raises(DegenerateVariance):
            studentized_variant(U, mean_spec(), 0.0, make_scheme_bigsmall(20, 5, 5), 9, 0.05, RngStream(1))


def _periodogram_form(U, coeffs, grid=None):
    """Oracle: integrate tr(phi(lam) I_n(lam)) numerically on a uniform grid.

    ``phi(lam) = sum_h c_h exp(-i h lam)`` so that its Fourier coefficient
    ``int phi exp(i h lam) / (2 pi)`` is ``c_h``.  The integrand is a
    trigonometric polynomial, so the rectangle rule is exact once the grid
    is finer than its degree.
    """
    n, p = U.shape
    grid = grid or 4 * n
    lam = 2 * np.pi * np.arange(grid) / grid - np.pi
    t = np.arange(1, n + 1)
    d = np.exp(1j * np.outer(lam, t)) @ U  # d(lam) = sum_t u_t e^{i t lam}
    total = 0.0
    for m, l in enumerate(lam):
        per = np.outer(d[m], d[m].conj()) / (2 * np.pi * n)
        phi = sum(c * np.exp(-1j * h * l) for h, c in coeffs.items())
        total += np.trace(phi @ per)
    return (total * 2 * np.pi / grid).real


class TestSpectral:
    def test_identity_at_lag_zero(self):
        U = _normal(30, 3, 1)
        spec = SpectralMeanSpec({(0, 0): np.eye(3)})
        assert spectral_mean_estimate(U, spec)[0] == pytest.approx(np.trace(U.T @ U / 30))

    def test_lag_one_pair(self):
        U = _normal(30, 3, 2)
        spec = SpectralMeanSpec({(1, 0): np.eye(3), (-1, 0): np.eye(3)})
        expected = 2 * np.trace(U[1:].T @ U[:-1] / 30)
        assert spectral_mean_estimate(U, spec)[0] == pytest.approx(expected)

    def test_zero_data(self):
        spec = SpectralMeanSpec({(0, 0): np.eye(2), (2, 1): np.ones((2, 2))})
        assert np.all(spectral_mean_estimate(np.zeros((10, 2)), spec) == 0)
        infl = spectral_mean_influence(np.zeros((10, 2)), spec)
        assert np.all(infl.influence(windows(np.zeros((10, 2)), infl.d0)) == 0)

    @pytest.mark.parametrize("seed", range(3))
    def test_parseval(self, seed):
        rng = np.random.default_rng(seed)
        n, p = 25, 3
        U = rng.standard_normal((n, p))
        coeffs = {h: rng.standard_normal((p, p)) for h in (-3, -1, 0, 2, 5)}
        spec = SpectralMeanSpec({(h, 0): c for h, c in coeffs.items()}, truncation=n - 1)
        est = spectral_mean_estimate(U, spec)[0]
        oracle = _periodogram_form(U, coeffs)
        assert abs(est - oracle) <= 1e-10 * abs(oracle)

    def test_truncation(self):
        U = _normal(27, 2, 3)
        spec = SpectralMeanSpec({(0, 0): np.eye(2), (3, 0): np.eye(2)})
        assert spec.resolved_truncation(27) == 3
        assert spectral_mean_estimate(U, spec)[0] == pytest.approx(np.trace(U.T @ U) / 27)
        with pytest.raises(TruncationTooLarge):
            spectral_mean_estimate(U, SpectralMeanSpec({(0, 0): np.eye(2)}, truncation=28))

    def test_dimension_checks(self):
        with pytest.raises(DimensionMismatch):
            SpectralMeanSpec({(0, 0): np.eye(2), (1, 0): np.eye(3)})
        with pytest.raises(DimensionMismatch):
            spectral_mean_estimate(_normal(10, 3, 1), SpectralMeanSpec({(0, 0): np.eye(2)}))

    def test_influence_iid_lag_zero(self):
        U = _normal(40, 3, 4)
        spec = spectral_mean_influence(U, SpectralMeanSpec({(0, 0): np.eye(3)}, truncation=1))
        infl = spec.influence(windows(U, spec.d0))[:, 0]
        sq = (U**2).sum(axis=1)
        np.testing.assert_allclose(infl, sq - sq.mean())
        assert abs(infl.mean()) < 1e-12

    def test_influence_window_estimate_linear(self):
        U = _normal(50, 2, 5)
        coeffs = {(0, 0): np.eye(2), (1, 0): np.array([[1.0, 2.0], [0.0, 1.0]]), (-2, 1): np.ones((2, 2))}
        spec = SpectralMeanSpec(coeffs, truncation=3)
        infl = spectral_mean_influence(U, spec)
        V = windows(U, infl.d0)
        np.testing.assert_allclose(infl.influence(V).mean(0), 0.0, atol=1e-12)
        # a negative lag with coefficient c equals the positive lag with c'
        mirrored = SpectralMeanSpec({(0, 0): np.eye(2), (1, 0): coeffs[(1, 0)], (2, 1): np.ones((2, 2))}, truncation=3)
        np.testing.assert_allclose(infl.estimate(V), spectral_mean_influence(U, mirrored).estimate(V), rtol=1e-12)

    @pytest.mark.slow
    def test_ar1_size(self):
        n, reps, rho = 10_000, 800, 0.5
        theta = 2 * rho / (1 - rho**2)
        spec = SpectralMeanSpec({(1, 0): np.eye(1), (-1, 0): np.eye(1)})
        cfg = DgpConfig(n=n, p=1, rho=rho)
        rejects = 0
        for r in range(reps):
            # unit innovation variance: rescale the variance-preserving VAR(1)
            U = gen_var1(cfg, RngStream.for_replication(4, r, 0)) / np.sqrt(1 - rho**2)
            infl = spectral_mean_influence(U, spec)
            scheme = make_scheme_bigsmall(n - infl.d0 + 1, 25, 25)
            rejects += linstat_test(U, infl, theta, scheme, 499, 0.05, RngStream.for_replication(4, r, 1)).reject
        assert abs(100 * rejects / reps - 5.0) < 3.0
