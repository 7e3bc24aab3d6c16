import numpy as np
import pytest
from scipy import stats

from hdts.blockcore import StatisticKind
from hdts.gausslab import (
    ArchFig1,
    GaussianAnalog,
    MaxStatSample,
    estimate_kolmogorov_distance,
    max_stat_draws,
    pp_curve,
    sample_max_stat,
)
from hdts.numerics import RngStream


def _sample(draws, label="X"):
    return MaxStatSample(np.asarray(draws, dtype=float), len(draws), label)


def test_zero_generator():
    s = sample_max_stat(lambda n, p, st: np.zeros((n, p)), 10, 3, 20, RngStream(1))
    assert np.all(s.draws == 0)


def test_scalar_gaussian_is_standard_normal():
    s = sample_max_stat(GaussianAnalog(np.eye(1)), 25, 1, 5000, RngStream(2))
    assert stats.kstest(s.draws, "norm").pvalue > 0.001


def test_duplicated_coordinate_does_not_change_max():
    def dup(n, p, st):
        z = st.generator().standard_normal((n, 1))
        return np.hstack([z, z])

    single = sample_max_stat(lambda n, p, st: st.generator().standard_normal((n, 1)), 12, 1, 200, RngStream(3))
    double = sample_max_stat(dup, 12, 2, 200, RngStream(3))
    np.testing.assert_allclose(single.draws, double.draws, rtol=1e-12, atol=1e-14)


def test_absolute_kind():
    gen = GaussianAnalog(np.eye(3))
    signed = max_stat_draws(gen, 10, 3, RngStream(4), 0, 100)
    absolute = max_stat_draws(gen, 10, 3, RngStream(4), 0, 100, StatisticKind.ABSOLUTE)
    assert np.all(absolute >= signed) and np.all(absolute >= 0)


@pytest.mark.parametrize("gen", [GaussianAnalog(), ArchFig1(0.5, burn_in=5)], ids=["gauss", "arch"])
def test_chunk_split_invariance(gen):
    stream = RngStream(5)
    whole = max_stat_draws(gen, 8, 4, stream, 0, 130)
    parts = np.concatenate([max_stat_draws(gen, 8, 4, stream, a, b) for a, b in [(0, 17), (17, 60), (60, 130)]])
    np.testing.assert_array_equal(whole, parts)


@pytest.mark.parametrize("gen", [GaussianAnalog(), ArchFig1(0.2, burn_in=5)], ids=["gauss", "arch"])
def test_column_sums_match_panel(gen):
    streams = [RngStream(6).spawn(r) for r in range(3)]
    fast = gen.column_sums(7, 3, streams)
    slow = np.stack([gen(7, 3, s).sum(axis=0) for s in streams])
    np.testing.assert_allclose(fast, slow, rtol=1e-10, atol=1e-12)


class TestDistance:
    def test_identical(self):
        s = _sample(np.random.default_rng(1).standard_normal(100))
        assert estimate_kolmogorov_distance(s, s) == 0.0

    def test_disjoint(self):
        assert estimate_kolmogorov_distance(_sample(np.arange(10)), _sample(np.arange(10) + 100)) == 1.0

    def test_symmetric_and_bounded(self):
        rng = np.random.default_rng(2)
        a, b = _sample(rng.standard_normal(300)), _sample(rng.standard_normal(200) + 0.3)
        d = estimate_kolmogorov_distance(a, b)
        assert d == estimate_kolmogorov_distance(b, a) and 0 <= d <= 1

    def test_matches_scipy(self):
        rng = np.random.default_rng(3)
        a, b = rng.standard_normal(500), rng.standard_normal(400) + 0.2
        assert estimate_kolmogorov_distance(_sample(a), _sample(b)) == pytest.approx(stats.ks_2samp(a, b).statistic)

    def test_shifted_normal(self):
        rng = np.random.default_rng(4)
        d = estimate_kolmogorov_distance(_sample(rng.standard_normal(100_000)), _sample(rng.normal(0.5, 1, 100_000)))
        assert abs(d - (2 * stats.norm.cdf(0.25) - 1)) < 0.01


class TestPPCurve:
    def test_self_curve_near_diagonal(self):
        s = _sample(np.random.default_rng(5).standard_normal(1000))
        curve = pp_curve(s, s, 199)
        assert curve.max_deviation <= 1 / 1000 + 1e-12
        np.testing.assert_allclose(curve.grid, np.arange(1, 200) / 200)

    def test_monotone(self):
        rng = np.random.default_rng(6)
        c = pp_curve(_sample(rng.standard_normal(300)), _sample(rng.standard_normal(400)), 49)
        assert np.all(np.diff(c.x_cdf_at_y_quantiles) >= 0)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(7)
        a, b = rng.standard_normal(300), rng.standard_normal(300) * 1.3
        c1 = pp_curve(_sample(a), _sample(b), 99)
        c2 = pp_curve(_sample(np.exp(a)), _sample(np.exp(b)), 99)
        np.testing.assert_array_equal(c1.x_cdf_at_y_quantiles, c2.x_cdf_at_y_quantiles)

    def test_grid_size(self):
        with pytest.raises(ValueError):
            pp_curve(_sample([1.0, 2.0]), _sample([1.0, 2.0]), 1)


def test_sample_validation():
    with pytest.raises(ValueError):
        MaxStatSample(np.array([1.0, np.nan]), 2, "X")
    with pytest.raises(ValueError):
        MaxStatSample(np.array([1.0]), 2, "X")
    with pytest.raises(ValueError):
        sample_max_stat(GaussianAnalog(), 5, 2, 0, RngStream(1))


def test_arch_beta_zero_matches_gaussian_law():
    # with beta0 = 0 the ARCH panel is i.i.d. scaled t4 with the same covariance; its max
    # statistic is close to the Gaussian one for moderate n
    sx = sample_max_stat(ArchFig1(0.0, burn_in=0), 60, 20, 2000, RngStream(8))
    sy = sample_max_stat(GaussianAnalog(), 60, 20, 2000, RngStream(9))
    assert estimate_kolmogorov_distance(sx, sy) < 0.06
