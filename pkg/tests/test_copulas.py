import math

import numpy as np
import pytest
from scipy import stats
from scipy.special import ndtri

from src.copulas import (
    EPSILON,
    CopulaKind,
    CopulaSpec,
    extra_name_uniforms,
    sample_copula_batch,
    sample_uniforms,
    sample_uniforms_batch,
    to_sorted_thresholds,
)
from src.errors import ConfigurationError, PricerError


@pytest.mark.parametrize("spec", [
    CopulaSpec.product(),
    CopulaSpec.exponential(0.01, 0.1),
    CopulaSpec.gaussian(0.5),
])
def test_marginals_are_uniform(spec, rng):
    u = sample_uniforms_batch(spec, 20_000, 3, rng)
    assert u.shape == (20_000, 3)
    assert np.all((u >= EPSILON) & (u <= 1 - EPSILON))
    for column in u.T:
        assert stats.kstest(column, 'uniform').pvalue > 1e-3


def test_product_components_uncorrelated(rng):
    u = sample_uniforms_batch(CopulaSpec.product(), 100_000, 3, rng)
    corr = np.corrcoef(u.T)
    off_diagonal = corr[~np.eye(3, dtype=bool)]
    assert np.all(np.abs(off_diagonal) < 0.02)


def test_gaussian_comonotone_limit(rng):
    u = sample_uniforms_batch(CopulaSpec.gaussian(1.0), 1_000, 5, rng)
    assert np.all(u == u[:, :1])


def test_gaussian_normal_scores_correlation(rng):
    rho = 0.5
    u = sample_uniforms_batch(CopulaSpec.gaussian(rho), 50_000, 2, rng)
    scores = ndtri(u)
    assert np.corrcoef(scores.T)[0, 1] == pytest.approx(rho * rho, abs=0.02)


def test_exponential_tie_frequency():
    spec = CopulaSpec.exponential(0.01, 0.1)
    assert spec.tie_probability() == pytest.approx(1 / 21)

    m = 1_000_000
    u = sample_uniforms_batch(spec, m, 2, np.random.default_rng(2009))
    frequency = np.mean(u[:, 0] == u[:, 1])
    std_error = math.sqrt(spec.tie_probability() * (1 - spec.tie_probability()) / m)
    assert abs(frequency - spec.tie_probability()) < 3 * std_error


def test_tie_probability_other_copulas():
    assert CopulaSpec.product().tie_probability() == 0.0
    assert CopulaSpec.gaussian(0.3).tie_probability() == 0.0
    assert CopulaSpec.gaussian(-1.0).tie_probability() == 1.0


def test_same_generator_state_same_draws():
    spec = CopulaSpec.exponential(0.01, 0.1)
    first = sample_uniforms_batch(spec, 10, 4, np.random.default_rng(7))
    second = sample_uniforms_batch(spec, 10, 4, np.random.default_rng(7))
    np.testing.assert_array_equal(first, second)


def test_single_vector(rng):
    u = sample_uniforms(CopulaSpec.gaussian(0.2), 40, rng)
    assert u.shape == (40,)


@pytest.mark.parametrize("kwargs, field", [
    (dict(kind=CopulaKind.GAUSSIAN, rho=1.5), 'copula.rho'),
    (dict(kind=CopulaKind.EXPONENTIAL, c0=0.0, c1=0.1), 'copula.c0'),
    (dict(kind=CopulaKind.EXPONENTIAL, c0=0.01, c1=-1.0), 'copula.c1'),
])
def test_invalid_parameters(kwargs, field):
    with pytest.raises(ConfigurationError) as excinfo:
        CopulaSpec(**kwargs)
    assert excinfo.value.field == field
    assert field in str(excinfo.value)


def test_kind_accepts_plain_string():
    assert CopulaSpec('gaussian', rho=0.1).kind is CopulaKind.GAUSSIAN


def test_zero_names_rejected(rng):
    with pytest.raises(ConfigurationError):
        sample_uniforms_batch(CopulaSpec.product(), 5, 0, rng)


class TestThresholds:
    def test_direct_transform(self):
        np.testing.assert_allclose(to_sorted_thresholds(np.array([0.5, 0.5])), [math.log(2)] * 2)

    def test_sorted_ascending(self):
        e = to_sorted_thresholds(np.array([0.9, 0.1]))
        np.testing.assert_allclose(e, [-math.log(0.9), -math.log(0.1)])

    def test_batch_rows_sorted(self, rng):
        u = sample_uniforms_batch(CopulaSpec.product(), 100, 6, rng)
        e = to_sorted_thresholds(u)
        assert np.all(np.diff(e, axis=1) >= 0)

    def test_unit_mean(self, rng):
        u = sample_uniforms_batch(CopulaSpec.product(), 200_000, 1, rng)
        assert to_sorted_thresholds(u).mean() == pytest.approx(1.0, abs=0.01)

    def test_ties_kept(self):
        e = to_sorted_thresholds(np.array([0.3, 0.7, 0.3]))
        assert e[0] == e[1]

    @pytest.mark.parametrize("u", [[0.0, 0.5], [0.5, 1.0]])
    def test_unclamped_rejected(self, u):
        with pytest.raises(PricerError):
            to_sorted_thresholds(np.array(u))

    def test_clamped_extremes_finite(self):
        e = to_sorted_thresholds(np.array([EPSILON, 1 - EPSILON]))
        assert np.all(np.isfinite(e))


def test_uncorrelated_gaussian_behaves_like_product():
    paths, n = 50_000, 10
    gaussian = sample_uniforms_batch(CopulaSpec.gaussian(0.0), paths, n, np.random.default_rng(31))
    product = sample_uniforms_batch(CopulaSpec.product(), paths, n, np.random.default_rng(32))

    corr = np.corrcoef(gaussian.T)[~np.eye(n, dtype=bool)]
    assert np.max(np.abs(corr)) < 5 / math.sqrt(paths)
    # the largest of n independent uniforms has CDF x^n
    assert stats.kstest(gaussian.max(axis=1), lambda x: x ** n).pvalue > 1e-3
    for k in (0, 4, 9):
        first, second = to_sorted_thresholds(gaussian)[:, k], to_sorted_thresholds(product)[:, k]
        assert stats.ks_2samp(first, second).pvalue > 1e-3


class TestExtraName:
    def test_draw_keeps_the_portfolio_stream(self):
        spec = CopulaSpec.gaussian(0.5)
        draw = sample_copula_batch(spec, 100, 4, np.random.default_rng(5))
        np.testing.assert_array_equal(draw.u, sample_uniforms_batch(spec, 100, 4, np.random.default_rng(5)))

    @pytest.mark.parametrize("spec", [
        CopulaSpec.product(),
        CopulaSpec.exponential(0.01, 0.1),
        CopulaSpec.gaussian(0.9),
    ])
    def test_uniform_marginal(self, spec, rng):
        draw = sample_copula_batch(spec, 20_000, 3, rng)
        extra = extra_name_uniforms(spec, draw, np.random.default_rng(77))
        assert extra.shape == (20_000,)
        assert stats.kstest(extra, 'uniform').pvalue > 1e-3

    def test_comonotone_gaussian(self, rng):
        spec = CopulaSpec.gaussian(1.0)
        draw = sample_copula_batch(spec, 1_000, 5, rng)
        np.testing.assert_array_equal(extra_name_uniforms(spec, draw, np.random.default_rng(1)), draw.u[:, 0])

    @pytest.mark.parametrize("rho", [0.5, 0.9])
    def test_gaussian_loads_on_the_same_factor(self, rho, rng):
        spec = CopulaSpec.gaussian(rho)
        draw = sample_copula_batch(spec, 50_000, 2, rng)
        extra = extra_name_uniforms(spec, draw, np.random.default_rng(3))
        assert np.corrcoef(ndtri(extra), ndtri(draw.u[:, 0]))[0, 1] == pytest.approx(rho * rho, abs=0.02)

    def test_exponential_ties_with_portfolio_names(self):
        spec = CopulaSpec.exponential(0.01, 0.1)
        m = 1_000_000
        draw = sample_copula_batch(spec, m, 1, np.random.default_rng(2010))
        extra = extra_name_uniforms(spec, draw, np.random.default_rng(2011))
        frequency = np.mean(extra == draw.u[:, 0])
        std_error = math.sqrt(spec.tie_probability() * (1 - spec.tie_probability()) / m)
        assert abs(frequency - spec.tie_probability()) < 3 * std_error

    def test_product_is_independent(self, rng):
        spec = CopulaSpec.product()
        draw = sample_copula_batch(spec, 100_000, 2, rng)
        assert draw.shared is None
        extra = extra_name_uniforms(spec, draw, np.random.default_rng(4))
        assert abs(np.corrcoef(extra, draw.u[:, 0])[0, 1]) < 0.02
