import math

import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.stats import kstest

from sped_select.errors import DomainError
from sped_select.targets import (
    MARRON_WAND,
    NormalMixture,
    mixture_cdf,
    mixture_char_fn,
    mixture_l2_norm_sq,
    mixture_name,
    mixture_pdf,
    mixture_variance,
    mw_density,
    sample_mixture,
)

X = np.linspace(-12, 12, 48001)


@pytest.mark.parametrize("index", sorted(MARRON_WAND))
def test_densities_are_normalised(index):
    mix = mw_density(index)

    assert math.fsum(mix.weights) == pytest.approx(1.0, abs=1e-12)
    assert trapezoid(mixture_pdf(mix, X), X) == pytest.approx(1.0, abs=1e-8)
    assert mixture_char_fn(mix, 0.0) == pytest.approx(1.0)


def test_strongly_skewed_has_eight_components():
    mix = mw_density(3)

    assert len(mix.components) == 8
    assert mix.min_sd == pytest.approx((2 / 3) ** 7)


def test_names():
    assert mixture_name(1) == "Gaussian"
    assert mixture_name(7) == "Separated bimodal"


@pytest.mark.parametrize("index", [0, 9, -1])
def test_index_out_of_range(index):
    with pytest.raises(DomainError, match="1..8"):
        mw_density(index)
    with pytest.raises(DomainError):
        mixture_name(index)


def test_standard_normal_values():
    mix = mw_density(1)
    t = np.array([0.5, 1.0, 2.0])

    np.testing.assert_allclose(mixture_char_fn(mix, t), np.exp(-(t**2) / 2))
    assert mixture_cdf(mix, 0.0) == pytest.approx(0.5)
    assert mixture_l2_norm_sq(mix) == pytest.approx(1 / (2 * math.sqrt(math.pi)))
    assert mixture_variance(mix) == pytest.approx(1.0)


def test_bimodal_variance():
    assert mixture_variance(mw_density(6)) == pytest.approx(13 / 9)


@pytest.mark.parametrize("index", [2, 5, 8])
def test_l2_norm_matches_quadrature(index):
    mix = mw_density(index)

    numeric = trapezoid(mixture_pdf(mix, X) ** 2, X)

    assert mixture_l2_norm_sq(mix) == pytest.approx(numeric, rel=1e-7)


def test_char_fn_of_shifted_component():
    mix = NormalMixture.from_components([(1.0, 2.0, 0.5)])
    t = 1.3

    expected = np.exp(-1j * t * 2.0 - 0.5 * (0.5 * t) ** 2)
    assert mixture_char_fn(mix, t) == pytest.approx(expected)


def test_mixture_validation():
    with pytest.raises(DomainError, match="sum to 1"):
        NormalMixture((0.5, 0.4), (0.0, 1.0), (1.0, 1.0))
    with pytest.raises(DomainError, match="positive"):
        NormalMixture((1.0,), (0.0,), (0.0,))
    with pytest.raises(DomainError, match="matching"):
        NormalMixture((1.0,), (0.0, 1.0), (1.0,))


@pytest.mark.parametrize("index", [2, 6])
def test_sampling_matches_cdf(index):
    mix = mw_density(index)
    draws = sample_mixture(mix, np.random.default_rng(20240611), 4000)

    result = kstest(draws, lambda x: mixture_cdf(mix, x))

    assert result.pvalue > 1e-3


def test_sampling_is_reproducible():
    mix = mw_density(4)

    first = sample_mixture(mix, np.random.default_rng(3), 50)
    second = sample_mixture(mix, np.random.default_rng(3), 50)

    np.testing.assert_array_equal(first, second)


@pytest.mark.parametrize("index", sorted(MARRON_WAND))
def test_large_samples_are_close_to_the_cdf(index):
    mix = mw_density(index)
    draws = sample_mixture(mix, np.random.default_rng(100 + index), 100_000)

    assert kstest(draws, lambda x: mixture_cdf(mix, x)).statistic < 0.01
