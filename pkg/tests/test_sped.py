import math

import numpy as np
import pytest
from scipy.integrate import quad, trapezoid
from scipy.stats import norm

from sped_select.error_models import ErrorModel, abs_char_fn_sq
from sped_select.errors import DataError, DomainError, PreconditionError
from sped_select.sped import (
    FrequencyGrid,
    PenaltyKernel,
    Sample,
    build_frequency_grid,
    cosine_tail,
    crossover_frequency,
    empirical_char_fn,
    estimate_density,
    inverse_transform,
    origin_pole_distance,
    phi_tilde,
    spectral_integral,
)

ERROR = ErrorModel(0.3)


def _plain_grid(cutoff=10.0, count=1000, scale=8.0):
    return FrequencyGrid.uniform(
        cutoff, count, tail_bound=0.0, m=1, alpha=1.0, oscillation_scale=scale
    )


@pytest.fixture
def sample():
    rng = np.random.default_rng(11)
    return Sample(rng.normal(size=60) + rng.normal(0.0, ERROR.sd, size=60))


def test_kernel_validation():
    with pytest.raises(DomainError, match="alpha must be positive"):
        PenaltyKernel(0.0, 1, ERROR)
    with pytest.raises(DomainError, match="m must be"):
        PenaltyKernel(0.1, 0, ERROR)
    with pytest.raises(DomainError, match="noise sd > 0"):
        PenaltyKernel(0.1, 1, ErrorModel(0.0))


def test_sample_rejects_non_finite_values():
    with pytest.raises(DataError, match="non-finite"):
        Sample([0.1, float("nan")])
    assert Sample([[1.0, -3.0]]).max_abs == 3.0


def test_uniform_grid_weights():
    grid = _plain_grid(cutoff=4.0, count=40)

    assert grid.weights.sum() == pytest.approx(8.0)
    assert grid.nodes[0] == 0.0
    assert grid.nodes[-1] == pytest.approx(4.0)


def test_spectral_integral_of_gaussian():
    grid = _plain_grid()

    assert spectral_integral(grid, np.exp(-grid.nodes**2)) == pytest.approx(
        math.sqrt(math.pi), rel=1e-12
    )


def test_full_nodes_are_symmetric():
    grid = _plain_grid(cutoff=2.0, count=8)
    nodes, weights = grid.full_nodes()

    assert nodes.size == 17
    np.testing.assert_allclose(nodes, -nodes[::-1])
    assert weights.sum() == pytest.approx(4.0)


def test_refined_halves_spacing():
    grid = _plain_grid(cutoff=2.0, count=8, scale=3.0)
    finer = grid.refined()

    assert finer.spacing == pytest.approx(grid.spacing / 2)
    assert finer.size == 17
    assert finer.cutoff == grid.cutoff


@pytest.mark.parametrize("power", [2, 4])
@pytest.mark.parametrize("d", [0.3, 1.7, 12.0])
def test_cosine_tail_matches_quadrature(power, d):
    cutoff = 2.5
    expected, _ = quad(
        lambda t: t**-power, cutoff, np.inf, weight="cos", wvar=d, epsabs=1e-13
    )

    value = cosine_tail(cutoff, np.array([d, -d]), power)

    np.testing.assert_allclose(value, [expected, expected], rtol=1e-6, atol=1e-11)


def test_cosine_tail_without_oscillation():
    assert cosine_tail(3.0, np.array([0.0]), 2)[0] == pytest.approx(1 / 3)
    with pytest.raises(DomainError):
        cosine_tail(3.0, 0.0, 1)


def test_phi_tilde_is_one_at_origin():
    kernel = PenaltyKernel(0.01, 1, ERROR)

    assert phi_tilde(kernel, 0.0) == pytest.approx(1.0)
    t = np.linspace(0, 20, 50)
    # the filter never amplifies beyond the inverse of the noise
    gain = np.abs(phi_tilde(kernel, t)) * np.exp(-0.5 * ERROR.variance * t**2)
    assert np.all(gain <= 1 + 1e-12)


def test_crossover_frequency_balances_denominator():
    t_c = crossover_frequency(ERROR, 1e-3, 2)

    assert abs_char_fn_sq(ERROR, t_c) == pytest.approx(1e-3 * t_c**4, rel=1e-8)


def test_build_frequency_grid_respects_tolerance():
    kernel = PenaltyKernel(1e-3, 1, ERROR)

    grid = build_frequency_grid(kernel, tolerance=1e-10, oscillation_scale=4.0)

    assert grid.tail_bound <= 1e-10
    assert grid.alpha == 1e-3
    assert grid.spacing <= math.pi / 16
    assert grid.describe()["nodes"] == grid.size


def test_build_frequency_grid_rejects_bad_settings():
    kernel = PenaltyKernel(1e-3, 1, ERROR)

    with pytest.raises(DomainError, match="tolerance"):
        build_frequency_grid(kernel, tolerance=0.0)
    with pytest.raises(DomainError, match="node limit"):
        build_frequency_grid(kernel, oscillation_scale=100.0, max_nodes=10)


def test_empirical_char_fn_at_origin(sample):
    grid = _plain_grid()

    ecf = empirical_char_fn(sample, grid)

    assert ecf[0] == pytest.approx(1.0)
    assert np.all(np.abs(ecf) <= 1 + 1e-12)


def test_inverse_transform_of_gaussian_spectrum():
    grid = _plain_grid(cutoff=12.0, count=1200)
    x = np.linspace(-3, 3, 13)

    values = inverse_transform(grid, np.exp(-0.5 * grid.nodes**2), x)

    np.testing.assert_allclose(values, norm.pdf(x), atol=1e-10)


def test_estimate_integrates_to_one(sample):
    kernel = PenaltyKernel(0.1, 1, ERROR)
    grid = build_frequency_grid(kernel, oscillation_scale=12.0)
    x = np.linspace(-12, 12, 4801)

    estimate = estimate_density(sample, kernel, x, grid)

    assert trapezoid(estimate, x) == pytest.approx(1.0, abs=1e-3)


def test_estimate_is_translation_equivariant(sample):
    kernel = PenaltyKernel(0.05, 1, ERROR)
    grid = build_frequency_grid(kernel, oscillation_scale=10.0)
    x = np.linspace(-3, 3, 25)

    base = estimate_density(sample, kernel, x, grid)
    moved = estimate_density(sample.shifted(1.5), kernel, x + 1.5, grid)

    np.testing.assert_allclose(moved, base, atol=1e-10)


def test_estimate_refuses_unresolved_data():
    kernel = PenaltyKernel(0.1, 1, ERROR)
    grid = build_frequency_grid(kernel, oscillation_scale=1.0)

    with pytest.raises(PreconditionError, match="rebuild the grid"):
        estimate_density(Sample([0.0, 5.0]), kernel, [0.0], grid)


def test_phi_tilde_scalar_value():
    kernel = PenaltyKernel(1.0, 1, ErrorModel(1.0))

    expected = math.exp(-0.5) / (math.exp(-1.0) + 1.0)
    assert phi_tilde(kernel, 1.0) == pytest.approx(expected, rel=1e-12)
    assert phi_tilde(kernel, 1.0) == pytest.approx(0.44341, abs=1e-5)


def test_grid_alpha_max_defaults_to_kernel_alpha():
    kernel = PenaltyKernel(0.02, 1, ERROR)

    grid = build_frequency_grid(kernel, oscillation_scale=2.0)

    assert grid.alpha_max == 0.02
    assert grid.describe()["alpha_max"] == 0.02
    assert grid.refined().alpha_max == 0.02


def test_grid_resolves_the_largest_penalty():
    kernel = PenaltyKernel(1e-3, 1, ERROR)

    narrow = build_frequency_grid(kernel, oscillation_scale=1.0)
    wide = build_frequency_grid(kernel, oscillation_scale=1.0, alpha_max=400.0)

    assert origin_pole_distance(400.0, 1) == pytest.approx(0.05)
    assert wide.spacing <= 0.25 * origin_pole_distance(400.0, 1)
    assert wide.spacing < narrow.spacing
    with pytest.raises(DomainError, match="below alpha"):
        build_frequency_grid(kernel, alpha_max=1e-4)


def test_wide_grid_integrates_a_heavy_penalty():
    kernel = PenaltyKernel(1e-3, 1, ERROR)
    grid = build_frequency_grid(kernel, oscillation_scale=1.0, alpha_max=400.0)
    heavy = kernel.with_alpha(400.0)

    integral = spectral_integral(grid, np.abs(phi_tilde(heavy, grid.nodes)) ** 2)
    reference, _ = quad(
        lambda t: abs(phi_tilde(heavy, t)) ** 2,
        0.0,
        grid.cutoff,
        epsabs=1e-13,
        limit=200,
        points=(0.1, 1.0),
    )

    assert integral == pytest.approx(2 * reference, rel=1e-6)


def test_empirical_char_fn_of_two_points():
    grid = FrequencyGrid.uniform(
        math.pi, 1, tail_bound=0.0, m=1, alpha=1.0, oscillation_scale=1.0
    )

    ecf = empirical_char_fn(Sample([0.0, 1.0]), grid)

    assert ecf[0] == pytest.approx(1.0)
    assert abs(ecf[1]) < 1e-15


def test_single_point_estimate_is_even():
    kernel = PenaltyKernel(0.1, 1, ERROR)
    grid = build_frequency_grid(kernel, oscillation_scale=3.0)
    x = np.linspace(-3, 3, 61)

    estimate = estimate_density(Sample([0.0]), kernel, x, grid)

    np.testing.assert_allclose(estimate, estimate[::-1], rtol=1e-12, atol=1e-14)


def test_estimate_matches_brute_force_sum():
    error = ErrorModel(0.5)
    kernel = PenaltyKernel(0.1, 1, error)
    grid = build_frequency_grid(kernel, oscillation_scale=2.0)
    t = np.linspace(0.0, grid.cutoff, 10 * (grid.size - 1) + 1)
    phi = np.exp(-0.125 * t**2) / (np.exp(-0.25 * t**2) + 0.1 * t**2)
    ecf = (1 + 2 * np.cos(t)) / 3

    brute = trapezoid(phi * ecf, t) / math.pi
    estimate = estimate_density(Sample([-1.0, 0.0, 1.0]), kernel, [0.0], grid)

    assert estimate[0] == pytest.approx(brute, abs=1e-6)


def test_estimate_is_linear_in_the_empirical_measure():
    rng = np.random.default_rng(23)
    first, second = rng.normal(size=30), rng.normal(1.0, 0.5, size=70)
    kernel = PenaltyKernel(0.05, 1, ERROR)
    x = np.linspace(-4, 4, 81)
    grid = build_frequency_grid(kernel, oscillation_scale=8.0)

    pooled = estimate_density(Sample(np.concatenate((first, second))), kernel, x, grid)
    parts = [estimate_density(Sample(v), kernel, x, grid) for v in (first, second)]

    np.testing.assert_allclose(pooled, 0.3 * parts[0] + 0.7 * parts[1], atol=1e-12)
