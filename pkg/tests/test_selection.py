import math

import numpy as np
import pytest

from sped_select.error_models import ErrorModel, calibrate_noise_sd
from sped_select.errors import DataError, DomainError, PreconditionError
from sped_select.risk import CurveKind, RiskCurve
from sped_select.selection import (
    Method,
    RateModel,
    SelectionConfig,
    argmin_on_grid,
    check_sample_size,
    make_alpha_grid,
    n1_for,
    rate_b,
    rate_r,
    select_cv,
    select_oracle,
    select_small_n,
)
from sped_select.simulation import SimSetting, draw_sample, replicate_rng
from sped_select.sped import Sample
from sped_select.targets import mw_density, sample_mixture

TARGET = mw_density(1)
ERROR = ErrorModel(calibrate_noise_sd(1.0, 0.1))
CONFIG = SelectionConfig(grid_size=40)


def _draw(n, seed=0):
    rng = np.random.default_rng(seed)
    x = sample_mixture(TARGET, rng, n)
    return Sample(x + rng.normal(0.0, ERROR.sd, size=n))


def test_rate_b():
    assert rate_b(100) == pytest.approx(0.0460517, rel=1e-6)
    assert rate_b(100, 2) == pytest.approx(0.848304, rel=1e-6)
    assert rate_b(10000) / rate_b(100) == pytest.approx(1 / 50)
    with pytest.raises(DomainError):
        rate_b(1)


def test_rate_r():
    assert rate_r(100) == pytest.approx(1 / math.log(100))
    assert rate_r(100, 3) == pytest.approx(math.log(100) ** -3)


def test_alpha_grid_endpoints_are_exact():
    config = SelectionConfig(iota=1e-3, lambda_=1e3, grid_size=100)

    alphas = make_alpha_grid(500, config)

    assert alphas.size == 100
    assert alphas[0] == 1e-3 * rate_b(500)
    assert alphas[-1] == 1e3 * rate_b(500)
    assert alphas[-1] / alphas[0] == pytest.approx(1e6)
    assert np.all(np.diff(alphas) > 0)


def test_alpha_grid_scales_with_rate():
    ratio = make_alpha_grid(10000, CONFIG) / make_alpha_grid(100, CONFIG)

    np.testing.assert_allclose(ratio, rate_b(10000) / rate_b(100))


@pytest.mark.parametrize(
    "n,expected", [(4, 2), (16, 4), (17, 5), (100, 10), (10000, 100)]
)
def test_n1_for(n, expected):
    assert n1_for(n) == expected


def test_argmin_prefers_largest_alpha_on_ties():
    curve = RiskCurve(
        [0.1, 0.2, 0.3, 0.4], [3.0, 1.0, 1.0, 2.0], 5, CurveKind.TRUE_RISK
    )

    assert argmin_on_grid(curve) == 0.3


def test_argmin_rejects_non_finite_values():
    curve = RiskCurve([0.1, 0.2], [np.nan, 1.0], 5, CurveKind.TRUE_RISK)

    with pytest.raises(DataError, match="non-finite"):
        argmin_on_grid(curve)


def test_config_validation():
    with pytest.raises(DomainError, match="iota"):
        SelectionConfig(iota=10.0, lambda_=1.0)
    with pytest.raises(DomainError, match="grid_size"):
        SelectionConfig(grid_size=1)
    with pytest.raises(DomainError, match="m must be"):
        SelectionConfig(m=0)
    with pytest.raises(DomainError, match="tolerance"):
        SelectionConfig(quad_tolerance=0.0)
    with pytest.raises(DomainError, match="k must be"):
        RateModel(0)


def test_config_overrides():
    config = CONFIG.with_overrides(k=2, iota=None, grid_size=10)

    assert config.rate.k == 2
    assert config.iota == CONFIG.iota
    assert config.grid_size == 10
    assert config.as_dict()["n1_rule"] == "sqrt-n"
    assert config.as_dict()["rate"] == {"k": 2}


def test_check_sample_size():
    with pytest.raises(PreconditionError, match="sample too small for n1 rule"):
        check_sample_size("small-n", 3)
    with pytest.raises(PreconditionError):
        check_sample_size(Method.CROSS_VALIDATION, 1)
    check_sample_size(Method.SMALL_N, 4)


def test_small_n_rejects_three_observations():
    with pytest.raises(PreconditionError) as exc_info:
        select_small_n(_draw(3), ERROR, CONFIG)
    assert exc_info.value.exit_code == 65


def test_small_n_accepts_four_observations():
    result = select_small_n(_draw(4), ERROR, CONFIG)

    assert result.n1 == 2
    assert result.curve.n1 == 2
    assert result.alpha_hat > 0


def test_small_n_rescales_the_minimiser():
    sample = _draw(200, 4)

    result = select_small_n(sample, ERROR, CONFIG)

    assert result.n1 == 15
    assert result.curve.kind is CurveKind.ESTIMATED_RISK
    assert result.alpha_prime in result.curve.alphas
    assert result.alpha_hat == pytest.approx(
        result.alpha_prime * rate_b(200) / rate_b(15)
    )


def test_small_n_at_full_size_matches_cv():
    sample = _draw(60, 9)

    small_n = select_small_n(sample, ERROR, CONFIG, n1=60)
    cv = select_cv(sample, ERROR, CONFIG)

    assert small_n.alpha_hat == small_n.alpha_prime
    np.testing.assert_array_equal(small_n.curve.alphas, cv.curve.alphas)
    np.testing.assert_allclose(
        small_n.curve.values, cv.curve.values, rtol=1e-10, atol=1e-12
    )


def test_small_n_rejects_bad_n1_override():
    with pytest.raises(DomainError, match="n1"):
        select_small_n(_draw(20), ERROR, CONFIG, n1=21)


def test_boundary_minimum_is_logged(caplog):
    config = SelectionConfig(iota=1e3, lambda_=1e6, grid_size=5)

    with caplog.at_level("WARNING"):
        result = select_cv(_draw(50, 2), ERROR, config)

    assert result.on_boundary
    assert "boundary" in caplog.text


def test_oracle_is_interior():
    result = select_oracle(TARGET, ERROR, 500, SelectionConfig())

    assert result.method is Method.ORACLE
    assert not result.on_boundary
    assert result.curve.kind is CurveKind.TRUE_RISK


def test_oracle_risk_decreases_with_n():
    best = [
        select_oracle(TARGET, ERROR, n, CONFIG).curve.values.min()
        for n in (100, 500, 1000)
    ]

    assert best[0] > best[1] > best[2]


def test_oracle_is_stable_under_a_finer_search_grid():
    coarse = select_oracle(TARGET, ERROR, 500, SelectionConfig())
    fine = select_oracle(TARGET, ERROR, 500, SelectionConfig(grid_size=200))

    step = math.log(coarse.curve.alphas[1] / coarse.curve.alphas[0])
    assert abs(math.log(fine.alpha_hat / coarse.alpha_hat)) <= step
    assert fine.curve.values.min() == pytest.approx(
        coarse.curve.values.min(), rel=1e-3
    )


@pytest.mark.slow
def test_small_n_curves_rarely_end_on_the_boundary():
    setting = SimSetting(7, 500, 0.1, 20, 11)
    error, config = setting.error, setting.config
    counts = {"small-n": 0, "full": 0, "cv-lower": 0}

    for r in range(setting.n_sim):
        sample = draw_sample(setting, replicate_rng(setting.seed, r))
        counts["small-n"] += select_small_n(sample, error, config).on_boundary
        counts["full"] += select_small_n(sample, error, config, n1=500).on_boundary
        cv = select_cv(sample, error, config)
        counts["cv-lower"] += cv.alpha_hat == cv.curve.alphas[0]

    assert counts["small-n"] <= 2
    assert counts["full"] >= 3
    assert counts["cv-lower"] >= 3
