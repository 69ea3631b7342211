import numpy as np
import pytest

from sped_select import simulation
from sped_select.errors import DataError, DomainError, ReplicateError
from sped_select.selection import Method, SelectionConfig
from sped_select.simulation import (
    SimRecord,
    SimSetting,
    draw_sample,
    metric_catastrophic,
    metric_mean_ratio,
    metric_mise_ratio,
    metric_quantile,
    records_for,
    replicate_rng,
    run_replicate,
    run_simulation,
    run_study,
    simulate_setting,
)

CONFIG = SelectionConfig(grid_size=20)


def _setting(**fields):
    values = dict(density_index=1, n=60, p=0.1, n_sim=3, seed=7, config=CONFIG)
    values.update(fields)
    return SimSetting(**values)


def _records(ratios, method=Method.SMALL_N, ise=None):
    return [
        SimRecord(r, method, 0.1, ratio if ise is None else ise[r], 1.0, ratio)
        for r, ratio in enumerate(ratios)
    ]


@pytest.mark.parametrize(
    "fields",
    [
        {"density_index": 9},
        {"n": 3},
        {"p": 0.0},
        {"p": 1.0},
        {"n_sim": 0},
        {"seed": -1},
        {"methods": ()},
    ],
)
def test_setting_validation(fields):
    with pytest.raises(DomainError):
        _setting(**fields)


def test_setting_orders_methods():
    setting = _setting(methods=("oracle", "cv", "small-n", "cv"))

    assert setting.methods == (Method.SMALL_N, Method.CROSS_VALIDATION, Method.ORACLE)
    assert setting.as_dict()["methods"] == ["small-n", "cv", "oracle"]
    assert setting.as_dict()["noise_sd"] == pytest.approx((0.1 / 0.9) ** 0.5)


def test_replicate_streams_are_independent_of_order():
    setting = _setting()

    first = draw_sample(setting, replicate_rng(7, 2)).values
    again = draw_sample(setting, replicate_rng(7, 2)).values
    other = draw_sample(setting, replicate_rng(7, 3)).values

    np.testing.assert_array_equal(first, again)
    assert not np.array_equal(first, other)


def test_run_replicate_is_deterministic():
    setting = _setting()

    first = run_replicate(setting, 1)
    second = run_replicate(setting, 1)

    assert first == second
    assert [record.method for record in first] == list(setting.methods)


def test_oracle_records_have_unit_ratio():
    records = run_replicate(_setting(methods=("oracle",)), 0)

    assert len(records) == 1
    assert records[0].loss_ratio == 1.0
    assert records[0].ise == records[0].ise_oracle > 0


def test_single_replicate_run_matches_run_replicate():
    setting = _setting(n_sim=1)

    assert run_simulation(setting, progress=False) == run_replicate(setting, 0)


def test_thread_count_does_not_change_records():
    setting = _setting(n_sim=4)

    serial = run_simulation(setting, threads=1, progress=False)
    pooled = run_simulation(setting, threads=2, progress=False)

    assert serial == pooled
    assert [record.replicate for record in serial] == sorted(
        record.replicate for record in serial
    )


def test_replicate_failure_names_the_replicate(monkeypatch):
    def failing_select(*args, **kwargs):
        raise DataError("small-n curve has non-finite values")

    monkeypatch.setattr(simulation, "select_small_n", failing_select)

    with pytest.raises(ReplicateError) as exc_info:
        run_simulation(_setting(n_sim=2), progress=False)

    assert exc_info.value.replicate == 0
    assert exc_info.value.exit_code == 2
    assert "replicate 0 failed" in str(exc_info.value)


def test_run_study_keeps_setting_order():
    settings = [_setting(n_sim=1, n=40), _setting(n_sim=1, p=0.3)]

    runs = run_study(settings, progress=False)

    assert [run.setting for run in runs] == settings
    assert all(len(run.records) == 3 for run in runs)


def test_run_reports_oracle_and_replicate_grids():
    setting = _setting(n_sim=2)

    run = simulate_setting(setting, progress=False)

    assert run.oracle.alpha_hat == simulation.oracle_alpha(setting).alpha_hat
    assert run.oracle.alpha_hat == run.records[-1].alpha_hat
    assert run.oracle_grid.tail_bound < setting.config.quad_tolerance
    low, high = run.replicate_grids["cutoff"]
    assert 0 < low <= high
    assert run.replicate_grids["m"] == [1, 1]


def test_metric_catastrophic():
    records = _records([0.5, 2.0, 20.0, 11.0])

    assert metric_catastrophic(records) == 0.5
    assert metric_catastrophic(records, threshold=np.inf) == 0.0
    assert metric_catastrophic(records, threshold=0.0) == 1.0


def test_metric_quantile():
    assert metric_quantile(_records([3.0] * 5)) == 3.0
    assert metric_quantile(_records([1.0, 2.0, 3.0, 4.0, 5.0]), 0.5) == 3.0
    assert metric_quantile(_records([0.0, 10.0]), 0.99) == pytest.approx(9.9)
    with pytest.raises(DomainError):
        metric_quantile(_records([1.0]), 1.5)


def test_metric_mean_ratio():
    assert metric_mean_ratio(_records([1.0])) == (1.0, 0.0)
    mean, se = metric_mean_ratio(_records([1.0, 3.0]))
    assert mean == 2.0
    assert se == pytest.approx(1.0)


def test_metrics_need_records_of_one_method():
    mixed = _records([1.0]) + _records([2.0], Method.CROSS_VALIDATION)

    with pytest.raises(DomainError):
        metric_mean_ratio([])
    with pytest.raises(DomainError, match="single method"):
        metric_catastrophic(mixed)
    assert len(records_for(mixed, "cv")) == 1


def test_metric_mise_ratio():
    a = _records([1.0, 1.0], ise=[2.0, 4.0])
    b = _records([1.0, 1.0], Method.ORACLE, ise=[1.0, 2.0])

    assert metric_mise_ratio(a, a) == 1.0
    assert metric_mise_ratio(a, b) == pytest.approx(2.0)
    with pytest.raises(DomainError, match="same replicate"):
        metric_mise_ratio(a, b[:1])


def test_record_needs_positive_oracle_loss():
    with pytest.raises(DataError):
        SimRecord.from_losses(0, Method.CROSS_VALIDATION, 0.1, 0.2, 0.0)
