import warnings

import numpy as np
import pytest

from evotherm.exceptions import NonMonotone, ValidationError
from evotherm.scenario import load_scenario
from evotherm.studies import (
    COMPARED,
    StudyResult,
    _flag_monotone,
    check_values,
    max_workers,
    physical,
    run_study,
)


@pytest.fixture(scope="module")
def scenario():
    return load_scenario("default_2T_1d")


def test_check_values():
    assert check_values(["0.4", 0.2, 0.1]) == [0.4, 0.2, 0.1]
    for bad in ([], [0.1, 0.2], [0.2, 0.2], [0.2, -0.1], [float("nan")]):
        with pytest.raises(ValidationError):
            check_values(bad)


def test_non_monotone_deviation_is_flagged():
    result = StudyResult("alpha_limit", ("value", "deviation", "ratio", "monotone"))
    with pytest.warns(NonMonotone, match="index 2"):
        assert not _flag_monotone(result, [3.0, 2.0, 2.5])
    assert len(result.warnings) == 1
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert _flag_monotone(result, [3.0, 2.0, 1.0])


def test_max_workers_respects_environment(monkeypatch):
    monkeypatch.setenv("EVOTHERM_THREADS", "1")
    assert max_workers(8) == 1
    monkeypatch.setenv("EVOTHERM_THREADS", "16")
    assert max_workers(3) == 3
    monkeypatch.delenv("EVOTHERM_THREADS")
    assert 1 <= max_workers(2) <= 2


def test_physical_fields_match_trajectory_for_two_temperature(scenario):
    tr = physical(scenario, "two_temperature")
    assert tr.names == ["v", "sigma", "theta"]
    assert tr.info["variant"] == "two_temperature"


@pytest.mark.parametrize("kind", ["alpha_limit", "eps_limit"])
def test_limit_studies_decrease_over_decades(kind, scenario):
    result = run_study(kind, scenario, [1e-1, 1e-2, 1e-3])
    dev = result.column("deviation")
    assert dev[0] > dev[1] > dev[2] > 0
    ratios = result.column("ratio")
    assert np.isnan(ratios[0]) and ratios[1] == pytest.approx(dev[0] / dev[1])
    assert all(result.column("monotone")) and not result.warnings


def test_dt_refine(scenario):
    result = run_study("dt_refine", scenario, [0.004, 0.002, 0.001])
    assert result.column("steps") == [50, 100, 200]
    assert result.column("deviation")[-1] == 0.0
    assert 1.7 < result.column("ratio")[0] < 2.3
    # dt halved three times: every consecutive ratio is first order
    ratios = run_study("dt_refine", scenario, [0.004, 0.002, 0.001, 0.0005]).column("ratio")
    assert all(1.7 < r < 2.3 for r in ratios[:-2]) and np.all(np.isnan(ratios[-2:]))
    with pytest.raises(ValidationError, match="does not divide"):
        run_study("dt_refine", scenario, [0.003, 0.002])


def test_model_compare_rows(scenario):
    result = run_study("model_compare", scenario, [0.2, 0.1])
    assert result.columns == ("value", "variant", "deviation")
    assert [row[:2] for row in result.rows] == [[v, c] for v in (0.2, 0.1) for c in COMPARED]
    assert all(d > 0 for d in result.column("deviation"))


def test_csv_output_and_determinism(scenario, monkeypatch):
    a = run_study("alpha_limit", scenario, [0.2, 0.1]).to_csv()
    monkeypatch.setenv("EVOTHERM_THREADS", "1")
    b = run_study("alpha_limit", scenario, [0.2, 0.1]).to_csv()
    assert a == b
    lines = a.splitlines()
    assert lines[0] == "value,deviation,ratio,monotone"
    assert lines[1].split(",")[2] == ""


def test_unknown_study(scenario):
    with pytest.raises(ValidationError):
        run_study("beta_limit", scenario, [0.1])
