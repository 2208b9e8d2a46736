import numpy as np
import pytest

from dvppres.model import (DisturbanceForecast, DisturbanceScenario,
                           GridParameters, IbrSpec, ScenarioMismatch,
                           SecurityLimits, scenario_groups, validate_inputs,
                           validate_scenario)


def test_case_study_inputs_pass(case_grid, case_limits, case_forecast, case_ibrs):
    report = validate_inputs(case_grid, case_forecast, case_limits, case_ibrs)
    assert report.ok, str(report)


def test_zero_governor_time_constant_fails(case_limits, case_forecast):
    grid = GridParameters(h0=10, d0=2, r=10, t_sg=0.0)
    report = validate_inputs(grid, case_forecast, case_limits)
    assert not report.ok
    assert any(path == "grid.t_sg" for path, _ in report.violations)


def test_probability_out_of_range_named_by_index(case_grid, case_limits):
    forecast = DisturbanceForecast(
        n=3, tau=60.0, magnitudes=(0.1, 0.2, 0.3),
        probabilities=(0.5, 0.5, 1.2))
    report = validate_inputs(case_grid, forecast, case_limits)
    assert not report.ok
    assert any(path == "forecast.probabilities[3]" for path, _ in report.violations)


def test_validation_idempotent(case_grid, case_limits, case_forecast):
    r1 = validate_inputs(case_grid, case_forecast, case_limits)
    r2 = validate_inputs(case_grid, case_forecast, case_limits)
    assert r1.violations == r2.violations


def test_empty_forecast_validates(case_grid, case_limits):
    forecast = DisturbanceForecast(n=0, tau=60.0)
    assert validate_inputs(case_grid, forecast, case_limits).ok


def test_offsets_must_stay_in_window(case_grid, case_limits):
    forecast = DisturbanceForecast(n=1, tau=60.0, magnitudes=(0.1,),
                                   probabilities=(1.0,),
                                   candidate_offsets=(0.0, 61.0))
    report = validate_inputs(case_grid, forecast, case_limits)
    assert any("candidate_offsets" in path for path, _ in report.violations)


def test_scenario_window_validation(case_forecast):
    ok = DisturbanceScenario((60.0, 60.0, 180.0, 180.0, 240.0))
    assert validate_scenario(ok, case_forecast).ok  # coincidence permitted
    bad = DisturbanceScenario((61.0, 60.0, 180.0, 180.0, 240.0))
    report = validate_scenario(bad, case_forecast)
    assert not report.ok


def test_ibr_bounds_validation(case_grid, case_limits, case_forecast):
    ibrs = [IbrSpec(1.0, 1.0, 0.5, h_bounds=(2.0, 1.0))]
    report = validate_inputs(case_grid, case_forecast, case_limits, ibrs)
    assert any(path == "ibrs[1].h_bounds" for path, _ in report.violations)


def test_groups_merge_coincident(case_forecast, worst_timing):
    groups = scenario_groups(worst_timing, case_forecast, weighting="realized")
    assert len(groups) == 3
    times = [t for t, _ in groups]
    mags = [k for _, k in groups]
    assert times == [60.0, 180.0, 240.0]
    assert mags[0] == pytest.approx(0.095 + 0.109)
    assert mags[1] == pytest.approx(-0.204 - 0.158)
    assert mags[2] == pytest.approx(0.253)


def test_groups_probabilistic_weighting(case_forecast, worst_timing):
    groups = scenario_groups(worst_timing, case_forecast, weighting="probabilistic")
    assert groups[0][1] == pytest.approx(0.8 * 0.095 + 0.5 * 0.109)


def test_groups_respect_active_flags(case_forecast):
    scen = DisturbanceScenario((0.0, 60.0, 120.0, 180.0, 240.0),
                               (True, False, True, False, False))
    groups = scenario_groups(scen, case_forecast, weighting="realized")
    assert [t for t, _ in groups] == [0.0, 120.0]


def test_groups_length_mismatch_raises(case_forecast):
    with pytest.raises(ScenarioMismatch):
        scenario_groups(DisturbanceScenario((0.0,)), case_forecast)


def test_grid_totals_and_with_dvpp(case_grid):
    g = case_grid.with_dvpp(19.86, 10.68)
    assert g.h_total == pytest.approx(29.86)
    assert g.d_total == pytest.approx(12.68)
    assert g.f_base == case_grid.f_base
