"""Presets, config round-trips, run artifacts, stability reports and
patient comparison."""

import csv
import json
import math

import numpy as np
import pytest

from hcvdelay import (
    HistorySpec,
    IntegrationConfig,
    InvalidModelInput,
    PatientSeries,
    ScenarioConfig,
    SystemState,
    TherapyEfficacies,
    combined_efficacy,
    compare_patient,
    critical_efficacy,
    integrate,
    preset,
    run_scenario,
    stability_report,
)
from hcvdelay.scenarios import CSV_HEADER, SUMMARY_KEYS, parse_tau

from test_stability import OMEGA0_REF, TAU0_REF


class TestPreset:
    def test_table1_constants(self):
        p = preset("table1")
        assert (p.s, p.r, p.t_max) == (1.0, 2.0, 3.6e7)
        assert (p.alpha, p.beta) == (2.25e-7, 2.9)
        assert (p.d1, p.d2, p.d3) == (0.01, 1.0, 6.0)
        assert p.s <= p.d1 * p.t_max

    def test_table2_constants(self):
        p = preset("table2")
        assert (p.s, p.r, p.t_max) == (3.7e4, 0.73, 0.6e7)
        assert (p.alpha, p.beta) == (1.8e-7, 13.9)
        assert (p.d1, p.d2, p.d3) == (2.4e-3, 0.06, 13.9)

    def test_unknown_rejected(self):
        with pytest.raises(InvalidModelInput):
            preset("table3")


class TestParseTau:
    def test_hours(self):
        assert parse_tau("22h") == pytest.approx(22.0 / 24.0)

    def test_days(self):
        assert parse_tau("1.5d") == 1.5

    def test_unit_required(self):
        with pytest.raises(InvalidModelInput):
            parse_tau("1.5")


def make_config(**over):
    base = dict(
        params=preset("table1"),
        efficacies=TherapyEfficacies(eta1=0.8, eta_r=0.7, c=0.7),
        tau=22.0 / 24.0,
        initial=SystemState(1e7, 1e7, 1e7, 1e7),
        horizon=60.0,
        dt=22.0 / 24.0 / 32.0,
    )
    base.update(over)
    return ScenarioConfig(**base)


class TestScenarioConfig:
    def test_round_trip(self):
        cfg = make_config()
        again = ScenarioConfig.parse(cfg.emit())
        assert again == cfg
        # byte-stable re-emission
        assert again.emit() == cfg.emit()

    def test_hour_tagged_delay_normalized(self):
        d = make_config().to_dict()
        d["tau"] = {"value": 22.0, "unit": "hours"}
        cfg = ScenarioConfig.from_dict(d)
        assert cfg.tau == pytest.approx(22.0 / 24.0)

    def test_unknown_unit_rejected(self):
        d = make_config().to_dict()
        d["tau"] = {"value": 22.0, "unit": "weeks"}
        with pytest.raises(InvalidModelInput):
            ScenarioConfig.from_dict(d)

    def test_validation(self):
        with pytest.raises(InvalidModelInput):
            make_config(tau=-1.0)
        with pytest.raises(InvalidModelInput):
            make_config(dt=0.0)
        with pytest.raises(InvalidModelInput):
            make_config(horizon=-5.0)


class TestRunScenario:
    def test_artifacts_and_summary_keys(self, tmp_path):
        cfg = make_config()
        summary = run_scenario(cfg, tmp_path)
        assert (tmp_path / "trajectory.csv").exists()
        assert (tmp_path / "summary.json").exists()
        assert (tmp_path / "config.json").exists()
        assert list(summary.keys()) == SUMMARY_KEYS
        on_disk = json.loads((tmp_path / "summary.json").read_text())
        assert list(on_disk.keys()) == SUMMARY_KEYS
        echoed = ScenarioConfig.parse((tmp_path / "config.json").read_text())
        assert echoed == cfg

    def test_csv_shape(self, tmp_path):
        cfg = make_config(horizon=10.0)
        run_scenario(cfg, tmp_path)
        with open(tmp_path / "trajectory.csv", newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == CSV_HEADER
        n_sub = round(cfg.tau / cfg.dt)
        dt_resolved = cfg.tau / n_sub
        assert len(rows) - 1 == math.floor(cfg.horizon / dt_resolved) + 1
        # V_total column is the sum of the virion columns
        for r in rows[1:10]:
            assert float(r[5]) == pytest.approx(float(r[3]) + float(r[4]),
                                                rel=1e-9)

    def test_clearing_run(self, tmp_path):
        cfg = make_config(horizon=200.0)
        assert combined_efficacy(cfg.efficacies) > critical_efficacy(cfg.params)
        summary = run_scenario(cfg, tmp_path)
        assert summary["longrun"] == "to_E1"
        assert summary["svr_day"] is not None
        assert summary["r0"] < 1.0

    def test_nonresponder_run(self, tmp_path):
        cfg = make_config(
            efficacies=TherapyEfficacies(eta1=0.8, eta_r=0.0, c=0.5),
            horizon=200.0,
        )
        assert combined_efficacy(cfg.efficacies) == pytest.approx(0.64)
        summary = run_scenario(cfg, tmp_path)
        assert summary["longrun"] == "to_E2"
        assert summary["svr_day"] is None
        assert summary["r0"] > 1.0

    def test_zero_horizon(self, tmp_path):
        cfg = make_config(horizon=0.0)
        summary = run_scenario(cfg, tmp_path)
        with open(tmp_path / "trajectory.csv", newline="") as f:
            rows = list(csv.reader(f))
        assert len(rows) == 2  # header + initial row
        assert summary["longrun"] == "undetermined"

    def test_dichotomy_consistency(self, tmp_path):
        for name, cfg in (
            ("clear", make_config(horizon=120.0)),
            ("plateau", make_config(
                efficacies=TherapyEfficacies(eta1=0.8, eta_r=0.0, c=0.5),
                horizon=120.0)),
        ):
            s = run_scenario(cfg, tmp_path / name)
            if s["longrun"] == "to_E2":
                assert s["r0"] > 1.0
            if s["longrun"] == "to_E1":
                assert s["r0"] < 1.0


class TestStabilityReport:
    def test_critical_setup(self, table2, eff_crit):
        rep = stability_report(table2, eff_crit, tau_probe=22.0 / 24.0)
        assert rep.r0 == pytest.approx(4.306, rel=1e-3)
        assert rep.rh_zero_delay is True
        assert rep.omega0 == pytest.approx(OMEGA0_REF, rel=1e-9)
        assert rep.tau0_days == pytest.approx(TAU0_REF, rel=1e-9)
        assert rep.tau0_hours == pytest.approx(TAU0_REF * 24.0, rel=1e-9)
        assert rep.transversality_sign == 1
        assert rep.hopf is not None
        assert rep.hopf.beta2 < 0 < rep.hopf.mu2
        assert rep.tau_probe_verdict == "stable"  # probe below tau0
        assert rep.warnings == []

    def test_subcritical_setup_reports_e1_only(self, table1):
        eff = TherapyEfficacies(eta1=0.7, eta_r=0.7, c=0.5)
        assert combined_efficacy(eff) == pytest.approx(0.805)
        rep = stability_report(table1, eff)
        assert rep.r0 < 1.0
        assert rep.e1_verdict == "stable"
        assert rep.omega_roots == ()
        assert rep.hopf is None

    def test_untreated_rh_reported(self, table2):
        eff = TherapyEfficacies(eta1=0.0, eta_r=0.0, c=0.5)
        rep = stability_report(table2, eff)
        assert rep.r0 > 1.0
        assert rep.rh_zero_delay is not None
        assert rep.rh_margin is not None

    def test_serializes(self, table2, eff_crit):
        rep = stability_report(table2, eff_crit)
        blob = json.dumps(rep.to_dict())
        assert "omega0" in blob and "tau_ladder" in blob


class TestPatientSeries:
    def test_from_csv_with_header(self, tmp_path):
        path = tmp_path / "p01.csv"
        path.write_text("t_days,log10_vl\n0.0,6.5\n3.0,4.2\n10.0,2.9\n")
        series = PatientSeries.from_csv(path)
        assert series.patient_id == "p01"
        assert series.points == ((0.0, 6.5), (3.0, 4.2), (10.0, 2.9))

    def test_requires_increasing_times(self):
        with pytest.raises(InvalidModelInput):
            PatientSeries(points=((0.0, 6.0), (0.0, 5.0)), patient_id="x")

    def test_rejects_nonfinite(self):
        with pytest.raises(InvalidModelInput):
            PatientSeries(points=((0.0, math.nan),), patient_id="x")


@pytest.fixture
def declining_traj(table1, standard_start):
    eff = TherapyEfficacies(eta1=0.8, eta_r=0.7, c=0.7)
    return integrate(table1, eff, 22.0 / 24.0, HistorySpec(standard_start),
                     IntegrationConfig(dt=22.0 / 24.0 / 32.0, t_end=60.0))


class TestComparePatient:
    def test_self_comparison_is_exact(self, declining_traj):
        from hcvdelay import interpolate

        ts = [1.0, 5.0, 10.0, 20.0, 40.0]
        pts = tuple(
            (t, math.log10(interpolate(declining_traj, t).total_virions))
            for t in ts
        )
        fit = compare_patient(declining_traj, PatientSeries(pts, "self"))
        assert fit.rmse == pytest.approx(0.0, abs=1e-12)
        assert fit.max_abs_error == pytest.approx(0.0, abs=1e-12)
        assert fit.skipped == 0

    def test_constant_offset(self, declining_traj):
        from hcvdelay import interpolate

        ts = [1.0, 5.0, 10.0, 20.0]
        pts = tuple(
            (t, math.log10(interpolate(declining_traj, t).total_virions) + 0.5)
            for t in ts
        )
        fit = compare_patient(declining_traj, PatientSeries(pts, "shift"))
        assert fit.rmse == pytest.approx(0.5, abs=1e-12)
        assert fit.max_abs_error == pytest.approx(0.5, abs=1e-12)

    def test_declining_model_fits_declining_series_better(
        self, declining_traj, table1, standard_start
    ):
        # flat-plateau run: non-responder efficacies
        eff = TherapyEfficacies(eta1=0.8, eta_r=0.0, c=0.5)
        plateau = integrate(table1, eff, 22.0 / 24.0,
                            HistorySpec(standard_start),
                            IntegrationConfig(dt=22.0 / 24.0 / 32.0,
                                              t_end=60.0))
        # synthetic declining series
        pts = tuple((t, 7.0 - 0.12 * t) for t in (1.0, 10.0, 20.0, 40.0))
        series = PatientSeries(pts, "synthetic")
        fit_decl = compare_patient(declining_traj, series)
        fit_flat = compare_patient(plateau, series)
        assert fit_decl.rmse < fit_flat.rmse

    def test_out_of_span_points_skipped(self, declining_traj):
        pts = ((-5.0, 6.0), (1.0, 6.0), (999.0, 2.0))
        fit = compare_patient(declining_traj, PatientSeries(pts, "span"))
        assert fit.skipped == 2
        assert len(fit.residuals) == 1
