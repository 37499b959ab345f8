"""Scenario presets, run orchestration, stability reports and patient fits.

This is the layer the CLI drives: it resolves configurations (with
hour/day unit tags for the delay), runs the integrator, writes the
trajectory CSV + summary JSON artifacts, assembles the full stability
report, and scores model trajectories against digitized patient series.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import stability as st
from . import hopf as hp
from .integrator import (
    HistorySpec,
    IntegrationConfig,
    Trajectory,
    classify_longrun,
    integrate,
    interpolate,
    svr_time,
)
from .model import (
    InvalidModelInput,
    ModelParams,
    SystemState,
    TherapyEfficacies,
    basic_r0,
    combined_efficacy,
    critical_efficacy,
)

__all__ = [
    "TABLE1",
    "TABLE2",
    "ScenarioConfig",
    "PatientSeries",
    "StabilityReport",
    "FitReport",
    "preset",
    "parse_tau",
    "run_scenario",
    "stability_report",
    "compare_patient",
]

TABLE1 = ModelParams(
    s=1.0, r=2.0, t_max=3.6e7, alpha=2.25e-7, beta=2.9, d1=0.01, d2=1.0, d3=6.0
)
with warnings.catch_warnings():
    # the published table is known to sit above the s <= d1*t_max guideline
    warnings.simplefilter("ignore")
    TABLE2 = ModelParams(
        s=3.7e4, r=0.73, t_max=0.6e7, alpha=1.8e-7, beta=13.9,
        d1=2.4e-3, d2=0.06, d3=13.9,
    )

CSV_HEADER = ["t_days", "T", "I", "V_I", "V_NI", "V_total", "log10_V_total"]
SUMMARY_KEYS = [
    "r0", "eta", "eta_c", "svr_day", "longrun", "tau0_days", "omega0", "beta2", "mu2",
]


def preset(table_id: str) -> ModelParams:
    """Published parameter set 'table1' or 'table2'."""
    if table_id == "table1":
        return TABLE1
    if table_id == "table2":
        return TABLE2
    raise InvalidModelInput(f"unknown preset {table_id!r} (expected table1 or table2)")


def parse_tau(text: str) -> float:
    """Parse a delay with a unit suffix: '22h' (hours) or '1.2d' (days).

    A bare number is rejected: the unit must be explicit.
    """
    t = text.strip().lower()
    if t.endswith("h"):
        return float(t[:-1]) / 24.0
    if t.endswith("d"):
        return float(t[:-1])
    raise InvalidModelInput(
        f"delay {text!r} needs an explicit unit suffix 'h' or 'd'"
    )


@dataclass(frozen=True)
class ScenarioConfig:
    """A fully resolved simulation request; tau, horizon and dt in days."""

    params: ModelParams
    efficacies: TherapyEfficacies
    tau: float
    initial: SystemState
    horizon: float
    dt: float
    svr_threshold: float = 100.0

    def __post_init__(self):
        if self.tau < 0:
            raise InvalidModelInput(f"tau must be non-negative, got {self.tau}")
        if self.horizon < 0:
            raise InvalidModelInput(f"horizon must be non-negative, got {self.horizon}")
        if self.dt <= 0:
            raise InvalidModelInput(f"dt must be positive, got {self.dt}")
        if self.svr_threshold <= 0:
            raise InvalidModelInput(
                f"svr_threshold must be positive, got {self.svr_threshold}"
            )

    def to_dict(self) -> dict:
        p, e, s = self.params, self.efficacies, self.initial
        return {
            "params": {
                "s": p.s, "r": p.r, "t_max": p.t_max, "alpha": p.alpha,
                "beta": p.beta, "d1": p.d1, "d2": p.d2, "d3": p.d3,
            },
            "efficacies": {"eta1": e.eta1, "eta_r": e.eta_r, "c": e.c},
            "tau": {"value": self.tau, "unit": "days"},
            "initial": {
                "t_cells": s.t_cells, "i_cells": s.i_cells,
                "v_i": s.v_i, "v_ni": s.v_ni,
            },
            "horizon": self.horizon,
            "dt": self.dt,
            "svr_threshold": self.svr_threshold,
        }

    def emit(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        tau_entry = d["tau"]
        if isinstance(tau_entry, dict):
            unit = tau_entry.get("unit", "days")
            value = float(tau_entry["value"])
            if unit == "hours":
                tau = value / 24.0
            elif unit == "days":
                tau = value
            else:
                raise InvalidModelInput(f"unknown tau unit {unit!r}")
        else:
            raise InvalidModelInput("tau must be an object with value and unit")
        return cls(
            params=ModelParams(**d["params"]),
            efficacies=TherapyEfficacies(**d["efficacies"]),
            tau=tau,
            initial=SystemState(**d["initial"]),
            horizon=float(d["horizon"]),
            dt=float(d["dt"]),
            svr_threshold=float(d.get("svr_threshold", 100.0)),
        )

    @classmethod
    def parse(cls, text: str) -> "ScenarioConfig":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class PatientSeries:
    """Digitized viral-load measurements for one patient."""

    points: tuple[tuple[float, float], ...]
    patient_id: str

    def __post_init__(self):
        prev = -math.inf
        for t, v in self.points:
            if not (math.isfinite(t) and math.isfinite(v)):
                raise InvalidModelInput(f"non-finite point ({t}, {v})")
            if t <= prev:
                raise InvalidModelInput("times must be strictly increasing")
            prev = t

    @classmethod
    def from_csv(cls, path, patient_id: str | None = None) -> "PatientSeries":
        """Two-column CSV (t_days, log10_vl), optional header row."""
        path = Path(path)
        pts = []
        with open(path, newline="") as f:
            for row in csv.reader(f):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    pts.append((float(row[0]), float(row[1])))
                except ValueError:
                    continue  # header or annotation row
        return cls(points=tuple(pts), patient_id=patient_id or path.stem)


@dataclass
class StabilityReport:
    """Everything the linear and normal-form analyses say about one setup."""

    r0: float
    eta: float
    eta_c: float
    e1_verdict: str
    rh_zero_delay: bool | None = None
    rh_margin: float | None = None
    omega_roots: tuple[float, ...] = ()
    omega0: float | None = None
    omega0_per_hour: float | None = None
    tau_ladder: tuple[float, ...] = ()
    tau0_days: float | None = None
    tau0_hours: float | None = None
    tau_plus: float | None = None
    transversality_sign: int | None = None
    hopf: hp.HopfSummary | None = None
    tau_probe_verdict: str | None = None
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        h = self.hopf
        return {
            "r0": self.r0,
            "eta": self.eta,
            "eta_c": self.eta_c,
            "e1_verdict": self.e1_verdict,
            "rh_zero_delay": self.rh_zero_delay,
            "rh_margin": self.rh_margin,
            "omega_roots": list(self.omega_roots),
            "omega0": self.omega0,
            "omega0_per_hour": self.omega0_per_hour,
            "tau_ladder": list(self.tau_ladder),
            "tau0_days": self.tau0_days,
            "tau0_hours": self.tau0_hours,
            "tau_plus": self.tau_plus,
            "transversality_sign": self.transversality_sign,
            "hopf": None
            if h is None
            else {
                "c11_0": [h.c11_0.real, h.c11_0.imag],
                "mu2": h.mu2,
                "beta2": h.beta2,
                "t2": h.t2,
                "lambda_prime": [h.lambda_prime.real, h.lambda_prime.imag],
                "direction": h.direction,
                "cycle_stability": h.cycle_stability,
                "period_trend": h.period_trend,
            },
            "tau_probe_verdict": self.tau_probe_verdict,
            "warnings": list(self.warnings),
        }


def stability_report(
    p: ModelParams,
    eff: TherapyEfficacies,
    tau_probe: float | None = None,
) -> StabilityReport:
    """Assemble the full linear-stability / Hopf picture for one setup.

    When R0 <= 1 only the disease-free verdict applies. Downstream
    failures (degenerate roots, singular solves) become warnings rather
    than aborting the report.
    """
    rep = StabilityReport(
        r0=basic_r0(p, eff),
        eta=combined_efficacy(eff),
        eta_c=critical_efficacy(p),
        e1_verdict=st.e1_verdict(p, eff),
    )
    if rep.r0 <= 1.0:
        return rep
    try:
        cc = st.char_coefficients(p, eff)
    except st.StabilityError as e:
        rep.warnings.append(str(e))
        return rep
    rh = st.routh_hurwitz_zero_delay(cc)
    rep.rh_zero_delay = bool(rh)
    rep.rh_margin = rh.margin
    try:
        oa = st.omega_analysis(cc)
    except st.StabilityError as e:
        rep.warnings.append(str(e))
        return rep
    rep.omega_roots = oa.positive_roots
    rep.omega0 = oa.omega0
    if oa.omega0 is not None:
        rep.omega0_per_hour = oa.omega0 / 24.0
    try:
        rep.tau_plus = st.delay_length_bound(cc).tau_plus
    except st.StabilityError as e:
        rep.warnings.append(str(e))
    if oa.omega0 is not None and rh:
        try:
            rep.tau_ladder = tuple(st.critical_delays(cc, oa.omega0, j_max=3))
            rep.tau0_days = rep.tau_ladder[0]
            rep.tau0_hours = rep.tau_ladder[0] * 24.0
            rep.transversality_sign = st.transversality(cc, oa.omega0)
            ed = hp.eigen_data(p, eff, oa.omega0, rep.tau0_days)
            cmc = hp.g_coefficients(ed, p, eff, oa.omega0, rep.tau0_days)
            lp = hp.lambda_prime(cc, oa.omega0, rep.tau0_days)
            rep.hopf = hp.hopf_summary(cmc, lp, oa.omega0, rep.tau0_days)
        except (st.StabilityError, ValueError, ZeroDivisionError) as e:
            rep.warnings.append(f"hopf analysis failed: {e}")
    if tau_probe is not None:
        if rep.tau0_days is None:
            rep.tau_probe_verdict = "stable" if rh else "unstable"
        else:
            rep.tau_probe_verdict = (
                "stable" if tau_probe < rep.tau0_days else "unstable"
            )
    return rep


def _write_trajectory_csv(path: Path, traj: Trajectory) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_HEADER)
        for t, row in zip(traj.times, traj.states):
            vtot = row[2] + row[3]
            log10v = math.log10(vtot) if vtot > 0 else -math.inf
            w.writerow(
                [f"{t:.10g}", f"{row[0]:.10g}", f"{row[1]:.10g}",
                 f"{row[2]:.10g}", f"{row[3]:.10g}", f"{vtot:.10g}",
                 f"{log10v:.10g}"]
            )


def run_scenario(cfg: ScenarioConfig, out_dir) -> dict:
    """Run one scenario and write its artifacts into out_dir.

    Writes trajectory.csv, summary.json and config.json (the resolved
    configuration echo). Returns the summary dict. Numerical failures
    (blow-up, step-size violations) propagate to the caller so the CLI
    can map them to its numerical-failure exit code.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    traj = integrate(
        cfg.params,
        cfg.efficacies,
        cfg.tau,
        HistorySpec(values=cfg.initial),
        IntegrationConfig(dt=cfg.dt, t_end=cfg.horizon),
    )

    rep = stability_report(cfg.params, cfg.efficacies)
    period_hint = None
    if rep.omega0 and rep.tau0_days:
        period_hint = 2.0 * math.pi / (rep.omega0)
    longrun = classify_longrun(
        traj, cfg.params, cfg.efficacies, tol=1e-2, period_hint=period_hint
    )
    svr = svr_time(traj, threshold=cfg.svr_threshold)

    summary = {
        "r0": rep.r0,
        "eta": rep.eta,
        "eta_c": rep.eta_c,
        "svr_day": svr,
        "longrun": longrun,
        "tau0_days": rep.tau0_days,
        "omega0": rep.omega0,
        "beta2": rep.hopf.beta2 if rep.hopf else None,
        "mu2": rep.hopf.mu2 if rep.hopf else None,
    }
    _write_trajectory_csv(out / "trajectory.csv", traj)
    with open(out / "summary.json", "w") as f:
        json.dump(summary, f, indent=2)
        f.write("\n")
    with open(out / "config.json", "w") as f:
        f.write(cfg.emit())
    return summary


@dataclass(frozen=True)
class FitReport:
    """Goodness of fit of a model trajectory against one patient series."""

    patient_id: str
    rmse: float
    max_abs_error: float
    residuals: tuple[tuple[float, float, float, float], ...]  # (t, model, obs, resid)
    skipped: int


def compare_patient(traj: Trajectory, series: PatientSeries) -> FitReport:
    """RMSE and max |error| of log10 total viral load at the series times.

    Points outside the trajectory span are skipped (counted, not fatal).
    """
    resids = []
    skipped = 0
    t_lo, t_hi = traj.times[0], traj.times[-1]
    for t, obs in series.points:
        if t < t_lo or t > t_hi:
            skipped += 1
            continue
        v = interpolate(traj, t).total_virions
        model = math.log10(v) if v > 0 else -math.inf
        resids.append((t, model, obs, model - obs))
    if not resids:
        return FitReport(series.patient_id, math.nan, math.nan, (), skipped)
    errs = np.array([r[3] for r in resids])
    return FitReport(
        patient_id=series.patient_id,
        rmse=float(np.sqrt(np.mean(errs**2))),
        max_abs_error=float(np.max(np.abs(errs))),
        residuals=tuple(resids),
        skipped=skipped,
    )
