"""Command-line front end.

Subcommands: simulate, report, hopf, compare, batch. Exit codes:
0 success, 2 invalid configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .integrator import (
    BlowUpError,
    HistorySpec,
    IntegrationConfig,
    NegativeStateError,
    StepSizeError,
    integrate,
)
from .linalg import SingularSystemError
from .model import InvalidModelInput, SystemState, TherapyEfficacies
from .scenarios import (
    PatientSeries,
    ScenarioConfig,
    compare_patient,
    parse_tau,
    preset,
    run_scenario,
    stability_report,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

DEFAULT_INITIAL = (1e7, 1e7, 1e7, 1e7)


def _add_common(sub: argparse.ArgumentParser, need_run: bool) -> None:
    sub.add_argument("--config", type=Path, default=None,
                     help="JSON config file; flags override its values")
    sub.add_argument("--preset", choices=["table1", "table2"], default=None)
    sub.add_argument("--eta1", type=float, default=None)
    sub.add_argument("--etar", type=float, default=None)
    sub.add_argument("--c", type=float, default=None)
    sub.add_argument("--tau", type=str, default=None,
                     help="delay with unit suffix, e.g. 22h or 1.2d")
    sub.add_argument("--out", type=Path, default=Path("out"))
    if need_run:
        sub.add_argument("--dt", type=float, default=None,
                         help="step in days (default tau/20)")
        sub.add_argument("--horizon", type=float, default=None,
                         help="days to simulate (default 100)")
        sub.add_argument("--initial", type=float, nargs=4, default=None,
                         metavar=("T", "I", "V_I", "V_NI"))
        sub.add_argument("--svr-threshold", type=float, default=None)


def _resolve_config(args) -> ScenarioConfig:
    base = None
    if args.config is not None:
        base = ScenarioConfig.parse(args.config.read_text())

    if args.preset is not None:
        params = preset(args.preset)
    elif base is not None:
        params = base.params
    else:
        raise InvalidModelInput("either --preset or --config is required")

    def pick(flag, from_base, default=None):
        if flag is not None:
            return flag
        if from_base is not None:
            return from_base
        return default

    eta1 = pick(args.eta1, base.efficacies.eta1 if base else None)
    etar = pick(args.etar, base.efficacies.eta_r if base else None)
    c = pick(args.c, base.efficacies.c if base else None)
    if eta1 is None or etar is None or c is None:
        raise InvalidModelInput(
            "efficacies are required: give --eta1, --etar and --c "
            "(or a --config that includes them)"
        )
    tau = parse_tau(args.tau) if args.tau is not None else (
        base.tau if base else None
    )
    if tau is None:
        raise InvalidModelInput("--tau is required (e.g. --tau 22h)")

    horizon = pick(getattr(args, "horizon", None),
                   base.horizon if base else None, 100.0)
    dt = pick(getattr(args, "dt", None), base.dt if base else None)
    if dt is None:
        dt = tau / 20.0 if tau > 0 else 0.01
    init = getattr(args, "initial", None)
    if init is not None:
        initial = SystemState(*init)
    elif base is not None:
        initial = base.initial
    else:
        initial = SystemState(*DEFAULT_INITIAL)
    thr = pick(getattr(args, "svr_threshold", None),
               base.svr_threshold if base else None, 100.0)

    return ScenarioConfig(
        params=params,
        efficacies=TherapyEfficacies(eta1=eta1, eta_r=etar, c=c),
        tau=tau,
        initial=initial,
        horizon=horizon,
        dt=dt,
        svr_threshold=thr,
    )


def _cmd_simulate(args) -> int:
    cfg = _resolve_config(args)
    summary = run_scenario(cfg, args.out)
    if args.plot:
        from .plots import save_trajectory_figure

        traj = integrate(
            cfg.params, cfg.efficacies, cfg.tau,
            HistorySpec(values=cfg.initial),
            IntegrationConfig(dt=cfg.dt, t_end=cfg.horizon),
        )
        save_trajectory_figure(traj, Path(args.out) / "trajectory.png")
    json.dump(summary, sys.stdout, indent=2)
    print()
    return EXIT_OK


def _cmd_report(args) -> int:
    cfg = _resolve_config(args)
    rep = stability_report(cfg.params, cfg.efficacies, tau_probe=cfg.tau)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    d = rep.to_dict()
    with open(out / "report.json", "w") as f:
        json.dump(d, f, indent=2)
        f.write("\n")
    # delimited key/value report alongside the JSON
    with open(out / "report.csv", "w") as f:
        f.write("key,value\n")
        for k, v in d.items():
            if isinstance(v, (list, dict)):
                v = json.dumps(v).replace(",", ";")
            f.write(f"{k},{v}\n")
    from .plots import save_stability_figure

    save_stability_figure(cfg.params, cfg.efficacies, rep,
                          out / "stability.png")
    json.dump(d, sys.stdout, indent=2)
    print()
    return EXIT_OK


def _cmd_hopf(args) -> int:
    cfg = _resolve_config(args)
    rep = stability_report(cfg.params, cfg.efficacies)
    d = {
        "r0": rep.r0,
        "omega0": rep.omega0,
        "tau0_days": rep.tau0_days,
        "tau0_hours": rep.tau0_hours,
        "transversality_sign": rep.transversality_sign,
        "hopf": rep.to_dict()["hopf"],
        "warnings": rep.warnings,
    }
    json.dump(d, sys.stdout, indent=2)
    print()
    return EXIT_OK


def _cmd_compare(args) -> int:
    cfg = _resolve_config(args)
    traj = integrate(
        cfg.params, cfg.efficacies, cfg.tau,
        HistorySpec(values=cfg.initial),
        IntegrationConfig(dt=cfg.dt, t_end=cfg.horizon),
    )
    reports = []
    for path in args.patient:
        series = PatientSeries.from_csv(path)
        fit = compare_patient(traj, series)
        reports.append({
            "patient_id": fit.patient_id,
            "rmse": fit.rmse,
            "max_abs_error": fit.max_abs_error,
            "n_points": len(fit.residuals),
            "skipped": fit.skipped,
        })
    json.dump(reports, sys.stdout, indent=2)
    print()
    return EXIT_OK


def _cmd_batch(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    configs = []
    for path in args.configs:
        try:
            configs.append((path.stem, ScenarioConfig.parse(path.read_text())))
        except (InvalidModelInput, ValueError, KeyError, TypeError) as e:
            print(f"invalid config {path}: {e}", file=sys.stderr)
            return EXIT_CONFIG

    def run_one(item):
        name, cfg = item
        try:
            return name, run_scenario(cfg, out / name), None
        except (BlowUpError, NegativeStateError) as e:
            return name, None, str(e)

    failures = 0
    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        for name, summary, err in pool.map(run_one, configs):
            if err is not None:
                failures += 1
                with open(out / f"{name}.error.json", "w") as f:
                    json.dump({"run": name, "error": err}, f, indent=2)
                print(f"{name}: FAILED ({err})", file=sys.stderr)
            else:
                print(f"{name}: longrun={summary['longrun']} "
                      f"svr_day={summary['svr_day']}")
    return EXIT_NUMERICAL if failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hcvdelay",
        description="Delay-differential HCV therapy model: simulation, "
                    "stability and bifurcation reports.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one scenario, write CSV/JSON")
    _add_common(p_sim, need_run=True)
    p_sim.add_argument("--plot", action="store_true",
                       help="also render the trajectory figure")
    p_sim.set_defaults(func=_cmd_simulate)

    p_rep = sub.add_parser("report", help="full stability/bifurcation report")
    _add_common(p_rep, need_run=False)
    p_rep.set_defaults(func=_cmd_report)

    p_hopf = sub.add_parser("hopf", help="Hopf normal-form summary")
    _add_common(p_hopf, need_run=False)
    p_hopf.set_defaults(func=_cmd_hopf)

    p_cmp = sub.add_parser("compare", help="score a run against patient data")
    _add_common(p_cmp, need_run=True)
    p_cmp.add_argument("--patient", type=Path, nargs="+", required=True,
                       help="two-column CSV files (t_days, log10_vl)")
    p_cmp.set_defaults(func=_cmd_compare)

    p_bat = sub.add_parser("batch", help="run many scenario configs")
    p_bat.add_argument("--configs", type=Path, nargs="+", required=True)
    p_bat.add_argument("--out", type=Path, default=Path("out"))
    p_bat.add_argument("--workers", type=int, default=4)
    p_bat.set_defaults(func=_cmd_batch)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidModelInput, StepSizeError, FileNotFoundError,
            json.JSONDecodeError, KeyError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as e:
        diag = {"error": "blow-up", "t": e.t, "state": list(e.state)}
        out = getattr(args, "out", None)
        if out is not None:
            Path(out).mkdir(parents=True, exist_ok=True)
            with open(Path(out) / "diagnostic.json", "w") as f:
                json.dump(diag, f, indent=2)
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (NegativeStateError, SingularSystemError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
