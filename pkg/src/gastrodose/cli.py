"""Command-line front end: ``gastrodose <scenario> --config FILE --out DIR``."""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

from .config import SCENARIOS, ScenarioConfig, load_config
from .errors import ConfigError, InfeasibleError, NumericalError
from .integrator import run_in, simulate
from .pharmacokinetics import DoseSchedule
from .report import ComparisonReport, emit_report, table_csv
from .scheduler import (
    dose_table, fixed_regimen, min_fixed_dose, run_treatment, simulate_regimen, sweep_severity,
)

log = logging.getLogger("gastrodose")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4
EXIT_IO = 5


def _write(path: Path, text: str, written: list):
    path.write_text(text)
    written.append(path)


def _baseline(cfg: ScenarioConfig, params, out: Path, written: list):
    tr = cfg.treatment
    state = run_in(params, None, tr.run_in_days, cfg.integrator)
    trace = simulate(state, 0.0, 24.0 * cfg.baseline_days, DoseSchedule(), params, None, cfg.integrator)
    _write(out / "baseline_trace.csv", trace.to_csv(), written)


def _optimize(cfg, params, out, written, initial=None):
    res = run_treatment(params, None, cfg.treatment, cfg.integrator, initial=initial)
    _write(out / "optimized_trace.csv", res.trace.to_csv(), written)
    _write(out / "optimization_log.csv", res.log_csv(), written)
    _write(out / "optimized_schedule.csv", res.schedule.to_csv(), written)
    return res


def _fixed(cfg, params, out, written, initial=None):
    tr = cfg.treatment
    if initial is None:
        initial = run_in(params, None, tr.run_in_days, cfg.integrator)
    dose = cfg.fixed_dose
    if dose is None:
        dose = min_fixed_dose(params, None, tr, cfg.integrator, initial=initial)
    schedule = fixed_regimen(dose, tr)
    trace = simulate_regimen(schedule, params, None, tr, cfg.integrator, initial=initial)
    _write(out / "fixed_trace.csv", trace.to_csv(), written)
    _write(out / "fixed_schedule.csv", schedule.to_csv(), written)
    return dose, schedule, trace


def _compare(cfg, params, out, written):
    tr = cfg.treatment
    initial = run_in(params, None, tr.run_in_days, cfg.integrator)
    res = _optimize(cfg, params, out, written, initial)
    dose, schedule, trace = _fixed(cfg, params, out, written, initial)
    n = len(tr.slot_times)
    report = ComparisonReport(
        optimized_total=res.total_intake,
        fixed_total=sum(e.amount for e in schedule),
        fixed_dose=dose,
        optimized_table=dose_table(res.schedule, n),
        fixed_table=dose_table(schedule, n),
        optimized_max_acid=res.trace.peak_acid(include_steps=False),
        fixed_max_acid=trace.peak_acid(include_steps=False),
        acid_max=tr.acid_max,
    )
    written += emit_report(report, out)
    return report


def _sweep(cfg, params, out, written):
    entries = sweep_severity(cfg.k_ag, params, cfg.treatment, cfg.integrator,
                             max_workers=cfg.workers)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k_AG", "total_intake_mg", "max_AC_M", "status"])
    for e in entries:
        if e.ok:
            _write(out / f"dose_table_kAG_{e.k_AG:g}.csv", table_csv(e.dose_table), written)
            w.writerow([f"{e.k_AG:g}", f"{e.result.total_intake:.4f}",
                        f"{e.result.trace.peak_acid(include_steps=False):.6f}", "ok"])
        else:
            w.writerow([f"{e.k_AG:g}", "", "", e.error])
    _write(out / "sweep_summary.csv", buf.getvalue(), written)
    return entries


RUNNERS = {
    "baseline": _baseline,
    "optimize": _optimize,
    "fixed": _fixed,
    "compare": _compare,
    "sweep": _sweep,
}


def run_scenario(cfg: ScenarioConfig):
    """Execute one scenario; returns ``(exit_status, written_paths)``."""
    written = []
    try:
        params = cfg.load_params()
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        result = RUNNERS[cfg.scenario](cfg, params, out, written)
        if cfg.scenario == "sweep" and not all(e.ok for e in result):
            return EXIT_INFEASIBLE, written
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG, written
    except InfeasibleError as exc:
        log.error("infeasible: %s", exc)
        return EXIT_INFEASIBLE, written
    except NumericalError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL, written
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO, written
    return EXIT_OK, written


def _kag_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gastrodose",
        description="Gastric acid simulation and PPI dose scheduling scenarios.",
    )
    ap.add_argument("scenario", choices=SCENARIOS)
    ap.add_argument("--config", type=Path, help="scenario YAML file (defaults are used if omitted)")
    ap.add_argument("--out", type=Path, help="output directory")
    ap.add_argument("--days", type=int, help="treatment days")
    ap.add_argument("--acid-max", type=float, help="corpal acid ceiling [M]")
    ap.add_argument("--dose-max", type=float, help="largest single dose [mg]")
    ap.add_argument("--delta", type=float, help="bisection tolerance [mg]")
    ap.add_argument("--fixed-dose", type=float, help="fixed regimen dose [mg] (skips the search)")
    ap.add_argument("--kag", type=_kag_list, help="comma-separated k_AG values for the sweep")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else ScenarioConfig()
        cfg = cfg.with_overrides(
            scenario=args.scenario, out=args.out, days=args.days, acid_max=args.acid_max,
            dose_max=args.dose_max, delta=args.delta, fixed_dose=args.fixed_dose, k_ag=args.kag,
        )
    except ConfigError as exc:
        print(f"gastrodose: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    status, written = run_scenario(cfg)
    for path in written:
        print(path)
    return status


if __name__ == "__main__":
    sys.exit(main())
