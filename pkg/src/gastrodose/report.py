"""Regimen comparison report and CSV/text emission."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

NA = "n/a"
CONSTRAINT_TOL = 1e-4


@dataclass
class ComparisonReport:
    optimized_total: float
    fixed_total: float
    fixed_dose: float
    optimized_table: np.ndarray
    fixed_table: np.ndarray
    optimized_max_acid: float
    fixed_max_acid: float
    acid_max: float
    tol: float = CONSTRAINT_TOL

    @property
    def percent_reduction(self) -> float | None:
        if self.fixed_total <= 0:
            return None
        return 100.0 * (self.fixed_total - self.optimized_total) / self.fixed_total

    @property
    def optimized_ok(self) -> bool:
        return self.optimized_max_acid <= self.acid_max + self.tol

    @property
    def fixed_ok(self) -> bool:
        return self.fixed_max_acid <= self.acid_max + self.tol

    def reduction_text(self) -> str:
        r = self.percent_reduction
        return NA if r is None else f"{r:.1f}"


def table_csv(table: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n_slots = table.shape[1] if table.ndim == 2 else 0
    w.writerow(["day"] + [f"slot_{j + 1}_mg" for j in range(n_slots)])
    for i, row in enumerate(table):
        w.writerow([i + 1] + [f"{v:.4f}" for v in row])
    return buf.getvalue()


def summary_csv(report: ComparisonReport) -> str:
    rows = [
        ("optimized_total_mg", f"{report.optimized_total:.4f}"),
        ("fixed_total_mg", f"{report.fixed_total:.4f}"),
        ("fixed_dose_mg", f"{report.fixed_dose:.4f}"),
        ("percent_reduction", report.reduction_text()),
        ("optimized_max_AC_M", f"{report.optimized_max_acid:.6f}"),
        ("fixed_max_AC_M", f"{report.fixed_max_acid:.6f}"),
        ("acid_max_M", f"{report.acid_max:.6f}"),
        ("optimized_constraint_ok", int(report.optimized_ok)),
        ("fixed_constraint_ok", int(report.fixed_ok)),
    ]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric", "value"])
    w.writerows(rows)
    return buf.getvalue()


def summary_text(report: ComparisonReport) -> str:
    def verdict(ok):
        return "satisfied" if ok else "VIOLATED"

    r = report.reduction_text()
    lines = [
        "PPI regimen comparison",
        "======================",
        f"acid ceiling:           {report.acid_max:.4f} M",
        f"optimized total intake: {report.optimized_total:.1f} mg "
        f"(peak corpal acid {report.optimized_max_acid:.5f} M, constraint {verdict(report.optimized_ok)})",
        f"fixed total intake:     {report.fixed_total:.1f} mg at {report.fixed_dose:.1f} mg per dose "
        f"(peak corpal acid {report.fixed_max_acid:.5f} M, constraint {verdict(report.fixed_ok)})",
        f"reduction:              {r}" + ("" if r == NA else " %"),
        "",
        "optimized doses per day (mg):",
    ]
    lines += [f"  day {i + 1:2d}: " + "  ".join(f"{v:7.2f}" for v in row)
              for i, row in enumerate(report.optimized_table)]
    return "\n".join(lines) + "\n"


def emit_report(report: ComparisonReport, directory) -> list:
    """Write summary.csv, summary.txt and the two dose tables; returns the paths written."""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {directory}: {exc.strerror}") from exc
    outputs = {
        "summary.csv": summary_csv(report),
        "summary.txt": summary_text(report),
        "dose_table_optimized.csv": table_csv(report.optimized_table),
        "dose_table_fixed.csv": table_csv(report.fixed_table),
    }
    written = []
    for name, text in outputs.items():
        path = directory / name
        try:
            path.write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror}") from exc
        written.append(path)
    return written
