"""Receding-horizon dose optimisation by bisection, fixed-dose baselines and severity sweeps."""
from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import GastrodoseError, InfeasibleError, IterationLimitError
from .integrator import IntegratorConfig, SimulationTrace, run_in, simulate
from .model import FoodProfile, GastricState, ModelParams
from .pharmacokinetics import DoseEvent, DoseSchedule, total_intake

log = logging.getLogger(__name__)

LOG_COLUMNS = ("dose_time_h", "dose_mg", "iterations", "feasible", "peak_AC_horizon_M")


@dataclass(frozen=True)
class TreatmentConfig:
    treatment_days: int = 15
    slot_times: tuple = (5.0, 17.0)
    horizon: float = 12.0
    acid_max: float = 0.035
    dose_max: float = 100.0
    delta: float = 0.1
    max_iterations: int = 100
    run_in_days: int = 5
    # "raise" stops at the first infeasible dosing time; "dose_max" gives the
    # maximal dose there, flags it and carries on.
    on_infeasible: str = "raise"

    def __post_init__(self):
        object.__setattr__(self, "slot_times", tuple(float(s) for s in self.slot_times))
        errors = self.problems()
        if errors:
            raise ValueError("; ".join(errors))

    def problems(self) -> list:
        out = []
        if int(self.treatment_days) != self.treatment_days or self.treatment_days < 0:
            out.append("treatment_days must be a non-negative integer")
        if not self.slot_times:
            out.append("slot_times must not be empty")
        if any(not 0 <= s < 24 for s in self.slot_times):
            out.append("slot_times must lie in [0, 24)")
        if list(self.slot_times) != sorted(set(self.slot_times)):
            out.append("slot_times must be strictly increasing")
        if not self.horizon > 0:
            out.append("horizon must be > 0")
        if not self.acid_max > 0:
            out.append("acid_max must be > 0")
        if not self.dose_max > 0:
            out.append("dose_max must be > 0")
        if not self.delta > 0:
            out.append("delta must be > 0")
        if self.max_iterations < 1:
            out.append("max_iterations must be >= 1")
        if self.run_in_days < 1:
            out.append("run_in_days must be >= 1")
        if self.on_infeasible not in ("raise", "dose_max"):
            out.append("on_infeasible must be 'raise' or 'dose_max'")
        return out

    def dose_slots(self):
        """(day, slot, time) for every administration, day and slot counted from 1."""
        return [
            (day, j + 1, 24.0 * (day - 1) + s)
            for day in range(1, self.treatment_days + 1)
            for j, s in enumerate(self.slot_times)
        ]

    @property
    def end_time(self) -> float:
        """End of the simulated treatment span: one day, or the last horizon if later."""
        if self.treatment_days == 0:
            return 24.0
        last = self.dose_slots()[-1][2]
        return max(24.0 * self.treatment_days, last + self.horizon)


@dataclass(frozen=True)
class DoseDecision:
    time: float
    dose: float
    iterations: int
    feasible: bool
    peak_acid: float


@dataclass
class OptimizationResult:
    schedule: DoseSchedule
    decisions: list
    trace: SimulationTrace
    initial_state: GastricState

    @property
    def iterations(self):
        return [d.iterations for d in self.decisions]

    @property
    def feasible(self):
        return [d.feasible for d in self.decisions]

    @property
    def total_intake(self) -> float:
        return total_intake(self.schedule)

    def log_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(LOG_COLUMNS)
        for d in self.decisions:
            w.writerow([repr(d.time), repr(d.dose), d.iterations, int(d.feasible), repr(d.peak_acid)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def dose_table(schedule: DoseSchedule, n_slots: int) -> np.ndarray:
    """Day-by-slot matrix of doses (rows are treatment days)."""
    if not len(schedule):
        return np.zeros((0, n_slots))
    days = max(e.day for e in schedule)
    table = np.zeros((days, n_slots))
    for e in schedule:
        table[e.day - 1, e.slot - 1] = e.amount
    return table


def horizon_peak(state, t0: float, dose: float, schedule: DoseSchedule, params: ModelParams,
                 profile: FoodProfile, config: TreatmentConfig,
                 integ: IntegratorConfig | None = None) -> float:
    """Peak corpal acid over ``[t0, t0 + horizon]`` when ``dose`` is given at ``t0``.

    Only doses strictly before ``t0`` are kept from ``schedule``; a dose already
    recorded at ``t0`` is replaced by the candidate.
    """
    past = DoseSchedule(tuple(e for e in schedule.events if e.time < t0))
    trial = past.append(DoseEvent(t0, dose))
    trace = simulate(state, t0, t0 + config.horizon, trial, params, profile, integ)
    return trace.peak_acid()


def solve_dose(state, t_ij: float, schedule: DoseSchedule, params: ModelParams,
               profile: FoodProfile | None = None, config: TreatmentConfig | None = None,
               integ: IntegratorConfig | None = None) -> DoseDecision:
    """Smallest dose in ``[0, dose_max]`` (to within ``delta``) keeping acid under the ceiling.

    Bisection on the feasibility of a horizon simulation. The zero dose is
    tried first; if it fails, ``dose_max`` is checked before bisecting so the
    loop is guaranteed to terminate. The returned dose is always the
    lowest candidate that was simulated and found feasible.
    """
    profile = FoodProfile() if profile is None else profile
    config = TreatmentConfig() if config is None else config
    sims = 0

    def peak(d):
        nonlocal sims
        sims += 1
        if sims > config.max_iterations:
            raise IterationLimitError(f"bisection exceeded {config.max_iterations} simulations at t={t_ij} h")
        return horizon_peak(state, t_ij, d, schedule, params, profile, config, integ)

    p0 = peak(0.0)
    if p0 <= config.acid_max:
        return DoseDecision(t_ij, 0.0, sims, True, p0)
    p_hi = peak(config.dose_max)
    if p_hi > config.acid_max:
        if config.on_infeasible == "dose_max":
            log.warning("t=%.2f h: dose_max=%g mg leaves peak acid %.5f M", t_ij, config.dose_max, p_hi)
            return DoseDecision(t_ij, config.dose_max, sims, False, p_hi)
        raise InfeasibleError(
            f"dose_max={config.dose_max} mg cannot hold corpal acid under {config.acid_max} M "
            f"at t={t_ij} h (peak {p_hi:.5f} M)", dose_time=t_ij,
        )
    lo, hi = 0.0, config.dose_max
    while hi - lo > config.delta:
        mid = 0.5 * (lo + hi)
        p_mid = peak(mid)
        if p_mid > config.acid_max:
            lo = mid
        else:
            hi, p_hi = mid, p_mid
    return DoseDecision(t_ij, hi, sims, True, p_hi)


def optimize_dose(state, t_ij: float, accumulated_schedule: DoseSchedule, params: ModelParams,
                  profile: FoodProfile | None = None, config: TreatmentConfig | None = None,
                  integ: IntegratorConfig | None = None) -> float:
    """Minimal feasible dose at ``t_ij`` in mg; see :func:`solve_dose`."""
    return solve_dose(state, t_ij, accumulated_schedule, params, profile, config, integ).dose


def run_treatment(params: ModelParams, profile: FoodProfile | None = None,
                  config: TreatmentConfig | None = None, integ: IntegratorConfig | None = None,
                  initial: GastricState | None = None) -> OptimizationResult:
    """Alternate plant simulation and dose optimisation over the whole treatment.

    ``initial`` is the state at t = 0 (midnight before the first dose); by
    default it comes from an untreated run-in of ``config.run_in_days`` days.
    """
    profile = FoodProfile() if profile is None else profile
    config = TreatmentConfig() if config is None else config
    if initial is None:
        initial = run_in(params, profile, config.run_in_days, integ)
    state = initial
    schedule = DoseSchedule()
    decisions = []
    pieces = []
    t = 0.0
    for day, slot, t_ij in config.dose_slots():
        if t_ij > t:
            piece = simulate(state, t, t_ij, schedule, params, profile, integ)
            pieces.append(piece)
            state = piece.final_state
            t = t_ij
        try:
            decision = solve_dose(state, t_ij, schedule, params, profile, config, integ)
        except GastrodoseError as exc:
            if getattr(exc, "dose_time", None) is None:
                exc.dose_time = t_ij
            raise
        decisions.append(decision)
        schedule = schedule.append(DoseEvent(t_ij, decision.dose, day, slot))
    pieces.append(simulate(state, t, config.end_time, schedule, params, profile, integ))
    trace = pieces[0]
    for piece in pieces[1:]:
        trace = trace.concat(piece)
    return OptimizationResult(schedule, decisions, trace, initial)


def fixed_regimen(dose: float, config: TreatmentConfig | None = None) -> DoseSchedule:
    config = TreatmentConfig() if config is None else config
    if not 0 <= dose <= config.dose_max:
        raise ValueError(f"dose {dose} mg outside [0, {config.dose_max}]")
    return DoseSchedule(tuple(DoseEvent(t, float(dose), day, slot)
                              for day, slot, t in config.dose_slots()))


def simulate_regimen(schedule: DoseSchedule, params: ModelParams, profile: FoodProfile | None = None,
                     config: TreatmentConfig | None = None, integ: IntegratorConfig | None = None,
                     initial: GastricState | None = None) -> SimulationTrace:
    """Plant trace over the treatment span for a given schedule."""
    profile = FoodProfile() if profile is None else profile
    config = TreatmentConfig() if config is None else config
    if initial is None:
        initial = run_in(params, profile, config.run_in_days, integ)
    return simulate(initial, 0.0, config.end_time, schedule, params, profile, integ)


def min_fixed_dose(params: ModelParams, profile: FoodProfile | None = None,
                   config: TreatmentConfig | None = None, integ: IntegratorConfig | None = None,
                   initial: GastricState | None = None) -> float:
    """Smallest constant per-slot dose (within ``delta``) that keeps acid under the ceiling throughout."""
    profile = FoodProfile() if profile is None else profile
    config = TreatmentConfig() if config is None else config
    if initial is None:
        initial = run_in(params, profile, config.run_in_days, integ)
    sims = 0

    def feasible(d):
        nonlocal sims
        sims += 1
        if sims > config.max_iterations:
            raise IterationLimitError(f"fixed-dose bisection exceeded {config.max_iterations} simulations")
        trace = simulate_regimen(fixed_regimen(d, config), params, profile, config, integ, initial)
        return trace.peak_acid() <= config.acid_max

    if feasible(0.0):
        return 0.0
    if not feasible(config.dose_max):
        raise InfeasibleError(
            f"a fixed regimen of dose_max={config.dose_max} mg does not hold acid under {config.acid_max} M"
        )
    lo, hi = 0.0, config.dose_max
    while hi - lo > config.delta:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class SweepEntry:
    k_AG: float
    n_slots: int
    result: OptimizationResult | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.result is not None

    @property
    def dose_table(self) -> np.ndarray | None:
        if self.result is None:
            return None
        return dose_table(self.result.schedule, self.n_slots)


def sweep_severity(k_ag_values, params: ModelParams, config: TreatmentConfig | None = None,
                   integ: IntegratorConfig | None = None, profile: FoodProfile | None = None,
                   max_workers: int = 1) -> list:
    """Run-in plus optimised treatment for each k_AG value.

    Failures are recorded on the entry instead of aborting the sweep.
    """
    values = [float(v) for v in k_ag_values]
    if any(not v > 0 for v in values):
        raise ValueError("k_AG values must be > 0")
    config = TreatmentConfig() if config is None else config

    def one(v):
        try:
            res = run_treatment(params.replace(k_AG=v), profile, config, integ)
            return SweepEntry(v, len(config.slot_times), result=res)
        except GastrodoseError as exc:
            log.warning("k_AG=%g failed: %s", v, exc)
            return SweepEntry(v, len(config.slot_times), error=f"{type(exc).__name__}: {exc}")

    if max_workers > 1 and len(values) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(one, values))
    return [one(v) for v in values]
