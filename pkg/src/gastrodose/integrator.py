"""Time integration of the secretion model with dose-time segmentation."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp

from .errors import IntegrationError, InvariantViolation
from .model import (
    IDX, N_STATES, STATE_LABELS, FoodProfile, GastricState, ModelParams, cold_start,
    food_intake, food_intake_array, rhs,
)
from .pharmacokinetics import DoseSchedule, PPIInput, ppi_concentration

TRACE_COLUMNS = ("time_h",) + STATE_LABELS + ("Fd", "PPI")
INVARIANT_SLACK = 1e-9
_EPS = 1e-9


@dataclass(frozen=True)
class IntegratorConfig:
    """``method`` is ``"rk45"`` (adaptive, the default) or ``"rk4"`` (fixed step).

    For RK4 the knots are the sample grid, dose times and midnights, and each
    knot interval is covered by ``ceil(interval / step)`` equal sub-steps.
    """

    method: str = "rk45"
    step: float = 0.01
    atol: float = 1e-9
    rtol: float = 1e-7
    sample_interval: float = 0.01
    max_step: float = 0.5
    min_step: float = 1e-10

    def __post_init__(self):
        if self.method not in ("rk45", "rk4"):
            raise ValueError(f"unknown method {self.method!r}; use 'rk45' or 'rk4'")
        for name in ("step", "atol", "rtol", "sample_interval", "max_step", "min_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")


@dataclass
class SimulationTrace:
    times: np.ndarray
    states: np.ndarray  # shape (n, 12)
    fd: np.ndarray
    ppi: np.ndarray
    # Integrator step end points, kept for constraint checks between grid samples.
    step_times: np.ndarray
    step_states: np.ndarray

    def __len__(self):
        return len(self.times)

    def column(self, name: str) -> np.ndarray:
        if name in IDX:
            return self.states[:, IDX[name]]
        if name in STATE_LABELS:
            return self.states[:, STATE_LABELS.index(name)]
        raise KeyError(name)

    @property
    def final_state(self) -> GastricState:
        return GastricState.from_array(self.states[-1])

    def state_at(self, i: int) -> GastricState:
        return GastricState.from_array(self.states[i])

    def window(self, t_a: float, t_b: float) -> "SimulationTrace":
        m = (self.times >= t_a - _EPS) & (self.times <= t_b + _EPS)
        s = (self.step_times >= t_a - _EPS) & (self.step_times <= t_b + _EPS)
        return SimulationTrace(self.times[m], self.states[m], self.fd[m], self.ppi[m],
                               self.step_times[s], self.step_states[s])

    def peak_acid(self, include_steps: bool = True) -> float:
        """Largest corpal acid over grid samples and, optionally, step end points."""
        peak = float(np.max(self.states[:, IDX["a_c"]])) if len(self.times) else -math.inf
        if include_steps and len(self.step_times):
            peak = max(peak, float(np.max(self.step_states[:, IDX["a_c"]])))
        return peak

    def concat(self, other: "SimulationTrace") -> "SimulationTrace":
        """Join two traces; a shared boundary sample is kept once (from ``self``)."""
        keep = other.times > self.times[-1] + _EPS if len(self.times) else slice(None)
        keep_s = other.step_times > (self.step_times[-1] if len(self.step_times) else -math.inf) + _EPS
        return SimulationTrace(
            np.concatenate([self.times, other.times[keep]]),
            np.vstack([self.states, other.states[keep]]),
            np.concatenate([self.fd, other.fd[keep]]),
            np.concatenate([self.ppi, other.ppi[keep]]),
            np.concatenate([self.step_times, other.step_times[keep_s]]),
            np.vstack([self.step_states, other.step_states[keep_s]]),
        )

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for t, y, f, c in zip(self.times, self.states, self.fd, self.ppi):
            w.writerow([f"{t:.6f}"] + [repr(float(v)) for v in y] + [repr(float(f)), repr(float(c))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "SimulationTrace":
        if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
            source = Path(source).read_text()
        rows = list(csv.reader(io.StringIO(source)))
        if tuple(rows[0]) != TRACE_COLUMNS:
            raise ValueError("unexpected trace header")
        data = np.array(rows[1:], dtype=float).reshape(-1, len(TRACE_COLUMNS))
        states = data[:, 1:1 + N_STATES]
        return cls(data[:, 0], states, data[:, -2], data[:, -1], data[:, 0].copy(), states.copy())


def max_corpal_acid(trace: SimulationTrace, window=None) -> float:
    """Maximum sampled corpal acid over ``window = (t_a, t_b)`` (the whole trace if omitted)."""
    if window is None:
        window = (trace.times[0], trace.times[-1])
    t_a, t_b = window
    if t_a > t_b:
        raise ValueError("window start after window end")
    if len(trace.times) == 0 or t_a < trace.times[0] - _EPS or t_b > trace.times[-1] + _EPS:
        raise ValueError(f"window [{t_a}, {t_b}] is not inside the trace span")
    m = (trace.times >= t_a - _EPS) & (trace.times <= t_b + _EPS)
    if not m.any():
        raise ValueError(f"no samples in window [{t_a}, {t_b}]")
    return float(np.max(trace.states[m, IDX["a_c"]]))


def _sample_grid(t_start: float, t_end: float, dt: float) -> np.ndarray:
    n = int(math.floor((t_end - t_start) / dt + _EPS))
    grid = t_start + dt * np.arange(n + 1)
    if t_end - grid[-1] > _EPS:
        grid = np.append(grid, t_end)
    else:
        grid[-1] = t_end
    return grid


def _check_invariants(times, states, where: str):
    if not len(states):
        return
    low = states.min(axis=0)
    if low.min() < -INVARIANT_SLACK or states[:, IDX["pp_n"]].max() > 1.0 + INVARIANT_SLACK:
        bad = int(np.argmin(np.min(states, axis=1)))
        raise InvariantViolation(
            f"state left the admissible set during {where} near t={times[bad]:.4f} h"
        )


def _rk4_segment(f, t0, t1, y, h):
    n = max(1, int(math.ceil((t1 - t0) / h - _EPS)))
    dt = (t1 - t0) / n
    ts = np.empty(n)
    ys = np.empty((n, N_STATES))
    t = t0
    for i in range(n):
        k1 = f(t, y)
        k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
        k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
        k4 = f(t + dt, y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = t0 + (i + 1) * dt
        ts[i] = t
        ys[i] = y
    ts[-1] = t1
    return ts, ys


def simulate(initial, t_start: float, t_end: float, schedule: DoseSchedule | None,
             params: ModelParams, profile: FoodProfile | None = None,
             config: IntegratorConfig | None = None) -> SimulationTrace:
    """Integrate from ``t_start`` to ``t_end`` under the given dose schedule.

    Integration restarts at every dose time and every midnight strictly inside
    the interval, so neither the PPI jump nor the daily reset of the food
    profile falls inside a step. A dose at exactly ``t_start`` acts from the
    first instant.
    """
    if not t_end > t_start:
        raise ValueError("t_end must exceed t_start")
    profile = FoodProfile() if profile is None else profile
    config = IntegratorConfig() if config is None else config
    schedule = DoseSchedule() if schedule is None else schedule
    y = initial.to_array() if isinstance(initial, GastricState) else np.array(initial, dtype=float)
    _check_invariants(np.array([t_start]), y[None, :], "initial state")

    # Knots: dose times (PPI jumps) and midnights (the food profile's daily reset).
    period = profile.period
    breaks = {e.time for e in schedule.events if t_start + _EPS < e.time < t_end - _EPS}
    k = math.floor(t_start / period) + 1
    while k * period < t_end - _EPS:
        if k * period > t_start + _EPS:
            breaks.add(k * period)
        k += 1
    knots = [t_start] + sorted(breaks) + [t_end]
    grid = _sample_grid(t_start, t_end, config.sample_interval)

    times, states, step_t, step_y = [], [], [np.array([t_start])], [y[None, :]]
    for a, b in zip(knots[:-1], knots[1:]):
        ppi = PPIInput(schedule, params, a)
        day = period * math.floor((a + _EPS) / period)

        def f(t, yy, ppi=ppi, day=day):
            return rhs(yy, food_intake(t, profile, day), ppi(t), params)

        last = b == t_end
        seg_mask = (grid >= a - _EPS) & ((grid <= b + _EPS) if last else (grid < b - _EPS))
        seg_grid = grid[seg_mask]

        if config.method == "rk4":
            fa = lambda t, yy: np.array(f(t, yy))  # noqa: E731
            inner = seg_grid[(seg_grid > a + _EPS) & (seg_grid < b - _EPS)]
            sub_knots = [a] + list(inner) + [b]
            ts_all, ys_all = [np.array([a])], [y[None, :]]
            yk = y
            for c, d in zip(sub_knots[:-1], sub_knots[1:]):
                ts, ys = _rk4_segment(fa, c, d, yk, config.step)
                ts_all.append(ts)
                ys_all.append(ys)
                yk = ys[-1]
            ts_all = np.concatenate(ts_all)
            ys_all = np.vstack(ys_all)
            # Grid points are exact knots, so look them up instead of interpolating.
            idx = np.searchsorted(ts_all, seg_grid - _EPS)
            seg_states = ys_all[idx]
            y_end = yk
            step_t.append(ts_all[1:])
            step_y.append(ys_all[1:])
        else:
            sol = solve_ivp(
                f, (a, b), y, method="RK45", rtol=config.rtol, atol=config.atol,
                max_step=config.max_step, dense_output=True,
            )
            if sol.status != 0:
                raise IntegrationError(f"RK45 failed on [{a}, {b}] h: {sol.message}")
            if len(sol.t) > 1 and np.min(np.diff(sol.t)) < config.min_step:
                raise IntegrationError(
                    f"RK45 step fell below {config.min_step} h on [{a}, {b}] h"
                )
            seg_states = sol.sol(seg_grid).T if len(seg_grid) else np.empty((0, N_STATES))
            if len(seg_grid) and abs(seg_grid[0] - a) < _EPS:
                seg_states[0] = y
            y_end = sol.y[:, -1].copy()
            if last and len(seg_grid) and abs(seg_grid[-1] - b) < _EPS:
                seg_states[-1] = y_end
            step_t.append(sol.t[1:])
            step_y.append(sol.y[:, 1:].T)
        _check_invariants(step_t[-1], step_y[-1], f"[{a}, {b}] h")
        _check_invariants(seg_grid, seg_states, f"[{a}, {b}] h")
        times.append(seg_grid)
        states.append(seg_states)
        y = y_end

    times = np.concatenate(times)
    states = np.vstack(states)
    fd = food_intake_array(times, profile)
    ppi_vals = np.array([ppi_concentration(t, schedule, params) for t in times])
    return SimulationTrace(times, states, fd, ppi_vals,
                           np.concatenate(step_t), np.vstack(step_y))


def run_in(params: ModelParams, profile: FoodProfile | None = None, days: int = 5,
           config: IntegratorConfig | None = None, return_trace: bool = False):
    """Untreated simulation from the cold start over ``days`` whole days.

    Returns the state at ``24 * days`` h, which by periodicity of the food
    profile stands in for midnight of the first treatment day.
    """
    if days < 1 or int(days) != days:
        raise ValueError("days must be a positive integer")
    profile = FoodProfile() if profile is None else profile
    trace = simulate(cold_start(params), 0.0, profile.period * days, DoseSchedule(), params,
                     profile, config)
    return (trace.final_state, trace) if return_trace else trace.final_state
