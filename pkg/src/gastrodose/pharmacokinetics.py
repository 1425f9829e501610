"""Dose schedules and one-compartment PPI blood concentration."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCHEDULE_COLUMNS = ("day", "slot", "time_h", "dose_mg")


@dataclass(frozen=True, order=True)
class DoseEvent:
    time: float
    amount: float
    day: int = 1
    slot: int = 1

    def __post_init__(self):
        if not math.isfinite(self.time) or self.time < 0:
            raise ValueError(f"dose time must be finite and >= 0, got {self.time}")
        if not math.isfinite(self.amount) or self.amount < 0:
            raise ValueError(f"dose amount must be finite and >= 0, got {self.amount}")
        if self.day < 1 or self.slot < 1:
            raise ValueError("day and slot indices start at 1")


@dataclass(frozen=True)
class DoseSchedule:
    """Immutable, time-ordered sequence of dose events."""

    events: tuple = field(default_factory=tuple)

    def __post_init__(self):
        events = tuple(self.events)
        for prev, nxt in zip(events, events[1:]):
            if not nxt.time > prev.time:
                raise ValueError(
                    f"dose times must be strictly increasing ({prev.time} then {nxt.time})"
                )
        object.__setattr__(self, "events", events)

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def __getitem__(self, i):
        return self.events[i]

    @property
    def times(self) -> np.ndarray:
        return np.array([e.time for e in self.events], dtype=float)

    @property
    def amounts(self) -> np.ndarray:
        return np.array([e.amount for e in self.events], dtype=float)

    def append(self, event: DoseEvent) -> "DoseSchedule":
        return DoseSchedule(self.events + (event,))

    def merge(self, other: "DoseSchedule") -> "DoseSchedule":
        return DoseSchedule(tuple(sorted(self.events + other.events)))

    def before(self, t: float) -> "DoseSchedule":
        """Events at or before ``t``."""
        return DoseSchedule(tuple(e for e in self.events if e.time <= t))

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SCHEDULE_COLUMNS)
        for e in self.events:
            w.writerow([e.day, e.slot, repr(e.time), repr(e.amount)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "DoseSchedule":
        """Parse CSV text or a path to a CSV file."""
        if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
            source = Path(source).read_text()
        reader = csv.DictReader(io.StringIO(source))
        if tuple(reader.fieldnames or ()) != SCHEDULE_COLUMNS:
            raise ValueError(f"expected columns {','.join(SCHEDULE_COLUMNS)}")
        return cls(tuple(
            DoseEvent(time=float(r["time_h"]), amount=float(r["dose_mg"]),
                      day=int(r["day"]), slot=int(r["slot"]))
            for r in reader
        ))


def ppi_concentration(t: float, schedule: DoseSchedule, params) -> float:
    """PPI blood level in mmol/L at time ``t`` (hours).

    Only doses with ``t_ij <= t`` contribute; a dose taken at ``t`` is already
    included, so the value at the dose time is the right limit.
    """
    scale = 1.0 / (params.V * params.m)
    total = 0.0
    for e in schedule.events:
        if e.time > t:
            break
        total += e.amount * scale * math.exp(-params.K_el * (t - e.time))
    return total


def ppi_concentration_array(t, schedule: DoseSchedule, params) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    scale = 1.0 / (params.V * params.m)
    for e in schedule.events:
        active = t >= e.time
        out = out + np.where(active, e.amount * scale * np.exp(-params.K_el * np.where(active, t - e.time, 0.0)), 0.0)
    return out


def total_intake(schedule: DoseSchedule) -> float:
    return float(math.fsum(e.amount for e in schedule.events))


class PPIInput:
    """Fast evaluator of the PPI level on one inter-dose segment.

    Within a segment that starts at ``t0`` (a dose time or the simulation start)
    and contains no further dose, the level decays as ``c0 * exp(-K_el (t - t0))``.
    """

    def __init__(self, schedule: DoseSchedule, params, t0: float):
        self.t0 = t0
        self.k_el = params.K_el
        self.c0 = ppi_concentration(t0, schedule, params)

    def __call__(self, t: float) -> float:
        if self.c0 == 0.0:
            return 0.0
        return self.c0 * math.exp(-self.k_el * (t - self.t0))
