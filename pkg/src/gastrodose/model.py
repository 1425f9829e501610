"""Gastric acid secretion model: state, parameters, food forcing and the ODE right-hand side.

Time is in hours, concentrations in molar, neural activity and food level are
dimensionless. The PPI blood level enters as an exogenous input in mmol/L.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ModelDomainError, ParameterError

STATE_NAMES = (
    "gtn_a", "gtn_c", "s_a", "s_c", "h_c", "a_c", "a_a", "b_c", "b_a", "n_c", "n_e", "pp_n",
)
# Column labels used in trace exports, index-aligned with STATE_NAMES.
STATE_LABELS = (
    "Gtn_A", "Gtn_C", "S_A", "S_C", "H_C", "A_C", "A_A", "B_C", "B_A", "N_C", "N_E", "PP_n",
)
N_STATES = len(STATE_NAMES)
IDX = {name: i for i, name in enumerate(STATE_NAMES)}


@dataclass(frozen=True)
class GastricState:
    gtn_a: float = 0.0
    gtn_c: float = 0.0
    s_a: float = 0.0
    s_c: float = 0.0
    h_c: float = 0.0
    a_c: float = 0.0
    a_a: float = 0.0
    b_c: float = 0.0
    b_a: float = 0.0
    n_c: float = 0.0
    n_e: float = 0.0
    pp_n: float = 1.0

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in STATE_NAMES], dtype=float)

    @classmethod
    def from_array(cls, y) -> "GastricState":
        y = np.asarray(y, dtype=float)
        if y.shape != (N_STATES,):
            raise ValueError(f"expected {N_STATES} state components, got shape {y.shape}")
        return cls(*(float(v) for v in y))

    def is_admissible(self, slack: float = 0.0) -> bool:
        y = self.to_array()
        return bool(np.all(y >= -slack) and self.pp_n <= 1.0 + slack)


@dataclass(frozen=True)
class ModelParams:
    """All constants of the secretion model plus the one-compartment PK constants.

    Field names follow the usual notation with Greek letters spelled out
    (``alpha_NG1`` for the gastrin Michaelis constant of ENS stimulation, and so on).
    Values must be finite and non-negative; :meth:`validate` enforces the
    stricter positivity required of a usable parameter set.
    """

    # cell counts
    N_G: float
    N_E: float
    N_DA: float
    N_DC: float
    N_P: float
    # maximal secretion rates per cell
    K_NG1: float
    K_NG2: float
    K_FG: float
    K_AS: float
    K_NS1: float
    K_GS: float
    K_NS2: float
    K_NH: float
    K_GH: float
    K_HA: float
    K_NA: float
    K_GA: float
    # Michaelis constants
    alpha_NG1: float
    alpha_NG2: float
    alpha_FD: float
    alpha_AS: float
    alpha_NS1: float
    alpha_GS: float
    alpha_NS2: float
    alpha_NH: float
    alpha_GH: float
    alpha_HA: float
    alpha_NA: float
    alpha_H: float
    alpha_NB: float
    alpha_GA: float
    # dissociation constants
    k_SG: float
    k_AG: float
    k_SS: float
    k_NS: float
    k_SH: float
    k_SA: float
    # degradation, transport and washout
    k_G: float
    beta_G: float
    k_S: float
    k_H: float
    beta_A: float
    k_A: float
    k_B: float
    k_bc: float
    k_ba: float
    hb: float
    # neural stimuli
    N_1: float
    N_2: float
    k1_Fd: float
    k2_Fd: float
    k_AN1: float
    k_AN2: float
    k_NC: float
    k_NE: float
    Bas_1: float
    Bas_2: float
    # proton pump
    K_deg: float
    K_r: float
    # pharmacokinetics
    V: float
    m: float
    K_el: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ParameterError(f"{f.name}: expected a number, got {v!r}")
            if not math.isfinite(v) or v < 0:
                raise ParameterError(f"{f.name}: must be finite and >= 0, got {v!r}")
            object.__setattr__(self, f.name, float(v))

    def validate(self) -> "ModelParams":
        bad = [f.name for f in fields(self) if not getattr(self, f.name) > 0]
        if bad:
            raise ParameterError("non-positive parameters: " + ", ".join(bad))
        return self

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def scaled(self, factors: dict) -> "ModelParams":
        return self.replace(**{k: getattr(self, k) * v for k, v in factors.items()})

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        """Build and validate from a flat mapping; Greek-letter keys are accepted."""
        names = [f.name for f in fields(cls)]
        values = {}
        problems = []
        for key, value in data.items():
            name = _canonical_key(key)
            if name not in names:
                problems.append(f"unknown parameter {key!r}")
            elif name in values:
                problems.append(f"duplicate parameter {key!r}")
            else:
                values[name] = value
        missing = [n for n in names if n not in values]
        if missing:
            problems.append("missing parameters: " + ", ".join(missing))
        for name, value in values.items():
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                problems.append(f"{name}: expected a number, got {value!r}")
            elif not value > 0 or not math.isfinite(value):
                problems.append(f"{name}: must be finite and > 0, got {value!r}")
        if problems:
            raise ParameterError("; ".join(problems))
        return cls(**values).validate()


def _canonical_key(key: str) -> str:
    return key.replace("α", "alpha").replace("β", "beta")


def load_params(path=None) -> ModelParams:
    """Read a flat JSON parameter file. Without a path the shipped defaults are used."""
    if path is None:
        text = resources.files("gastrodose.data").joinpath("default_params.json").read_text()
        source = "default_params.json"
    else:
        text = Path(path).read_text()
        source = str(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ParameterError(f"{source}: expected a flat key-value object")
    data = {k: v for k, v in data.items() if not k.startswith("_")}
    try:
        return ModelParams.from_dict(data)
    except ParameterError as exc:
        raise ParameterError(f"{source}: {exc}") from None


def default_params() -> ModelParams:
    return load_params()


def save_params(params: ModelParams, path) -> None:
    Path(path).write_text(json.dumps(params.to_dict(), indent=2) + "\n")


@dataclass(frozen=True)
class FoodProfile:
    """Three daily meals, each a tanh-gated exponentially decaying pulse."""

    offsets: tuple = (7.0, 13.0, 19.0)
    amplitudes: tuple = (0.4, 1.0, 1.6)
    steepness: float = math.pi
    decay: float = 3.5
    period: float = 24.0

    def __post_init__(self):
        if len(self.offsets) != len(self.amplitudes):
            raise ValueError("offsets and amplitudes must have equal length")
        if any(a < 0 for a in self.amplitudes):
            raise ValueError("meal amplitudes must be non-negative")
        if self.period <= 0:
            raise ValueError("period must be positive")
        object.__setattr__(self, "offsets", tuple(float(x) for x in self.offsets))
        object.__setattr__(self, "amplitudes", tuple(float(x) for x in self.amplitudes))

    @classmethod
    def none(cls) -> "FoodProfile":
        """Fasting profile, Fd(t) = 0."""
        return cls(offsets=(), amplitudes=())


def food_intake(t: float, profile: FoodProfile | None = None, day_start: float | None = None) -> float:
    """Food level Fd(t); the day counter resets at every multiple of the period.

    Passing ``day_start`` pins the day counter, which lets an integrator
    evaluate one day's smooth branch up to and including the midnight knot.
    """
    if profile is None:
        profile = FoodProfile()
    if day_start is None:
        day_start = profile.period * math.floor(t / profile.period)
    total = 0.0
    for offset, amp in zip(profile.offsets, profile.amplitudes):
        dt = t - (day_start + offset)
        total += amp * (1.0 + math.tanh(profile.steepness * dt)) * math.exp(
            -0.5 * (1.0 + profile.decay * dt)
        )
    return total


def food_intake_array(t, profile: FoodProfile | None = None) -> np.ndarray:
    if profile is None:
        profile = FoodProfile()
    t = np.asarray(t, dtype=float)
    day_start = profile.period * np.floor(t / profile.period)
    total = np.zeros_like(t)
    for offset, amp in zip(profile.offsets, profile.amplitudes):
        dt = t - (day_start + offset)
        total = total + amp * (1.0 + np.tanh(profile.steepness * dt)) * np.exp(
            -0.5 * (1.0 + profile.decay * dt)
        )
    return total


def rhs(y, fd: float, ppi: float, p: ModelParams) -> list:
    """Right-hand side on a plain 12-sequence, with food level and PPI level already evaluated."""
    gtn_a, gtn_c, s_a, s_c, h_c, a_c, a_a, b_c, b_a, n_c, n_e, pp_n = (float(v) for v in y)
    fd = float(fd)
    try:
        a2 = a_c * a_c
        acid_gate_g = 1.0 + a2 / (a2 + p.k_AG * p.k_AG)
        som_gate_g = 1.0 + s_a / p.k_SG
        g_inh = som_gate_g * acid_gate_g
        d_gtn_a = (
            p.N_G * p.K_NG1 * n_e / ((n_e + p.alpha_NG1) * g_inh)
            + p.N_G * p.K_NG2 * n_c / ((n_c + p.alpha_NG2) * g_inh)
            + p.N_G * p.K_FG * fd / ((fd + p.alpha_FD) * g_inh)
            - (p.k_G + p.beta_G) * gtn_a
        )
        d_gtn_c = p.beta_G * gtn_a - p.k_G * gtn_c

        cns_gate = 1.0 + n_c / p.k_NS
        sa_inh = (1.0 + s_a / p.k_SS) * cns_gate
        d_s_a = (
            p.N_DA * p.K_AS * a_a / ((a_a + p.alpha_AS) * sa_inh)
            + p.N_DA * p.K_NS1 * n_e / ((n_e + p.alpha_NS1) * sa_inh)
            - p.k_S * s_a
        )
        sc_inh = (1.0 + s_c / p.k_SS) * cns_gate
        d_s_c = (
            p.N_DC * p.K_GS * gtn_c / ((gtn_c + p.alpha_GS) * sc_inh)
            + p.N_DC * p.K_NS2 * n_e / ((n_e + p.alpha_NS2) * sc_inh)
            - p.k_S * s_c
        )

        h_inh = 1.0 + s_c / p.k_SH
        d_h_c = (
            p.N_E * p.K_NH * n_e / ((n_e + p.alpha_NH) * h_inh)
            + p.N_E * p.K_GH * gtn_c / ((gtn_c + p.alpha_GH) * h_inh)
            - p.k_H * h_c
        )

        pc_inh = 1.0 + s_c / p.k_SA
        potentiation = h_c / (h_c + p.alpha_H)
        secretion = pp_n * p.N_P * (
            p.K_HA * h_c / ((h_c + p.alpha_HA) * pc_inh)
            + p.K_NA * n_c / ((n_c + p.alpha_NA) * pc_inh)
            + potentiation * p.K_GA * gtn_c / ((gtn_c + p.alpha_GA) * pc_inh)
        )
        d_a_c = secretion - p.hb * a_c * b_c - p.beta_A * a_c
        d_a_a = p.beta_A * a_c - p.k_A * a_a

        d_pp_n = p.K_deg - p.K_r * ppi * pp_n - p.K_deg * pp_n

        nb = p.alpha_NB
        d_b_c = p.k_bc * n_c / (n_c + nb) - p.hb * a_c * b_c - p.k_B * b_c
        d_b_a = p.k_ba * n_c / (n_c + nb) - p.hb * a_a * b_a - p.k_B * b_a

        d_n_c = (
            p.N_1 * fd / ((fd + p.k1_Fd) * (1.0 + a2 / (a2 + p.k_AN1 * p.k_AN1)))
            - p.k_NC * n_c + p.Bas_1
        )
        d_n_e = (
            p.N_2 * fd / ((fd + p.k2_Fd) * (1.0 + a2 / (a2 + p.k_AN2 * p.k_AN2)))
            - p.k_NE * n_e + p.Bas_2
        )
    except ZeroDivisionError:
        raise ModelDomainError(
            "vanishing denominator: a Michaelis or dissociation constant is zero "
            "where its stimulator is also zero"
        ) from None
    return [d_gtn_a, d_gtn_c, d_s_a, d_s_c, d_h_c, d_a_c, d_a_a, d_b_c, d_b_a, d_n_c, d_n_e, d_pp_n]


def derivative(state, t: float, params: ModelParams, ppi_level: float = 0.0,
               profile: FoodProfile | None = None) -> np.ndarray:
    """Time derivative of the 12 states at time ``t`` (units per hour).

    ``state`` may be a :class:`GastricState` or any 12-sequence in
    ``STATE_NAMES`` order.
    """
    if isinstance(state, GastricState):
        state = state.to_array()
    if ppi_level < 0:
        raise ValueError("ppi_level must be non-negative")
    return np.array(rhs(state, food_intake(t, profile), ppi_level, params))


def cold_start(params: ModelParams) -> GastricState:
    """Empty stomach, all pumps active, neural activity at its basal equilibrium."""
    return GastricState(n_c=params.Bas_1 / params.k_NC, n_e=params.Bas_2 / params.k_NE, pp_n=1.0)
