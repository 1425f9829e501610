"""Scenario configuration files (YAML) and their validation."""
from __future__ import annotations

import difflib
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

from .errors import ConfigError
from .integrator import IntegratorConfig
from .model import ModelParams, load_params
from .scheduler import TreatmentConfig

SCENARIOS = ("baseline", "optimize", "fixed", "compare", "sweep")
TOP_KEYS = ("scenario", "params", "out", "treatment", "integrator", "fixed_dose", "k_ag",
            "baseline_days", "workers")
TREATMENT_KEYS = tuple(f.name for f in fields(TreatmentConfig))
INTEGRATOR_KEYS = tuple(f.name for f in fields(IntegratorConfig))


@dataclass
class ScenarioConfig:
    scenario: str = "compare"
    params_path: Path | None = None
    out: Path = Path("out")
    treatment: TreatmentConfig = field(default_factory=TreatmentConfig)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    fixed_dose: float | None = None
    k_ag: tuple = (15e-3, 25e-3, 35e-3)
    baseline_days: int = 3
    workers: int = 1
    source: str | None = None

    def load_params(self) -> ModelParams:
        return load_params(self.params_path)

    def with_overrides(self, **overrides) -> "ScenarioConfig":
        """Apply CLI-style overrides, validating each one; ``None`` means keep."""
        problems = []
        tr = {}
        mapping = {"days": "treatment_days", "acid_max": "acid_max", "dose_max": "dose_max",
                   "delta": "delta"}
        for key, name in mapping.items():
            value = overrides.get(key)
            if value is not None:
                tr[name] = value
        cfg = self
        if tr:
            bad = _treatment_problems({**_as_dict(self.treatment), **tr})
            problems += bad
            if not bad:
                cfg = replace(cfg, treatment=replace(self.treatment, **tr))
        if overrides.get("scenario") is not None:
            if overrides["scenario"] not in SCENARIOS:
                problems.append(f"scenario: must be one of {', '.join(SCENARIOS)}")
            else:
                cfg = replace(cfg, scenario=overrides["scenario"])
        if overrides.get("out") is not None:
            cfg = replace(cfg, out=Path(overrides["out"]))
        if overrides.get("fixed_dose") is not None:
            d = overrides["fixed_dose"]
            if not 0 <= d <= cfg.treatment.dose_max:
                problems.append(f"fixed_dose: {d} outside [0, {cfg.treatment.dose_max}]")
            else:
                cfg = replace(cfg, fixed_dose=float(d))
        if overrides.get("k_ag") is not None:
            vals = tuple(overrides["k_ag"])
            if not vals or any(not v > 0 for v in vals):
                problems.append("k_ag: values must be > 0")
            else:
                cfg = replace(cfg, k_ag=vals)
        if problems:
            raise ConfigError("invalid overrides:\n  " + "\n  ".join(problems))
        return cfg


def _as_dict(obj) -> dict:
    return {f.name: getattr(obj, f.name) for f in fields(obj)}


def _suggest(key, valid) -> str:
    close = difflib.get_close_matches(str(key), valid, n=1, cutoff=0.4)
    return f" (did you mean {close[0]!r}?)" if close else ""


def _treatment_problems(values: dict) -> list:
    try:
        TreatmentConfig(**values)
    except (TypeError, ValueError) as exc:
        return [f"treatment: {msg}" for msg in str(exc).split("; ")]
    return []


def _read_yaml(path: Path):
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        return yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        raise ConfigError(f"{where}: parse error: {exc.problem}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from None


def _section(data, name, valid, problems, base: Path):
    if data is None:
        return {}
    if isinstance(data, str):
        # a separate YAML file holding just this section
        sub = _read_yaml((base / data).resolve())
        data = sub if sub is not None else {}
    if not isinstance(data, dict):
        problems.append(f"{name}: expected a mapping")
        return {}
    out = {}
    for k, v in data.items():
        if k not in valid:
            problems.append(f"{name}.{k}: unknown key{_suggest(k, valid)}")
        else:
            out[k] = v
    return out


def _number(value, name, problems, lo=None, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        problems.append(f"{name}: expected a number, got {value!r}")
        return None
    if integer and int(value) != value:
        problems.append(f"{name}: expected an integer, got {value!r}")
        return None
    if lo is not None and not value >= lo:
        problems.append(f"{name}: must be >= {lo}, got {value!r}")
        return None
    return int(value) if integer else float(value)


def load_config(path) -> ScenarioConfig:
    """Parse and fully validate a scenario file; every problem is reported at once."""
    path = Path(path)
    data = _read_yaml(path)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    base = path.parent
    problems = []
    for k in data:
        if k not in TOP_KEYS:
            problems.append(f"{k}: unknown key{_suggest(k, TOP_KEYS)}")

    kw = {"source": str(path)}
    scenario = data.get("scenario", "compare")
    if scenario not in SCENARIOS:
        problems.append(f"scenario: {scenario!r} is not one of {', '.join(SCENARIOS)}")
    kw["scenario"] = scenario

    if data.get("params") is not None:
        pp = (base / str(data["params"])).resolve()
        if not pp.is_file():
            problems.append(f"params: file not found: {pp}")
        else:
            try:
                load_params(pp)
            except ConfigError as exc:
                problems.append(f"params: {exc}")
        kw["params_path"] = pp
    if data.get("out") is not None:
        kw["out"] = (base / str(data["out"])).resolve()

    try:
        tr = _section(data.get("treatment"), "treatment", TREATMENT_KEYS, problems, base)
        ig = _section(data.get("integrator"), "integrator", INTEGRATOR_KEYS, problems, base)
    except ConfigError as exc:
        problems.append(str(exc))
        tr, ig = {}, {}
    if "slot_times" in tr and isinstance(tr["slot_times"], list):
        tr["slot_times"] = tuple(tr["slot_times"])
    bad = _treatment_problems(tr)
    problems += bad
    if not bad:
        kw["treatment"] = TreatmentConfig(**tr)
    try:
        kw["integrator"] = IntegratorConfig(**ig)
    except (TypeError, ValueError) as exc:
        problems.append(f"integrator: {exc}")

    if data.get("fixed_dose") is not None:
        d = _number(data["fixed_dose"], "fixed_dose", problems, lo=0.0)
        if d is not None and "treatment" in kw and d > kw["treatment"].dose_max:
            problems.append(f"fixed_dose: {d} exceeds dose_max {kw['treatment'].dose_max}")
        kw["fixed_dose"] = d
    if data.get("k_ag") is not None:
        vals = data["k_ag"] if isinstance(data["k_ag"], list) else [data["k_ag"]]
        parsed = [_number(v, "k_ag", problems) for v in vals]
        if any(v is not None and not v > 0 for v in parsed):
            problems.append("k_ag: values must be > 0")
        kw["k_ag"] = tuple(v for v in parsed if v is not None)
    if "baseline_days" in data:
        kw["baseline_days"] = _number(data["baseline_days"], "baseline_days", problems, lo=1, integer=True)
    if "workers" in data:
        kw["workers"] = _number(data["workers"], "workers", problems, lo=1, integer=True)

    if problems:
        raise ConfigError(f"{path}: invalid configuration:\n  " + "\n  ".join(problems))
    return ScenarioConfig(**kw)
