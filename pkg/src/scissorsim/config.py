"""Experiment configuration: a flat JSON document validated against a fixed schema."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .amplifier import AmplifierParams, default_phase_grid
from .detection import DetectorModel
from .source import SpdcSource

EXPERIMENTS = ("gain-sweep", "hom-dip", "fringe-scan", "phase-average", "amplifier-single")
OUTPUTS = ("csv", "json")
DETECTOR_KINDS = ("ideal_pnr", "threshold")


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("\n".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class Field:
    kind: str  # "float", "int", "str", "grid"
    default: Any
    check: Optional[Callable[[Any], Optional[str]]] = None
    choices: tuple = ()


def _between(lo, hi, *, open_hi=False):
    def check(v):
        if v < lo or v > hi or (open_hi and v == hi):
            bracket = ")" if open_hi else "]"
            return f"value {v} out of range [{lo}, {hi}{bracket}"
        return None

    return check


def _grid_between(lo, hi):
    def check(values):
        bad = [v for v in values if v < lo or v > hi]
        if bad:
            return f"grid value {bad[0]} out of range [{lo}, {hi}]"
        return None

    return check


def _positive(v):
    return None if v > 0 else f"value {v} must be positive"


def _non_negative(v):
    return None if v >= 0 else f"value {v} must be non-negative"


def _at_least_one(v):
    return None if v >= 1 else f"value {v} must be at least 1"


_ratio = _between(0.0, 1.0)

SCHEMA: dict[str, Field] = {
    "experiment": Field("str", None, choices=EXPERIMENTS),
    "output": Field("str", "csv", choices=OUTPUTS),
    "seed": Field("int", 0),
    "t": Field("float", 0.5, _ratio),
    "alpha_sq": Field("float", 0.5, _ratio),
    "vbs2_t": Field("float", None, _ratio),
    "loss_in": Field("float", 1.0, _ratio),
    "loss_aux": Field("float", 1.0, _ratio),
    "loss_out": Field("float", 1.0, _ratio),
    "phi": Field("float", 0.0),
    "herald_kind": Field("str", "ideal_pnr", choices=DETECTOR_KINDS),
    "herald_efficiency": Field("float", 1.0, _ratio),
    "herald_dark_count": Field("float", 0.0, _between(0.0, 1.0, open_hi=True)),
    "coincidence_kind": Field("str", "threshold", choices=DETECTOR_KINDS),
    "coincidence_efficiency": Field("float", 1.0, _ratio),
    "coincidence_dark_count": Field("float", 0.0, _between(0.0, 1.0, open_hi=True)),
    "source": Field("str", "single-pair", choices=("single-pair", "spdc")),
    "squeezing": Field("float", 0.1, _non_negative),
    "overlap": Field("float", 1.0, _ratio),
    "delay_width": Field("float", 1.0, _positive),
    "gain_estimator": Field("str", "state", choices=("state", "counts")),
    "average_points": Field("int", 64, _at_least_one),
    "t_grid": Field("grid", [round(0.5 + 0.04 * i, 2) for i in range(12)] + [0.98], _grid_between(0.0, 1.0)),
    "phase_grid": Field("grid", [float(x) for x in default_phase_grid()]),
    "delay_grid": Field("grid", [round(-3.0 + 0.1 * i, 1) for i in range(61)]),
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: AmplifierParams
    spdc: Optional[SpdcSource]
    t_grid: tuple[float, ...]
    phase_grid: tuple[float, ...]
    delay_grid: tuple[float, ...]
    output: str = "csv"
    seed: int = 0
    delay_width: float = 1.0
    squeezing: float = 0.1
    overlap: float = 1.0
    gain_estimator: str = "state"
    average_points: int = 64
    values: dict = field(default_factory=dict, repr=False)


def _line_of(text: str, key: str) -> Optional[int]:
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    if m is None:
        return None
    return text.count("\n", 0, m.start()) + 1


def _coerce(key: str, fld: Field, value: Any):
    """Return ``(value, error)``."""
    if fld.kind == "grid":
        if isinstance(value, str):
            try:
                value = [float(x) for x in value.split(",") if x.strip()]
            except ValueError:
                return None, f"expected a list of numbers, got {value!r}"
        if not isinstance(value, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            return None, "expected a list of numbers"
        value = [float(v) for v in value]
        if not value:
            return None, "grid must be non-empty"
        if not all(math.isfinite(v) for v in value):
            return None, "grid values must be finite"
        return value, None
    if fld.kind == "float":
        if value is None and fld.default is None:
            return None, None
        if isinstance(value, str):
            try:
                value = float(value)
            except ValueError:
                return None, f"expected a number, got {value!r}"
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            return None, f"expected a finite number, got {value!r}"
        return float(value), None
    if fld.kind == "int":
        if isinstance(value, str):
            try:
                value = int(value)
            except ValueError:
                return None, f"expected an integer, got {value!r}"
        if isinstance(value, bool) or not isinstance(value, int):
            return None, f"expected an integer, got {value!r}"
        return value, None
    if not isinstance(value, str):
        return None, f"expected a string, got {value!r}"
    if fld.choices and value not in fld.choices:
        return None, f"must be one of {', '.join(fld.choices)}; got {value!r}"
    return value, None


def check_values(raw: dict, text: str = "", source: str = "<config>", overrides: dict | None = None) -> tuple[dict, list[str]]:
    """Validate raw key/value pairs; return the completed values and every error found."""
    errors: list[str] = []
    overrides = overrides or {}

    def where(key):
        if key in overrides:
            return "<command line>"
        line = _line_of(text, key) if text else None
        return f"{source}:{line}" if line else source

    merged = dict(raw)
    merged.update(overrides)
    values: dict[str, Any] = {}
    for key in merged:
        if key not in SCHEMA:
            errors.append(f"{where(key)}: {key}: unknown key")
    for key, fld in SCHEMA.items():
        if key not in merged:
            if fld.default is None and key == "experiment":
                errors.append(f"{source}: experiment: required key missing")
            values[key] = fld.default
            continue
        value, err = _coerce(key, fld, merged[key])
        if err is None and value is not None and fld.check is not None:
            err = fld.check(value)
        if err:
            errors.append(f"{where(key)}: {key}: {err}")
        values[key] = value
    if not errors and values["vbs2_t"] is not None and abs(values["vbs2_t"] - (1 - values["alpha_sq"])) > 1e-12:
        errors.append(f"{where('vbs2_t')}: vbs2_t: must equal 1 - alpha_sq = {1 - values['alpha_sq']}")
    return values, errors


def parse_text(text: str, source: str = "<config>") -> tuple[dict, list[str]]:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        return {}, [f"{source}:{exc.lineno}: invalid JSON: {exc.msg}"]
    if not isinstance(raw, dict):
        return {}, [f"{source}:1: config must be a JSON object"]
    return raw, []


def validate(text: str, source: str = "<config>") -> list[str]:
    """Every schema violation in ``text``; an empty list means the config is valid."""
    raw, errors = parse_text(text, source)
    if errors:
        return errors
    return check_values(raw, text, source)[1]


def build_config(values: dict) -> ExperimentConfig:
    params = AmplifierParams(
        t=values["t"],
        alpha_sq=values["alpha_sq"],
        vbs2_t=values["vbs2_t"],
        loss_in=values["loss_in"],
        loss_aux=values["loss_aux"],
        loss_out=values["loss_out"],
        herald_detector=DetectorModel(values["herald_kind"], values["herald_efficiency"], values["herald_dark_count"]),
        coincidence_detector=DetectorModel(
            values["coincidence_kind"], values["coincidence_efficiency"], values["coincidence_dark_count"]
        ),
        phi=values["phi"],
    )
    spdc = SpdcSource(values["squeezing"], values["overlap"]) if values["source"] == "spdc" else None
    return ExperimentConfig(
        experiment=values["experiment"],
        params=params,
        spdc=spdc,
        t_grid=tuple(values["t_grid"]),
        phase_grid=tuple(values["phase_grid"]),
        delay_grid=tuple(values["delay_grid"]),
        output=values["output"],
        seed=values["seed"],
        delay_width=values["delay_width"],
        squeezing=values["squeezing"],
        overlap=values["overlap"],
        gain_estimator=values["gain_estimator"],
        average_points=values["average_points"],
        values=values,
    )


def load_config(text: str, source: str = "<config>", overrides: dict | None = None) -> ExperimentConfig:
    raw, errors = parse_text(text, source)
    if not errors:
        values, errors = check_values(raw, text, source, overrides)
    if errors:
        raise ConfigError(errors)
    return build_config(values)
