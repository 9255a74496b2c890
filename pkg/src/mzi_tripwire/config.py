"""Scenario configuration documents (JSON, schema version 1).

Every physical quantity carries its unit in the key name (``_nm``, ``_ns``,
``_m``, ``_mm``, ``_per_ns``, ``_rad``). Unknown keys are errors; a key
that differs from a known one only by its unit suffix gets a hint.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .detection import DetectorModel
from .exceptions import ConfigError
from .interferometer import (
    Block,
    CrossIntrusion,
    DetectorWindow,
    InterceptResend,
    Normal,
    PerimeterGeometry,
    Scenario,
    SideIntrusion,
    TripwireModel,
)
from .monitor import AlarmConfig
from .source import SourceParams

SCHEMA_VERSION = 1

_SECTIONS: dict[str, dict[str, Any]] = {
    "source": {
        "pump_wavelength_nm": 400.0,
        "idler_bandwidth_per_ns": 10.0,
        "crystal_length_mm": 0.0,
        "group_velocity_mismatch_ns_per_mm": 0.0,
        "sinc_gaussian_factor": 0.193,
        "herald_rate_per_ns": 1.0,
        "compensate_delay": True,
    },
    "geometry": {"l_L_m": 1.0, "l_T_m": 1.0, "l_R_m": 1.0, "l_B_m": 3.0, "require_balanced": True},
    "detector": {
        "resolving_time_ns": "sqrt_beta",
        "efficiency_w1": 1.0,
        "efficiency_w2": 1.0,
        "dark_count_rate_per_ns": 0.0,
    },
    "scenario": {
        "type": "normal",
        "delta_ns": None,
        "xi_rad": None,
        "xi_wavelength_nm": None,
        "phi_int_rad": None,
        "corner": 1,
    },
    "schedule": {"mode": "fixed", "phi1_rad": None, "phi2_rad": None, "broadcast_delay_ns": 0.0},
    "run": {"n_heralds": 100_000, "duration_ns": None, "seed": 0},
    "alarm": {"nu": 0.9, "eps1": 0.1, "eps2": 0.1, "window": 1000, "p1": None, "p2": None},
    "sweep": {
        "delta_min_ns": 0.0,
        "delta_max_ns": 0.3,
        "n_delta": 61,
        "n_phi": 16,
        "grid_resolution": 4096,
    },
    "output": {"records": None, "schedule": None, "summary": None},
}

_SCENARIO_PARAMS = {
    "normal": set(),
    "block": set(),
    "intercept_resend": set(),
    "side_intrusion": {"delta_ns", "xi_rad", "xi_wavelength_nm"},
    "cross_intrusion": {"phi_int_rad", "corner"},
}
_UNIT_SUFFIXES = ("_nm", "_ns", "_m", "_mm", "_per_ns", "_rad", "_ns_per_mm", "_s", "_um", "_hz", "_deg")


def _stem(key: str) -> str:
    for suffix in sorted(_UNIT_SUFFIXES, key=len, reverse=True):
        if key.endswith(suffix):
            return key[: -len(suffix)]
    return key


def _unknown_key_message(section: str, key: str, known) -> str:
    msg = f"unknown field '{section}.{key}'"
    stem = _stem(key)
    hints = [k for k in known if _stem(k) == stem and k != key]
    if hints:
        msg += f" (wrong unit suffix? expected '{section}.{hints[0]}')"
    return msg


@dataclass
class ScenarioConfig:
    """Validated configuration. Build with :func:`parse_config`."""

    source: SourceParams
    geometry: PerimeterGeometry
    detector: DetectorModel
    scenario: Scenario
    schedule_mode: str
    schedule_phi1: float | None
    schedule_phi2: float | None
    broadcast_delay: float
    n_heralds: int | None
    duration: float | None
    seed: int
    alarm: AlarmConfig
    calibration: tuple[float, float] | None
    sweep: dict
    output: dict = field(default_factory=dict)

    @property
    def model(self) -> TripwireModel:
        return TripwireModel(self.source, self.geometry)

    @property
    def window(self) -> DetectorWindow:
        return self.detector.window


def _merge(doc: dict) -> dict:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(doc) - set(_SECTIONS) - {"schema_version"}
    if unknown:
        raise ConfigError(f"unknown top-level field(s): {sorted(unknown)}")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {version!r}")
    merged = {}
    for section, defaults in _SECTIONS.items():
        given = doc.get(section, {})
        if not isinstance(given, dict):
            raise ConfigError(f"'{section}' must be an object")
        for key in given:
            if key not in defaults:
                raise ConfigError(_unknown_key_message(section, key, defaults))
        merged[section] = {**defaults, **given}
    return merged


def _number(sec: dict, section: str, key: str, *, integer=False):
    value = sec[key]
    ok = isinstance(value, int) if integer else isinstance(value, (int, float))
    if isinstance(value, bool) or not ok:
        kind = "an integer" if integer else "a number"
        raise ConfigError(f"'{section}.{key}' must be {kind}, got {value!r}")
    return value


def _wrap(section: str, fn):
    try:
        return fn()
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"'{section}': {exc}") from exc


def _scenario(sec: dict) -> Scenario:
    kind = sec["type"]
    if kind not in _SCENARIO_PARAMS:
        raise ConfigError(f"'scenario.type' must be one of {sorted(_SCENARIO_PARAMS)}, got {kind!r}")
    allowed = _SCENARIO_PARAMS[kind]
    defaults = _SECTIONS["scenario"]
    for key, value in sec.items():
        if key != "type" and key not in allowed and value != defaults[key]:
            raise ConfigError(f"'scenario.{key}' does not apply to scenario type {kind!r}")
    if kind == "normal":
        return Normal()
    if kind == "block":
        return Block()
    if kind == "intercept_resend":
        return InterceptResend()
    if kind == "side_intrusion":
        if sec["delta_ns"] is None:
            raise ConfigError("'scenario.delta_ns' is required for side_intrusion")
        return _wrap("scenario", lambda: SideIntrusion(
            _number(sec, "scenario", "delta_ns"),
            None if sec["xi_rad"] is None else _number(sec, "scenario", "xi_rad"),
            None if sec["xi_wavelength_nm"] is None else _number(sec, "scenario", "xi_wavelength_nm"),
        ))
    if sec["phi_int_rad"] is None:
        raise ConfigError("'scenario.phi_int_rad' is required for cross_intrusion")
    return _wrap("scenario", lambda: CrossIntrusion(_number(sec, "scenario", "phi_int_rad"),
                                                     _number(sec, "scenario", "corner", integer=True)))


def parse_config(doc: dict) -> ScenarioConfig:
    """Validate a decoded config document and build the domain objects."""
    m = _merge(doc)

    s = m["source"]
    source = _wrap("source", lambda: SourceParams(
        pump_wavelength=_number(s, "source", "pump_wavelength_nm"),
        idler_bandwidth=_number(s, "source", "idler_bandwidth_per_ns"),
        crystal_length=_number(s, "source", "crystal_length_mm"),
        group_velocity_mismatch=_number(s, "source", "group_velocity_mismatch_ns_per_mm"),
        sinc_gaussian_factor=_number(s, "source", "sinc_gaussian_factor"),
        herald_rate=_number(s, "source", "herald_rate_per_ns"),
        compensate_delay=bool(s["compensate_delay"]),
    ))

    g = m["geometry"]
    geometry = _wrap("geometry", lambda: PerimeterGeometry(
        _number(g, "geometry", "l_L_m"), _number(g, "geometry", "l_T_m"),
        _number(g, "geometry", "l_R_m"), _number(g, "geometry", "l_B_m"),
        require_balanced=bool(g["require_balanced"]),
    ))

    d = m["detector"]
    tr = d["resolving_time_ns"]
    if tr == "sqrt_beta":
        tr = source.sqrt_beta
    elif tr == "inf":
        tr = math.inf
    else:
        tr = _number(d, "detector", "resolving_time_ns")
    detector = _wrap("detector", lambda: DetectorModel(
        DetectorWindow(tr),
        _number(d, "detector", "efficiency_w1"),
        _number(d, "detector", "efficiency_w2"),
        _number(d, "detector", "dark_count_rate_per_ns"),
    ))

    scenario = _scenario(m["scenario"])

    sch = m["schedule"]
    if sch["mode"] not in ("fixed", "qrng"):
        raise ConfigError(f"'schedule.mode' must be 'fixed' or 'qrng', got {sch['mode']!r}")
    phis = []
    for key in ("phi1_rad", "phi2_rad"):
        value = sch[key]
        if value is not None:
            value = float(_number(sch, "schedule", key))
            if sch["mode"] == "qrng" and value not in (0.0, math.pi):
                raise ConfigError(f"'schedule.{key}' must be 0 or pi in qrng mode")
        phis.append(value)
    delay = _number(sch, "schedule", "broadcast_delay_ns")
    if delay < 0:
        raise ConfigError("'schedule.broadcast_delay_ns' must be >= 0")

    r = m["run"]
    n_heralds, duration = r["n_heralds"], r["duration_ns"]
    if "duration_ns" in doc.get("run", {}) and "n_heralds" not in doc.get("run", {}):
        n_heralds = None
    if (n_heralds is None) == (duration is None):
        raise ConfigError("give exactly one of 'run.n_heralds' or 'run.duration_ns'")
    if n_heralds is not None and _number(r, "run", "n_heralds", integer=True) < 0:
        raise ConfigError("'run.n_heralds' must be >= 0")
    if duration is not None and _number(r, "run", "duration_ns") < 0:
        raise ConfigError("'run.duration_ns' must be >= 0")
    seed = _number(r, "run", "seed", integer=True)

    a = m["alarm"]
    alarm = _wrap("alarm", lambda: AlarmConfig(
        _number(a, "alarm", "nu"), _number(a, "alarm", "eps1"), _number(a, "alarm", "eps2"),
        _number(a, "alarm", "window", integer=True),
    ))
    calibration = None
    if (a["p1"] is None) != (a["p2"] is None):
        raise ConfigError("'alarm.p1' and 'alarm.p2' must be given together")
    if a["p1"] is not None:
        calibration = (float(_number(a, "alarm", "p1")), float(_number(a, "alarm", "p2")))
        if not all(0.0 <= p <= 1.0 for p in calibration):
            raise ConfigError("'alarm.p1' and 'alarm.p2' must lie in [0, 1]")

    sw = m["sweep"]
    for key in ("delta_min_ns", "delta_max_ns"):
        _number(sw, "sweep", key)
    for key in ("n_delta", "n_phi", "grid_resolution"):
        if _number(sw, "sweep", key, integer=True) < 1:
            raise ConfigError(f"'sweep.{key}' must be >= 1")
    if not 0 <= sw["delta_min_ns"] <= sw["delta_max_ns"]:
        raise ConfigError("need 0 <= sweep.delta_min_ns <= sweep.delta_max_ns")

    return ScenarioConfig(
        source=source, geometry=geometry, detector=detector, scenario=scenario,
        schedule_mode=sch["mode"], schedule_phi1=phis[0], schedule_phi2=phis[1],
        broadcast_delay=float(delay), n_heralds=n_heralds, duration=duration, seed=seed,
        alarm=alarm, calibration=calibration, sweep=dict(sw), output=dict(m["output"]),
    )


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    try:
        return parse_config(doc)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def default_config() -> ScenarioConfig:
    """Worked example: 400 nm pump, resolving time equal to sqrt(beta) = 0.1 ns."""
    return parse_config({"schema_version": SCHEMA_VERSION})
