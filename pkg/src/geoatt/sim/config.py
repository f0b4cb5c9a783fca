"""Flat ``key = value`` run configuration.

Keys mirror the fields of :class:`TrajectorySpec`, :class:`SensorSpec` and
:class:`RunConfig`. Vectors are comma separated (``gyro_bias = -0.32, 0.16,
-0.08``), ``estimators`` is a comma-separated list and ``inf`` is accepted
for ``gyro_bias_tau``. Lines starting with ``#`` or ``;`` are comments.
"""

from __future__ import annotations

import configparser
from dataclasses import fields, replace

from ..errors import SpecInvalid
from .harness import RunConfig
from .trajectory import SensorSpec, TrajectorySpec

_TRAJ = {f.name for f in fields(TrajectorySpec)}
_SENS = {f.name for f in fields(SensorSpec)}
_RUN = {"mode", "estimators", "integration", "ecf_gain", "bias_observer", "bias_tau", "bias_threshold", "compensate_bias"}
_VECTORS = {"gyro_bias", "h", "k"}
_INTS = {"seed"}
_STRINGS = {"mode", "integration", "bias_observer"}
_BOOLS = {"compensate_bias"}


def _parse_value(key, raw):
    raw = raw.strip()
    try:
        if key in _VECTORS:
            if key == "k" and raw.lower() in ("", "none"):
                return None
            vals = tuple(float(x) for x in raw.split(","))
            if len(vals) != 3:
                raise ValueError("need three comma-separated numbers")
            return vals
        if key == "estimators":
            return tuple(x.strip() for x in raw.split(",") if x.strip())
        if key in _INTS:
            return int(raw)
        if key in _STRINGS:
            return raw
        if key in _BOOLS:
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError("expected a boolean")
        return float(raw)
    except ValueError as exc:
        raise SpecInvalid(f"bad value for {key!r}: {raw!r} ({exc})") from None


def parse_config(text: str, overrides=None) -> RunConfig:
    """Build a validated :class:`RunConfig` from config text plus optional overrides.

    Raises
    ------
    SpecInvalid
        On unknown keys, malformed values or inconsistent settings.
    """
    cp = configparser.ConfigParser(comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string("[sim]\n" + text)
    except configparser.Error as exc:
        raise SpecInvalid(f"malformed config: {exc}") from None
    values = {}
    for key, raw in cp["sim"].items():
        if key not in _TRAJ | _SENS | _RUN:
            raise SpecInvalid(f"unknown config key {key!r}")
        values[key] = _parse_value(key, raw)
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    traj = replace(TrajectorySpec(), **{k: v for k, v in values.items() if k in _TRAJ})
    sens = replace(SensorSpec(), **{k: v for k, v in values.items() if k in _SENS})
    cfg = RunConfig(traj, sens, **{k: v for k, v in values.items() if k in _RUN})
    traj.validate()
    sens.validate()
    cfg.validate()
    return cfg


def load_config(path, overrides=None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise SpecInvalid(f"cannot read config {path}: {exc}") from None
    return parse_config(text, overrides)
