"""INI experiment files and ``--section.key value`` overrides.

Example::

    [experiment]
    name = star6
    protocols = mdwarf, extdesync
    topologies = star:6
    periods_ms = 1000
    seeds = 5

    [mdwarf]
    c1 = 38.597

    [radio]
    backoff_ms = 1.0
"""

from __future__ import annotations

import configparser
from dataclasses import fields
from pathlib import Path

from .harness import ExperimentSpec, HarnessError, preset
from .protocols import ExtDesyncConfig, ForceConfig, LightweightConfig, ProtocolSettings

_PROTO_SECTIONS = {"mdwarf": ForceConfig, "extdesync": ExtDesyncConfig, "lightweight": LightweightConfig}
_EXPERIMENT_KEYS = {
    "name": str, "preset": str, "protocols": tuple, "topologies": tuple, "periods_ms": tuple,
    "periods": int, "seeds": int, "base_seed": int, "betas": tuple, "output_dir": str,
}
_RADIO_KEYS = {"bitrate": float, "backoff_ms": float, "csma": bool, "cca_ms": float, "quantum_ms": float}
_TUPLE_ITEM = {"protocols": str, "topologies": str, "periods_ms": float, "betas": int}


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _convert(section: str, key: str, text: str):
    if section == "experiment":
        kind = _EXPERIMENT_KEYS.get(key)
        if kind is None:
            raise HarnessError(f"unknown key experiment.{key}")
        if kind is tuple:
            item = _TUPLE_ITEM[key]
            return tuple(item(x.strip()) for x in text.split(",") if x.strip())
        return kind(text.strip())
    if section == "radio":
        kind = _RADIO_KEYS.get(key)
        if kind is None:
            raise HarnessError(f"unknown key radio.{key}")
        return _parse_bool(text) if kind is bool else kind(text)
    cls = _PROTO_SECTIONS.get(section)
    if cls is None:
        raise HarnessError(f"unknown section [{section}]")
    if key not in {f.name for f in fields(cls)}:
        raise HarnessError(f"unknown key {section}.{key}")
    return float(text)


def load_values(path: str | Path | None) -> dict[str, dict[str, str]]:
    """Raw ``{section: {key: text}}`` from an INI file (empty if no path)."""
    if path is None:
        return {}
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as f:
            cp.read_file(f)
    except configparser.Error as exc:
        raise HarnessError(f"{path}: {exc}") from exc
    return {s: dict(cp[s]) for s in cp.sections()}


def parse_overrides(args: list[str]) -> dict[str, dict[str, str]]:
    """Turn ``["--mdwarf.c1", "40", "--radio.csma=no"]`` into nested values."""
    out: dict[str, dict[str, str]] = {}
    i = 0
    while i < len(args):
        arg = args[i]
        if not arg.startswith("--") or "." not in arg:
            raise HarnessError(f"unrecognized argument {arg!r}")
        key, eq, value = arg[2:].partition("=")
        if not eq:
            if i + 1 >= len(args):
                raise HarnessError(f"{arg} needs a value")
            value = args[i + 1]
            i += 1
        section, _, name = key.partition(".")
        out.setdefault(section, {})[name] = value
        i += 1
    return out


def merge(base: dict, override: dict) -> dict:
    out = {s: dict(v) for s, v in base.items()}
    for s, kv in override.items():
        out.setdefault(s, {}).update(kv)
    return out


def build_spec(values: dict[str, dict[str, str]], preset_name: str | None = None) -> ExperimentSpec:
    """Experiment spec from a preset (optional) with file/flag values layered on top."""
    typed: dict[str, dict] = {}
    for section, kv in values.items():
        for key, text in kv.items():
            try:
                typed.setdefault(section, {})[key] = _convert(section, key, text)
            except ValueError as exc:
                raise HarnessError(f"{section}.{key}: {exc}") from exc
    exp = typed.get("experiment", {})
    file_preset = exp.pop("preset", None)
    preset_name = preset_name or file_preset
    try:
        settings = ProtocolSettings(**{
            s: cls(**typed.get(s, {})) for s, cls in _PROTO_SECTIONS.items()
        })
    except (TypeError, ValueError) as exc:
        raise HarnessError(str(exc)) from exc
    kw = dict(exp)
    kw.update(typed.get("radio", {}))
    kw["settings"] = settings
    try:
        if preset_name:
            return preset(preset_name, **kw)
        if "name" not in kw:
            raise HarnessError("experiment.name is required without a preset")
        return ExperimentSpec(**kw)
    except TypeError as exc:
        raise HarnessError(str(exc)) from exc

