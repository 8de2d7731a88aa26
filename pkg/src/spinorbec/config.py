"""Flat ``key = value`` config files with sections, merged with command-line flags.

Flags win over file values, file values win over dataclass defaults.
"""
from __future__ import annotations

import configparser
import dataclasses
from io import StringIO
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    pass


def read_ini(path: str | Path | None) -> dict[str, dict[str, str]]:
    if path is None:
        return {}
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} not found")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read(path)
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from None
    return {s: dict(cp[s]) for s in cp.sections()}


def parse_number_list(text: str) -> tuple:
    out = []
    for tok in str(text).replace(" ", "").strip("()[]").split(","):
        if not tok:
            continue
        v = complex(tok.replace("i", "j"))
        out.append(v.real if v.imag == 0 else v)
    return tuple(out)


def _coerce(value: Any, default: Any, name: str):
    if isinstance(value, str):
        try:
            if isinstance(default, bool):
                return value.strip().lower() in ("1", "true", "yes", "on")
            if isinstance(default, int):
                return int(float(value))
            if isinstance(default, float):
                return float(value)
            if isinstance(default, tuple):
                return parse_number_list(value)
        except ValueError:
            raise ConfigError(f"cannot parse {name} = {value!r}") from None
    return value


def kernel_section(section: dict[str, str] | None, default: dict) -> dict:
    if not section:
        return dict(default)
    out = dict(section)
    for k in ("W0", "R", "integral", "strength"):
        if k in out:
            try:
                out[k] = float(out[k])
            except ValueError:
                raise ConfigError(f"kernel field {k} = {out[k]!r} is not a number") from None
    return out


def build(cls, section: dict[str, str] | None = None, flags: dict[str, Any] | None = None, **extra):
    """Instantiate dataclass ``cls`` from file section and flags (flags win, None means unset)."""
    section = section or {}
    flags = {k: v for k, v in (flags or {}).items() if v is not None}
    kwargs = {}
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(section) - set(names)
    if unknown:
        raise ConfigError(f"unknown keys for {cls.__name__}: {sorted(unknown)}")
    for name, f in names.items():
        if f.default is not dataclasses.MISSING:
            default = f.default
        elif f.default_factory is not dataclasses.MISSING:
            default = f.default_factory()
        else:
            default = None
        if name in flags:
            kwargs[name] = _coerce(flags[name], default, name)
        elif name in section:
            kwargs[name] = _coerce(section[name], default, name)
    kwargs.update(extra)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from None


def to_ini(sections: dict[str, dict[str, Any]]) -> str:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    for name, values in sections.items():
        cp[name] = {k: _fmt(v) for k, v in values.items()}
    buf = StringIO()
    cp.write(buf)
    return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, (tuple, list)):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, complex):
        return repr(v).strip("()")
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dataclass_section(obj, skip=()) -> dict[str, Any]:
    return {f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)
            if f.name not in skip and not isinstance(getattr(obj, f.name), dict)}
