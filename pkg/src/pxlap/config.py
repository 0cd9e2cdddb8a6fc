"""Flat ``section.key = value`` run configuration.

Grammar: one assignment per line, ``#`` starts a comment, blank lines are
ignored. Lists are comma separated; intervals and ladder rungs use ``a:b``;
``inf`` is accepted wherever an exponent ``r`` is expected and ``none``
clears an optional key. Every key and its default is listed in ``SCHEMA``.
A ``summary.json`` written by ``pxlap solve`` can be used as a config: its
``config`` object holds the fully resolved key set.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path


class ConfigError(ValueError):
    """Malformed configuration (exit code 3)."""


def _r(s):
    s = str(s).strip().lower()
    return math.inf if s in ("inf", "infinity") else float(s)


def _bool(s):
    s = str(s).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _list(conv):
    def parse(s):
        s = str(s).strip()
        if not s:
            return ()
        return tuple(conv(p.strip()) for p in s.split(","))
    return parse


def _pair(s):
    a, b = str(s).split(":")
    return (float(a), float(b))


def _fmt(v):
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    if isinstance(v, tuple):
        return ", ".join(":".join(_fmt(x) for x in e) if isinstance(e, tuple) else _fmt(e) for e in v)
    return str(v)


# key -> (parser, default, optional)
SCHEMA = {
    "grid.n": (int, 1, False),
    "grid.extents": (_list(_pair), ((0.0, 1.0),), False),
    "grid.resolution": (_list(int), (64,), False),
    "grid.components": (int, 1, False),
    "exponent.kind": (str, "constant", False),
    "exponent.value": (float, 2.0, False),
    "exponent.base": (float, 2.5, False),
    "exponent.coeffs": (_list(float), (0.0,), False),
    "exponent.t_coeff": (float, 0.0, False),
    "exponent.amplitude": (float, 0.0, False),
    "exponent.freq_x": (_list(float), (1.0,), False),
    "exponent.freq_t": (float, 0.0, False),
    "exponent.phase": (float, 0.0, False),
    "exponent.left": (float, 2.0, False),
    "exponent.right": (float, 2.5, False),
    "exponent.location": (float, 0.5, False),
    "exponent.path": (str, None, True),
    "exponent.resolution": (int, 33, False),
    "exponent.log_holder_pairs": (int, 4096, False),
    "exponent.log_holder_seed": (int, 0, False),
    "exponent.log_holder_ceiling": (float, 5.0, False),
    "initial.kind": (str, "sine", False),
    "initial.amplitude": (float, 1.0, False),
    "initial.width": (float, None, True),
    "initial.center": (_list(float), None, True),
    "initial.normalize_r0": (_r, None, True),
    "initial.seed": (int, 0, False),
    "initial.path": (str, None, True),
    "params.mu": (float, 0.0, False),
    "params.nu": (float, 0.0, False),
    "params.tau": (float, 1e-3, False),
    "params.T": (float, 0.1, False),
    "params.inner_tol": (float, 1e-10, False),
    "params.max_inner_iters": (int, 200, False),
    "params.dense_storage": (_bool, False, False),
    "outputs.snapshot_times": (_list(float), (), False),
    "outputs.norms": (_list(_r), (2.0, math.inf), False),
    "outputs.dir": (str, "out", False),
    "diagnostics.r0": (_r, 2.0, False),
    "diagnostics.r": (_list(_r), (math.inf,), False),
    "diagnostics.window": (_pair, (1e-3, 1e-1), False),
    "diagnostics.rates": (_bool, False, False),
    "diagnostics.ledger": (_bool, False, False),
    "diagnostics.contraction_tol": (float, 1e-8, False),
    "diagnostics.max_principle_slack": (float, 1e-8, False),
    "diagnostics.ledger_tol": (float, 1e-6, False),
    "ladder.rungs": (_list(_pair), (), False),
    "adjoint.epsilon": (_list(float), (0.0,), False),
    "adjoint.probe_count": (int, 20, False),
    "adjoint.seed": (int, 0, False),
    "adjoint.t": (float, None, True),
    "adjoint.r0": (_r, 2.0, False),
    "adjoint.terminal": (str, "sine", False),
    "adjoint.inner_tol": (float, 1e-12, False),
}


def parse_text(text: str) -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def resolve(raw: dict) -> dict:
    """Typed values for every schema key, defaults filled in."""
    out = {}
    for key, (conv, default, optional) in SCHEMA.items():
        if key not in raw:
            out[key] = default
            continue
        s = raw[key]
        if optional and str(s).strip().lower() == "none":
            out[key] = None
            continue
        try:
            out[key] = conv(s)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{key}: cannot parse {s!r} ({exc})") from None
    for key in raw:
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
    return out


@dataclass
class RunConfig:
    values: dict
    base_dir: Path

    def __getitem__(self, key):
        return self.values[key]

    def section(self, name):
        prefix = name + "."
        return {k[len(prefix):]: v for k, v in self.values.items() if k.startswith(prefix)}

    def canonical(self) -> dict:
        """String form of every key; loading it reproduces this config."""
        out = {}
        for k, v in sorted(self.values.items()):
            pair = SCHEMA[k][0] is _pair and v is not None
            out[k] = ":".join(_fmt(x) for x in v) if pair else _fmt(v)
        return out

    def check_structure(self):
        """Cross-field checks that do not need the exponent field."""
        v = self.values
        n = v["grid.n"]
        if n not in (1, 2):
            raise ConfigError("grid.n must be 1 or 2")
        if len(v["grid.extents"]) == 1 and n == 2:
            v["grid.extents"] = v["grid.extents"] * 2
        if len(v["grid.resolution"]) == 1 and n == 2:
            v["grid.resolution"] = v["grid.resolution"] * 2
        if len(v["grid.extents"]) != n or len(v["grid.resolution"]) != n:
            raise ConfigError("grid.extents / grid.resolution need one entry per axis")
        if v["diagnostics.ledger"] and not v["params.dense_storage"]:
            raise ConfigError("the energy ledger needs params.dense_storage = true")
        if v["exponent.kind"] == "table" and not v["exponent.path"]:
            raise ConfigError("exponent.kind = table needs exponent.path")
        if v["initial.kind"] == "file" and not v["initial.path"]:
            raise ConfigError("initial.kind = file needs initial.path")
        if not v["params.tau"] > 0 or not v["params.T"] > 0:
            raise ConfigError("params.tau and params.T must be positive")
        return self


def load_config(path, overrides: dict | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    if path.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad JSON config: {exc}") from None
        raw = data.get("config", data)
        if not isinstance(raw, dict):
            raise ConfigError("JSON config must be an object of 'section.key' strings")
        raw = {k: str(val) for k, val in raw.items()}
    else:
        raw = parse_text(text)
    raw.update({k: str(val) for k, val in (overrides or {}).items()})
    cfg = RunConfig(resolve(raw), path.parent)
    for key in ("exponent.path", "initial.path"):
        if cfg.values[key]:
            cfg.values[key] = str((path.parent / cfg.values[key]).resolve())
    return cfg.check_structure()
