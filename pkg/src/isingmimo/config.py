"""Declarative experiment configuration.

Config files are TOML ("key = value" with nested sections); every value
has a command-line override and flags win over file values. Unknown keys
are rejected by name so typos fail loudly.

Schema (all keys optional unless noted):

    [system]
    n_t = 8                # transmitters / users        (required)
    n_r = 8                # receive antennas            (required)
    modulation = 2         # 2 (BPSK), 4, 16, 64         (required)
    snr_db = [4, 8, 12]    # SNR grid                    (required)
    channels = 32          # channel instances per point (required)
    vectors_per_channel = 40   # or derived from min_ber_target
    min_ber_target = 1e-3
    noiseless = false
    seed = 7               # required (here or via --seed)
    workers = 1

    [detector]
    name = "ri-mimo"       # zf|mmse|sphere|cim-ml|ri-mimo|trim|ri-nr
    n_a = 16
    r = 0.15
    include_mmse_candidate = true
    precision_bits = 0     # 0 = full precision
    trim_depth = 1
    gamma = 0.5
    solver = "cim"         # or "brute" (exhaustive oracle, testing)

    [detector.cim]
    dt = 0.01
    steps = 128
    n_m = 128
    coupling = 3.16227766  # default sqrt(10)
    saturation = 10.0
    pump_max = 2.0

    [sweep]
    n_a_list = [1, 4, 16, 64]
    r_list = [0.0, 0.15]
    k_list = [2, 5, 0]

    [amc]
    info_bits = 48000
    frame_bits = 12000
"""

from __future__ import annotations

import math
import os
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .cim import CimParams
from .errors import ConfigError
from .harness import DetectorSpec, ExperimentConfig, vectors_for_target

_SCHEMA: dict[str, dict[str, type | tuple[type, ...]]] = {
    "system": {
        "n_t": int,
        "n_r": int,
        "modulation": int,
        "snr_db": list,
        "channels": int,
        "vectors_per_channel": int,
        "min_ber_target": (int, float),
        "noiseless": bool,
        "seed": int,
        "workers": int,
    },
    "detector": {
        "name": str,
        "n_a": int,
        "r": (int, float),
        "include_mmse_candidate": bool,
        "precision_bits": int,
        "trim_depth": int,
        "gamma": (int, float),
        "solver": str,
    },
    "detector.cim": {
        "dt": (int, float),
        "steps": int,
        "n_m": int,
        "coupling": (int, float),
        "saturation": (int, float),
        "pump_max": (int, float),
    },
    "sweep": {"n_a_list": list, "r_list": list, "k_list": list},
    "amc": {"info_bits": int, "frame_bits": int},
}


def load_config_file(path: str | os.PathLike) -> dict[str, Any]:
    """Parse and schema-check a TOML config file."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    _validate(data)
    return data


def _validate(data: dict[str, Any]) -> None:
    for section, content in data.items():
        if not isinstance(content, dict):
            raise ConfigError(f"unknown top-level key {section!r}")
        _validate_section(section, content)


def _validate_section(section: str, content: dict[str, Any]) -> None:
    known = _SCHEMA.get(section)
    if known is None:
        raise ConfigError(f"unknown config section [{section}]")
    for key, value in content.items():
        if isinstance(value, dict):
            _validate_section(f"{section}.{key}", value)
            continue
        if key not in known:
            raise ConfigError(f"unknown config key {section}.{key}")
        expected = known[key]
        if expected is bool:
            ok = isinstance(value, bool)
        elif isinstance(expected, tuple):
            ok = isinstance(value, expected) and not isinstance(value, bool)
        else:
            ok = isinstance(value, expected) and not isinstance(value, bool)
        if not ok:
            raise ConfigError(f"config key {section}.{key} has wrong type {type(value).__name__}")


def apply_overrides(data: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    """Merge dotted-path overrides (from flags) over file values."""
    merged = {k: (dict(v) if isinstance(v, dict) else v) for k, v in data.items()}
    for path, value in overrides.items():
        if value is None:
            continue
        parts = path.split(".")
        cursor = merged
        for part in parts[:-1]:
            cursor = cursor.setdefault(part, {})
            if not isinstance(cursor, dict):
                raise ConfigError(f"cannot override non-section key {part!r}")
        cursor[parts[-1]] = value
    _validate(merged)
    return merged


def build_experiment(data: dict[str, Any]) -> ExperimentConfig:
    """ExperimentConfig from a validated config mapping."""
    system = data.get("system", {})
    for key in ("n_t", "n_r", "modulation", "snr_db", "channels"):
        if key not in system:
            raise ConfigError(f"missing required config key system.{key}")
    if "seed" not in system:
        raise ConfigError("missing required config key system.seed (or pass --seed)")

    det = data.get("detector", {})
    cim_raw = det.get("cim", {})
    cim = CimParams(
        dt=float(cim_raw.get("dt", 0.01)),
        steps=int(cim_raw.get("steps", 128)),
        c=float(cim_raw.get("coupling", math.sqrt(10.0))),
        a_s=float(cim_raw.get("saturation", 10.0)),
        n_m=int(cim_raw.get("n_m", cim_raw.get("steps", 128))),
        pump_max=float(cim_raw.get("pump_max", 2.0)),
    )
    precision = int(det.get("precision_bits", 0)) or None
    spec = DetectorSpec(
        name=det.get("name", "ri-mimo"),
        n_a=int(det.get("n_a", 16)),
        r=float(det.get("r", 0.15)),
        include_mmse_candidate=bool(det.get("include_mmse_candidate", True)),
        precision_bits=precision,
        trim_depth=int(det.get("trim_depth", 1)),
        gamma=float(det.get("gamma", 0.5)),
        solver=det.get("solver", "cim"),
        cim=cim,
    )

    target = system.get("min_ber_target")
    vectors = system.get("vectors_per_channel")
    if vectors is None:
        if target is None:
            raise ConfigError(
                "missing config key system.vectors_per_channel (or set system.min_ber_target)"
            )
        vectors = vectors_for_target(
            int(system["n_t"]), int(system["modulation"]), int(system["channels"]), float(target)
        )

    return ExperimentConfig(
        n_t=int(system["n_t"]),
        n_r=int(system["n_r"]),
        modulation=int(system["modulation"]),
        snr_points=tuple(float(s) for s in system["snr_db"]),
        channels=int(system["channels"]),
        vectors_per_channel=int(vectors),
        detector=spec,
        seed=int(system["seed"]),
        min_ber_target=float(target) if target is not None else None,
        noiseless=bool(system.get("noiseless", False)),
        workers=int(system.get("workers", 1)),
    )
