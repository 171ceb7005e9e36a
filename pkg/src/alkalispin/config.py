"""Run configuration: defaults, presets, files and overrides.

A configuration is a nested mapping. It is resolved in layers: built-in
defaults, then a preset, then a JSON or TOML file, then command-line
overrides. The fully resolved mapping is what gets hashed, so two runs with
the same hash used the same inputs.
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
import sys
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import presets
from .dynamics import ProbeProfile, tune_probe_peak
from .eigen import relaxed_state
from .model import DomainError, RateSet, SpinState, Species
from .rates import CellConfig, ConfigurationError, budget

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

DEFAULTS: dict[str, Any] = {
    "preset": None,
    "species": {"name": "Cs", "I": 3.5, "gamma_e": 1.7608e7, "q_se0": 22.0},
    "rates": None,
    "cell": None,
    "B": 0.0,
    "sweep": {"B_min": 1e-6, "B_max": 1e-2, "count": 41, "spacing": "log", "include_zero": True},
    "time": {"t_end": None, "n_samples": 2000, "n_decay": 5.0},
    "rel_tol": 1e-8,
    "initial": "relaxed",
    "metric": None,
    "noise": {"sigma": 0.0, "seed": 0},
    "probe": None,
}

SPACINGS = ("linear", "log", "signed-symmetric")
# sections whose keys are fixed; rates, cell and probe are validated on use
_STRICT = ("", "species.", "sweep.", "time.", "noise.")


def _preset_layer(name: str) -> dict:
    p = presets.get(name)
    c = p.cell
    layer = {
        "preset": p.name,
        "species": {"name": p.species.name, "I": p.species.I, "gamma_e": p.species.gamma_e,
                    "q_se0": p.species.q_se0},
        "rates": {k: v for k, v in p.rates.as_dict().items() if k != "R_sd"},
        "cell": {
            "radius_a": c.radius_a, "T": c.T, "n_alkali": c.n_alkali, "n_buffer": c.n_buffer,
            "D0": c.D0, "n0": c.n0, "T0": c.T0, "alkali_mass": c.alkali_mass, "buffer_mass": c.buffer_mass,
            "cross_sections": dict(c.cross_sections), "probe_rate": p.budget.rates.R_pr,
        },
        "initial": "relaxed",
    }
    if p.profile is not None:
        layer["probe"] = {
            "w": p.profile.w, "a": p.profile.a, "n_shells": p.profile.n_shells,
            "R_pr_peak": p.profile.R_pr_peak,
            "fields": list(p.fields), "records": [list(r) for r in p.records],
        }
    return layer


def _merge(base: dict, layer: Mapping, path: str = "") -> dict:
    for key, value in layer.items():
        where = f"{path}{key}"
        if key not in base and path in _STRICT:
            raise ConfigurationError(f"unknown configuration key {where!r}")
        if isinstance(value, Mapping) and isinstance(base.get(key), dict):
            _merge(base[key], value, where + ".")
        else:
            base[key] = copy.deepcopy(value) if isinstance(value, (dict, list)) else value
    return base


def load_file(path: str | Path) -> dict:
    """Read a JSON or TOML configuration, chosen by file extension."""
    path = Path(path)
    suffix = path.suffix.lower()
    try:
        if suffix == ".json":
            return json.loads(path.read_text())
        if suffix == ".toml":
            return tomllib.loads(path.read_text())
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from None
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc.strerror}") from None
    raise ConfigurationError(f"unrecognized config extension {suffix!r}; use .json or .toml")


def resolve(file_layer: Mapping | None = None, overrides: Mapping | None = None,
            preset: str | None = None) -> dict:
    """Merge defaults, preset, file and overrides into one explicit mapping."""
    file_layer = dict(file_layer or {})
    overrides = dict(overrides or {})
    name = preset or overrides.pop("preset", None) or file_layer.pop("preset", None)
    file_layer.pop("preset", None)
    overrides.pop("preset", None)
    user_rates = file_layer.get("rates") is not None or overrides.get("rates") is not None
    user_cell = file_layer.get("cell") is not None or overrides.get("cell") is not None
    if user_rates and user_cell:
        raise ConfigurationError("give exactly one rate source: 'rates' or 'cell'")
    cfg = copy.deepcopy(DEFAULTS)
    if name is not None:
        try:
            _merge(cfg, _preset_layer(name))
        except KeyError as exc:
            raise ConfigurationError(exc.args[0]) from None
        # a preset carries its cell and the rates derived from it; a user
        # rate source replaces the other one
        if user_rates:
            cfg["cell"] = None
        if user_cell:
            cfg["rates"] = None
    _merge(cfg, file_layer)
    _merge(cfg, overrides)
    return cfg


def config_hash(cfg: Mapping) -> str:
    """SHA-256 of the canonical (sorted-key, compact) JSON of `cfg`."""
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


# -- building model objects ---------------------------------------------------


def species_from(cfg: Mapping) -> Species:
    s = cfg["species"]
    try:
        return Species(name=str(s["name"]), I=float(s["I"]), gamma_e=float(s["gamma_e"]),
                       q_se0=float(s.get("q_se0", 0.0)))
    except KeyError as exc:
        raise ConfigurationError(f"species is missing {exc.args[0]!r}") from None


def rates_from(cfg: Mapping) -> RateSet:
    r = cfg.get("rates")
    if r is None:
        if cfg.get("cell") is not None:
            return budget(cell_from(cfg), species_from(cfg), _probe_rate(cfg)).rates
        raise ConfigurationError("no rates: give 'rates', 'cell' or a preset")
    unknown = set(r) - {"R_sr", "R_se", "R_pr", "R_diff"}
    if unknown:
        raise ConfigurationError(f"unknown rate keys {sorted(unknown)}")
    return RateSet(**{k: float(v) for k, v in r.items()})


def _probe_rate(cfg: Mapping) -> float:
    return float(cfg["cell"].get("probe_rate", 0.0))


def cell_from(cfg: Mapping) -> CellConfig:
    c = cfg.get("cell")
    if c is None:
        raise ConfigurationError("no cell description: give 'cell' or a preset")
    c = {k: v for k, v in c.items() if k != "probe_rate"}
    try:
        return CellConfig(**c)
    except TypeError as exc:
        raise ConfigurationError(f"bad cell description: {exc}") from None


def probe_rate_from(cfg: Mapping) -> float:
    return _probe_rate(cfg) if cfg.get("cell") is not None else 0.0


def initial_from(cfg: Mapping, species: Species, rates: RateSet) -> SpinState:
    """``"relaxed"``, ``"spin-temperature"`` or an explicit ``[F+, S+]`` pair.

    Components may be numbers or ``[re, im]`` pairs.
    """
    ini = cfg["initial"]
    if ini == "relaxed":
        return relaxed_state(species, rates)
    if ini == "spin-temperature":
        return SpinState.spin_temperature(species)
    if isinstance(ini, (list, tuple)) and len(ini) == 2:
        def c(v):
            return complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)
        return SpinState(c(ini[0]), c(ini[1]))
    raise ConfigurationError(f"bad initial state {ini!r}")


def fields_from(cfg: Mapping) -> np.ndarray:
    """Field values (G) of the sweep, ascending."""
    sw = cfg["sweep"]
    B_min, B_max, count = float(sw["B_min"]), float(sw["B_max"]), int(sw["count"])
    spacing = sw["spacing"]
    if count < 1:
        raise ConfigurationError("sweep count must be >= 1")
    if spacing not in SPACINGS:
        raise ConfigurationError(f"sweep spacing must be one of {SPACINGS}")
    if spacing == "linear":
        B = np.linspace(B_min, B_max, count)
    else:
        if not (0 < B_min <= B_max):
            raise ConfigurationError("log sweeps need 0 < B_min <= B_max")
        B = np.geomspace(B_min, B_max, count)
        if spacing == "signed-symmetric":
            B = np.concatenate([-B[::-1], B])
    if sw.get("include_zero") and spacing != "linear" and not np.any(B == 0.0):
        B = np.sort(np.concatenate([B, [0.0]]))
    if not np.all(np.isfinite(B)):
        raise ConfigurationError("sweep fields must be finite")
    return B


def profile_from(cfg: Mapping, species: Species, rates: RateSet) -> ProbeProfile:
    p = cfg.get("probe")
    if p is None:
        raise ConfigurationError("no probe description: give 'probe' or the 'pr' preset")
    try:
        w, a, n = float(p["w"]), float(p["a"]), int(p.get("n_shells", 64))
    except KeyError as exc:
        raise ConfigurationError(f"probe is missing {exc.args[0]!r}") from None
    if "R_pr_peak" in p:
        return ProbeProfile(float(p["R_pr_peak"]), w, a, n)
    if "T1" in p:
        return tune_probe_peak(species, rates, w, a, n, float(p["T1"]))
    raise ConfigurationError("probe needs 'R_pr_peak' or a target 'T1'")


def check_positive(name: str, value: float) -> float:
    if not (value > 0 and math.isfinite(value)):
        raise DomainError(f"{name} must be positive and finite, got {value!r}")
    return value
