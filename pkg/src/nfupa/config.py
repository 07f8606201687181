"""Experiment configuration: INI-style files flattened to dotted keys.

A file such as::

    [geometry]
    n_x = 16

    [scenario]
    snr_db = 0, 5, 10

resolves to ``{"geometry.n_x": 16, "scenario.snr_db": [0.0, 5.0, 10.0]}``.
Comma-separated values of a list-typed key become sweep axes.
"""
from __future__ import annotations

import configparser
import hashlib
import itertools
import json
from importlib import resources
from pathlib import Path

from .channel import UpaGeometry
from .estimators import PcsblHyperParams
from .gamp import GampConfig
from .simulation import ESTIMATORS, EstimatorSettings, ScenarioConfig

# key -> (type, default); list types are written as comma-separated values
DEFAULTS: dict[str, tuple[type, object]] = {
    "geometry.n_x": (int, 16),
    "geometry.n_y": (int, 16),
    "geometry.f_c": (float, 100e9),
    "scenario.n_paths": (int, 3),
    "scenario.nlos_gain_db": (float, 13.0),
    "scenario.angle_min": (float, -1.0471975511965976),
    "scenario.angle_max": (float, 1.0471975511965976),
    "scenario.t_samples": (list[int], [128]),
    "scenario.snr_db": (list[float], [10.0]),
    "scenario.trials": (int, 100),
    "scenario.seed": (int, 0),
    "scenario.pilot_mode": (str, "constant_modulus_random_phase"),
    "scenario.channel_mode": (str, "exact"),
    "estimators.names": (list[str], list(ESTIMATORS)),
    "estimators.dictionary_mode": (str, "genie"),
    "estimators.block_size": (int, 6),
    "estimators.reference": (str, "polar-omp"),
    "estimators.bomp_blocks_per_path": (int, 2),
    "estimators.polar_atoms_per_path": (int, 4),
    "estimators.polar_angle_samples": (int, 0),
    "estimators.polar_distance_samples": (int, 4),
    "pcsbl.a": (float, 1.5),
    "pcsbl.b": (float, 1e-6),
    "pcsbl.rho": (float, 1.0),
    "pcsbl.eps": (float, 1e-6),
    "pcsbl.t_max": (int, 100),
    "gamp.max_inner_iters": (int, 50),
    "gamp.damping": (float, 0.7),
    "gamp.tol": (float, 1e-6),
    "gamp.variance_floor": (float, 1e-12),
    "gamp.uniform_variance": (bool, False),
    "output.name": (str, "sweep"),
    "output.chart": (bool, True),
}

DESK_MAX_N = 32 * 32


class ConfigError(ValueError):
    pass


def _convert(key: str, raw):
    typ, _ = DEFAULTS[key]
    try:
        if typ is bool:
            if isinstance(raw, bool):
                return raw
            val = str(raw).strip().lower()
            if val not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return val in ("true", "1", "yes")
        if typ in (int, float, str):
            return typ(float(raw)) if typ is int else typ(raw)
        inner = typ.__args__[0]
        items = raw if isinstance(raw, list) else [p.strip() for p in str(raw).split(",") if p.strip()]
        return [inner(float(v)) if inner is int else inner(v) for v in items]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def preset_path(name: str) -> Path | None:
    """Path of a bundled preset (``fig3_desk.cfg`` etc.), or ``None``."""
    p = resources.files("nfupa") / "presets" / name
    return Path(str(p)) if p.is_file() else None


def read_config(path: str | Path) -> dict:
    """Parse a config file into dotted keys (unknown keys raise ``ConfigError``)."""
    path = Path(path)
    if not path.is_file():
        bundled = preset_path(path.name)
        if bundled is None:
            raise FileNotFoundError(f"config file not found: {path}")
        path = bundled
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            cp.read_file(fh, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    values = {}
    for section in cp.sections():
        for k, v in cp.items(section):
            values[f"{section}.{k}"] = v
    return values


def canonical_key(key: str) -> str:
    """Expand an undotted key (``snr_db``) to its unique dotted form."""
    if "." in key or key in DEFAULTS:
        return key
    hits = [k for k in DEFAULTS if k.split(".", 1)[1] == key]
    return hits[0] if len(hits) == 1 else key


def resolve(file_values: dict | None = None, overrides: list[str] | None = None) -> dict:
    """Defaults, then file values, then ``key=value`` overrides."""
    out = {k: d for k, (_, d) in DEFAULTS.items()}
    pending = dict(file_values or {})
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        k, v = item.split("=", 1)
        pending[canonical_key(k.strip())] = v.strip()
    unknown = sorted(set(pending) - set(DEFAULTS))
    if unknown:
        raise ConfigError(
            f"unknown config keys {unknown}; valid keys are:\n  " + "\n  ".join(DEFAULTS)
        )
    for k, v in pending.items():
        out[k] = _convert(k, v)
    return out


def digest(resolved: dict) -> str:
    """Content hash independent of key order."""
    blob = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def geometry(resolved: dict) -> UpaGeometry:
    return UpaGeometry(resolved["geometry.n_x"], resolved["geometry.n_y"], resolved["geometry.f_c"])


def check_scale(resolved: dict, full_scale: bool) -> None:
    g = geometry(resolved)
    if g.n > DESK_MAX_N and not full_scale:
        raise ConfigError(
            f"{g.n_x}x{g.n_y} array exceeds desk scale ({DESK_MAX_N} elements); "
            "pass --full-scale to run it"
        )


def scenarios(resolved: dict) -> list[ScenarioConfig]:
    """One ScenarioConfig per (T, SNR) grid point."""
    geom = geometry(resolved)
    out = []
    for T, snr in itertools.product(resolved["scenario.t_samples"], resolved["scenario.snr_db"]):
        out.append(ScenarioConfig(
            geom,
            n_paths=resolved["scenario.n_paths"],
            nlos_gain_db=resolved["scenario.nlos_gain_db"],
            angle_range=(resolved["scenario.angle_min"], resolved["scenario.angle_max"]),
            t_samples=T,
            snr_db=snr,
            trials=resolved["scenario.trials"],
            rng_seed=resolved["scenario.seed"],
            pilot_mode=resolved["scenario.pilot_mode"],
            channel_mode=resolved["scenario.channel_mode"],
        ))
    return out


def estimator_settings(resolved: dict) -> EstimatorSettings:
    return EstimatorSettings(
        block_size=resolved["estimators.block_size"],
        dictionary_mode=resolved["estimators.dictionary_mode"],
        pcsbl=PcsblHyperParams(
            a=resolved["pcsbl.a"], b=resolved["pcsbl.b"], rho=resolved["pcsbl.rho"],
            eps=resolved["pcsbl.eps"], t_max=resolved["pcsbl.t_max"],
        ),
        gamp=GampConfig(
            max_inner_iters=resolved["gamp.max_inner_iters"],
            damping=resolved["gamp.damping"],
            tol=resolved["gamp.tol"],
            variance_floor=resolved["gamp.variance_floor"],
            uniform_variance=resolved["gamp.uniform_variance"],
        ),
        bomp_blocks_per_path=resolved["estimators.bomp_blocks_per_path"],
        polar_atoms_per_path=resolved["estimators.polar_atoms_per_path"],
        polar_angle_samples=resolved["estimators.polar_angle_samples"] or None,
        polar_distance_samples=resolved["estimators.polar_distance_samples"],
    )


def sweep_axis(resolved: dict) -> str:
    """The varying axis for charts: SNR unless only T varies."""
    if len(resolved["scenario.t_samples"]) > 1 and len(resolved["scenario.snr_db"]) == 1:
        return "t_samples"
    return "snr_db"
