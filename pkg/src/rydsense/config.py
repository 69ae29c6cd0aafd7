"""Scenario configuration: dataclass, INI-style config files, CLI overrides.

Config files are flat sectioned key-value text (configparser syntax).  The
``[system]`` section holds SystemConfig fields; the ``[experiment]`` section
holds sweep parameters consumed by the harness.  Every key can be overridden
from the command line with ``--set key=value``.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass
from pathlib import Path

__all__ = ["SystemConfig", "load_config", "apply_overrides", "dump_config"]


@dataclass
class SystemConfig:
    """All scenario parameters in normalized units (noise_var = 1 default).

    Powers and variances are ratios; the physical calibration (28 GHz
    carrier, dipole moments, dBm noise floors) lives in documentation only
    because detection performance depends only on these ratios.
    """

    n_tx: int = 3
    n_rx: int = 4
    shots: int = 5
    psk_order: int = 4
    total_power: float = 1.0
    noise_var: float = 1.0
    rnr_db: float = 0.0
    rf_noise_penalty_db: float = 10.0
    rf_shots: int = 5
    prior_eta: float = 1.0
    master_seed: int = 20260823

    def validate(self) -> None:
        if self.n_tx < 1 or self.n_rx < 1:
            raise ValueError("n_tx and n_rx must be positive")
        if self.shots < 1 or self.rf_shots < 1:
            raise ValueError("shots and rf_shots must be positive")
        if self.psk_order < 2:
            raise ValueError("psk_order must be >= 2")
        if not self.total_power >= 0.0:
            raise ValueError("total_power must be nonnegative")
        if not self.noise_var > 0.0:
            raise ValueError("noise_var must be positive")
        if not self.prior_eta > 0.0:
            raise ValueError("prior_eta must be positive")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")

    @property
    def reference_power(self) -> float:
        """|r_m|^2 implied by the reference-to-noise ratio."""
        return self.noise_var * 10.0 ** (self.rnr_db / 10.0)

    @property
    def rf_noise_var(self) -> float:
        """RF baseline noise variance: sigma_n^2 = sigma_w^2 * 10^(penalty/10)."""
        return self.noise_var * 10.0 ** (self.rf_noise_penalty_db / 10.0)


_INT_FIELDS = {"n_tx", "n_rx", "shots", "psk_order", "rf_shots", "master_seed"}

_EXPERIMENT_KEYS = {
    "sweep_variable": str,
    "grid": "grid",
    "trials": int,
    "p_fa_target": float,
    "roc_shots": "grid",
    "held_out": "bool",
    "common_random_numbers": "bool",
    "workers": int,
}


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_grid(s: str) -> list[float]:
    vals = [float(tok) for tok in s.replace(",", " ").split()]
    if not vals:
        raise ValueError("grid must be nonempty")
    return vals


def _parse_float(s: str) -> float:
    return float(s)  # accepts "-inf" (reference off)


def load_config(path: str | Path) -> tuple[SystemConfig, dict]:
    """Parse a config file into (SystemConfig, experiment-options dict)."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    parser.read(path)

    cfg = SystemConfig()
    if parser.has_section("system"):
        for key, raw in parser.items("system"):
            if not hasattr(cfg, key):
                raise ValueError(f"unknown [system] key: {key}")
            value = int(raw) if key in _INT_FIELDS else _parse_float(raw)
            setattr(cfg, key, value)
    cfg.validate()

    experiment: dict = {}
    if parser.has_section("experiment"):
        for key, raw in parser.items("experiment"):
            if key not in _EXPERIMENT_KEYS:
                raise ValueError(f"unknown [experiment] key: {key}")
            kind = _EXPERIMENT_KEYS[key]
            if kind is str:
                experiment[key] = raw.strip()
            elif kind is int:
                experiment[key] = int(float(raw))
            elif kind is float:
                experiment[key] = float(raw)
            elif kind == "bool":
                experiment[key] = _parse_bool(raw)
            elif kind == "grid":
                experiment[key] = _parse_grid(raw)
    return cfg, experiment


def apply_overrides(cfg: SystemConfig, experiment: dict, pairs: list[str]) -> None:
    """Apply repeated ``--set key=value`` overrides in place."""
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"override must look like key=value: {pair!r}")
        key, raw = pair.split("=", 1)
        key = key.strip()
        if hasattr(cfg, key):
            value = int(raw) if key in _INT_FIELDS else _parse_float(raw)
            setattr(cfg, key, value)
        elif key in _EXPERIMENT_KEYS:
            kind = _EXPERIMENT_KEYS[key]
            if kind is str:
                experiment[key] = raw.strip()
            elif kind is int:
                experiment[key] = int(float(raw))
            elif kind is float:
                experiment[key] = float(raw)
            elif kind == "bool":
                experiment[key] = _parse_bool(raw)
            elif kind == "grid":
                experiment[key] = _parse_grid(raw)
        else:
            raise ValueError(f"unknown config key: {key}")
    cfg.validate()


def dump_config(cfg: SystemConfig, experiment: dict, path: str | Path) -> None:
    """Echo the resolved configuration back out as a config file."""
    parser = configparser.ConfigParser()
    parser["system"] = {
        f.name: repr(getattr(cfg, f.name)) for f in dataclasses.fields(cfg)
    }
    parser["experiment"] = {
        k: (" ".join(repr(x) for x in v) if isinstance(v, list) else repr(v))
        for k, v in experiment.items()
    }
    with open(path, "w") as fh:
        parser.write(fh)
