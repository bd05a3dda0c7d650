"""INI-style experiment configuration files.

Recognized sections: [acquisition], [device], [analysis] and any number of
[shield.<name>] sections.  Keys are named exactly like the corresponding
dataclass fields; unknown sections or keys are configuration errors.
Anything omitted falls back to the committed defaults.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import replace

from . import defaults
from .harness import ExperimentConfig, default_config
from .physics import ShieldProfile


class ConfigError(Exception):
    """The configuration file is missing, malformed or inconsistent."""


def _parse(caster, section: str, key: str, raw: str):
    try:
        return caster(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from exc


def _c_grid(raw: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in raw.split(",") if tok.strip())


_ACQ_FIELDS = {"n_traces_per_class": int, "n_points": int, "n_avg": int,
               "f_start_hz": float, "f_stop_hz": float,
               "noise_sigma": float, "seed": int}
_DEVICE_FIELDS = {"z_probe_ohm": complex, "r0_ohm": float, "l_henry": float,
                  "c_farad": float, "delta_r_ohm": float,
                  "jitter_sigma_ohm": float, "shield_static_reflection": complex}
_SHIELD_FIELDS = {"band_lo_hz": float, "band_hi_hz": float,
                  "se_in_band_db": float, "se_high_cap_db": float,
                  "rolloff_db_per_decade": float}
_ANALYSIS_FIELDS = {"top_k": int, "variance_target": float,
                    "split_train_fraction": float, "folds": int,
                    "c_grid": _c_grid, "seed": int}


def _section_kwargs(cp: configparser.ConfigParser, section: str, fields: dict) -> dict:
    out = {}
    for key, raw in cp.items(section):
        if key not in fields:
            raise ConfigError(f"unknown key {key!r} in section [{section}]")
        out[key] = _parse(fields[key], section, key, raw)
    return out


def parse_config(path) -> ExperimentConfig:
    """Load an experiment configuration, layering the file over defaults."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse config file: {exc}") from exc

    cfg = default_config()
    shields: list[ShieldProfile] = []
    for section in cp.sections():
        if section == "acquisition":
            kwargs = _section_kwargs(cp, section, _ACQ_FIELDS)
            cfg = replace(cfg, acquisition=_replace_checked(
                cfg.acquisition, kwargs, section))
        elif section == "device":
            kwargs = _section_kwargs(cp, section, _DEVICE_FIELDS)
            cfg = replace(cfg, device=_replace_checked(cfg.device, kwargs, section))
        elif section == "analysis":
            kwargs = _section_kwargs(cp, section, _ANALYSIS_FIELDS)
            cfg = _replace_checked(cfg, kwargs, section)
        elif section.startswith("shield."):
            name = section[len("shield."):]
            if not name:
                raise ConfigError("shield section needs a name: [shield.<name>]")
            kwargs = _section_kwargs(cp, section, _SHIELD_FIELDS)
            base = dict(band_lo_hz=defaults.SHIELD_BAND_LO_HZ,
                        band_hi_hz=defaults.SHIELD_BAND_HI_HZ,
                        se_in_band_db=defaults.SHIELD_SE_IN_BAND_DB,
                        se_high_cap_db=33.0,
                        rolloff_db_per_decade=defaults.SHIELD_ROLLOFF_DB_PER_DECADE)
            base.update(kwargs)
            try:
                shields.append(ShieldProfile(name=name, **base))
            except ValueError as exc:
                raise ConfigError(f"[{section}]: {exc}") from exc
        else:
            raise ConfigError(f"unknown section [{section}]")

    if shields:
        cfg = replace(cfg, shields=tuple(shields))
    return cfg


def _replace_checked(obj, kwargs: dict, section: str):
    try:
        return replace(obj, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"[{section}]: {exc}") from exc
