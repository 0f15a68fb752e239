"""Scenario files and overrides.

A scenario file is flat INI text with four sections mirroring the
Scenario fields::

    [sim]       layout, n_sites, cell_radius_m, site_spacing_m,
                corridor_lane_m, boundary_margin_m, n_ues_per_cell,
                ue_speed_kmh, sim_duration_s, step_s, report_period_s,
                seed, policy, fixed_ttt_ms, fixed_hyst_db
    [radio]     tx_power_dbm, carrier_freq_hz, bandwidth_hz, noise_figure_db
    [channel]   path_loss_exponent, shadowing_sigma_db,
                thermal_noise_density_dbm_hz, meas_noise_sigma_db,
                env_noise_mean_dbm, env_noise_sigma_db
    [learning]  alpha, gamma, r

Every key is optional and falls back to the package default.  The same
section.key=value pairs are accepted as command-line overrides.
"""

from __future__ import annotations

import configparser
import dataclasses
import os

from .sim import ConfigError, Scenario

_SIM_KEYS = {
    "layout": str,
    "n_sites": int,
    "cell_radius_m": float,
    "site_spacing_m": float,
    "corridor_lane_m": float,
    "boundary_margin_m": float,
    "n_ues_per_cell": int,
    "ue_speed_kmh": float,
    "sim_duration_s": float,
    "step_s": float,
    "report_period_s": float,
    "seed": int,
    "policy": str,
    "fixed_ttt_ms": int,
    "fixed_hyst_db": int,
}
_RADIO_KEYS = {
    "tx_power_dbm": float,
    "carrier_freq_hz": float,
    "bandwidth_hz": float,
    "noise_figure_db": float,
}
_CHANNEL_KEYS = {
    "path_loss_exponent": float,
    "shadowing_sigma_db": float,
    "thermal_noise_density_dbm_hz": float,
    "meas_noise_sigma_db": float,
    "env_noise_mean_dbm": float,
    "env_noise_sigma_db": float,
}
_LEARNING_KEYS = {"alpha": float, "gamma": float, "r": float}
_SECTIONS = {
    "sim": _SIM_KEYS,
    "radio": _RADIO_KEYS,
    "channel": _CHANNEL_KEYS,
    "learning": _LEARNING_KEYS,
}


def _coerce(section: str, key: str, raw: str):
    if section not in _SECTIONS:
        raise ConfigError(section, "unknown section")
    if key not in _SECTIONS[section]:
        raise ConfigError(f"{section}.{key}", "unknown key")
    kind = _SECTIONS[section][key]
    raw = raw.strip()
    if section == "sim" and key == "boundary_margin_m" and raw.lower() in ("none", ""):
        return None
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}", f"cannot parse {raw!r} as {kind.__name__}") from exc


def _apply(scenario: Scenario, section: str, key: str, value) -> Scenario:
    if section not in _SECTIONS:
        raise ConfigError(section, "unknown section")
    if key not in _SECTIONS[section]:
        raise ConfigError(f"{section}.{key}", "unknown key")
    if section == "sim" or section == "radio":
        return dataclasses.replace(scenario, **{key: value})
    if section == "channel":
        return dataclasses.replace(scenario, channel=dataclasses.replace(scenario.channel, **{key: value}))
    return dataclasses.replace(scenario, learning=dataclasses.replace(scenario.learning, **{key: value}))


def load_scenario(path: str | None = None, overrides: list[str] | None = None, base: Scenario | None = None) -> Scenario:
    """Build a Scenario from defaults, an optional file, and overrides."""
    scenario = base if base is not None else Scenario()
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError("scenario", f"file not found: {path}")
        parser = configparser.ConfigParser()
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError("scenario", f"cannot parse {path}: {exc}") from exc
        for section in parser.sections():
            if section not in _SECTIONS:
                raise ConfigError(section, f"unknown section in {path}")
            for key, raw in parser.items(section):
                scenario = _apply(scenario, section, key, _coerce(section, key, raw))
    for item in overrides or []:
        scenario = apply_override(scenario, item)
    return scenario


def apply_override(scenario: Scenario, item: str) -> Scenario:
    """Apply one 'section.key=value' override."""
    if "=" not in item:
        raise ConfigError(item, "override must look like section.key=value")
    target, raw = item.split("=", 1)
    if "." not in target:
        raise ConfigError(target, "override key must look like section.key")
    section, key = target.strip().split(".", 1)
    if section not in _SECTIONS:
        raise ConfigError(section, "unknown section")
    if key not in _SECTIONS[section]:
        raise ConfigError(f"{section}.{key}", "unknown key")
    return _apply(scenario, section, key, _coerce(section, key, raw))


def dump_scenario(scenario: Scenario) -> str:
    """Render a Scenario back into the INI scenario format."""
    lines = ["[sim]"]
    for key in _SIM_KEYS:
        value = getattr(scenario, key)
        lines.append(f"{key} = {'none' if value is None else value}")
    lines.append("")
    lines.append("[radio]")
    for key in _RADIO_KEYS:
        lines.append(f"{key} = {getattr(scenario, key)}")
    lines.append("")
    lines.append("[channel]")
    for key in _CHANNEL_KEYS:
        lines.append(f"{key} = {getattr(scenario.channel, key)}")
    lines.append("")
    lines.append("[learning]")
    for key in _LEARNING_KEYS:
        lines.append(f"{key} = {getattr(scenario.learning, key)}")
    lines.append("")
    return "\n".join(lines)
