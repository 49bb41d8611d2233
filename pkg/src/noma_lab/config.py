"""System configuration: scenario constants, unit handling, config-file parsing.

All powers are stored in linear watts; dBm/dBW/dB values are converted at
load time. The config file format is flat ``key = value`` text with ``#``
comments; power values accept a ``dBm``/``dBW``/``W``/``mW`` suffix and the
noise PSD accepts ``dBm/Hz``/``W/Hz``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace, fields


class ConfigError(ValueError):
    """Raised for malformed or inconsistent configuration input."""


def dbm_to_w(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def dbw_to_w(x_dbw: float) -> float:
    return 10.0 ** (x_dbw / 10.0)


def w_to_dbm(x_w: float) -> float:
    return 10.0 * math.log10(x_w) + 30.0


@dataclass(frozen=True)
class SystemConfig:
    """All scenario constants. Powers in W, bandwidth in Hz, distances in m."""

    M: int = 10                  # user pairs
    N: int = 10                  # subcarriers
    H: int = 3                   # max user pairs per SC pair
    V: int = 4                   # max SC pairs per user pair
    bandwidth_total: float = 4.5e6   # Hz, system bandwidth
    P_s: float = dbm_to_w(46.0)      # W, RS peak power (46 dBm)
    P_Am: float = 0.3            # W, per-user uplink power (300 mW)
    P_Bm: float = 0.3            # W
    P_c: float = dbw_to_w(1.0)   # W, circuit power (1 dBW; unit ambiguous upstream)
    N0: float = dbm_to_w(-150.0)     # W/Hz, noise PSD (-150 dBm/Hz)
    R_min: float = 0.0           # bit/s, QoS floor for each pair's secrecy rate
    lambda_ftpa: float = 0.5     # FTPA decay factor
    alpha1: float = 0.5          # CJ power split at A users
    alpha2: float = 0.5          # CJ power split at B users
    cj_enabled: bool = False
    epsilon: float = 1e-4        # solver convergence tolerance (normalized)
    L_m: int = 50                # max iterations / swap operations
    rng_seed: int = 2024
    cell_radius: float = 30.0    # m
    eve_distance: float = 500.0  # m
    carrier_freq: float = 900.0  # MHz (Hata)
    h_base: float = 30.0         # m, RS antenna height (Hata)
    h_mobile: float = 1.5        # m, user antenna height (Hata)
    pairing_radius: float = 5.0  # m, max separation of a user pair
    eve_cov_strict_paper: bool = True   # keep the extra MA-phase leakage term
    sc_full_pairing: bool = False       # (i, j) SC-pair units instead of (i, i)
    per_sc_power_cap: bool = False      # per-SC budget P_s/N instead of global

    @property
    def sc_bandwidth(self) -> float:
        """Per-SC bandwidth B = bandwidth_total / N."""
        return self.bandwidth_total / self.N

    @property
    def sigma2(self) -> float:
        """Per-SC noise power sigma^2 = N0 * B (W)."""
        return self.N0 * self.sc_bandwidth

    def validate(self) -> "SystemConfig":
        if self.M < 1 or self.N < 1 or self.H < 1 or self.V < 1:
            raise ConfigError("M, N, H, V must all be >= 1")
        for name in ("bandwidth_total", "P_s", "P_Am", "P_Bm", "P_c", "N0"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be strictly positive")
        if not (0.0 <= self.alpha1 <= 1.0 and 0.0 <= self.alpha2 <= 1.0):
            raise ConfigError("alpha1 and alpha2 must lie in [0, 1]")
        if self.R_min < 0.0:
            raise ConfigError("R_min must be >= 0")
        if self.epsilon <= 0.0 or self.L_m < 1:
            raise ConfigError("epsilon must be > 0 and L_m >= 1")
        for name in ("cell_radius", "eve_distance", "carrier_freq",
                     "h_base", "h_mobile", "pairing_radius"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be strictly positive")
        if self.sc_bandwidth <= 0.0:
            raise ConfigError("per-SC bandwidth must be strictly positive")
        return self


_INT_FIELDS = {"M", "N", "H", "V", "L_m", "rng_seed"}
_BOOL_FIELDS = {"cj_enabled", "eve_cov_strict_paper", "sc_full_pairing",
                "per_sc_power_cap"}
_POWER_FIELDS = {"P_s", "P_Am", "P_Bm", "P_c"}
_PSD_FIELDS = {"N0"}
_FREQ_FIELDS = {"bandwidth_total"}
_FIELD_NAMES = {f.name for f in fields(SystemConfig)}


def parse_value(key: str, raw: str):
    """Parse one config value for `key`, handling unit suffixes."""
    raw = raw.strip()
    if key in _BOOL_FIELDS:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")

    parts = raw.split()
    num, unit = parts[0], (parts[1] if len(parts) > 1 else "")
    # allow "46dBm" with no space
    if not unit:
        for suffix in ("dBm/Hz", "W/Hz", "mW/Hz", "dBm", "dBW", "mW", "W",
                       "MHz", "kHz", "Hz"):
            if num.endswith(suffix):
                num, unit = num[: -len(suffix)], suffix
                break
    try:
        value = float(num)
    except ValueError as exc:
        raise ConfigError(f"{key}: malformed number {raw!r}") from exc

    if key in _INT_FIELDS:
        if unit:
            raise ConfigError(f"{key}: unexpected unit {unit!r}")
        if value != int(value):
            raise ConfigError(f"{key}: expected an integer, got {raw!r}")
        return int(value)

    if key in _POWER_FIELDS:
        if unit == "dBm":
            return dbm_to_w(value)
        if unit == "dBW":
            return dbw_to_w(value)
        if unit == "mW":
            return value * 1e-3
        if unit in ("", "W"):
            return value
        raise ConfigError(f"{key}: unsupported power unit {unit!r}")
    if key in _PSD_FIELDS:
        if unit == "dBm/Hz":
            return dbm_to_w(value)
        if unit == "mW/Hz":
            return value * 1e-3
        if unit in ("", "W/Hz"):
            return value
        raise ConfigError(f"{key}: unsupported PSD unit {unit!r}")
    if key in _FREQ_FIELDS:
        if unit == "MHz":
            return value * 1e6
        if unit == "kHz":
            return value * 1e3
        if unit in ("", "Hz"):
            return value
        raise ConfigError(f"{key}: unsupported frequency unit {unit!r}")
    if unit:
        raise ConfigError(f"{key}: unexpected unit {unit!r}")
    return value


def parse_config_lines(text: str) -> dict:
    """Parse `key = value` lines into a raw {key: string} map."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        raw[key] = value
    return raw


def config_from_mapping(raw: dict, base: SystemConfig | None = None) -> SystemConfig:
    """Build a SystemConfig from raw string values, starting from `base`."""
    cfg = base if base is not None else SystemConfig()
    updates = {}
    for key, value in raw.items():
        if key not in _FIELD_NAMES:
            raise ConfigError(f"unknown config key {key!r}")
        updates[key] = parse_value(key, value) if isinstance(value, str) else value
    return replace(cfg, **updates).validate()


def load_config(path: str, base: SystemConfig | None = None) -> SystemConfig:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return config_from_mapping(parse_config_lines(text), base=base)


def apply_overrides(cfg: SystemConfig, pairs: list[str]) -> SystemConfig:
    """Apply `key=value` override strings in order (CLI --set)."""
    raw = {}
    for item in pairs:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        key, value = (part.strip() for part in item.split("=", 1))
        raw[key] = value
        cfg = config_from_mapping({key: value}, base=cfg)
    return cfg
