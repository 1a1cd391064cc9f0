"""Device and noise parameters, and the key=value config file that carries them."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields, replace
from pathlib import Path

TIME_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9, "ps": 1e-12, "fs": 1e-15}
_ENERGY_UNITS = {"eV": 1.0, "meV": 1e-3, "ueV": 1e-6, "µeV": 1e-6}
_FIELD_UNITS = {"T": 1.0, "mT": 1e-3}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|inf)\s*([A-Za-zµ]*)\s*$")

BOHR_MAGNETON_EV_PER_T = 5.7883818060e-5


def parse_quantity(text: str | float, units: dict[str, float], default_unit: str | None = None) -> float:
    """'50us' -> 5e-05. Bare numbers take ``default_unit`` (SI base if None)."""
    if isinstance(text, (int, float)):
        return float(text)
    m = _QUANTITY.match(text)
    if not m:
        raise ValueError(f"cannot parse quantity {text!r}")
    number, unit = m.groups()
    value = math.inf if number == "inf" else float(number)
    unit = unit or default_unit
    if unit is None:
        return value
    if unit not in units:
        raise ValueError(f"unknown unit {unit!r} in {text!r}; expected one of {sorted(units)}")
    return value * units[unit]


def parse_time(text: str | float) -> float:
    return parse_quantity(text, TIME_UNITS)


@dataclass(frozen=True)
class NoiseParams:
    T2: float = 50e-6
    T1: float = math.inf
    rotation_angle_jitter: float = 0.0
    split_amplitude_imbalance: float = 0.0

    def __post_init__(self):
        if not self.T2 > 0:
            raise ValueError("T2 must be positive")
        if math.isfinite(self.T1) and self.T1 < self.T2 / 2:
            raise ValueError("T1 must be at least T2/2")
        if not -1.0 <= self.split_amplitude_imbalance <= 1.0:
            raise ValueError("split_amplitude_imbalance must lie in [-1, 1]")
        if self.rotation_angle_jitter < 0:
            raise ValueError("rotation_angle_jitter is a standard deviation")

    @classmethod
    def ideal(cls) -> "NoiseParams":
        return cls(T2=math.inf)

    @property
    def is_stochastic(self) -> bool:
        """True if any channel draws random numbers (the imbalance is coherent)."""
        return not (math.isinf(self.T2) and math.isinf(self.T1) and self.rotation_angle_jitter == 0)

    @property
    def is_ideal(self) -> bool:
        return (
            math.isinf(self.T2)
            and math.isinf(self.T1)
            and self.rotation_angle_jitter == 0
            and self.split_amplitude_imbalance == 0
        )


@dataclass(frozen=True)
class DeviceConfig:
    """Device constants and default pulse durations.

    ``epsilon`` (E_a - E_0) and ``zeeman_splitting`` are carried for the record;
    the ideal rotating-frame model has no dynamics that depend on them.
    """

    epsilon: float = 1e-3
    zeeman_splitting: float = 2 * BOHR_MAGNETON_EV_PER_T
    rotation_duration: float = 1e-12
    bias_window: float = 300e-12
    polarization_duration: float = 50e-12
    optical_field_bound: float = 20.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon = E_a - E_0 must be positive")
        for name in ("rotation_duration", "bias_window", "polarization_duration"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


_KEY_UNITS = {
    "T2": TIME_UNITS,
    "T1": TIME_UNITS,
    "rotation_angle_jitter": None,
    "split_amplitude_imbalance": None,
    "epsilon": _ENERGY_UNITS,
    "zeeman_splitting": _ENERGY_UNITS,
    "rotation_duration": TIME_UNITS,
    "bias_window": TIME_UNITS,
    "polarization_duration": TIME_UNITS,
    "optical_field_bound": _FIELD_UNITS,
}


def parse_config_text(text: str) -> tuple[DeviceConfig, NoiseParams]:
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("["):
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        value = value.strip("'\"")
        if key not in _KEY_UNITS:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        units = _KEY_UNITS[key]
        values[key] = parse_quantity(value, units) if units else float(value)

    device_keys = {f.name for f in fields(DeviceConfig)}
    device = replace(DeviceConfig(), **{k: v for k, v in values.items() if k in device_keys})
    noise = replace(NoiseParams(), **{k: v for k, v in values.items() if k not in device_keys})
    return device, noise


def load_config(path: str | Path) -> tuple[DeviceConfig, NoiseParams]:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))
