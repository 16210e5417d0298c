"""``key = value`` configuration files for simulation runs."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .protocol import NoiseParams

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimulationConfig:
    noise: bool = False
    t1_a: float = 4.8
    t2_a: float = 0.2
    t1_b: float = 17.2
    t2_b: float = 0.35
    j_coupling: float = 214.95
    acquisition_delay: float = 0.0
    epsilon: float = 1.0
    rf_duration_per_radian: float = 0.0
    polar_divisions: int = 12
    equatorial_divisions: int = 8
    readout_sigma: float = 0.0
    seed: int = 20020101

    def noise_params(self, enabled: bool | None = None) -> NoiseParams:
        return NoiseParams(
            t1_a=self.t1_a,
            t2_a=self.t2_a,
            t1_b=self.t1_b,
            t2_b=self.t2_b,
            j_coupling=self.j_coupling,
            enabled=self.noise if enabled is None else enabled,
            acquisition_delay=self.acquisition_delay,
        )

    def replace(self, **changes) -> "SimulationConfig":
        return dataclasses.replace(self, **changes)


def _coerce(key: str, raw: str, kind):
    if kind is bool:
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ConfigError(f"{key}: expected on/off, got {raw!r}")
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind.__name__}") from None


def parse_config(text: str, base: SimulationConfig | None = None) -> SimulationConfig:
    base = base or SimulationConfig()
    types = {f.name: f.type for f in dataclasses.fields(SimulationConfig)}
    kinds = {"bool": bool, "float": float, "int": int}
    changes = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key not in types:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        changes[key] = _coerce(key, value, kinds[types[key]])
    return base.replace(**changes)


def load_config(path: str | Path) -> SimulationConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))
