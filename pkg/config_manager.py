import configparser
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from dsm import NtfSpec, ntf_first_order, ntf_notch
from gating import SyncPulseConfig
from plant import CircuitParams, SimConfig
from utils import parse_conf, parse_si

logger = logging.getLogger(__name__)

NTF_KINDS = ("first_order", "notch")
SIDES = ("primary", "secondary")

# config key -> CircuitParams field
_CIRCUIT_KEYS = {
    "l1": "L1", "l2": "L2", "c1": "C1", "c2": "C2", "r1": "R1", "r2": "R2",
    "k": "k", "vg": "Vg", "vo": "Vo", "fs": "fs",
}
_SIM_INT_KEYS = ("steps_per_period", "duration_periods", "transient_discard_periods")
_OTHER_KEYS = ("ntf_kind", "notch_ratio", "pole_radius", "side", "d_profile",
               "blanking_fraction", "seed", "jobs")
KNOWN_KEYS = frozenset(_CIRCUIT_KEYS) | frozenset(_SIM_INT_KEYS) | frozenset(_OTHER_KEYS)

# kind -> parameter names
_PROFILE_KINDS = {
    "constant": ("value",),
    "sweep": ("start", "stop", "step"),
    "sinusoid": ("offset", "amplitude", "frequency"),
    "ramp": ("start", "stop", "duration"),
}


class ConfigError(ValueError):
    """Invalid configuration file content or option value."""


@dataclass(frozen=True)
class DProfile:
    """Pulse-density input: constant, sweep, sinusoid or ramp."""
    kind: str = "constant"
    params: tuple = (0.963,)

    def __post_init__(self):
        if self.kind not in _PROFILE_KINDS:
            raise ConfigError(f"unknown d_profile kind '{self.kind}', "
                              f"expected one of {sorted(_PROFILE_KINDS)}")
        names = _PROFILE_KINDS[self.kind]
        if len(self.params) != len(names):
            raise ConfigError(f"d_profile '{self.kind}' takes {len(names)} values: "
                              f"{' '.join(names)}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        p = self.params
        if self.kind == "constant" and not 0.0 <= p[0] <= 1.0:
            raise ConfigError("constant density must lie in [0, 1]")
        if self.kind in ("sweep", "ramp"):
            if not (0.0 <= p[0] <= 1.0 and 0.0 <= p[1] <= 1.0):
                raise ConfigError(f"{self.kind} endpoints must lie in [0, 1]")
            if p[2] <= 0.0:
                raise ConfigError(f"{self.kind} {_PROFILE_KINDS[self.kind][2]} must be positive")
            if self.kind == "sweep" and p[1] < p[0]:
                raise ConfigError("sweep stop must not be below start")
        if self.kind == "sinusoid":
            offset, amplitude, frequency = p
            if amplitude < 0.0 or offset - amplitude < 0.0 or offset + amplitude > 1.0:
                raise ConfigError("sinusoid must stay within [0, 1]")
            if frequency <= 0.0:
                raise ConfigError("sinusoid frequency must be positive")

    @classmethod
    def parse(cls, text: str) -> "DProfile":
        parts = text.split()
        if not parts:
            raise ConfigError("d_profile is empty")
        try:
            values = tuple(parse_si(v) for v in parts[1:])
        except ValueError as e:
            raise ConfigError(f"d_profile: {e}") from e
        return cls(kind=parts[0].lower(), params=values)

    def points(self) -> np.ndarray:
        """Discrete densities of a constant or sweep profile, stop included."""
        if self.kind == "constant":
            return np.array(self.params)
        if self.kind != "sweep":
            raise ConfigError(f"d_profile '{self.kind}' has no discrete points")
        start, stop, step = self.params
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        values = start + step * np.arange(count)
        if values[-1] < stop - 1e-12:
            values = np.append(values, stop)
        return np.round(values, 10)

    def sample(self, t) -> np.ndarray:
        """Density at times t (seconds), clipped to [0, 1]."""
        t = np.asarray(t, dtype=float)
        p = self.params
        if self.kind == "constant":
            d = np.full(t.shape, p[0])
        elif self.kind == "sinusoid":
            d = p[0] + p[1] * np.sin(2.0 * np.pi * p[2] * t)
        elif self.kind == "ramp":
            d = p[0] + (p[1] - p[0]) * np.clip(t / p[2], 0.0, 1.0)
        else:
            raise ConfigError("a sweep profile has no time course")
        return np.clip(d, 0.0, 1.0)


@dataclass(frozen=True)
class ExperimentConfig:
    circuit: CircuitParams = field(default_factory=CircuitParams)
    ntf_kind: str = "first_order"
    notch_ratio: float = None
    pole_radius: float = 0.9
    side: str = "secondary"
    d_profile: DProfile = field(default_factory=DProfile)
    sim: SimConfig = field(default_factory=SimConfig)
    sync: SyncPulseConfig = field(default_factory=SyncPulseConfig)
    seed: int = 0  # reserved; every experiment is deterministic
    jobs: int = 1

    def __post_init__(self):
        if self.ntf_kind not in NTF_KINDS:
            raise ConfigError(f"ntf_kind must be one of {NTF_KINDS}, got '{self.ntf_kind}'")
        if self.side not in SIDES:
            raise ConfigError(f"side must be one of {SIDES}, got '{self.side}'")
        if self.ntf_kind == "notch" and self.notch_ratio is None:
            raise ConfigError("notch_ratio is required when ntf_kind = notch")
        if self.ntf_kind != "notch" and self.notch_ratio is not None:
            raise ConfigError("notch_ratio is only valid with ntf_kind = notch")
        if self.notch_ratio is not None and not 0.0 < self.notch_ratio < 1.0:
            raise ConfigError(f"notch_ratio must lie in (0, 1), got {self.notch_ratio}")
        if not 0.0 < self.pole_radius < 1.0:
            raise ConfigError(f"pole_radius must lie in (0, 1), got {self.pole_radius}")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")

    @property
    def design_notch_ratio(self) -> float:
        """Notch used when comparing against NTF1: configured, else k / 2."""
        return self.notch_ratio if self.notch_ratio is not None else 0.5 * self.circuit.k

    def build_ntf(self) -> NtfSpec:
        if self.ntf_kind == "notch":
            return ntf_notch(self.notch_ratio, self.pole_radius)
        return ntf_first_order()

    def with_overrides(self, ntf: str = None, notch_ratio: float = None, side: str = None,
                       jobs: int = None) -> "ExperimentConfig":
        """Apply command-line overrides on top of file values."""
        changes = {}
        if ntf is not None:
            changes["ntf_kind"] = {"first": "first_order", "notch": "notch"}.get(ntf, ntf)
            if changes["ntf_kind"] == "first_order":
                changes["notch_ratio"] = None
            elif notch_ratio is None and self.notch_ratio is None:
                changes["notch_ratio"] = self.design_notch_ratio
        if notch_ratio is not None:
            changes["notch_ratio"] = notch_ratio
        if side is not None:
            changes["side"] = side
        if jobs is not None:
            changes["jobs"] = jobs
        return replace(self, **changes) if changes else self


def _number(key: str, value: str) -> float:
    try:
        return parse_si(value)
    except ValueError as e:
        raise ConfigError(f"{key}: {e}") from e


def _integer(key: str, value: str) -> int:
    number = _number(key, value)
    if number != int(number):
        raise ConfigError(f"{key} must be an integer, got {value}")
    return int(number)


def load_config(path) -> ExperimentConfig:
    """Build an ExperimentConfig from a flat key = value file.

    Missing keys keep the 300 kHz prototype defaults.
    """
    path = Path(path)
    try:
        values = parse_conf(path)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except configparser.Error as e:
        raise ConfigError(f"cannot parse {path}: {e}") from e

    for key in sorted(values):
        if key not in KNOWN_KEYS:
            raise ConfigError(f"unknown config key '{key}'")

    circuit_kwargs = {attr: _number(key, values[key])
                      for key, attr in _CIRCUIT_KEYS.items() if key in values}
    sim_kwargs = {key: _integer(key, values[key]) for key in _SIM_INT_KEYS if key in values}
    try:
        circuit = CircuitParams(**circuit_kwargs)
        sim = SimConfig(**sim_kwargs)
        sync = SyncPulseConfig(**({"blanking_fraction": _number("blanking_fraction",
                                                                values["blanking_fraction"])}
                                  if "blanking_fraction" in values else {}))
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e)) from e

    kwargs = {"circuit": circuit, "sim": sim, "sync": sync}
    if "ntf_kind" in values:
        kwargs["ntf_kind"] = values["ntf_kind"].lower()
    if "notch_ratio" in values:
        kwargs["notch_ratio"] = _number("notch_ratio", values["notch_ratio"])
    if "pole_radius" in values:
        kwargs["pole_radius"] = _number("pole_radius", values["pole_radius"])
    if "side" in values:
        kwargs["side"] = values["side"].lower()
    if "d_profile" in values:
        kwargs["d_profile"] = DProfile.parse(values["d_profile"])
    if "seed" in values:
        kwargs["seed"] = _integer("seed", values["seed"])
    if "jobs" in values:
        kwargs["jobs"] = _integer("jobs", values["jobs"])

    cfg = ExperimentConfig(**kwargs)
    logger.info("Loaded config from %s (%d keys)", path, len(values))
    if not circuit.is_fully_resonant():
        logger.warning("Tanks are not resonant within 2%% of fs (%.1f kHz, %.1f kHz)",
                       circuit.primary_resonance / 1e3, circuit.secondary_resonance / 1e3)
    return cfg
