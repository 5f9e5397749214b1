"""
Run configuration for LZS Studio
Typed sections of a run description together with the parameter schemas used to validate them.
The defaults reproduce the baseline device and drive (omega0 = 0.003, T = 0.0014, gamma = 0.001).
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .device import BATH_TAGS, FqParams, OhmicBath, TlsParams

RUN_MODES = ("finite_time", "steady_state", "timescales", "rwa_compare", "isolated")
AXIS_UNITS = ("absolute", "f_omega")

# Parameter schemas: type, bounds (min/max inclusive, gt/lt exclusive), choices and defaults
DEVICE_SCHEMA: Dict[str, Dict[str, Any]] = {
    "model": {"type": "str", "choices": ("tls", "multilevel"), "default": "tls",
              "description": "two-level reduction or truncated multilevel flux qubit"},
    "alpha": {"type": "float", "gt": 0.0, "lt": 2.0, "default": 0.8, "description": "junction ratio"},
    "eta": {"type": "float", "gt": 0.0, "lt": 2.0, "default": 0.25, "description": "sqrt(8 E_C / E_J)"},
    "n_charge": {"type": "int", "min": 4, "default": 10, "description": "charge cutoff N"},
    "levels": {"type": "int", "min": 2, "default": 4, "description": "levels kept by the multilevel model"},
    "tls": {"type": "tls", "default": "derive", "description": "'derive' or explicit two-level parameters"},
}

TLS_SCHEMA: Dict[str, Dict[str, Any]] = {
    "delta": {"type": "float", "gt": 0.0, "required": True},
    "i_p": {"type": "float", "gt": 0.0, "required": True},
    "lambda_f": {"type": "float", "min": 0.0, "default": 0.0},
    "lambda_ch": {"type": "float", "min": 0.0, "default": 0.0},
    "lambda_cc": {"type": "float", "min": 0.0, "default": 0.0},
}

DRIVE_SCHEMA: Dict[str, Dict[str, Any]] = {
    "omega0": {"type": "float", "gt": 0.0, "default": 0.003, "description": "drive frequency"},
    "f_dc": {"type": "axis", "required": True, "description": "static detuning axis"},
    "f_ac": {"type": "axis", "required": True, "description": "drive amplitude axis"},
    "theta": {"type": "axis", "default": 0.0, "description": "noise mixing angle axis"},
}

BATH_SCHEMA: Dict[str, Dict[str, Any]] = {
    "tag": {"type": "str", "choices": BATH_TAGS, "required": True},
    "gamma": {"type": "float", "min": 0.0, "default": 0.001},
    "omega_c": {"type": "float", "gt": 0.0, "default": 0.15},
    "temperature": {"type": "float", "gt": 0.0, "default": 0.0014},
}

COUPLING_SCHEMA: Dict[str, Dict[str, Any]] = {
    "tag": {"type": "str", "choices": BATH_TAGS, "required": True},
    "kind": {"type": "str", "choices": ("z", "y", "x", "flux", "charge", "critical-current"), "required": True},
    "strength": {"type": "strength", "default": "derive"},
    "mixing": {"type": "str", "choices": ("none", "cos", "sin"), "default": "none"},
}

RUN_SCHEMA: Dict[str, Dict[str, Any]] = {
    "mode": {"type": "str", "choices": RUN_MODES, "required": True},
    "times": {"type": "times", "default": [1000.0], "description": "evaluation times in drive periods"},
    "output": {"type": "str", "default": "lzs_output.csv"},
    "threads": {"type": "int", "min": 1, "default": 4},
    "p_plus": {"type": "str", "choices": ("averaged", "stroboscopic"), "default": "averaged"},
    "observables": {"type": "observables", "default": []},
    "rate_labels": {"type": "str", "choices": ("main", "appendix"), "default": "main"},
    "n_periods": {"type": "int", "min": 1, "default": 1000},
    "resonance": {"type": "optional_int", "default": None},
    "mixing_mode": {"type": "str", "choices": ("strength", "gamma"), "default": "strength"},
    "t_exp": {"type": "float", "gt": 0.0, "default": 1000.0},
}

SOLVER_SCHEMA: Dict[str, Dict[str, Any]] = {
    "n_steps": {"type": "int", "min": 256, "power_of_two": True, "default": 4096},
    "n_grid": {"type": "int", "min": 4, "power_of_two": True, "default": 4096},
    "harmonics": {"type": "optional_int", "default": None},
    "tail_tolerance": {"type": "float", "gt": 0.0, "lt": 1.0, "default": 1e-8},
    "magnus_order": {"type": "int", "choices": (2, 4), "default": 4},
    "p_plus_samples": {"type": "int", "min": 1, "default": 256},
}

LOGGING_SCHEMA: Dict[str, Dict[str, Any]] = {
    "level": {"type": "str", "choices": ("DEBUG", "INFO", "WARNING", "ERROR"), "default": "INFO"},
    "file": {"type": "optional_str", "default": "lzstudio.log"},
}

SECTION_SCHEMAS = {
    "device": DEVICE_SCHEMA,
    "drive": DRIVE_SCHEMA,
    "run": RUN_SCHEMA,
    "solver": SOLVER_SCHEMA,
    "logging": LOGGING_SCHEMA,
}
LIST_SCHEMAS = {
    "baths": BATH_SCHEMA,
    "couplings": COUPLING_SCHEMA,
}
REQUIRED_SECTIONS = ("drive", "baths", "couplings", "run")


@dataclass(frozen=True)
class AxisSpec:
    """A sweep axis: explicit values or an inclusive linear range, in absolute or f_omega units."""
    values: Tuple[float, ...] = ()
    start: Optional[float] = None
    stop: Optional[float] = None
    num: Optional[int] = None
    units: str = "absolute"

    @property
    def is_range(self) -> bool:
        return self.num is not None

    def resolve(self, f_omega: float = 1.0) -> Tuple[float, ...]:
        scale = f_omega if self.units == "f_omega" else 1.0
        if self.is_range:
            points = np.linspace(self.start, self.stop, self.num)
        else:
            points = np.asarray(self.values, dtype=float)
        return tuple(float(v) * scale for v in points)

    def to_yaml(self) -> Any:
        if self.is_range:
            return {"start": self.start, "stop": self.stop, "num": self.num, "units": self.units}
        if self.units != "absolute":
            return {"values": list(self.values), "units": self.units}
        return list(self.values)


@dataclass(frozen=True)
class TlsOverride:
    delta: float
    i_p: float
    lambda_f: float = 0.0
    lambda_ch: float = 0.0
    lambda_cc: float = 0.0

    def to_params(self) -> TlsParams:
        return TlsParams(**asdict(self))


@dataclass(frozen=True)
class DeviceConfig:
    model: str = "tls"
    alpha: float = 0.8
    eta: float = 0.25
    n_charge: int = 10
    levels: int = 4
    tls: Optional[TlsOverride] = None

    def fq_params(self) -> FqParams:
        return FqParams(alpha=self.alpha, eta=self.eta, n_charge=self.n_charge)


@dataclass(frozen=True)
class DriveConfig:
    f_dc: AxisSpec
    f_ac: AxisSpec
    omega0: float = 0.003
    theta: AxisSpec = AxisSpec(values=(0.0,))


@dataclass(frozen=True)
class BathConfig:
    tag: str
    gamma: float = 0.001
    omega_c: float = 0.15
    temperature: float = 0.0014

    def to_bath(self) -> OhmicBath:
        return OhmicBath(gamma=self.gamma, omega_c=self.omega_c, temperature=self.temperature, tag=self.tag)


@dataclass(frozen=True)
class CouplingConfig:
    tag: str
    kind: str
    strength: Optional[float] = None
    mixing: str = "none"


@dataclass(frozen=True)
class RunSection:
    mode: str
    times: Tuple[float, ...] = (1000.0,)
    output: str = "lzs_output.csv"
    threads: int = 4
    p_plus: str = "averaged"
    observables: Tuple[str, ...] = ()
    rate_labels: str = "main"
    n_periods: int = 1000
    resonance: Optional[int] = None
    mixing_mode: str = "strength"
    t_exp: float = 1000.0


@dataclass(frozen=True)
class SolverConfig:
    n_steps: int = 4096
    n_grid: int = 4096
    harmonics: Optional[int] = None
    tail_tolerance: float = 1e-8
    magnus_order: int = 4
    p_plus_samples: int = 256


@dataclass(frozen=True)
class LoggingConfig:
    level: str = "INFO"
    file: Optional[str] = "lzstudio.log"


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run description; ``defaults_applied`` lists the keys that took defaults."""
    device: DeviceConfig
    drive: DriveConfig
    baths: Tuple[BathConfig, ...]
    couplings: Tuple[CouplingConfig, ...]
    run: RunSection
    solver: SolverConfig = SolverConfig()
    logging: LoggingConfig = LoggingConfig()
    defaults_applied: Tuple[str, ...] = field(default=(), compare=False)

    def to_dict(self) -> Dict[str, Any]:
        """Plain-data form used for YAML serialization."""
        device = asdict(self.device)
        device["tls"] = "derive" if self.device.tls is None else asdict(self.device.tls)
        run = asdict(self.run)
        run["times"] = [_time_to_yaml(t) for t in self.run.times]
        run["observables"] = list(self.run.observables)
        return {
            "device": device,
            "drive": {
                "omega0": self.drive.omega0,
                "f_dc": self.drive.f_dc.to_yaml(),
                "f_ac": self.drive.f_ac.to_yaml(),
                "theta": self.drive.theta.to_yaml(),
            },
            "baths": [asdict(b) for b in self.baths],
            "couplings": [
                {**asdict(c), "strength": "derive" if c.strength is None else c.strength}
                for c in self.couplings
            ],
            "run": run,
            "solver": asdict(self.solver),
            "logging": asdict(self.logging),
        }


def _time_to_yaml(value: float) -> Any:
    return "inf" if math.isinf(value) else value
