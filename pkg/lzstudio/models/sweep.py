"""
Sweep data models for LZS Studio
Sweep specifications, per-point results and the assembled LZS maps.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..errors import MissingBathError, ParameterValidationError
from .device import BATH_TAGS, FqParams, OhmicBath, TlsParams

MODEL_KINDS = ("tls", "multilevel")
TLS_AXES = ("z", "y", "x")
MULTILEVEL_KINDS = ("flux", "charge", "critical-current")
MIXING = ("none", "cos", "sin")
MIXING_MODES = ("strength", "gamma")
OBSERVABLES = ("p_plus", "t_r", "t_d", "lambda_spectrum")
P_PLUS_MODES = ("averaged", "stroboscopic")

# Flag codes written next to every cell
FLAG_OK = ""
FLAG_POSITIVITY = "positivity"
FLAG_NO_PAIR = "no_complex_pair"
FLAG_ERROR = "error"

POSITIVITY_ALLOWANCE = 1e-3


@dataclass(frozen=True)
class SolverSettings:
    """Numerical controls of the Floquet and master-equation solvers."""
    n_steps: int = 4096
    n_grid: int = 4096
    harmonics: Optional[int] = None
    tail_tolerance: float = 1e-8
    magnus_order: int = 4
    p_plus_samples: int = 256

    def __post_init__(self):
        if self.n_steps < 256 or self.n_steps & (self.n_steps - 1):
            raise ParameterValidationError(f"n_steps must be a power of two >= 256, got {self.n_steps}")
        if self.n_grid < 4 or self.n_grid & (self.n_grid - 1):
            raise ParameterValidationError(f"n_grid must be a power of two >= 4, got {self.n_grid}")
        if self.harmonics is not None and self.harmonics < 1:
            raise ParameterValidationError(f"harmonics must be >= 1, got {self.harmonics}")
        if not 0 < self.tail_tolerance < 1:
            raise ParameterValidationError(f"tail_tolerance must be in (0, 1), got {self.tail_tolerance}")
        if self.magnus_order not in (2, 4):
            raise ParameterValidationError(f"magnus_order must be 2 or 4, got {self.magnus_order}")
        if self.p_plus_samples < 1:
            raise ParameterValidationError(f"p_plus_samples must be >= 1, got {self.p_plus_samples}")


@dataclass(frozen=True)
class CouplingSpec:
    """
    One noise channel of a sweep.

    Attributes:
        tag: bath the channel couples to
        kind: sigma axis (z, y, x) for the two-level model, or flux/charge/critical-current
        strength: coupling magnitude; None means derive it from the device
        mixing: multiply by cos(theta) or sin(theta) at each mixing angle
    """
    tag: str
    kind: str
    strength: Optional[float] = None
    mixing: str = "none"

    def __post_init__(self):
        if self.tag not in BATH_TAGS:
            raise ParameterValidationError(f"Unknown bath tag '{self.tag}', expected one of {BATH_TAGS}")
        if self.kind not in TLS_AXES + MULTILEVEL_KINDS:
            raise ParameterValidationError(f"Unknown coupling kind '{self.kind}'")
        if self.mixing not in MIXING:
            raise ParameterValidationError(f"Unknown mixing '{self.mixing}', expected one of {MIXING}")
        if self.strength is not None and (not math.isfinite(self.strength) or self.strength < 0):
            raise ParameterValidationError(f"Coupling strength must be finite and >= 0, got {self.strength}")

    def mixing_factor(self, theta: float) -> float:
        if self.mixing == "cos":
            return math.cos(theta)
        if self.mixing == "sin":
            return math.sin(theta)
        return 1.0


def _axis(values, name: str) -> Tuple[float, ...]:
    values = tuple(float(v) for v in np.atleast_1d(values))
    if not values:
        raise ParameterValidationError(f"Sweep axis '{name}' is empty")
    return values


@dataclass(frozen=True)
class SweepSpec:
    """
    Full description of a parameter sweep.

    ``times`` are in units of the drive period; ``math.inf`` requests the steady state.
    """
    model_kind: str
    omega0: float
    f_dc: Tuple[float, ...]
    f_ac: Tuple[float, ...]
    couplings: Tuple[CouplingSpec, ...]
    baths: Tuple[OhmicBath, ...]
    times: Tuple[float, ...] = (1000.0,)
    theta: Tuple[float, ...] = (0.0,)
    tls: Optional[TlsParams] = None
    device: FqParams = field(default_factory=FqParams)
    levels: int = 4
    observables: Tuple[str, ...] = ("p_plus",)
    solver: SolverSettings = field(default_factory=SolverSettings)
    p_plus_mode: str = "averaged"
    mixing_mode: str = "strength"
    threads: int = 4
    t_exp: float = 1000.0

    def __post_init__(self):
        object.__setattr__(self, "f_dc", _axis(self.f_dc, "f_dc"))
        object.__setattr__(self, "f_ac", _axis(self.f_ac, "f_ac"))
        object.__setattr__(self, "theta", _axis(self.theta, "theta"))
        object.__setattr__(self, "times", _axis(self.times, "times"))
        object.__setattr__(self, "couplings", tuple(self.couplings))
        object.__setattr__(self, "baths", tuple(self.baths))
        object.__setattr__(self, "observables", tuple(self.observables))

        if self.model_kind not in MODEL_KINDS:
            raise ParameterValidationError(f"Unknown model kind '{self.model_kind}', expected one of {MODEL_KINDS}")
        if self.model_kind == "tls" and self.tls is None:
            raise ParameterValidationError("A two-level sweep needs TlsParams")
        if self.omega0 <= 0:
            raise ParameterValidationError(f"omega0 must be > 0, got {self.omega0}")
        if any(t < 0 or math.isnan(t) for t in self.times):
            raise ParameterValidationError("Evaluation times must be nonnegative")
        if any(f < 0 for f in self.f_ac):
            raise ParameterValidationError("f_ac values must be >= 0")
        if self.levels < 2:
            raise ParameterValidationError(f"levels must be >= 2, got {self.levels}")
        for name in self.observables:
            if name not in OBSERVABLES:
                raise ParameterValidationError(f"Unknown observable '{name}', expected a subset of {OBSERVABLES}")
        if self.p_plus_mode not in P_PLUS_MODES:
            raise ParameterValidationError(f"Unknown p_plus mode '{self.p_plus_mode}'")
        if self.mixing_mode not in MIXING_MODES:
            raise ParameterValidationError(f"Unknown mixing mode '{self.mixing_mode}'")
        if self.threads < 1:
            raise ParameterValidationError(f"threads must be >= 1, got {self.threads}")

        allowed = TLS_AXES if self.model_kind == "tls" else MULTILEVEL_KINDS
        for coupling in self.couplings:
            if coupling.kind not in allowed:
                raise ParameterValidationError(
                    f"Coupling kind '{coupling.kind}' is not valid for a {self.model_kind} model, expected {allowed}")
        declared = {bath.tag for bath in self.baths}
        if len(declared) != len(self.baths):
            raise ParameterValidationError("Bath tags must be unique")
        missing = sorted({c.tag for c in self.couplings} - declared)
        if missing:
            raise MissingBathError(f"Couplings reference undeclared bath(s): {', '.join(missing)}")

    @property
    def shape(self) -> Tuple[int, int, int]:
        return len(self.f_dc), len(self.f_ac), len(self.theta)

    @property
    def dissipative(self) -> bool:
        return bool(self.couplings) and any(b.gamma > 0 for b in self.baths)

    @property
    def needs_timescales(self) -> bool:
        return "t_r" in self.observables or "t_d" in self.observables

    def bath(self, tag: str) -> OhmicBath:
        for bath in self.baths:
            if bath.tag == tag:
                return bath
        raise MissingBathError(f"No bath with tag '{tag}'")


@dataclass
class PointResult:
    """Observables of one (f_dc, f_ac, theta) grid cell."""
    index: Tuple[int, int, int]
    p_plus: np.ndarray
    positivity_defect: np.ndarray
    t_r: float = math.nan
    t_d: float = math.nan
    t_phi: float = math.nan
    spectrum: Optional[np.ndarray] = None
    flag: str = FLAG_OK
    diagnostics: Dict[str, float] = field(default_factory=dict)


@dataclass
class LzsMap:
    """
    Rectangular grid of observables.

    Attributes:
        axes: f_dc, f_ac, theta and t_over_tau coordinate vectors
        values: p_plus and positivity_defect with shape (n_fdc, n_fac, n_theta, n_times);
                t_r, t_d, t_phi with shape (n_fdc, n_fac, n_theta); p_plus_avg for isolated sweeps
        flags: per-cell flag codes, shape (n_fdc, n_fac, n_theta)
        spectra: generator eigenvalues per cell when requested
        metadata: parameter record, solver settings and diagnostics
    """
    axes: Dict[str, np.ndarray]
    values: Dict[str, np.ndarray]
    flags: np.ndarray
    spectra: Dict[Tuple[int, int, int], np.ndarray] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        grid = tuple(len(self.axes[name]) for name in ("f_dc", "f_ac", "theta"))
        if self.flags.shape != grid:
            raise ParameterValidationError(f"flags shape {self.flags.shape} does not match axes {grid}")
        for name, array in self.values.items():
            if array.shape[:len(grid)] != grid[:array.ndim]:
                raise ParameterValidationError(f"values['{name}'] shape {array.shape} does not match axes {grid}")

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.flags.shape

    @property
    def f_omega(self) -> float:
        return float(self.metadata.get("f_omega", math.nan))

    def flagged(self) -> int:
        return int(np.count_nonzero(self.flags != FLAG_OK))

    def scan(self, name: str = "p_plus", f_ac_index: int = 0, theta_index: int = 0, time_index: int = 0) -> np.ndarray:
        """1-D cut of an observable along f_dc."""
        array = self.values[name]
        if array.ndim == 4:
            return array[:, f_ac_index, theta_index, time_index]
        if array.ndim == 3:
            return array[:, f_ac_index, theta_index]
        return array[:, f_ac_index]
