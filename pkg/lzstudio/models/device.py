"""
Device and bath data models for LZS Studio
Static flux-qubit parameters, two-level reductions, truncated driven models and ohmic baths.

Units throughout: hbar = k_B = 1, energies in E_J, times in hbar/E_J, flux in Phi_0.
"""

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from ..errors import ParameterValidationError
from ..utils.linalg_utils import hermitian_defect, is_hermitian

# Drive forms understood by DrivenModel.hamiltonian
DRIVE_HARMONIC = "harmonic"
DRIVE_FLUX = "flux_phase"

BATH_TAGS = ("flux", "charge", "critical-current")


def _frozen(array: np.ndarray, dtype=complex) -> np.ndarray:
    array = np.array(array, dtype=dtype)
    array.setflags(write=False)
    return array


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ParameterValidationError(message)


@dataclass(frozen=True)
class FqParams:
    """Static three-junction flux-qubit parameters plus the charge-basis cutoff.

    Attributes:
        alpha: ratio of the small junction to the two large ones
        eta: sqrt(8 E_C / E_J)
        f_dc: static detuning (flux minus 1/2)
        n_charge: charge cutoff N, junction charges n1, n2 in [-N, N]
    """
    alpha: float = 0.8
    eta: float = 0.25
    f_dc: float = 0.0
    n_charge: int = 10

    def __post_init__(self):
        _require(0.0 < self.alpha < 2.0, f"alpha must be in (0, 2), got {self.alpha}")
        _require(0.0 < self.eta < 2.0, f"eta must be in (0, 2), got {self.eta}")
        _require(math.isfinite(self.f_dc), f"f_dc must be finite, got {self.f_dc}")
        _require(int(self.n_charge) == self.n_charge and self.n_charge >= 4,
                 f"n_charge must be an integer >= 4, got {self.n_charge}")

    @property
    def e_c(self) -> float:
        return self.eta ** 2 / 8.0

    @property
    def e_p(self) -> float:
        return 2.0 * self.e_c

    @property
    def e_m(self) -> float:
        return self.e_p / (1.0 + 2.0 * self.alpha)

    @property
    def basis_dim(self) -> int:
        """Dimension (2N+1)^2 of the junction-charge basis."""
        return (2 * self.n_charge + 1) ** 2


@dataclass(frozen=True)
class StaticSpectrum:
    """Lowest eigenpairs of a static Hamiltonian; states are the columns."""
    energies: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "energies", _frozen(self.energies, float))
        object.__setattr__(self, "states", _frozen(self.states))
        _require(self.states.shape[1] == self.energies.shape[0],
                 "one eigenvector per eigenvalue is required")
        _require(bool(np.all(np.diff(self.energies) >= 0)), "energies must be sorted ascending")

    @property
    def k(self) -> int:
        return int(self.energies.shape[0])

    def gap(self, i: int = 0, j: int = 1) -> float:
        return float(self.energies[j] - self.energies[i])


@dataclass(frozen=True)
class TlsParams:
    """Two-level reduction of the flux qubit at the symmetry point.

    Attributes:
        delta: tunnel gap E_1 - E_0 at zero detuning
        i_p: persistent-current magnitude (E_J / Phi_0)
        lambda_f, lambda_ch, lambda_cc: flux, charge and critical-current couplings
        lambda_ch_p: neglected n_p charge coupling, kept as a diagnostic
    """
    delta: float
    i_p: float
    lambda_f: float = 0.0
    lambda_ch: float = 0.0
    lambda_cc: float = 0.0
    lambda_ch_p: float = 0.0

    def __post_init__(self):
        _require(self.delta > 0, f"delta must be > 0, got {self.delta}")
        _require(self.i_p > 0, f"i_p must be > 0, got {self.i_p}")
        for name in ("lambda_f", "lambda_ch", "lambda_cc", "lambda_ch_p"):
            _require(getattr(self, name) >= 0, f"{name} must be >= 0, got {getattr(self, name)}")

    def f_omega(self, omega0: float) -> float:
        """Detuning spacing between neighbouring multiphoton resonances, omega0 / (4 pi I_p)."""
        return omega0 / (4.0 * math.pi * self.i_p)

    def epsilon(self, f: float) -> float:
        """Energy detuning 4 pi I_p f for a flux detuning f."""
        return 4.0 * math.pi * self.i_p * f


@dataclass(frozen=True)
class CouplingOperator:
    """System-side noise operator attached to the bath with the same tag."""
    operator: np.ndarray
    tag: str
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "operator", _frozen(self.operator))
        _require(self.tag in BATH_TAGS, f"unknown bath tag '{self.tag}', expected one of {BATH_TAGS}")
        _require(is_hermitian(self.operator, 1e-12), f"coupling operator '{self.tag}' is not Hermitian")


@dataclass(frozen=True)
class DrivenModel:
    """Truncated periodically driven Hamiltonian with its noise couplings.

    For ``drive_form == "harmonic"`` the Hamiltonian is
    H(t) = h0 + hc cos(w0 t) + hs sin(w0 t) (the two-level form, hc carrying -A/2 sigma_z).
    For ``drive_form == "flux_phase"`` it is
    H(t) = h0 + hc cos(2 pi f(t)) + hs sin(2 pi f(t)), f(t) = 1/2 + f_dc + f_ac cos(w0 t).
    """
    h0: np.ndarray
    hc: np.ndarray
    hs: np.ndarray
    couplings: Tuple[CouplingOperator, ...]
    f_dc: float
    f_ac: float
    omega0: float
    projector_plus: np.ndarray
    drive_form: str = DRIVE_HARMONIC
    label: str = field(default="", compare=False)

    def __post_init__(self):
        for name in ("h0", "hc", "hs", "projector_plus"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        object.__setattr__(self, "couplings", tuple(self.couplings))
        dim = self.h0.shape[0]
        for name in ("h0", "hc", "hs", "projector_plus"):
            matrix = getattr(self, name)
            _require(matrix.shape == (dim, dim), f"{name} must be {dim}x{dim}, got {matrix.shape}")
            _require(is_hermitian(matrix, 1e-12), f"{name} is not Hermitian "
                                                  f"(defect {hermitian_defect(matrix):.2e})")
        for coupling in self.couplings:
            _require(coupling.operator.shape == (dim, dim), f"coupling '{coupling.tag}' has wrong shape")
        p = self.projector_plus
        _require(float(np.max(np.abs(p @ p - p))) <= 1e-10, "projector_plus is not idempotent")
        _require(self.omega0 > 0, f"omega0 must be > 0, got {self.omega0}")
        _require(self.f_ac >= 0, f"f_ac must be >= 0, got {self.f_ac}")
        _require(self.drive_form in (DRIVE_HARMONIC, DRIVE_FLUX), f"unknown drive form '{self.drive_form}'")

    @property
    def dim(self) -> int:
        return int(self.h0.shape[0])

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega0

    @property
    def coupling_tags(self) -> Tuple[str, ...]:
        return tuple(c.tag for c in self.couplings)

    def flux(self, t):
        """Total flux f(t) in units of Phi_0."""
        return 0.5 + self.f_dc + self.f_ac * np.cos(self.omega0 * np.asarray(t, dtype=float))

    def drive_factors(self, t) -> Tuple[np.ndarray, np.ndarray]:
        """Scalar factors multiplying hc and hs at time(s) t."""
        t = np.asarray(t, dtype=float)
        if self.drive_form == DRIVE_HARMONIC:
            return np.cos(self.omega0 * t), np.sin(self.omega0 * t)
        phase = 2.0 * math.pi * self.flux(t)
        return np.cos(phase), np.sin(phase)

    def hamiltonian(self, t) -> np.ndarray:
        """H(t) for a scalar time or a stack of times (returns shape (..., M, M))."""
        c, s = self.drive_factors(t)
        c = np.asarray(c)[..., None, None]
        s = np.asarray(s)[..., None, None]
        return self.h0 + c * self.hc + s * self.hs

    def static_hamiltonian(self) -> np.ndarray:
        """H with the ac amplitude switched off (the f = f_dc Hamiltonian)."""
        if self.drive_form == DRIVE_HARMONIC:
            return np.array(self.h0)
        phase = 2.0 * math.pi * (0.5 + self.f_dc)
        return np.array(self.h0 + math.cos(phase) * self.hc + math.sin(phase) * self.hs)

    def drive_scale(self) -> float:
        """Largest energy modulation produced by the drive (A for the two-level model)."""
        norm_c = float(np.linalg.norm(self.hc, ord=2))
        norm_s = float(np.linalg.norm(self.hs, ord=2))
        if self.drive_form == DRIVE_HARMONIC:
            return 2.0 * max(norm_c, norm_s)
        return 4.0 * math.pi * self.f_ac * (norm_c + norm_s)


@dataclass(frozen=True)
class OhmicBath:
    """Ohmic bath J(w) = gamma w exp(-|w|/omega_c) at temperature T."""
    gamma: float = 0.001
    omega_c: float = 0.15
    temperature: float = 0.0014
    tag: str = "flux"

    def __post_init__(self):
        _require(self.gamma >= 0, f"gamma must be >= 0, got {self.gamma}")
        _require(self.omega_c > 0, f"omega_c must be > 0, got {self.omega_c}")
        _require(self.temperature > 0, f"temperature must be > 0, got {self.temperature}")
        _require(self.tag in BATH_TAGS, f"unknown bath tag '{self.tag}', expected one of {BATH_TAGS}")
