"""
Dynamics data models for LZS Studio
Floquet bases, coupling matrix elements, master-equation generators and derived timescales.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from ..errors import ParameterValidationError


def _readonly(array, dtype=complex) -> np.ndarray:
    array = np.array(array, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class FloquetBasis:
    """
    Floquet states of a driven model.

    Attributes:
        omega0: drive frequency
        quasienergies: eps_alpha folded into (-omega0/2, omega0/2]
        branch_shifts: number of omega0 removed from each raw quasienergy by the folding
        times: period grid t_j = j tau / N_t
        states_grid: |alpha(t_j)>, shape (N_t, dim, M), states along the last axis
        fourier: |alpha_k>, shape (2K+1, dim, M), row k+K holds harmonic k
        propagators: U(t_j), shape (N_t, dim, dim)
        monodromy: U(tau)
        n_steps: integration substeps per period
    """
    omega0: float
    quasienergies: np.ndarray
    branch_shifts: np.ndarray
    times: np.ndarray
    states_grid: np.ndarray
    fourier: np.ndarray
    propagators: np.ndarray
    monodromy: np.ndarray
    n_steps: int
    diagnostics: Dict[str, float] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "quasienergies", _readonly(self.quasienergies, float))
        object.__setattr__(self, "branch_shifts", _readonly(self.branch_shifts, int))
        object.__setattr__(self, "times", _readonly(self.times, float))
        for name in ("states_grid", "fourier", "propagators", "monodromy"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        if self.fourier.shape[0] % 2 != 1:
            raise ParameterValidationError("Fourier components must cover a symmetric range -K..K")
        if self.states_grid.shape[0] != self.times.shape[0]:
            raise ParameterValidationError("states_grid and times disagree on the grid size")

    @property
    def dim(self) -> int:
        return int(self.states_grid.shape[1])

    @property
    def n_states(self) -> int:
        return int(self.quasienergies.shape[0])

    @property
    def harmonics(self) -> int:
        return (self.fourier.shape[0] - 1) // 2

    @property
    def n_grid(self) -> int:
        return int(self.times.shape[0])

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega0

    def component(self, k: int) -> np.ndarray:
        """|alpha_k> for all alpha (zero outside the stored range)."""
        if abs(k) > self.harmonics:
            return np.zeros(self.fourier.shape[1:], dtype=complex)
        return self.fourier[k + self.harmonics]

    def reconstruct(self, t) -> np.ndarray:
        """sum_k |alpha_k> exp(-i k w0 t); returns (..., dim, M)."""
        t = np.asarray(t, dtype=float)
        ks = np.arange(-self.harmonics, self.harmonics + 1)
        phases = np.exp(-1j * np.multiply.outer(t, ks) * self.omega0)
        return np.tensordot(phases, self.fourier, axes=([-1], [0]))

    def initial_states(self) -> np.ndarray:
        """|alpha(0)> as columns."""
        return self.states_grid[0]


@dataclass(frozen=True)
class CouplingElements:
    """
    Floquet matrix elements A^nu_{alpha beta, q}.

    Attributes:
        tensors: bath tag -> array of shape (2K+1, M, M), row q+K holds harmonic q
        tail_weights: bath tag -> weight of the |q| = K shells relative to all shells
    """
    tensors: Dict[str, np.ndarray]
    tail_weights: Dict[str, float] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.tensors:
            raise ParameterValidationError("CouplingElements needs at least one coupling")
        shapes = {t.shape for t in self.tensors.values()}
        if len(shapes) != 1:
            raise ParameterValidationError(f"Coupling tensors disagree in shape: {shapes}")
        object.__setattr__(self, "tensors", {tag: _readonly(t) for tag, t in self.tensors.items()})

    @property
    def tags(self) -> Tuple[str, ...]:
        return tuple(self.tensors)

    @property
    def harmonics(self) -> int:
        return (next(iter(self.tensors.values())).shape[0] - 1) // 2

    def element(self, tag: str, q: int) -> np.ndarray:
        return self.tensors[tag][q + self.harmonics]


@dataclass(frozen=True)
class Generator:
    """
    Floquet-Born-Markov generator.

    ``matrix`` acts on row-major vectorized density matrices (index alpha * M + beta).
    ``rates`` is the R_{alpha beta alpha' beta'} tensor it was assembled from.
    """
    matrix: np.ndarray
    quasienergies: np.ndarray
    rates: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _readonly(self.matrix))
        object.__setattr__(self, "quasienergies", _readonly(self.quasienergies, float))
        object.__setattr__(self, "rates", _readonly(self.rates))
        dim = self.quasienergies.shape[0]
        if self.matrix.shape != (dim * dim, dim * dim):
            raise ParameterValidationError(f"Generator must be {dim * dim}x{dim * dim}, got {self.matrix.shape}")

    @property
    def dim(self) -> int:
        return int(self.quasienergies.shape[0])

    @property
    def tensor(self) -> np.ndarray:
        """Lambda_{alpha beta, alpha' beta'} as a rank-4 tensor."""
        return self.matrix.reshape((self.dim,) * 4)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, ord=2))

    @property
    def dissipative_norm(self) -> float:
        """Norm of Lambda without its coherent -i(eps_a - eps_b) diagonal."""
        eps = self.quasienergies
        coherent = -1j * (eps[:, None] - eps[None, :])
        return float(np.linalg.norm(self.matrix - np.diag(coherent.reshape(-1)), ord=2))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """d rho / dt for a density matrix in the Floquet basis."""
        return (self.matrix @ np.asarray(rho).reshape(-1)).reshape(self.dim, self.dim)


@dataclass(frozen=True)
class Evolution:
    """Density matrices rho(t) in the Floquet basis at the requested times."""
    times: np.ndarray
    states: np.ndarray
    method: str
    positivity_defect: float = 0.0

    def __len__(self) -> int:
        return int(self.states.shape[0])

    def __getitem__(self, index: int) -> np.ndarray:
        return self.states[index]


@dataclass(frozen=True)
class Timescales:
    """
    Relaxation and decoherence times read off the generator spectrum.

    t_d is None when the spectrum has no complex-conjugate pair.
    """
    t_r: Optional[float]
    t_d: Optional[float]
    eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex), compare=False)

    @property
    def t_phi(self) -> Optional[float]:
        """Pure dephasing time from 1/t_phi = 1/t_d - 1/(2 t_r); inf when that rate vanishes."""
        if self.t_r is None or self.t_d is None:
            return None
        rate = 1.0 / self.t_d - 0.5 / self.t_r
        return math.inf if rate <= 0 else 1.0 / rate

    @property
    def ratio(self) -> Optional[float]:
        """2 t_r / t_d."""
        if self.t_r is None or self.t_d is None:
            return None
        return 2.0 * self.t_r / self.t_d


@dataclass(frozen=True)
class DressedParams:
    """
    Rotating-wave parameters of the n-photon resonance.

    Attributes:
        n: resonance index
        x: A / omega0 (equivalently f_ac / f_omega)
        delta_n: dressed gap delta J_{-n}(x)
        epsilon_n: eps0 - n omega0
        omega_n: generalized Rabi frequency sqrt(eps_n^2 + delta_n^2)
        cos2phi, sin2phi: eps_n / omega_n and delta_n / omega_n
        narrow_resonance: |eps_n| is not large compared with |delta_n|
        fast_drive: A omega0 >> delta^2
    """
    n: int
    x: float
    delta_n: float
    epsilon_n: float
    omega_n: float
    cos2phi: float
    sin2phi: float
    narrow_resonance: bool = True
    fast_drive: bool = True

    def __post_init__(self):
        if abs(self.cos2phi ** 2 + self.sin2phi ** 2 - 1.0) > 1e-12:
            raise ParameterValidationError("cos2phi^2 + sin2phi^2 must equal 1")
        if self.omega_n < abs(self.delta_n) * (1.0 - 1e-12):
            raise ParameterValidationError("omega_n must be >= |delta_n|")

    @property
    def rwa_valid(self) -> bool:
        return self.narrow_resonance and self.fast_drive
