"""
Master-equation service for LZS Studio
Assembles the Floquet-Born-Markov generator, evolves the reduced density matrix in the
Floquet basis and extracts the steady state, P+ and the relaxation/decoherence times.
"""

import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from ..errors import (
    ConvergenceError, DegenerateStateError, InvariantViolationError, MissingBathError,
    NonUniqueSteadyStateError, ParameterValidationError
)
from ..models.device import DrivenModel, OhmicBath
from ..models.dynamics import CouplingElements, Evolution, FloquetBasis, Generator, Timescales
from ..utils.linalg_utils import dagger, hermitize
from .bath import g_weight
from .floquet import TAIL_TOLERANCE, matrix_elements

logger = logging.getLogger(__name__)

TRACE_TOLERANCE = 1e-8
ZERO_EIGENVALUE = 1e-10
EIGENVALUE_NOISE = 1e-13
REAL_EIGENVALUE = 1e-10
CONDITION_LIMIT = 1e8
POSITIVITY_WARNING = 1e-3
P_PLUS_SAMPLES = 256

P_PLUS_MODES = ("averaged", "stroboscopic")


def _bath_lookup(baths: Sequence[OhmicBath]):
    lookup = {}
    for bath in baths:
        if bath.tag in lookup:
            raise ParameterValidationError(f"Bath tag '{bath.tag}' declared twice")
        lookup[bath.tag] = bath
    return lookup


def rate_tensor(elements: CouplingElements, baths: Sequence[OhmicBath], basis: FloquetBasis) -> np.ndarray:
    """
    Rate tensor R_{a b a' b'} = sum_nu sum_q (1/2) g_nu(w_{a a', q}) A_{a a', q} A_{b' b, -q}.

    w_{a a', q} = eps_a - eps_a' - q w0 for the exp(-i k w0 t) Fourier convention. With the
    factor 1/2 the population rates reduce to |A|^2 g(w), the golden-rule form.

    Raises:
        MissingBathError: if a coupling tag has no bath
    """
    lookup = _bath_lookup(baths)
    missing = [tag for tag in elements.tags if tag not in lookup]
    if missing:
        raise MissingBathError(f"No bath declared for coupling tag(s): {', '.join(missing)}")

    harmonics = elements.harmonics
    size = basis.n_states
    eps = np.asarray(basis.quasienergies)
    qs = np.arange(-harmonics, harmonics + 1)
    omegas = eps[None, :, None] - eps[None, None, :] - qs[:, None, None] * basis.omega0

    rates = np.zeros((size,) * 4, dtype=complex)
    for tag, tensor in elements.tensors.items():
        weighted = 0.5 * g_weight(lookup[tag], omegas) * tensor
        rates += np.einsum("qac,qdb->abcd", weighted, tensor[::-1])
    return rates


def build_generator(rates: np.ndarray, basis: FloquetBasis) -> Generator:
    """
    Generator Lambda = L - i (eps_a - eps_b) delta_{a a'} delta_{b b'} with
    L_{a b a' b'} = R_{a b a' b'} + R*_{b a b' a'} - sum_e (delta_{b b'} R_{e e a' a} + delta_{a a'} R*_{e e b' b}).

    Raises:
        InvariantViolationError: if the result does not preserve the trace to 1e-8
    """
    size = basis.n_states
    if rates.shape != (size,) * 4:
        raise ParameterValidationError(f"Rate tensor shape {rates.shape} does not match {size} Floquet states")

    identity = np.eye(size)
    collapsed = np.einsum("eeca->ca", rates)
    coefficients = (rates
                    + np.conj(rates.transpose(1, 0, 3, 2))
                    - np.einsum("bd,ca->abcd", identity, collapsed)
                    - np.einsum("ac,db->abcd", identity, np.conj(collapsed)))
    eps = np.asarray(basis.quasienergies)
    coherent = -1j * (eps[:, None] - eps[None, :])
    coefficients = coefficients + np.einsum("ab,ac,bd->abcd", coherent, identity, identity)

    matrix = coefficients.reshape(size * size, size * size)
    trace_rows = matrix[np.arange(size) * (size + 1)].sum(axis=0)
    defect = float(np.max(np.abs(trace_rows)))
    scale = max(float(np.max(np.abs(matrix))), np.finfo(float).tiny)
    if defect > TRACE_TOLERANCE * scale:
        raise InvariantViolationError(f"Generator violates trace preservation (defect {defect:.2e})")
    return Generator(matrix=matrix, quasienergies=eps, rates=rates)


def initial_state(model: DrivenModel, basis: FloquetBasis) -> np.ndarray:
    """Ground state of the static Hamiltonian expressed in the Floquet basis at t = 0."""
    energies, vectors = np.linalg.eigh(model.static_hamiltonian())
    if energies.shape[0] > 1 and energies[1] - energies[0] <= 1e-12 * max(1.0, float(np.max(np.abs(energies)))):
        raise DegenerateStateError(f"Static ground state is degenerate (E0={energies[0]:.6e}, E1={energies[1]:.6e})")
    amplitudes = dagger(basis.initial_states()) @ vectors[:, 0]
    return np.outer(amplitudes, np.conj(amplitudes))


def _positivity_defect(states: np.ndarray) -> float:
    lowest = np.linalg.eigvalsh(hermitize(states))[..., 0]
    return float(max(0.0, -np.min(lowest)))


def evolve(gen: Generator, rho0: np.ndarray, times: Sequence[float]) -> Evolution:
    """
    rho(t) = exp(Lambda t) rho(0) at each requested time.

    Uses the eigendecomposition of Lambda; if its eigenvector matrix is ill-conditioned the
    evaluation falls back to scipy's scaling-and-squaring exponential for every time.

    Args:
        gen: generator
        rho0: initial density matrix in the Floquet basis
        times: ascending nonnegative times

    Returns:
        Evolution with states of shape (len(times), M, M)
    """
    times = np.asarray(times, dtype=float).reshape(-1)
    if np.any(times < 0) or np.any(np.diff(times) < 0) or not np.all(np.isfinite(times)):
        raise ParameterValidationError("times must be finite, nonnegative and ascending")
    size = gen.dim
    rho0 = np.asarray(rho0, dtype=complex)
    vector = rho0.reshape(-1)

    eigenvalues, eigenvectors = scipy.linalg.eig(gen.matrix)
    condition = float(np.linalg.cond(eigenvectors))
    if condition < CONDITION_LIMIT:
        method = "eigendecomposition"
        coefficients = np.linalg.solve(eigenvectors, vector)
        flows = np.exp(np.multiply.outer(times, eigenvalues)) * coefficients[None, :]
        states = (flows @ eigenvectors.T).reshape(len(times), size, size)
    else:
        method = "expm"
        logger.warning(f"[WARN] Generator eigenvectors ill-conditioned (cond={condition:.2e}); using expm per time")
        states = np.array([(scipy.linalg.expm(gen.matrix * t) @ vector).reshape(size, size) for t in times])
    states[times == 0] = rho0

    traces = np.trace(states, axis1=1, axis2=2)
    drift = float(np.max(np.abs(traces - np.trace(rho0)))) if len(times) else 0.0
    if drift > 1e-9:
        logger.warning(f"[WARN] Trace drift {drift:.2e} during evolution")

    defect = _positivity_defect(states) if len(times) else 0.0
    if defect > POSITIVITY_WARNING:
        logger.warning(f"[WARN] Positivity defect {defect:.2e} in evolved density matrix")
    return Evolution(times=times, states=states, method=method, positivity_defect=defect)


def _normalized(vector: np.ndarray, size: int) -> np.ndarray:
    rho = hermitize(vector.reshape(size, size))
    return rho / np.trace(rho).real


def zero_tolerance(gen: Generator) -> float:
    """
    Magnitude below which an eigenvalue of Lambda counts as zero.

    Scaled by the dissipative part of Lambda (the coherent diagonal left out) and floored at the
    eigensolver resolution of the full matrix.
    """
    return max(ZERO_EIGENVALUE * gen.dissipative_norm, EIGENVALUE_NOISE * gen.norm)


def steady_state(gen: Generator) -> np.ndarray:
    """
    Stationary density matrix: the null vector of Lambda, Hermitized and trace-normalized.

    Raises:
        ConvergenceError: if no eigenvalue lies below zero_tolerance(gen)
        NonUniqueSteadyStateError: if more than one does
    """
    size = gen.dim
    scale = gen.norm
    tolerance = zero_tolerance(gen)
    eigenvalues, eigenvectors = scipy.linalg.eig(gen.matrix)
    order = np.argsort(np.abs(eigenvalues))
    zeros = [i for i in order if abs(eigenvalues[i]) < tolerance]

    if not zeros:
        raise ConvergenceError(f"No zero eigenvalue: smallest |lambda| = {abs(eigenvalues[order[0]]):.2e}")
    if len(zeros) > 1:
        candidates = []
        for i in zeros[:2]:
            trace = np.trace(eigenvectors[:, i].reshape(size, size))
            candidates.append(_normalized(eigenvectors[:, i], size) if abs(trace) > 1e-12
                              else hermitize(eigenvectors[:, i].reshape(size, size)))
        raise NonUniqueSteadyStateError(
            f"{len(zeros)} eigenvalues of Lambda below {tolerance:.2e}; steady state is not unique",
            candidates=tuple(candidates),
            eigenvalues=tuple(complex(eigenvalues[i]) for i in zeros[:2]),
        )

    rho = _normalized(eigenvectors[:, zeros[0]], size)
    residual = float(np.linalg.norm(gen.apply(rho)))
    if residual > 1e-9 * scale:
        raise ConvergenceError(f"Steady-state residual {residual:.2e} exceeds 1e-9 ||Lambda||")
    return rho


def generator_spectrum(gen: Generator) -> np.ndarray:
    """All eigenvalues of Lambda, sorted by real part (descending)."""
    eigenvalues = scipy.linalg.eigvals(gen.matrix)
    return eigenvalues[np.lexsort((eigenvalues.imag, -eigenvalues.real))]


def timescales(gen: Generator) -> Timescales:
    """
    t_r from the slowest nonzero real eigenvalue, t_d from the complex pair with the largest real part.

    t_d is None when no complex pair exists.
    """
    eigenvalues = generator_spectrum(gen)
    scale = gen.norm
    stationary = int(np.argmin(np.abs(eigenvalues)))
    rest = np.delete(eigenvalues, stationary)

    is_real = np.abs(rest.imag) <= REAL_EIGENVALUE * scale
    real_parts = rest[is_real].real
    t_r = None
    if real_parts.size:
        slowest = float(np.max(real_parts))
        t_r = math.inf if slowest >= 0 else -1.0 / slowest

    pairs = rest[~is_real & (rest.imag > 0)]
    t_d = None
    if pairs.size:
        slowest = float(np.max(pairs.real))
        t_d = math.inf if slowest >= 0 else -1.0 / slowest
    return Timescales(t_r=t_r, t_d=t_d, eigenvalues=eigenvalues)


def _sample_times(basis: FloquetBasis, samples: int) -> np.ndarray:
    samples = max(1, min(samples, basis.n_grid))
    return np.arange(samples) * basis.period / samples


def p_plus_values(basis: FloquetBasis, projector: np.ndarray, rhos: np.ndarray, times) -> np.ndarray:
    """Tr(Pi+ rho_lab(t)) with rho_lab(t) = sum_ab rho_ab |a(t)><b(t)|."""
    frames = basis.reconstruct(times)
    weights = np.einsum("tib,ij,tja->tab", np.conj(frames), np.asarray(projector), frames)
    return np.einsum("tab,tab->t", np.broadcast_to(rhos, weights.shape), weights).real


def p_plus(gen: Generator, basis: FloquetBasis, model: DrivenModel, rho0: np.ndarray, t: float,
           mode: str = "averaged", samples: int = P_PLUS_SAMPLES) -> Tuple[float, float]:
    """
    P+ at time t (``math.inf`` selects the steady state).

    Args:
        mode: "stroboscopic" samples t itself, "averaged" averages over the period starting at t

    Returns:
        Tuple of (P+, positivity defect of the density matrices used)
    """
    if mode not in P_PLUS_MODES:
        raise ParameterValidationError(f"Unknown P+ mode '{mode}', expected one of {P_PLUS_MODES}")
    offsets = _sample_times(basis, samples) if mode == "averaged" else np.zeros(1)

    if math.isinf(t):
        rho = steady_state(gen)
        values = p_plus_values(basis, model.projector_plus, rho[None], offsets)
        return float(np.mean(values)), _positivity_defect(rho[None])

    evolution = evolve(gen, rho0, t + offsets)
    values = p_plus_values(basis, model.projector_plus, evolution.states, evolution.times)
    return float(np.mean(values)), evolution.positivity_defect


def assemble_generator(model: DrivenModel, basis: FloquetBasis, baths: Sequence[OhmicBath],
                       tail_tolerance: Optional[float] = None) -> Generator:
    """Matrix elements, rates and generator for a model in one call."""
    elements = matrix_elements(basis, model.couplings,
                               tail_tolerance=TAIL_TOLERANCE if tail_tolerance is None else tail_tolerance)
    return build_generator(rate_tensor(elements, baths, basis), basis)
