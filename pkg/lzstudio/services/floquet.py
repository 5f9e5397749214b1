"""
Floquet service for LZS Studio
Monodromy propagation over one drive period, Floquet states and quasienergies, their Fourier
components and the coupling matrix elements A_{alpha beta, q}.
"""

import dataclasses
import logging
import math
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from ..errors import ParameterValidationError, TruncationError, UnitarityError
from ..models.device import CouplingOperator, DrivenModel
from ..models.dynamics import CouplingElements, FloquetBasis
from ..utils.linalg_utils import dagger, expm_hermitian, fix_phases, fold_into_zone, unitarity_defect

logger = logging.getLogger(__name__)

DEFAULT_STEPS = 4096
DEFAULT_GRID = 4096
MIN_HARMONICS = 32
UNITARITY_TOLERANCE = 1e-9
DEGENERACY_TOLERANCE = 1e-12
TAIL_TOLERANCE = 1e-8

# two-point Gauss-Legendre nodes on [0, 1]
_GAUSS_NODES = (0.5 - math.sqrt(3.0) / 6.0, 0.5 + math.sqrt(3.0) / 6.0)


def _is_power_of_two(value: int) -> bool:
    return value > 0 and (value & (value - 1)) == 0


def default_harmonics(model: DrivenModel) -> int:
    """
    K = max(32, ceil((4 A_max + 2 E_max) / w0) + 10), E_max the largest static level magnitude.

    Folding a static level E into the first zone moves its Floquet mode by about E / w0 harmonics.
    """
    levels = np.linalg.eigvalsh(model.static_hamiltonian())
    extent = 4.0 * model.drive_scale() + 2.0 * float(np.max(np.abs(levels)))
    return max(MIN_HARMONICS, int(math.ceil(extent / model.omega0)) + 10)


def _step_propagators(model: DrivenModel, n_steps: int, order: int) -> np.ndarray:
    """One exponential per substep, shape (n_steps, dim, dim)."""
    dt = model.period / n_steps
    starts = np.arange(n_steps) * dt
    if order == 2:
        return expm_hermitian(model.hamiltonian(starts + 0.5 * dt), dt)
    if order == 4:
        h1 = model.hamiltonian(starts + _GAUSS_NODES[0] * dt)
        h2 = model.hamiltonian(starts + _GAUSS_NODES[1] * dt)
        # Hermitian exponent of the fourth-order Magnus expansion
        commutator = h2 @ h1 - h1 @ h2
        exponent = 0.5 * dt * (h1 + h2) - 1j * (math.sqrt(3.0) / 12.0) * dt * dt * commutator
        return expm_hermitian(exponent, 1.0)
    raise ParameterValidationError(f"Magnus order must be 2 or 4, got {order}")


def _ordered_products(steps: np.ndarray, block: int) -> np.ndarray:
    """Time-ordered product inside consecutive blocks of `block` steps (a power of two)."""
    dim = steps.shape[-1]
    products = steps.reshape(-1, block, dim, dim)
    while products.shape[1] > 1:
        products = products[:, 1::2] @ products[:, 0::2]
    return products[:, 0]


def _inclusive_scan(blocks: np.ndarray) -> np.ndarray:
    """C_j = B_j ... B_0 for every j."""
    cumulative = np.array(blocks)
    shift = 1
    while shift < cumulative.shape[0]:
        updated = np.array(cumulative)
        updated[shift:] = cumulative[shift:] @ cumulative[:-shift]
        cumulative = updated
        shift *= 2
    return cumulative


def propagator_grid(model: DrivenModel, n_steps: int = DEFAULT_STEPS, n_grid: int = DEFAULT_GRID,
                    order: int = 4):
    """
    U(t_j) on the grid t_j = j tau / n_grid together with U(tau).

    Returns:
        Tuple of (grid propagators of shape (n_grid, dim, dim), monodromy matrix)

    Raises:
        UnitarityError: if any propagator drifts from unitarity beyond 1e-9
    """
    if not (_is_power_of_two(n_steps) and n_steps >= 256):
        raise ParameterValidationError(f"n_steps must be a power of two >= 256, got {n_steps}")
    if not _is_power_of_two(n_grid):
        raise ParameterValidationError(f"n_grid must be a power of two, got {n_grid}")
    n_steps = max(n_steps, n_grid)

    blocks = _ordered_products(_step_propagators(model, n_steps, order), n_steps // n_grid)
    cumulative = _inclusive_scan(blocks)
    grid = np.concatenate([np.eye(model.dim, dtype=complex)[None], cumulative[:-1]], axis=0)
    monodromy = cumulative[-1]

    defect = max(unitarity_defect(cumulative), 0.0)
    if defect > UNITARITY_TOLERANCE:
        raise UnitarityError(f"Propagator unitarity defect {defect:.2e} exceeds {UNITARITY_TOLERANCE:g}; "
                             f"increase n_steps (currently {n_steps})")
    return grid, monodromy


def propagate_one_period(model: DrivenModel, n_steps: int = DEFAULT_STEPS, order: int = 4) -> np.ndarray:
    """
    Monodromy matrix U(tau) as a time-ordered product of exact substep exponentials.

    Args:
        model: driven model
        n_steps: substeps per period, a power of two >= 256
        order: 2 for the midpoint rule, 4 for the two-node Magnus scheme

    Returns:
        Unitary matrix U(tau)
    """
    _, monodromy = propagator_grid(model, n_steps, min(n_steps, DEFAULT_GRID), order)
    return monodromy


def _next_power_of_two(value: int) -> int:
    return 1 << max(0, int(value - 1).bit_length())


def _fourier_components(states_grid: np.ndarray, harmonics: int) -> np.ndarray:
    """|alpha_k> for k in [-K, K] with |alpha(t)> = sum_k |alpha_k> exp(-i k w0 t)."""
    n_grid = states_grid.shape[0]
    spectrum = np.fft.ifft(states_grid, axis=0)
    ks = np.arange(-harmonics, harmonics + 1)
    return spectrum[ks % n_grid]


def _spectral_tail(power: np.ndarray, harmonics: int) -> float:
    """Share of the total Fourier power outside |k| <= K."""
    total = float(np.sum(power))
    if total == 0.0:
        return 0.0
    kept = np.arange(-harmonics, harmonics + 1) % power.shape[0]
    return float(max(0.0, 1.0 - np.sum(power[kept]) / total))


def floquet_states(model: DrivenModel,
                   n_steps: int = DEFAULT_STEPS,
                   harmonics: Optional[int] = None,
                   n_grid: int = DEFAULT_GRID,
                   order: int = 4) -> FloquetBasis:
    """
    Floquet quasienergies, period-sampled states and Fourier components.

    Args:
        model: driven model
        n_steps: substeps per period
        harmonics: starting Fourier cutoff K (default_harmonics when omitted); doubled while
            the modes carry more than 1e-8 of their power beyond it
        n_grid: period grid size N_t; raised to a power of two >= 4K
        order: Magnus order of the substep exponentials

    Returns:
        FloquetBasis ordered by overlap with the static eigenbasis

    Raises:
        TruncationError: if the modes do not fit inside N_t / 4 harmonics
    """
    if harmonics is None:
        harmonics = default_harmonics(model)
    if harmonics < 1:
        raise ParameterValidationError(f"harmonics must be >= 1, got {harmonics}")
    n_grid = max(_next_power_of_two(n_grid), _next_power_of_two(4 * harmonics))
    n_steps = max(n_steps, n_grid)

    grid, monodromy = propagator_grid(model, n_steps, n_grid, order)
    tau = model.period

    schur_form, vectors = scipy.linalg.schur(monodromy, output="complex")
    eigenvalues = np.diag(schur_form)
    raw = -np.angle(eigenvalues) / tau
    quasienergies, shifts = fold_into_zone(raw, model.omega0)

    diagnostics = {"unitarity_defect": unitarity_defect(monodromy), "degenerate": 0.0}
    separations = np.abs(eigenvalues[:, None] - eigenvalues[None, :]) + np.eye(len(eigenvalues))
    if np.min(separations) < DEGENERACY_TOLERANCE:
        diagnostics["degenerate"] = 1.0
        logger.warning(f"[WARN] Degenerate quasienergies {quasienergies}; states inside the block are not unique")

    # label Floquet states by the static level they overlap most
    _, static_vectors = np.linalg.eigh(model.static_hamiltonian())
    by_energy = np.argsort(quasienergies, kind="stable")
    overlaps = np.abs(dagger(static_vectors) @ vectors[:, by_energy]) ** 2
    _, assignment = linear_sum_assignment(-overlaps)
    order_index = by_energy[assignment]

    quasienergies = quasienergies[order_index]
    shifts = shifts[order_index]
    initial = fix_phases(vectors[:, order_index])

    times = np.arange(n_grid) * tau / n_grid
    states_grid = np.exp(1j * quasienergies[None, None, :] * times[:, None, None]) * (grid @ initial)

    power = np.sum(np.abs(np.fft.ifft(states_grid, axis=0)) ** 2, axis=(1, 2))
    tail = _spectral_tail(power, harmonics)
    while tail > TAIL_TOLERANCE and 8 * harmonics <= n_grid:
        logger.warning(f"[WARN] Fourier weight beyond K={harmonics}: {tail:.2e}; increasing K to {2 * harmonics}")
        harmonics *= 2
        tail = _spectral_tail(power, harmonics)
    if tail > TAIL_TOLERANCE:
        raise TruncationError(f"Floquet modes keep {tail:.2e} of their weight beyond K={harmonics} "
                              f"on a grid of {n_grid} points; increase n_grid or reduce the drive")
    diagnostics["fourier_tail"] = tail
    fourier = _fourier_components(states_grid, harmonics)

    return FloquetBasis(
        omega0=model.omega0,
        quasienergies=quasienergies,
        branch_shifts=shifts,
        times=times,
        states_grid=states_grid,
        fourier=fourier,
        propagators=grid,
        monodromy=monodromy,
        n_steps=n_steps,
        diagnostics=diagnostics,
    )


def with_harmonics(basis: FloquetBasis, harmonics: int) -> FloquetBasis:
    """Same basis with the Fourier cutoff changed, recomputed from the period grid."""
    if 4 * harmonics > basis.n_grid:
        raise TruncationError(f"K={harmonics} needs a grid of at least {4 * harmonics} points, have {basis.n_grid}")
    return dataclasses.replace(basis, fourier=_fourier_components(np.asarray(basis.states_grid), harmonics))


def shift_branch(basis: FloquetBasis, state: int, shift: int = 1) -> FloquetBasis:
    """
    Move one quasienergy to another Brillouin zone: eps -> eps + shift w0 with
    |alpha'(t)> = exp(i shift w0 t)|alpha(t)>, i.e. alpha'_k = alpha_{k+shift}.
    """
    quasienergies = np.array(basis.quasienergies)
    quasienergies[state] += shift * basis.omega0
    shifts = np.array(basis.branch_shifts)
    shifts[state] -= shift

    states_grid = np.array(basis.states_grid)
    states_grid[:, :, state] *= np.exp(1j * shift * basis.omega0 * basis.times)[:, None]
    fourier = _fourier_components(states_grid, basis.harmonics)
    return dataclasses.replace(basis, quasienergies=quasienergies, branch_shifts=shifts,
                               states_grid=states_grid, fourier=fourier)


def _combined_operators(couplings: Sequence[CouplingOperator]):
    """Sum operators that share a bath tag (they see the same bath)."""
    combined = {}
    for coupling in couplings:
        if coupling.tag in combined:
            combined[coupling.tag] = combined[coupling.tag] + np.asarray(coupling.operator)
        else:
            combined[coupling.tag] = np.asarray(coupling.operator)
    return combined


def _harmonic_elements(fourier: np.ndarray, operator: np.ndarray) -> np.ndarray:
    """A_{alpha beta, q} = sum_k <alpha_k|A|beta_{k+q}>, shape (2K+1, M, M)."""
    size = fourier.shape[0]
    harmonics = (size - 1) // 2
    bra = np.conj(fourier)
    ket = np.einsum("ij,kjb->kib", operator, fourier)
    elements = np.zeros((size, fourier.shape[2], fourier.shape[2]), dtype=complex)
    for q in range(-harmonics, harmonics + 1):
        if q >= 0:
            elements[q + harmonics] = np.einsum("kia,kib->ab", bra[:size - q], ket[q:])
        else:
            elements[q + harmonics] = np.einsum("kia,kib->ab", bra[-q:], ket[:size + q])
    return elements


def _tail_weight(elements: np.ndarray) -> float:
    """Weight of the two |q| = K shells relative to all shells."""
    shells = np.sum(np.abs(elements) ** 2, axis=(1, 2))
    total = float(np.sum(shells))
    if total == 0.0:
        return 0.0
    return float((shells[0] + shells[-1]) / total)


def matrix_elements(basis: FloquetBasis,
                    couplings: Sequence[CouplingOperator],
                    tail_tolerance: float = TAIL_TOLERANCE) -> CouplingElements:
    """
    Floquet matrix elements of every coupling operator.

    The |q| = K shells must carry less than ``tail_tolerance`` of the total weight; otherwise
    K is doubled (recomputing the Fourier components from the period grid) up to N_t / 4.

    Raises:
        TruncationError: if the tail criterion cannot be met on the available grid
    """
    if not couplings:
        raise ParameterValidationError("matrix_elements needs at least one coupling operator")
    operators = _combined_operators(couplings)

    while True:
        tensors = {tag: _harmonic_elements(np.asarray(basis.fourier), op) for tag, op in operators.items()}
        tails = {tag: _tail_weight(t) for tag, t in tensors.items()}
        worst = max(tails.values())
        if worst < tail_tolerance:
            return CouplingElements(tensors=tensors, tail_weights=tails)
        wider = 2 * basis.harmonics
        if 4 * wider > basis.n_grid:
            raise TruncationError(f"Harmonic tail {worst:.2e} above {tail_tolerance:g} at K={basis.harmonics}, "
                                  f"grid of {basis.n_grid} points cannot hold more harmonics")
        logger.warning(f"[WARN] Harmonic tail {worst:.2e} at K={basis.harmonics}; increasing K to {wider}")
        basis = with_harmonics(basis, wider)
