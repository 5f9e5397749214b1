"""
Flux-qubit model service for LZS Studio
Builds the three-junction flux-qubit Hamiltonian in the charge basis, diagonalizes it and
reduces it to the two-level and multilevel driven models consumed by the Floquet solver.
"""

import functools
import logging
import math
from typing import Dict, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from ..errors import (
    ConvergenceError, DegenerateStateError, ParameterValidationError, TruncationError
)
from ..models.device import (
    DRIVE_FLUX, DRIVE_HARMONIC, CouplingOperator, DrivenModel, FqParams, StaticSpectrum, TlsParams
)
from ..utils.linalg_utils import dagger, fix_phases, hermitian_defect, is_hermitian, positive_projector

logger = logging.getLogger(__name__)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}

NOISE_KINDS = ("flux", "charge", "critical-current")


class TlsCoupling(NamedTuple):
    """One two-level noise channel: operator -strength * sigma_axis attached to bath `tag`."""
    axis: str
    strength: float
    tag: str


class ChargeOperators(NamedTuple):
    """Charge-basis operators on the junction-charge grid |n1, n2>."""
    n_p: np.ndarray
    n_m: np.ndarray
    cos_p_cos_m: np.ndarray
    cos_2m: np.ndarray
    sin_2m: np.ndarray


def _readonly(matrix: np.ndarray) -> np.ndarray:
    matrix.setflags(write=False)
    return matrix


@functools.lru_cache(maxsize=8)
def charge_operators(n_charge: int) -> ChargeOperators:
    """
    Build n_p, n_m, cos(phi_p)cos(phi_m), cos(2 phi_m) and sin(2 phi_m) for cutoff N.

    The basis is the grid of charges n1, n2 in [-N, N] on the two large junctions, with
    n_p = n1 + n2 and n_m = n1 - n2 conjugate to phi_p = (phi1 + phi2)/2 and
    phi_m = (phi1 - phi2)/2. Then cos(phi_p)cos(phi_m) = (cos phi1 + cos phi2)/2 and
    exp(2i phi_m) = exp(i phi1) exp(-i phi2).

    Args:
        n_charge: cutoff N

    Returns:
        ChargeOperators with read-only dense (2N+1)^2 matrices
    """
    if n_charge < 1:
        raise ParameterValidationError(f"n_charge must be >= 1, got {n_charge}")

    charges = np.arange(-n_charge, n_charge + 1)
    pairs = [(n1, n2) for n1 in charges for n2 in charges]
    index = {pair: i for i, pair in enumerate(pairs)}
    dim = len(pairs)

    n_p = np.diag([float(n1 + n2) for n1, n2 in pairs]).astype(complex)
    n_m = np.diag([float(n1 - n2) for n1, n2 in pairs]).astype(complex)
    cos_p_cos_m = np.zeros((dim, dim), dtype=complex)
    cos_2m = np.zeros((dim, dim), dtype=complex)
    sin_2m = np.zeros((dim, dim), dtype=complex)

    for (n1, n2), col in index.items():
        for row in (index.get((n1 + 1, n2)), index.get((n1, n2 + 1))):
            if row is not None:
                cos_p_cos_m[row, col] = 0.25
                cos_p_cos_m[col, row] = 0.25
        # exp(+2i phi_m) moves one charge from junction 2 to junction 1
        up = index.get((n1 + 1, n2 - 1))
        if up is not None:
            cos_2m[up, col] = 0.5
            cos_2m[col, up] = 0.5
            sin_2m[up, col] = -0.5j
            sin_2m[col, up] = 0.5j

    logger.debug(f"Charge basis built: N={n_charge}, dimension {dim}")
    return ChargeOperators(*(_readonly(op) for op in (n_p, n_m, cos_p_cos_m, cos_2m, sin_2m)))


def _check_flux(f: float) -> float:
    f = float(f)
    if not math.isfinite(f):
        raise ParameterValidationError(f"flux must be finite, got {f}")
    return f


def kinetic_and_static_potential(params: FqParams) -> np.ndarray:
    """E_p n_p^2 + E_m n_m^2 + (2 + alpha) - 2 cos(phi_p) cos(phi_m): the flux-independent part of H."""
    ops = charge_operators(int(params.n_charge))
    dim = ops.n_p.shape[0]
    return (params.e_p * ops.n_p @ ops.n_p + params.e_m * ops.n_m @ ops.n_m
            + (2.0 + params.alpha) * np.eye(dim) - 2.0 * ops.cos_p_cos_m)


def build_fq_hamiltonian(params: FqParams, f: float) -> np.ndarray:
    """
    Flux-qubit Hamiltonian H = E_p n_p^2 + E_m n_m^2 + V in units of E_J, with
    V = 2 + alpha - 2 cos(phi_p) cos(phi_m) - alpha cos(2 pi f + 2 phi_m).

    Args:
        params: static device parameters
        f: total flux in units of Phi_0

    Returns:
        Hermitian matrix in the charge basis
    """
    f = _check_flux(f)
    ops = charge_operators(int(params.n_charge))
    phase = 2.0 * math.pi * f
    return (kinetic_and_static_potential(params)
            - params.alpha * (math.cos(phase) * ops.cos_2m - math.sin(phase) * ops.sin_2m))


def potential_operator(params: FqParams, f: float) -> np.ndarray:
    """Josephson potential V (couples to critical-current fluctuations)."""
    f = _check_flux(f)
    ops = charge_operators(int(params.n_charge))
    dim = ops.n_p.shape[0]
    phase = 2.0 * math.pi * f
    return ((2.0 + params.alpha) * np.eye(dim) - 2.0 * ops.cos_p_cos_m
            - params.alpha * (math.cos(phase) * ops.cos_2m - math.sin(phase) * ops.sin_2m))


def loop_current_operator(params: FqParams, f: float) -> np.ndarray:
    """
    Loop current I = -(1/2 pi) dH/df = -alpha sin(2 pi f + 2 phi_m).

    With this sign the positive-current state is the ground state for f > 1/2, matching
    the two-level form -epsilon/2 sigma_z.
    """
    f = _check_flux(f)
    ops = charge_operators(int(params.n_charge))
    phase = 2.0 * math.pi * f
    return -params.alpha * (math.sin(phase) * ops.cos_2m + math.cos(phase) * ops.sin_2m)


def diagonalize_static(hamiltonian: np.ndarray, k: int) -> StaticSpectrum:
    """
    Lowest k eigenpairs of a Hermitian matrix, sorted, with deterministic phases.

    Raises:
        ParameterValidationError: if the matrix is not Hermitian or k is out of range
        ConvergenceError: if the eigensolver fails
    """
    hamiltonian = np.asarray(hamiltonian)
    dim = hamiltonian.shape[0]
    if not 1 <= k <= dim:
        raise ParameterValidationError(f"k must be in [1, {dim}], got {k}")
    if not is_hermitian(hamiltonian, 1e-12):
        raise ParameterValidationError(f"Hamiltonian is not Hermitian (defect {hermitian_defect(hamiltonian):.2e})")
    try:
        energies, states = scipy.linalg.eigh(hamiltonian, subset_by_index=[0, k - 1])
    except (np.linalg.LinAlgError, ValueError) as e:
        raise ConvergenceError(f"Static eigensolver failed: {e}")
    return StaticSpectrum(energies=energies, states=fix_phases(states))


def level_spectrum(params: FqParams, detunings: Sequence[float], k: int = 4) -> np.ndarray:
    """Lowest k levels versus flux detuning, shape (len(detunings), k)."""
    return np.array([diagonalize_static(build_fq_hamiltonian(params, 0.5 + fd), k).energies for fd in detunings])


def _symmetric_point_pair(params: FqParams) -> Tuple[float, np.ndarray, np.ndarray]:
    """Gap and the current states |+>, |-> at f = 1/2."""
    hamiltonian = build_fq_hamiltonian(params, 0.5)
    spectrum = diagonalize_static(hamiltonian, 2)
    delta = spectrum.gap()
    if delta <= 1e-12 * max(1.0, float(np.linalg.norm(hamiltonian, ord=2))):
        raise DegenerateStateError(f"E0 and E1 are degenerate at the symmetry point (gap {delta:.3e})")

    ground, excited = spectrum.states[:, 0], spectrum.states[:, 1]
    current = loop_current_operator(params, 0.5)
    element = np.vdot(ground, current @ excited)
    if abs(element) > 0:
        excited = excited * np.conj(element) / abs(element)
    plus = (ground + excited) / math.sqrt(2.0)
    minus = (ground - excited) / math.sqrt(2.0)
    return delta, plus, minus


def compute_tls_parameters(params: FqParams) -> TlsParams:
    """
    Two-level reduction at the symmetry point f = 1/2.

    Args:
        params: device parameters (f_dc is ignored)

    Returns:
        TlsParams with gap, persistent current and the three coupling magnitudes
    """
    delta, plus, minus = _symmetric_point_pair(params)
    ops = charge_operators(int(params.n_charge))

    i_p = abs(float(np.vdot(plus, loop_current_operator(params, 0.5) @ plus).real))
    lambda_ch = 2.0 * params.e_m * abs(np.vdot(minus, ops.n_m @ plus))
    lambda_cc = abs(np.vdot(minus, potential_operator(params, 0.5) @ plus))
    lambda_ch_p = 2.0 * params.e_p * abs(np.vdot(minus, ops.n_p @ plus))

    tls = TlsParams(delta=delta, i_p=i_p, lambda_f=2.0 * math.pi * i_p,
                    lambda_ch=float(lambda_ch), lambda_cc=float(lambda_cc), lambda_ch_p=float(lambda_ch_p))
    logger.info(f"[OK] TLS reduction: delta={tls.delta:.4e}, I_p={tls.i_p:.4f}, lambda_f={tls.lambda_f:.3f}, "
                f"lambda_ch={tls.lambda_ch:.3e}, lambda_cc={tls.lambda_cc:.3e}")
    return tls


def build_tls_model(tls: TlsParams,
                    f_dc: float,
                    f_ac: float,
                    omega0: float,
                    coupling_spec: Sequence[Union[TlsCoupling, Tuple[str, float, str]]],
                    require_couplings: bool = False) -> DrivenModel:
    """
    Driven two-level model in the current basis |+>, |->:
    H(t) = -(eps0 + A cos(w0 t))/2 sigma_z - delta/2 sigma_x, eps0 = 4 pi I_p f_dc, A = 4 pi I_p f_ac.

    Args:
        tls: two-level parameters
        f_dc, f_ac: static detuning and drive amplitude (units of Phi_0)
        omega0: drive frequency
        coupling_spec: (axis, strength, tag) triples; each adds -strength * sigma_axis
        require_couplings: raise if no coupling is given (dissipative runs)

    Returns:
        DrivenModel with the harmonic drive form
    """
    couplings = [TlsCoupling(*entry) for entry in coupling_spec]
    if require_couplings and not couplings:
        raise ParameterValidationError("At least one coupling is required for dissipative evolution")

    eps0 = tls.epsilon(f_dc)
    amplitude = tls.epsilon(f_ac)
    operators = []
    for coupling in couplings:
        if coupling.axis not in PAULI:
            raise ParameterValidationError(f"Unknown coupling axis '{coupling.axis}', expected one of x, y, z")
        operators.append(CouplingOperator(operator=-float(coupling.strength) * PAULI[coupling.axis],
                                          tag=coupling.tag,
                                          label=f"{-coupling.strength:.4g} sigma_{coupling.axis}"))

    return DrivenModel(
        h0=-0.5 * eps0 * SIGMA_Z - 0.5 * tls.delta * SIGMA_X,
        hc=-0.5 * amplitude * SIGMA_Z,
        hs=np.zeros((2, 2), dtype=complex),
        couplings=tuple(operators),
        f_dc=f_dc,
        f_ac=f_ac,
        omega0=omega0,
        projector_plus=np.diag([1.0, 0.0]).astype(complex),
        drive_form=DRIVE_HARMONIC,
        label="tls",
    )


def _project(basis: np.ndarray, operator: np.ndarray, name: str) -> np.ndarray:
    projected = dagger(basis) @ operator @ basis
    defect = hermitian_defect(projected)
    if defect > 1e-10 * max(1.0, float(np.max(np.abs(projected)))):
        raise TruncationError(f"Projected {name} is not Hermitian (defect {defect:.2e})")
    return 0.5 * (projected + dagger(projected))


def build_multilevel_model(params: FqParams,
                           m: int,
                           f_dc: float,
                           f_ac: float,
                           omega0: float,
                           noise_kind: Union[str, Sequence[str]],
                           scales: Optional[Dict[str, float]] = None) -> DrivenModel:
    """
    Driven flux-qubit model restricted to the m lowest levels at the static flux 1/2 + f_dc.

    The drive stays exact inside the subspace through
    cos(2 pi f + 2 phi_m) = cos(2 pi f) cos(2 phi_m) - sin(2 pi f) sin(2 phi_m).

    Args:
        params: device parameters (params.f_dc is ignored in favour of f_dc)
        m: number of levels kept
        f_dc, f_ac, omega0: drive description
        noise_kind: one or several of flux, charge, critical-current
        scales: optional multiplier per noise kind (mixing angles)

    Returns:
        DrivenModel with the flux-phase drive form
    """
    kinds = (noise_kind,) if isinstance(noise_kind, str) else tuple(noise_kind)
    for kind in kinds:
        if kind not in NOISE_KINDS:
            raise ParameterValidationError(f"Unknown noise kind '{kind}', expected one of {NOISE_KINDS}")
    scales = scales or {}

    ops = charge_operators(int(params.n_charge))
    dim = ops.n_p.shape[0]
    if not 2 <= m <= dim // 4:
        raise TruncationError(f"m={m} levels is outside the well-converged range [2, {dim // 4}] for N={params.n_charge}")

    f_static = _check_flux(0.5 + f_dc)
    spectrum = diagonalize_static(build_fq_hamiltonian(params, f_static), m)
    if np.min(np.diff(spectrum.energies)) <= 1e-12:
        logger.warning(f"[WARN] Near-degenerate static levels at f_dc={f_dc:.4e}: {spectrum.energies}")
    basis = spectrum.states

    # static levels centred on zero so the Floquet modes carry no large uniform phase
    h0 = _project(basis, kinetic_and_static_potential(params), "static part")
    h0 = h0 - float(np.mean(spectrum.energies)) * np.eye(m)
    hc = -params.alpha * _project(basis, ops.cos_2m, "cos(2 phi_m)")
    hs = params.alpha * _project(basis, ops.sin_2m, "sin(2 phi_m)")

    phase = 2.0 * math.pi * f_static
    noise_operators = {
        "flux": lambda: 2.0 * math.pi * params.alpha * (math.sin(phase) * ops.cos_2m + math.cos(phase) * ops.sin_2m),
        "charge": lambda: 2.0 * params.e_m * ops.n_m,
        "critical-current": lambda: potential_operator(params, f_static),
    }
    couplings = tuple(
        CouplingOperator(operator=scales.get(kind, 1.0) * _project(basis, noise_operators[kind](), kind),
                         tag=kind, label=f"{kind} ({m} levels)")
        for kind in kinds
    )

    projector = positive_projector(_project(basis, loop_current_operator(params, f_static), "loop current"))
    logger.debug(f"Multilevel model: m={m}, f_dc={f_dc:.4e}, levels={spectrum.energies}")
    return DrivenModel(
        h0=h0, hc=hc, hs=hs,
        couplings=couplings,
        f_dc=f_dc,
        f_ac=f_ac,
        omega0=omega0,
        projector_plus=projector,
        drive_form=DRIVE_FLUX,
        label=f"multilevel-{m}",
    )
