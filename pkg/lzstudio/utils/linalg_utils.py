"""
Dense linear-algebra utilities for LZS Studio
Contains the small Hermitian/unitary helpers shared by the model and solver services.
"""

import logging
from typing import Tuple

import numpy as np

logger = logging.getLogger(__name__)


def dagger(matrix: np.ndarray) -> np.ndarray:
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(matrix, -1, -2))


def hermitian_defect(matrix: np.ndarray) -> float:
    """Largest absolute entry of H - H^dagger."""
    matrix = np.asarray(matrix)
    if matrix.size == 0:
        return 0.0
    return float(np.max(np.abs(matrix - dagger(matrix))))


def is_hermitian(matrix: np.ndarray, tol: float = 1e-12) -> bool:
    """Check Hermiticity entrywise, relative to the matrix scale when it exceeds one."""
    scale = max(1.0, float(np.max(np.abs(matrix)))) if np.size(matrix) else 1.0
    return hermitian_defect(matrix) <= tol * scale


def hermitize(matrix: np.ndarray) -> np.ndarray:
    """Return (M + M^dagger) / 2."""
    return 0.5 * (matrix + dagger(matrix))


def unitarity_defect(matrix: np.ndarray) -> float:
    """Spectral-norm distance of U^dagger U from the identity (max over a batch)."""
    matrix = np.asarray(matrix)
    dim = matrix.shape[-1]
    gram = dagger(matrix) @ matrix - np.eye(dim)
    return float(np.max(np.linalg.norm(gram, ord=2, axis=(-2, -1))))


def fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude component is real and positive.

    Args:
        vectors: matrix whose columns are state vectors

    Returns:
        A copy with deterministic global phases
    """
    vectors = np.array(vectors, dtype=complex)
    pivots = np.argmax(np.abs(vectors), axis=0)
    for col, row in enumerate(pivots):
        value = vectors[row, col]
        if value != 0:
            vectors[:, col] *= np.conj(value) / abs(value)
    return vectors


def expm_hermitian(hamiltonians: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i H dt) for one Hermitian matrix or a stack of them, via eigh."""
    energies, vectors = np.linalg.eigh(hamiltonians)
    phases = np.exp(-1j * energies * dt)
    return (vectors * phases[..., None, :]) @ dagger(vectors)


def positive_projector(operator: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Projector onto the eigenspace of a Hermitian operator with eigenvalues above tol."""
    values, vectors = np.linalg.eigh(hermitize(operator))
    keep = vectors[:, values > tol]
    return keep @ dagger(keep)


def fold_into_zone(values: np.ndarray, period: float) -> Tuple[np.ndarray, np.ndarray]:
    """Fold values into (-period/2, period/2].

    Returns:
        Tuple of (folded values, integer number of periods subtracted)
    """
    values = np.asarray(values, dtype=float)
    shifts = np.ceil((values - 0.5 * period) / period)
    return values - shifts * period, shifts.astype(int)
