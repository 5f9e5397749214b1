"""
Ohmic bath service for LZS Studio
Spectral density and the correlation weight g(w) = J(w) n_th(w) entering the Floquet rates.
"""

import logging

import numpy as np

from ..models.device import OhmicBath

logger = logging.getLogger(__name__)

# below this |w|/T the Bose factor is replaced by its series
SERIES_THRESHOLD = 1e-6


def _as_output(values: np.ndarray, like):
    return float(values) if np.ndim(like) == 0 else values


def spectral_density(bath: OhmicBath, omega):
    """J(w) = gamma w exp(-|w|/omega_c), odd in w."""
    omega = np.asarray(omega, dtype=float)
    values = bath.gamma * omega * np.exp(-np.abs(omega) / bath.omega_c)
    return _as_output(values, omega)


def g_weight(bath: OhmicBath, omega):
    """
    Correlation weight g(w) = J(w) / (exp(w/T) - 1).

    g(0) = gamma T, and g(-w) - g(w) = J(w) follows from the odd extension of J.

    Args:
        bath: ohmic bath
        omega: scalar or array of frequencies

    Returns:
        float for scalar input, array otherwise
    """
    omega = np.asarray(omega, dtype=float)
    x = omega / bath.temperature
    small = np.abs(x) < SERIES_THRESHOLD

    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        exact = spectral_density(bath, omega) / np.expm1(x)
    series = (bath.gamma * bath.temperature * np.exp(-np.abs(omega) / bath.omega_c)
              * (1.0 - 0.5 * x + x * x / 12.0))
    values = np.where(small, series, exact)
    # exp(w/T) overflow leaves 0/inf, which is already 0; guard against nan from inf*0
    values = np.nan_to_num(values, nan=0.0, posinf=0.0)
    return _as_output(values, omega)


def thermal_occupation(bath: OhmicBath, omega):
    """Bose occupation n_th(w) = 1 / (exp(w/T) - 1) for w != 0."""
    omega = np.asarray(omega, dtype=float)
    with np.errstate(over="ignore", divide="ignore"):
        values = 1.0 / np.expm1(omega / bath.temperature)
    return _as_output(values, omega)
