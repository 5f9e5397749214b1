"""Shared fixtures for the LZS Studio test suite."""

import numpy as np
import pytest

from lzstudio.models.device import DRIVE_HARMONIC, DrivenModel, FqParams, OhmicBath, TlsParams
from lzstudio.services.fq_model import SIGMA_Z, compute_tls_parameters

OMEGA0 = 0.003


@pytest.fixture(scope="session")
def device():
    return FqParams(alpha=0.8, eta=0.25, n_charge=10)


@pytest.fixture(scope="session")
def device_tls(device):
    return compute_tls_parameters(device)


@pytest.fixture
def simple_tls():
    """Round numbers, comparable to the derived device."""
    return TlsParams(delta=3.33e-4, i_p=0.721, lambda_f=2 * np.pi * 0.721, lambda_ch=3e-4, lambda_cc=4e-3)


@pytest.fixture
def flux_bath():
    return OhmicBath(gamma=0.001, omega_c=0.15, temperature=0.0014, tag="flux")


@pytest.fixture
def charge_bath():
    return OhmicBath(gamma=0.001, omega_c=0.15, temperature=0.0014, tag="charge")


@pytest.fixture
def diagonal_model():
    """Factory for the two-level model without tunnelling: H(t) = -(eps0 + A cos(w0 t))/2 sigma_z."""
    def build(eps0: float, amplitude: float, omega0: float = OMEGA0) -> DrivenModel:
        return DrivenModel(
            h0=-0.5 * eps0 * SIGMA_Z,
            hc=-0.5 * amplitude * SIGMA_Z,
            hs=np.zeros((2, 2), dtype=complex),
            couplings=(),
            f_dc=0.0,
            f_ac=0.0,
            omega0=omega0,
            projector_plus=np.diag([1.0, 0.0]).astype(complex),
            drive_form=DRIVE_HARMONIC,
        )
    return build
