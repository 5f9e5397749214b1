"""Tests for the ohmic bath weights, checked against high-precision evaluation."""

import mpmath
import numpy as np
import pytest

from lzstudio.errors import ParameterValidationError
from lzstudio.models.device import OhmicBath
from lzstudio.services.bath import g_weight, spectral_density, thermal_occupation


def g_reference(bath: OhmicBath, omega: float) -> float:
    with mpmath.workdps(50):
        w = mpmath.mpf(omega)
        if w == 0:
            return float(mpmath.mpf(bath.gamma) * bath.temperature)
        j = bath.gamma * w * mpmath.exp(-abs(w) / bath.omega_c)
        return float(j / mpmath.expm1(w / bath.temperature))


class TestSpectralDensity:
    def test_odd(self, flux_bath):
        omega = np.linspace(0.0, 0.5, 11)
        np.testing.assert_allclose(spectral_density(flux_bath, -omega), -spectral_density(flux_bath, omega))

    def test_scalar_and_array(self, flux_bath):
        assert isinstance(spectral_density(flux_bath, 0.01), float)
        assert spectral_density(flux_bath, [0.01, 0.02]).shape == (2,)


class TestCorrelationWeight:
    def test_zero_frequency(self, flux_bath):
        assert g_weight(flux_bath, 0.0) == flux_bath.gamma * flux_bath.temperature

    @pytest.mark.parametrize("omega", [-0.05, -3e-3, -1e-9, 1e-9, 1e-4, 3e-3, 0.02, 0.1])
    def test_matches_high_precision(self, flux_bath, omega):
        assert g_weight(flux_bath, omega) == pytest.approx(g_reference(flux_bath, omega), rel=1e-12)

    def test_detailed_balance(self, flux_bath):
        rng = np.random.default_rng(1234)
        omega = rng.uniform(1e-5, 0.03, size=100) * rng.choice([-1.0, 1.0], size=100)
        ratio = g_weight(flux_bath, -omega) / g_weight(flux_bath, omega)
        np.testing.assert_allclose(ratio, np.exp(omega / flux_bath.temperature), rtol=1e-12)

    def test_emission_minus_absorption_is_spectral_density(self, flux_bath):
        omega = np.linspace(1e-4, 0.05, 25)
        np.testing.assert_allclose(g_weight(flux_bath, -omega) - g_weight(flux_bath, omega),
                                   spectral_density(flux_bath, omega), rtol=1e-12)

    def test_continuous_across_series_threshold(self, flux_bath):
        x = 1e-6 * flux_bath.temperature
        below = g_weight(flux_bath, 0.999 * x)
        above = g_weight(flux_bath, 1.001 * x)
        assert below == pytest.approx(above, rel=1e-8)

    def test_large_positive_frequency_underflows_to_zero(self, flux_bath):
        assert g_weight(flux_bath, 10.0) == 0.0

    def test_zero_coupling(self):
        bath = OhmicBath(gamma=0.0)
        assert g_weight(bath, 0.01) == 0.0

    def test_thermal_occupation(self, flux_bath):
        omega = 0.002
        assert thermal_occupation(flux_bath, omega) == pytest.approx(1.0 / np.expm1(omega / flux_bath.temperature))


class TestBathValidation:
    def test_negative_gamma(self):
        with pytest.raises(ParameterValidationError, match="gamma must be >= 0"):
            OhmicBath(gamma=-0.001)

    def test_temperature_positive(self):
        with pytest.raises(ParameterValidationError):
            OhmicBath(temperature=0.0)

    def test_unknown_tag(self):
        with pytest.raises(ParameterValidationError):
            OhmicBath(tag="phonon")
