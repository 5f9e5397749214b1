"""Tests for the flux-qubit Hamiltonian, its two-level reduction and the driven model builders."""

import math

import numpy as np
import pytest

from lzstudio.errors import ParameterValidationError, TruncationError
from lzstudio.models.device import DRIVE_FLUX, FqParams, TlsParams
from lzstudio.services.fq_model import (
    SIGMA_X, SIGMA_Y, SIGMA_Z, build_fq_hamiltonian, build_multilevel_model, build_tls_model,
    charge_operators, compute_tls_parameters, diagonalize_static, level_spectrum, loop_current_operator,
    potential_operator
)
from lzstudio.utils.linalg_utils import hermitian_defect

OMEGA0 = 0.003


class TestChargeBasis:
    def test_basis_dimension(self):
        ops = charge_operators(10)
        assert ops.n_p.shape == (441, 441)

    def test_charge_combinations(self):
        ops = charge_operators(3)
        n1 = (np.diag(ops.n_p) + np.diag(ops.n_m)).real / 2
        n2 = (np.diag(ops.n_p) - np.diag(ops.n_m)).real / 2
        # every junction-charge pair appears once
        assert sorted(zip(n1, n2)) == [(a, b) for a in range(-3, 4) for b in range(-3, 4)]
        np.testing.assert_allclose(n1, np.round(n1))

    def test_operators_hermitian(self):
        ops = charge_operators(6)
        for op in ops:
            assert hermitian_defect(op) == 0.0

    def test_cutoff_too_small(self):
        with pytest.raises(ParameterValidationError):
            charge_operators(0)

    def test_hamiltonian_hermitian(self, device):
        hamiltonian = build_fq_hamiltonian(device, 0.5 + 0.01)
        assert hermitian_defect(hamiltonian) < 1e-14

    def test_spectrum_symmetric_in_detuning(self, device):
        levels = level_spectrum(device, [-0.004, 0.004], k=4)
        np.testing.assert_allclose(levels[0], levels[1], rtol=0, atol=1e-12)

    def test_gap_opens_away_from_symmetry_point(self, device):
        levels = level_spectrum(device, [0.0, 0.002], k=2)
        assert levels[1, 1] - levels[1, 0] > levels[0, 1] - levels[0, 0]

    def test_current_changes_sign_with_detuning(self, device):
        for detuning, sign in ((0.003, 1.0), (-0.003, -1.0)):
            f = 0.5 + detuning
            ground = diagonalize_static(build_fq_hamiltonian(device, f), 1).states[:, 0]
            current = np.vdot(ground, loop_current_operator(device, f) @ ground).real
            assert sign * current > 0

    def test_non_finite_flux_rejected(self, device):
        with pytest.raises(ParameterValidationError):
            build_fq_hamiltonian(device, math.nan)


class TestTlsReduction:
    def test_device_gap_and_current(self, device_tls):
        assert device_tls.delta == pytest.approx(3.33e-4, rel=0.01)
        assert device_tls.i_p == pytest.approx(0.721, rel=0.01)

    def test_device_couplings(self, device_tls):
        assert device_tls.lambda_f == pytest.approx(2 * math.pi * device_tls.i_p)
        assert device_tls.lambda_f == pytest.approx(4.5, rel=0.1)
        assert device_tls.lambda_ch == pytest.approx(3e-4, rel=0.1)
        assert 0.0 < device_tls.lambda_cc < 1e-3

    def test_critical_current_coupling_tracks_gap_slope(self, device, device_tls):
        # H(s) = K + s V: <-|V|+> is half the slope of the gap at s = 1
        potential = potential_operator(device, 0.5)
        kinetic = build_fq_hamiltonian(device, 0.5) - potential
        step = 1e-3
        gaps = []
        for scale in (1.0 - step, 1.0 + step):
            levels = np.linalg.eigvalsh(kinetic + scale * potential)
            gaps.append(levels[1] - levels[0])
        slope = (gaps[1] - gaps[0]) / (2 * step)
        assert device_tls.lambda_cc == pytest.approx(0.5 * abs(slope), rel=1e-4)

    def test_converged_in_charge_cutoff(self, device_tls):
        wider = compute_tls_parameters(FqParams(alpha=0.8, eta=0.25, n_charge=12))
        assert abs(wider.delta - device_tls.delta) < 1e-6 * device_tls.delta
        assert abs(wider.i_p - device_tls.i_p) < 1e-6 * device_tls.i_p

    def test_neglected_charge_coupling_is_reported(self, device_tls):
        # n_p has no matrix element between the current states at the symmetry point
        assert device_tls.lambda_ch_p < 1e-10

    def test_invalid_device(self):
        with pytest.raises(ParameterValidationError):
            FqParams(alpha=2.5)
        with pytest.raises(ParameterValidationError):
            FqParams(n_charge=3)

    def test_f_omega(self, simple_tls):
        f_omega = simple_tls.f_omega(OMEGA0)
        assert simple_tls.epsilon(f_omega) == pytest.approx(OMEGA0)


class TestTlsModel:
    def test_static_hamiltonian(self, simple_tls):
        f_dc = 2.5 * simple_tls.f_omega(OMEGA0)
        model = build_tls_model(simple_tls, f_dc, 0.003, OMEGA0, [])
        eps0 = simple_tls.epsilon(f_dc)
        expected = -0.5 * eps0 * SIGMA_Z - 0.5 * simple_tls.delta * SIGMA_X
        np.testing.assert_allclose(model.static_hamiltonian(), expected)
        assert model.drive_scale() == pytest.approx(simple_tls.epsilon(0.003))

    def test_hamiltonian_at_time(self, simple_tls):
        model = build_tls_model(simple_tls, 0.0, 0.003, OMEGA0, [])
        amplitude = simple_tls.epsilon(0.003)
        t = 0.3 * model.period
        expected = model.h0 - 0.5 * amplitude * math.cos(OMEGA0 * t) * SIGMA_Z
        np.testing.assert_allclose(model.hamiltonian(t), expected, atol=1e-15)
        assert model.hamiltonian(np.array([0.0, t])).shape == (2, 2, 2)

    def test_coupling_operators(self, simple_tls):
        model = build_tls_model(simple_tls, 0.0, 0.003, OMEGA0,
                                [("z", simple_tls.lambda_f, "flux"), ("y", simple_tls.lambda_ch, "charge")])
        np.testing.assert_allclose(model.couplings[0].operator, -simple_tls.lambda_f * SIGMA_Z)
        np.testing.assert_allclose(model.couplings[1].operator, -simple_tls.lambda_ch * SIGMA_Y)
        assert model.coupling_tags == ("flux", "charge")

    def test_couplings_required_for_dissipation(self, simple_tls):
        with pytest.raises(ParameterValidationError):
            build_tls_model(simple_tls, 0.0, 0.003, OMEGA0, [], require_couplings=True)

    def test_unknown_axis(self, simple_tls):
        with pytest.raises(ParameterValidationError):
            build_tls_model(simple_tls, 0.0, 0.003, OMEGA0, [("w", 1.0, "flux")])

    def test_invalid_tls_parameters(self):
        with pytest.raises(ParameterValidationError):
            TlsParams(delta=-1e-4, i_p=0.7)


class TestMultilevelModel:
    def test_static_part_is_diagonal_in_levels(self, device):
        f_dc = 0.002
        model = build_multilevel_model(device, 4, f_dc, 0.0, OMEGA0, "flux")
        energies = diagonalize_static(build_fq_hamiltonian(device, 0.5 + f_dc), 4).energies
        np.testing.assert_allclose(model.static_hamiltonian(), np.diag(energies - energies.mean()), atol=1e-11)
        assert model.drive_form == DRIVE_FLUX

    def test_drive_matches_full_hamiltonian(self, device):
        f_dc, f_ac = 0.001, 0.004
        model = build_multilevel_model(device, 4, f_dc, f_ac, OMEGA0, "charge")
        basis = diagonalize_static(build_fq_hamiltonian(device, 0.5 + f_dc), 4).states
        t = 0.17 * model.period
        full = build_fq_hamiltonian(device, float(model.flux(t)))
        projected = basis.conj().T @ full @ basis
        projected -= np.mean(diagonalize_static(build_fq_hamiltonian(device, 0.5 + f_dc), 4).energies) * np.eye(4)
        np.testing.assert_allclose(model.hamiltonian(t), projected, atol=1e-11)

    def test_projector_is_idempotent_with_rank_one(self, device):
        model = build_multilevel_model(device, 2, 0.002, 0.0, OMEGA0, "flux")
        projector = model.projector_plus
        np.testing.assert_allclose(projector @ projector, projector, atol=1e-12)
        assert np.trace(projector).real == pytest.approx(1.0)

    def test_all_noise_kinds(self, device):
        model = build_multilevel_model(device, 3, 0.0, 0.002, OMEGA0, ["flux", "charge", "critical-current"])
        assert model.coupling_tags == ("flux", "charge", "critical-current")

    def test_truncation_range(self, device):
        with pytest.raises(TruncationError):
            build_multilevel_model(device, 1, 0.0, 0.0, OMEGA0, "flux")
        with pytest.raises(TruncationError):
            build_multilevel_model(device, device.basis_dim, 0.0, 0.0, OMEGA0, "flux")

    def test_unknown_noise_kind(self, device):
        with pytest.raises(ParameterValidationError):
            build_multilevel_model(device, 4, 0.0, 0.0, OMEGA0, "thermal")
