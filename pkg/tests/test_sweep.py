"""Tests for the sweep harness, the asymmetry metric and the run modes built on them."""

import math

import numpy as np
import pytest

from lzstudio.errors import ParameterValidationError
from lzstudio.models.config_manager import parse_config
from lzstudio.models.device import OhmicBath
from lzstudio.models.sweep import FLAG_OK, CouplingSpec, LzsMap, SolverSettings, SweepSpec
from lzstudio.services.run_service import RunService
from lzstudio.services.runners.sweep_runners import RwaCompareRunner
from lzstudio.services.rwa import dressed_params, rates_mixed
from lzstudio.services.sweep_service import asymmetry_metric, isolated_sweep, run_sweep, timescale_scan

OMEGA0 = 0.003


def synthetic_map(shape_fn, f_omega=1e-3, n=4, half_width=1.0, points=81) -> LzsMap:
    """Map of P+ sampled symmetrically around the n-th resonance."""
    detunings = n * f_omega + np.linspace(-half_width, half_width, points) * f_omega
    values = shape_fn((detunings - n * f_omega) / f_omega)
    return LzsMap(
        axes={"f_dc": detunings, "f_ac": np.array([0.003]), "theta": np.zeros(1), "t_over_tau": np.array([1000.0])},
        values={"p_plus": values.reshape(-1, 1, 1, 1)},
        flags=np.full((points, 1, 1), FLAG_OK, dtype=object),
        metadata={"f_omega": f_omega},
    )


def tls_spec(tls, f_dc_units, baths, couplings=None, **kwargs) -> SweepSpec:
    f_omega = tls.f_omega(OMEGA0)
    if couplings is None:
        couplings = (CouplingSpec(tag="flux", kind="z"),)
    return SweepSpec(model_kind="tls", omega0=OMEGA0, f_dc=tuple(u * f_omega for u in f_dc_units),
                     f_ac=(0.003,), couplings=couplings, baths=baths, tls=tls, **kwargs)


class TestAsymmetryMetric:
    def test_even_dip_is_symmetric(self):
        lzs_map = synthetic_map(lambda d: 1.0 - 0.5 * 0.05 ** 2 / (d ** 2 + 0.05 ** 2))
        assert asymmetry_metric(lzs_map, 4, 0.5) == pytest.approx(0.0, abs=1e-10)

    def test_odd_shape(self):
        dispersive = lambda d: 0.8 + 0.1 * d * np.exp(-d ** 2 / 0.02)
        assert asymmetry_metric(synthetic_map(dispersive), 4, 0.5) == pytest.approx(1.0, abs=1e-10)
        mirrored = synthetic_map(lambda d: 1.6 - dispersive(d))
        assert asymmetry_metric(mirrored, 4, 0.5) == pytest.approx(-1.0, abs=1e-10)

    def test_bounded(self):
        skewed = synthetic_map(lambda d: 1.0 - 0.4 / (1.0 + ((d - 0.03) / 0.05) ** 2))
        value = asymmetry_metric(skewed, 4, 0.5)
        assert -1.0 <= value <= 1.0
        assert value != 0.0

    def test_window_outside_scan(self):
        lzs_map = synthetic_map(lambda d: np.ones_like(d))
        with pytest.raises(ParameterValidationError):
            asymmetry_metric(lzs_map, 4, 1.5)
        with pytest.raises(ParameterValidationError):
            asymmetry_metric(lzs_map, 6, 0.5)


class TestSweepService:
    def test_map_layout(self, simple_tls, flux_bath):
        spec = tls_spec(simple_tls, [3.9, 4.0], (flux_bath,), times=(5.0, 20.0), threads=2)
        lzs_map = run_sweep(spec)
        assert lzs_map.shape == (2, 1, 1)
        assert lzs_map.values["p_plus"].shape == (2, 1, 1, 2)
        assert np.all(np.isfinite(lzs_map.values["p_plus"]))
        assert not any(flag.startswith("error") for flag in lzs_map.flags.flat)
        assert lzs_map.metadata["status"] == "complete"
        assert lzs_map.f_omega == pytest.approx(simple_tls.f_omega(OMEGA0))

    def test_independent_of_thread_count(self, simple_tls, flux_bath):
        results = []
        for threads in (1, 3):
            spec = tls_spec(simple_tls, [3.8, 3.9, 4.0, 4.1], (flux_bath,), times=(10.0, math.inf), threads=threads)
            results.append(run_sweep(spec))
        serial, parallel = results
        assert np.array_equal(serial.values["p_plus"], parallel.values["p_plus"])
        assert np.array_equal(serial.flags, parallel.flags)

    def test_failures_are_flagged(self, simple_tls):
        silent = OhmicBath(gamma=0.0, tag="flux")
        spec = tls_spec(simple_tls, [3.9, 4.0], (silent,), times=(math.inf,), threads=2)
        lzs_map = run_sweep(spec)
        assert all(flag == "error:NonUniqueSteadyStateError" for flag in lzs_map.flags.flat)
        assert np.all(np.isnan(lzs_map.values["p_plus"]))
        assert lzs_map.metadata["status"] == "partial"

    def test_mixing_angle_scales_coupling(self, simple_tls, flux_bath, charge_bath):
        couplings = (CouplingSpec(tag="flux", kind="z", mixing="cos"),
                     CouplingSpec(tag="charge", kind="x", strength=simple_tls.lambda_f, mixing="sin"))
        spec = tls_spec(simple_tls, [3.9], (flux_bath, charge_bath), couplings=couplings,
                        theta=(0.0, 0.5 * math.pi), observables=("t_r", "t_d"))
        lzs_map = run_sweep(spec)
        longitudinal = tls_spec(simple_tls, [3.9], (flux_bath,), observables=("t_r", "t_d"))
        reference = run_sweep(longitudinal)
        assert lzs_map.values["t_r"][0, 0, 0] == pytest.approx(reference.values["t_r"][0, 0, 0], rel=1e-6)
        assert lzs_map.values["t_r"][0, 0, 1] != pytest.approx(lzs_map.values["t_r"][0, 0, 0], rel=1e-3)

    def test_timescale_scan_records_ratio(self, simple_tls, flux_bath):
        spec = tls_spec(simple_tls, [3.9, 4.0, 4.1], (flux_bath,), solver=SolverSettings(n_steps=2048),
                        observables=("p_plus",), times=(math.inf,))
        lzs_map = timescale_scan(spec)
        assert np.all(np.isfinite(lzs_map.values["t_r"]))
        assert lzs_map.metadata["ratio_2tr_td_min"] >= 1.0 / (1.0 + 1e-2)
        assert lzs_map.metadata["t_exp_reference"] == pytest.approx(1000.0 * 2 * math.pi / OMEGA0)

    def test_generator_spectrum_on_request(self, simple_tls, flux_bath):
        spec = tls_spec(simple_tls, [4.0], (flux_bath,), observables=("lambda_spectrum",))
        lzs_map = run_sweep(spec)
        assert lzs_map.spectra[(0, 0, 0)].shape == (4,)

    def test_multilevel_steady_state(self, device, flux_bath, device_tls):
        f_omega = device_tls.f_omega(OMEGA0)
        spec = SweepSpec(model_kind="multilevel", omega0=OMEGA0, f_dc=(4.0 * f_omega,), f_ac=(0.003,),
                         couplings=(CouplingSpec(tag="flux", kind="flux"),), baths=(flux_bath,),
                         device=device, levels=4, times=(math.inf,), tls=device_tls)
        lzs_map = run_sweep(spec)
        assert not lzs_map.flags[0, 0, 0].startswith("error")
        assert 0.1 < lzs_map.values["p_plus"][0, 0, 0, 0] <= 1.0 + 1e-3

    def test_two_level_truncation_matches_tls(self, device, flux_bath, device_tls):
        f_dc_units = [3.5, 4.5]
        f_omega = device_tls.f_omega(OMEGA0)
        common = dict(omega0=OMEGA0, f_dc=tuple(u * f_omega for u in f_dc_units), f_ac=(0.003,),
                      baths=(flux_bath,), times=(1000.0, math.inf), tls=device_tls)
        multilevel = run_sweep(SweepSpec(model_kind="multilevel", device=device, levels=2,
                                         couplings=(CouplingSpec(tag="flux", kind="flux"),), **common))
        tls = run_sweep(SweepSpec(model_kind="tls", couplings=(CouplingSpec(tag="flux", kind="z"),), **common))
        np.testing.assert_allclose(multilevel.values["p_plus"], tls.values["p_plus"], atol=0.05)
        assert np.all(multilevel.values["p_plus"][:, 0, 0, 0] > 0.5)

    def test_isolated_sweep(self, simple_tls, flux_bath):
        spec = tls_spec(simple_tls, [3.5, 4.0], (flux_bath,), threads=2)
        lzs_map = isolated_sweep(spec, n_periods=200)
        averages = lzs_map.values["p_plus_avg"]
        assert averages.shape == (2, 1)
        assert averages[0, 0] > averages[1, 0]
        assert lzs_map.metadata["n_periods"] == 200


@pytest.mark.slow
class TestPaperScale:
    def test_two_level_truncation_across_resonance(self, device, flux_bath, device_tls):
        f_omega = device_tls.f_omega(OMEGA0)
        common = dict(omega0=OMEGA0, f_dc=tuple((4.0 + d) * f_omega for d in np.linspace(-0.5, 0.5, 11)),
                      f_ac=(0.002, 0.004), baths=(flux_bath,), times=(1000.0, math.inf), tls=device_tls)
        multilevel = run_sweep(SweepSpec(model_kind="multilevel", device=device, levels=2,
                                         couplings=(CouplingSpec(tag="flux", kind="flux"),), **common))
        tls = run_sweep(SweepSpec(model_kind="tls", couplings=(CouplingSpec(tag="flux", kind="z"),), **common))
        np.testing.assert_allclose(multilevel.values["p_plus"], tls.values["p_plus"], atol=0.02)

    def test_longitudinal_asymmetry_grows_with_time(self, device_tls, flux_bath):
        spec = tls_spec(device_tls, list(4.0 + np.linspace(-0.5, 0.5, 41)), (flux_bath,), times=(1000.0, math.inf))
        lzs_map = run_sweep(spec)
        finite = asymmetry_metric(lzs_map, 4, 0.5, time_index=0)
        steady = asymmetry_metric(lzs_map, 4, 0.5, time_index=1)
        assert steady > 0.6
        assert abs(finite) < steady - 0.3

    def test_antisymmetry_fades_with_transverse_share(self, device_tls, flux_bath, charge_bath):
        couplings = (CouplingSpec(tag="flux", kind="z", strength=1.0, mixing="cos"),
                     CouplingSpec(tag="charge", kind="y", strength=1.0, mixing="sin"))
        # tan^2(theta) = 1e-4 and 1
        thetas = (math.atan(0.01), 0.25 * math.pi)
        spec = tls_spec(device_tls, list(4.0 + np.linspace(-0.5, 0.5, 41)), (flux_bath, charge_bath),
                        couplings=couplings, theta=thetas, times=(math.inf,))
        lzs_map = run_sweep(spec)
        weak = asymmetry_metric(lzs_map, 4, 0.5, theta_index=0)
        strong = asymmetry_metric(lzs_map, 4, 0.5, theta_index=1)
        assert weak > 0.6
        assert strong < weak - 0.1

    def test_multilevel_relaxation_across_diamonds(self, device, flux_bath, charge_bath, device_tls):
        f_dc = (2.7 * device_tls.f_omega(OMEGA0),)
        t_exp = 1000.0 * 2 * math.pi / OMEGA0
        flux = run_sweep(SweepSpec(model_kind="multilevel", omega0=OMEGA0, f_dc=f_dc, f_ac=(0.002, 0.008),
                                   couplings=(CouplingSpec(tag="flux", kind="flux"),), baths=(flux_bath,),
                                   device=device, levels=4, observables=("t_r", "t_d"), tls=device_tls))
        t_r = flux.values["t_r"][0, :, 0]
        assert math.log10(t_r[0] / t_r[1]) >= 1.5

        charge = run_sweep(SweepSpec(model_kind="multilevel", omega0=OMEGA0, f_dc=f_dc, f_ac=(0.002, 0.008),
                                     couplings=(CouplingSpec(tag="charge", kind="charge"),), baths=(charge_bath,),
                                     device=device, levels=4, observables=("t_r", "t_d"), tls=device_tls))
        assert np.all(charge.values["t_r"] > t_exp)
        assert np.all(charge.values["t_d"] > t_exp)


class TestSpecValidation:
    def test_undeclared_bath(self, simple_tls, flux_bath):
        with pytest.raises(ParameterValidationError):
            tls_spec(simple_tls, [4.0], (flux_bath,), couplings=(CouplingSpec(tag="charge", kind="y"),))

    def test_kind_must_match_model(self, simple_tls, flux_bath):
        with pytest.raises(ParameterValidationError):
            tls_spec(simple_tls, [4.0], (flux_bath,), couplings=(CouplingSpec(tag="flux", kind="flux"),))

    def test_negative_time(self, simple_tls, flux_bath):
        with pytest.raises(ParameterValidationError):
            tls_spec(simple_tls, [4.0], (flux_bath,), times=(-1.0,))


RWA_CONFIG = """
device:
  model: tls
  tls: {{delta: 3.33e-4, i_p: 0.721, lambda_f: 4.53}}
drive:
  omega0: 0.003
  f_dc: {{values: [3.95, 4.0, 4.05], units: f_omega}}
  f_ac: 0.003
baths:
  - tag: flux
couplings:
  - tag: flux
    kind: z
run:
  mode: rwa_compare
  resonance: 4
  rate_labels: {labels}
  output: {output}
logging:
  file: null
"""


class TestRwaCompare:
    def test_longitudinal_rates_agree(self, tmp_path):
        config = parse_config(RWA_CONFIG.format(labels="main", output=tmp_path / "rwa.csv"))
        frame = RunService(config).execute().frame
        assert list(frame["n"]) == [4, 4, 4]
        np.testing.assert_allclose(frame["gamma_r_num"], frame["gamma_r_rwa"], rtol=0.15)
        np.testing.assert_allclose(frame["gamma_d_num"], frame["gamma_d_rwa"], rtol=0.15)

    def test_appendix_labels_swap_rates(self, tmp_path):
        main = RunService(parse_config(RWA_CONFIG.format(labels="main", output=tmp_path / "a.csv"))).execute()
        swapped = RunService(parse_config(RWA_CONFIG.format(labels="appendix", output=tmp_path / "b.csv"))).execute()
        np.testing.assert_allclose(swapped.frame["gamma_r_rwa"], main.frame["gamma_d_rwa"])
        np.testing.assert_allclose(swapped.frame["gamma_d_rwa"], main.frame["gamma_r_rwa"])
        assert swapped.metadata["rate_labels"] == "appendix"

    def test_longitudinal_sidebands_match_rotating_wave(self, tmp_path):
        config = parse_config(RWA_CONFIG.format(labels="main", output=tmp_path / "rwa.csv"))
        frame = RunService(config).execute().frame
        np.testing.assert_allclose(frame["gamma_r_sideband"], frame["gamma_r_rwa"], rtol=1e-9)
        np.testing.assert_allclose(frame["gamma_d_sideband"], frame["gamma_d_rwa"], rtol=1e-9)

    def test_sigma_x_uses_the_mixed_closed_form(self, device_tls, flux_bath):
        dressed = dressed_params(device_tls, 3.9 * device_tls.f_omega(OMEGA0), 0.003, OMEGA0, 4)
        rates = RwaCompareRunner.rotating_wave_rates(dressed, flux_bath, [("x", 2.0)], OMEGA0)
        assert tuple(rates) == pytest.approx(tuple(rates_mixed(dressed, flux_bath, 2.0, 0.5 * math.pi)), rel=1e-12)

    def test_same_bath_couplings_keep_cross_terms(self, device_tls, flux_bath):
        dressed = dressed_params(device_tls, 3.9 * device_tls.f_omega(OMEGA0), 0.003, OMEGA0, 4)
        members = [("z", 1.5), ("x", 0.5)]
        combined = RwaCompareRunner.rotating_wave_rates(dressed, flux_bath, members, OMEGA0)
        theta = math.atan2(0.5, 1.5)
        expected = rates_mixed(dressed, flux_bath, math.hypot(1.5, 0.5), theta)
        assert tuple(combined) == pytest.approx(tuple(expected), rel=1e-9)
