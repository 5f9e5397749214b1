"""
Sweep runners for LZS Studio
One runner per command-line mode: finite-time and steady-state P+ maps, timescale maps,
rotating-wave comparisons and isolated-qubit averages.
"""

import dataclasses
import logging
import math
from typing import Dict, List, Tuple

import pandas as pd

from ...errors import ParameterValidationError
from ...models.device import OhmicBath
from ...models.sweep import FLAG_OK
from ..rwa import RwaRates, dressed_params, nearest_resonance, rates_longitudinal, rates_mixed, rates_resolved
from ..sweep_service import isolated_sweep, run_sweep, timescale_scan
from .base_runner import BaseRunner, RunContext, RunOutput

logger = logging.getLogger(__name__)


class FiniteTimeRunner(BaseRunner):
    """P+ at finite times (in drive periods) over the sweep grid."""

    mode = "finite_time"

    def get_columns(self) -> List[str]:
        return ["f_dc", "f_ac", "theta", "t_over_tau", "p_plus", "positivity_defect", "flag"]

    def prepare(self, context: RunContext):
        return context.spec

    def _run_impl(self, context: RunContext) -> RunOutput:
        lzs_map = run_sweep(self.prepare(context))
        rows = []
        for index in self.cells(lzs_map):
            i, j, k = index
            for n, t_over_tau in enumerate(lzs_map.axes["t_over_tau"]):
                rows.append({
                    "f_dc": lzs_map.axes["f_dc"][i],
                    "f_ac": lzs_map.axes["f_ac"][j],
                    "theta": lzs_map.axes["theta"][k],
                    "t_over_tau": t_over_tau,
                    "p_plus": lzs_map.values["p_plus"][i, j, k, n],
                    "positivity_defect": lzs_map.values["positivity_defect"][i, j, k, n],
                    "flag": lzs_map.flags[index],
                })
        return RunOutput(frame=pd.DataFrame(rows, columns=self.get_columns()), metadata=dict(lzs_map.metadata),
                         spectrum=self.spectrum_frame(lzs_map), lzs_map=lzs_map)


class SteadyStateRunner(FiniteTimeRunner):
    """Asymptotic P+ from the null space of the generator."""

    mode = "steady_state"

    def prepare(self, context: RunContext):
        return dataclasses.replace(context.spec, times=(math.inf,))


class TimescalesRunner(BaseRunner):
    """Relaxation, decoherence and pure-dephasing times over the sweep grid."""

    mode = "timescales"

    def get_columns(self) -> List[str]:
        return ["f_dc", "f_ac", "theta", "t_r", "t_d", "t_phi", "flag"]

    def _run_impl(self, context: RunContext) -> RunOutput:
        lzs_map = timescale_scan(context.spec)
        rows = []
        for index in self.cells(lzs_map):
            i, j, k = index
            rows.append({
                "f_dc": lzs_map.axes["f_dc"][i],
                "f_ac": lzs_map.axes["f_ac"][j],
                "theta": lzs_map.axes["theta"][k],
                "t_r": lzs_map.values["t_r"][index],
                "t_d": lzs_map.values["t_d"][index],
                "t_phi": lzs_map.values["t_phi"][index],
                "flag": lzs_map.flags[index],
            })
        return RunOutput(frame=pd.DataFrame(rows, columns=self.get_columns()), metadata=dict(lzs_map.metadata),
                         spectrum=self.spectrum_frame(lzs_map), lzs_map=lzs_map)


class RwaCompareRunner(BaseRunner):
    """Generator-spectrum rates next to the rotating-wave rates of the chosen resonance."""

    mode = "rwa_compare"

    def get_columns(self) -> List[str]:
        return ["f_dc", "f_ac", "n", "gamma_r_num", "gamma_d_num", "gamma_r_rwa", "gamma_d_rwa",
                "gamma_r_sideband", "gamma_d_sideband"]

    def validate_context(self, context: RunContext) -> None:
        super().validate_context(context)
        if context.spec.model_kind != "tls":
            raise ParameterValidationError("rwa_compare needs the two-level model (device.model: tls)")
        if len(context.spec.theta) != 1:
            raise ParameterValidationError("rwa_compare takes a single mixing angle")

    @staticmethod
    def bath_groups(context: RunContext) -> Dict[str, Tuple[OhmicBath, List[Tuple[str, float]]]]:
        """(bath, [(axis, strength), ...]) per bath tag, with the mixing angle applied as in the sweep."""
        spec = context.spec
        theta = spec.theta[0]
        derived = {"z": context.tls.lambda_f, "y": context.tls.lambda_ch, "x": context.tls.lambda_cc}
        baths = {bath.tag: bath for bath in spec.baths}
        groups: Dict[str, List[Tuple[str, float]]] = {}
        for coupling in spec.couplings:
            strength = coupling.strength if coupling.strength is not None else derived[coupling.kind]
            factor = coupling.mixing_factor(theta)
            if spec.mixing_mode == "strength":
                strength *= factor
            elif coupling.mixing != "none":
                baths[coupling.tag] = dataclasses.replace(baths[coupling.tag],
                                                          gamma=baths[coupling.tag].gamma * factor ** 2)
            groups.setdefault(coupling.tag, []).append((coupling.kind, float(strength)))
        return {tag: (baths[tag], members) for tag, members in groups.items()}

    @staticmethod
    def rotating_wave_rates(dressed, bath: OhmicBath, members: List[Tuple[str, float]], omega0: float) -> RwaRates:
        """Closed-form rates for a lone sigma_z or sigma_x coupling, the q = 0 harmonic otherwise."""
        if len(members) == 1:
            axis, strength = members[0]
            if axis == "z":
                return rates_longitudinal(dressed, bath, strength)
            if axis == "x":
                return rates_mixed(dressed, bath, strength, 0.5 * math.pi)
        return rates_resolved(dressed, bath, members, omega0, sidebands=False)

    def _run_impl(self, context: RunContext) -> RunOutput:
        spec = context.spec
        run = context.config.run
        lzs_map = timescale_scan(spec)
        groups = self.bath_groups(context)

        rows = []
        for index in self.cells(lzs_map):
            i, j, _ = index
            f_dc, f_ac = spec.f_dc[i], spec.f_ac[j]
            n = run.resonance if run.resonance is not None else nearest_resonance(context.tls, f_dc, spec.omega0)
            dressed = dressed_params(context.tls, f_dc, f_ac, spec.omega0, n)
            # independent baths add
            rwa = [0.0, 0.0]
            sideband = [0.0, 0.0]
            for bath, members in groups.values():
                rates = self.rotating_wave_rates(dressed, bath, members, spec.omega0)
                resolved = rates_resolved(dressed, bath, members, spec.omega0)
                rwa = [rwa[0] + rates.gamma_r, rwa[1] + rates.gamma_d]
                sideband = [sideband[0] + resolved.gamma_r, sideband[1] + resolved.gamma_d]
            if run.rate_labels == "appendix":
                rwa.reverse()
                sideband.reverse()

            t_r, t_d = lzs_map.values["t_r"][index], lzs_map.values["t_d"][index]
            rows.append({
                "f_dc": f_dc, "f_ac": f_ac, "n": n,
                "gamma_r_num": 1.0 / t_r if t_r > 0 else math.nan,
                "gamma_d_num": 1.0 / t_d if t_d > 0 else math.nan,
                "gamma_r_rwa": rwa[0],
                "gamma_d_rwa": rwa[1],
                "gamma_r_sideband": sideband[0],
                "gamma_d_sideband": sideband[1],
            })
            if lzs_map.flags[index] != FLAG_OK:
                logger.warning(f"[WARN] rwa_compare cell {index} flagged: {lzs_map.flags[index]}")

        metadata = dict(lzs_map.metadata)
        metadata["rate_labels"] = run.rate_labels
        return RunOutput(frame=pd.DataFrame(rows, columns=self.get_columns()), metadata=metadata,
                         spectrum=self.spectrum_frame(lzs_map), lzs_map=lzs_map)


class IsolatedRunner(BaseRunner):
    """Time-averaged P+ of the isolated driven qubit."""

    mode = "isolated"

    def get_columns(self) -> List[str]:
        return ["f_dc", "f_ac", "p_plus_avg"]

    def validate_context(self, context: RunContext) -> None:
        pass

    def _run_impl(self, context: RunContext) -> RunOutput:
        lzs_map = isolated_sweep(context.spec, n_periods=context.config.run.n_periods)
        rows = [{"f_dc": lzs_map.axes["f_dc"][i], "f_ac": lzs_map.axes["f_ac"][j],
                 "p_plus_avg": lzs_map.values["p_plus_avg"][i, j]}
                for i, j, _ in self.cells(lzs_map)]
        return RunOutput(frame=pd.DataFrame(rows, columns=self.get_columns()), metadata=dict(lzs_map.metadata),
                         lzs_map=lzs_map)
