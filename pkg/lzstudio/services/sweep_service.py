"""
Sweep service for LZS Studio
Evaluates driven models over (f_dc, f_ac, theta, t) grids with a worker pool and assembles
LZS maps, isolated-qubit averages, resonance asymmetry and timescale scans.
"""

import concurrent.futures
import dataclasses
import logging
import math
import time
from typing import Dict, List, Optional, Tuple

import numpy as np

from .. import __version__
from ..errors import ParameterValidationError
from ..models.device import DrivenModel, OhmicBath, TlsParams
from ..models.sweep import (
    FLAG_ERROR, FLAG_NO_PAIR, FLAG_OK, FLAG_POSITIVITY, POSITIVITY_ALLOWANCE,
    LzsMap, PointResult, SweepSpec
)
from .floquet import floquet_states, propagator_grid
from .fq_model import build_multilevel_model, build_tls_model, compute_tls_parameters
from .master import (
    assemble_generator, build_generator, generator_spectrum, initial_state, p_plus, timescales
)

logger = logging.getLogger(__name__)


class SweepService:
    """
    Parameter-sweep harness.

    Every grid cell builds its own model, Floquet basis and generator; workers write into
    pre-allocated slots addressed by the cell index, so output never depends on scheduling.
    """

    def __init__(self, spec: SweepSpec):
        self.spec = spec
        self.tls = spec.tls if spec.tls is not None else compute_tls_parameters(spec.device)
        self.stats = {"points": 0, "flagged": 0, "total_time": 0.0}
        logger.info(f"SweepService initialized: {spec.model_kind} model, grid {spec.shape} x {len(spec.times)} times")

    @property
    def f_omega(self) -> float:
        return self.tls.f_omega(self.spec.omega0)

    def model_at(self, f_dc: float, f_ac: float, theta: float) -> Tuple[DrivenModel, Tuple[OhmicBath, ...]]:
        """Driven model and bath list for one grid cell."""
        spec = self.spec
        scale_strength = spec.mixing_mode == "strength"
        baths = {bath.tag: bath for bath in spec.baths}
        strengths = {}
        for coupling in spec.couplings:
            factor = coupling.mixing_factor(theta)
            strengths[coupling] = self._strength(coupling) * (factor if scale_strength else 1.0)
            if not scale_strength and coupling.mixing != "none":
                bath = baths[coupling.tag]
                baths[coupling.tag] = dataclasses.replace(bath, gamma=bath.gamma * factor ** 2)

        if spec.model_kind == "tls":
            triples = [(c.kind, strengths[c], c.tag) for c in spec.couplings]
            model = build_tls_model(self.tls, f_dc, f_ac, spec.omega0, triples)
        else:
            kinds = [c.kind for c in spec.couplings]
            if len(set(kinds)) != len(kinds):
                raise ParameterValidationError("Each multilevel noise kind may appear only once")
            scales = {c.kind: strengths[c] for c in spec.couplings}
            model = build_multilevel_model(spec.device, spec.levels, f_dc, f_ac, spec.omega0, kinds, scales)
        return model, tuple(baths.values())

    def _strength(self, coupling) -> float:
        if coupling.strength is not None:
            return float(coupling.strength)
        if self.spec.model_kind == "multilevel":
            return 1.0
        derived = {"z": self.tls.lambda_f, "y": self.tls.lambda_ch, "x": self.tls.lambda_cc}
        return derived[coupling.kind]

    def evaluate_point(self, index: Tuple[int, int, int]) -> PointResult:
        """Observables of one grid cell; failures become flagged cells."""
        spec = self.spec
        i, j, k = index
        n_times = len(spec.times)
        result = PointResult(index=index, p_plus=np.full(n_times, np.nan),
                             positivity_defect=np.full(n_times, np.nan))
        try:
            model, baths = self.model_at(spec.f_dc[i], spec.f_ac[j], spec.theta[k])
            solver = spec.solver
            basis = floquet_states(model, n_steps=solver.n_steps, harmonics=solver.harmonics,
                                   n_grid=solver.n_grid, order=solver.magnus_order)
            if model.couplings:
                gen = assemble_generator(model, basis, baths, tail_tolerance=solver.tail_tolerance)
            else:
                size = basis.n_states
                gen = build_generator(np.zeros((size,) * 4, dtype=complex), basis)
            rho0 = initial_state(model, basis)

            result.diagnostics = {"harmonics": float(basis.harmonics), "n_grid": float(basis.n_grid),
                                  "unitarity_defect": basis.diagnostics.get("unitarity_defect", 0.0),
                                  "fourier_tail": basis.diagnostics.get("fourier_tail", 0.0)}
            if "p_plus" in spec.observables:
                for n, t_over_tau in enumerate(spec.times):
                    t = math.inf if math.isinf(t_over_tau) else t_over_tau * model.period
                    value, defect = p_plus(gen, basis, model, rho0, t, mode=spec.p_plus_mode,
                                           samples=solver.p_plus_samples)
                    result.p_plus[n] = value
                    result.positivity_defect[n] = defect
                if np.nanmax(result.positivity_defect) > POSITIVITY_ALLOWANCE:
                    result.flag = FLAG_POSITIVITY

            if spec.needs_timescales:
                scales = timescales(gen)
                result.t_r = math.nan if scales.t_r is None else scales.t_r
                if scales.t_d is None:
                    result.flag = result.flag or FLAG_NO_PAIR
                else:
                    result.t_d = scales.t_d
                    phi = scales.t_phi
                    result.t_phi = math.nan if phi is None else phi
            if "lambda_spectrum" in spec.observables:
                result.spectrum = generator_spectrum(gen)
        except Exception as e:
            result.flag = f"{FLAG_ERROR}:{type(e).__name__}"
            result.p_plus[:] = np.nan
            result.t_r = result.t_d = result.t_phi = math.nan
            logger.warning(f"[WARN] Cell {index} (f_dc={spec.f_dc[i]:.4e}, f_ac={spec.f_ac[j]:.4e}, "
                           f"theta={spec.theta[k]:.4f}) failed: {e}")
        return result

    def run(self) -> LzsMap:
        """Evaluate every grid cell and assemble the map."""
        spec = self.spec
        start_time = time.time()
        n_fdc, n_fac, n_theta = spec.shape
        n_times = len(spec.times)
        indices = [(i, j, k) for i in range(n_fdc) for j in range(n_fac) for k in range(n_theta)]
        logger.info(f"[SWEEP] {len(indices)} cells on {spec.threads} worker(s)")

        values = {
            "p_plus": np.full((n_fdc, n_fac, n_theta, n_times), np.nan),
            "positivity_defect": np.full((n_fdc, n_fac, n_theta, n_times), np.nan),
            "t_r": np.full((n_fdc, n_fac, n_theta), np.nan),
            "t_d": np.full((n_fdc, n_fac, n_theta), np.nan),
            "t_phi": np.full((n_fdc, n_fac, n_theta), np.nan),
        }
        flags = np.full((n_fdc, n_fac, n_theta), FLAG_OK, dtype=object)
        spectra = {}
        diagnostics: List[Dict[str, float]] = []

        with concurrent.futures.ThreadPoolExecutor(max_workers=spec.threads) as executor:
            futures = {executor.submit(self.evaluate_point, index): index for index in indices}
            for future in concurrent.futures.as_completed(futures):
                result = future.result()
                slot = result.index
                values["p_plus"][slot] = result.p_plus
                values["positivity_defect"][slot] = result.positivity_defect
                values["t_r"][slot] = result.t_r
                values["t_d"][slot] = result.t_d
                values["t_phi"][slot] = result.t_phi
                flags[slot] = result.flag
                if result.spectrum is not None:
                    spectra[slot] = result.spectrum
                if result.diagnostics:
                    diagnostics.append(result.diagnostics)

        elapsed = time.time() - start_time
        flagged = int(np.count_nonzero(flags != FLAG_OK))
        failed = int(sum(1 for f in flags.flat if f.startswith(FLAG_ERROR)))
        self.stats["points"] += len(indices)
        self.stats["flagged"] += flagged
        self.stats["total_time"] += elapsed

        metadata = self._metadata(diagnostics, elapsed, flagged, failed, values)
        logger.info(f"[OK] Sweep finished: {len(indices)} cells in {elapsed:.2f}s, {flagged} flagged")
        return LzsMap(
            axes={"f_dc": np.array(spec.f_dc), "f_ac": np.array(spec.f_ac),
                  "theta": np.array(spec.theta), "t_over_tau": np.array(spec.times)},
            values=values, flags=flags, spectra=spectra, metadata=metadata,
        )

    def _metadata(self, diagnostics, elapsed, flagged, failed, values) -> Dict[str, object]:
        spec = self.spec
        metadata = {
            "code_version": __version__,
            "model_kind": spec.model_kind,
            "omega0": spec.omega0,
            "period": 2.0 * math.pi / spec.omega0,
            "f_omega": self.f_omega,
            "delta": self.tls.delta,
            "i_p": self.tls.i_p,
            "p_plus_mode": spec.p_plus_mode,
            "mixing_mode": spec.mixing_mode,
            "n_steps": spec.solver.n_steps,
            "magnus_order": spec.solver.magnus_order,
            "tail_tolerance": spec.solver.tail_tolerance,
            "p_plus_samples": spec.solver.p_plus_samples,
            "t_exp": spec.t_exp,
            "t_exp_reference": spec.t_exp * 2.0 * math.pi / spec.omega0,
            "grid": "x".join(str(n) for n in spec.shape),
            "flagged": flagged,
            "status": "partial" if failed else "complete",
            "wall_time": round(elapsed, 3),
        }
        if diagnostics:
            metadata["harmonics_max"] = int(max(d["harmonics"] for d in diagnostics))
            metadata["n_grid_max"] = int(max(d["n_grid"] for d in diagnostics))
            metadata["unitarity_defect_max"] = float(max(d["unitarity_defect"] for d in diagnostics))
            metadata["fourier_tail_max"] = float(max(d["fourier_tail"] for d in diagnostics))
        positivity = values["positivity_defect"]
        if np.any(np.isfinite(positivity)):
            metadata["positivity_defect_max"] = float(np.nanmax(positivity))
        if spec.needs_timescales:
            ratio = 2.0 * values["t_r"] / values["t_d"]
            finite = ratio[np.isfinite(ratio)]
            if finite.size:
                metadata["ratio_2tr_td_min"] = float(np.min(finite))
                metadata["ratio_2tr_td_max"] = float(np.max(finite))
        return metadata


def run_sweep(spec: SweepSpec) -> LzsMap:
    """Evaluate a sweep description (see SweepService)."""
    return SweepService(spec).run()


def timescale_scan(spec: SweepSpec) -> LzsMap:
    """Sweep that always exports t_r, t_d and t_phi, with the t_exp reference in the metadata."""
    observables = tuple(dict.fromkeys(tuple(spec.observables) + ("t_r", "t_d")))
    return run_sweep(dataclasses.replace(spec, observables=observables))


def isolated_average(model: DrivenModel, n_periods: int = 1000, samples: int = 256,
                     n_steps: int = 4096, order: int = 4) -> float:
    """
    Time average of P+ over n_periods of unitary evolution from the static ground state.

    Args:
        model: driven model (its couplings are ignored)
        n_periods: number of drive periods averaged over
        samples: sampling points per period

    Returns:
        Averaged P+
    """
    if n_periods < 1:
        raise ParameterValidationError(f"n_periods must be >= 1, got {n_periods}")
    n_grid = 1 << max(0, int(samples - 1).bit_length())
    grid, monodromy = propagator_grid(model, max(n_steps, n_grid), n_grid, order)

    _, vectors = np.linalg.eigh(model.static_hamiltonian())
    state = vectors[:, 0].astype(complex)
    starts = np.empty((n_periods, model.dim), dtype=complex)
    for m in range(n_periods):
        starts[m] = state
        state = monodromy @ state

    states = np.einsum("jab,mb->mja", grid, starts)
    projector = np.asarray(model.projector_plus)
    values = np.einsum("mja,ab,mjb->mj", np.conj(states), projector, states).real
    return float(np.mean(values))


def isolated_sweep(spec: SweepSpec, n_periods: int = 1000) -> LzsMap:
    """Isolated-qubit averages over the (f_dc, f_ac) grid; couplings and theta are ignored."""
    service = SweepService(spec)
    n_fdc, n_fac, _ = spec.shape
    averages = np.full((n_fdc, n_fac), np.nan)
    flags = np.full((n_fdc, n_fac, 1), FLAG_OK, dtype=object)
    start_time = time.time()

    def evaluate(index):
        i, j = index
        try:
            model, _ = service.model_at(spec.f_dc[i], spec.f_ac[j], 0.0)
            return index, isolated_average(model, n_periods, spec.solver.p_plus_samples,
                                           spec.solver.n_steps, spec.solver.magnus_order), FLAG_OK
        except Exception as e:
            logger.warning(f"[WARN] Isolated cell {index} failed: {e}")
            return index, math.nan, f"{FLAG_ERROR}:{type(e).__name__}"

    indices = [(i, j) for i in range(n_fdc) for j in range(n_fac)]
    with concurrent.futures.ThreadPoolExecutor(max_workers=spec.threads) as executor:
        for (i, j), value, flag in executor.map(evaluate, indices):
            averages[i, j] = value
            flags[i, j, 0] = flag

    elapsed = time.time() - start_time
    failed = int(sum(1 for f in flags.flat if f != FLAG_OK))
    metadata = {
        "code_version": __version__,
        "model_kind": spec.model_kind,
        "omega0": spec.omega0,
        "f_omega": service.f_omega,
        "n_periods": n_periods,
        "n_steps": spec.solver.n_steps,
        "magnus_order": spec.solver.magnus_order,
        "status": "partial" if failed else "complete",
        "flagged": failed,
        "wall_time": round(elapsed, 3),
    }
    return LzsMap(axes={"f_dc": np.array(spec.f_dc), "f_ac": np.array(spec.f_ac),
                        "theta": np.zeros(1), "t_over_tau": np.array([float(n_periods)])},
                  values={"p_plus_avg": averages}, flags=flags, metadata=metadata)


def asymmetry_metric(lzs_map: LzsMap, n: int, window: float, f_ac_index: int = 0,
                     theta_index: int = 0, time_index: int = 0, name: Optional[str] = None) -> float:
    """
    Antisymmetry S of P+ around the n-th resonance.

    S = sum_d [P(c+d) - P(c-d)] / sum_d (|P(c+d) - P(c-d)| + |P(c+d) + P(c-d) - 2 P_base|),
    c = n f_omega, over the sampled offsets 0 < d <= window f_omega; P_base is the mean of the two
    window edges. S = 0 for an even dip, |S| = 1 for an odd (dispersive) shape.

    Raises:
        ParameterValidationError: if the window is not covered by the scan
    """
    f_omega = lzs_map.f_omega
    if not math.isfinite(f_omega) or f_omega <= 0:
        raise ParameterValidationError("Map metadata carries no f_omega")
    if name is None:
        name = "p_plus" if "p_plus" in lzs_map.values else "p_plus_avg"
    detunings = np.asarray(lzs_map.axes["f_dc"], dtype=float)
    values = lzs_map.scan(name, f_ac_index, theta_index, time_index)
    order = np.argsort(detunings)
    detunings, values = detunings[order], values[order]

    center = n * f_omega
    half = window * f_omega
    slack = 1e-9 * max(abs(center), half)
    if center - half < detunings[0] - slack or center + half > detunings[-1] + slack:
        raise ParameterValidationError(f"Window [{center - half:.4e}, {center + half:.4e}] exceeds the scan range "
                                       f"[{detunings[0]:.4e}, {detunings[-1]:.4e}]")

    offsets = detunings - center
    offsets = offsets[(offsets > slack) & (offsets <= half + slack)]
    if offsets.size == 0:
        raise ParameterValidationError("No sampled detunings inside the asymmetry window")

    upper = np.interp(center + offsets, detunings, values)
    lower = np.interp(center - offsets, detunings, values)
    baseline = 0.5 * (np.interp(center + half, detunings, values) + np.interp(center - half, detunings, values))
    odd = upper - lower
    even = upper + lower - 2.0 * baseline
    denominator = float(np.sum(np.abs(odd) + np.abs(even)))
    if denominator == 0.0:
        return 0.0
    return float(np.sum(odd) / denominator)
