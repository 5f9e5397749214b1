#!/usr/bin/env python3
"""
LZS Studio - Run Service
Turns a validated RunConfig into a sweep, dispatches the runner of its mode and writes the
values file, its metadata and the optional generator spectrum.
"""

import dataclasses
import logging
import time
from typing import Any, Dict, Optional

from .. import __version__
from ..models.config import RunConfig
from ..models.config_manager import serialize_config_inline
from ..models.device import TlsParams
from ..models.sweep import CouplingSpec, SolverSettings, SweepSpec
from ..utils.output_utils import metadata_path, spectrum_path, write_metadata, write_table
from .fq_model import compute_tls_parameters
from .runners import RunContext, RunOutput, runner_registry

logger = logging.getLogger(__name__)

MODE_OBSERVABLES = {
    "finite_time": ("p_plus",),
    "steady_state": ("p_plus",),
    "timescales": ("t_r", "t_d"),
    "rwa_compare": ("t_r", "t_d"),
    "isolated": (),
}


class RunService:
    """Service class resolving a run configuration and producing its output files"""

    def __init__(self, config: RunConfig):
        """Initialize RunService with a validated configuration

        Args:
            config: resolved RunConfig (command-line overrides already applied)
        """
        self.config = config
        self.tls = self.resolve_tls()
        self.f_omega = self.tls.f_omega(config.drive.omega0)
        logger.info(f"RunService initialized: mode {config.run.mode}, delta={self.tls.delta:.4e}, "
                    f"I_p={self.tls.i_p:.4f}, f_omega={self.f_omega:.4e}")

    def resolve_tls(self) -> TlsParams:
        """Explicit two-level parameters, or the ones derived from the device."""
        device = self.config.device
        if device.tls is not None:
            return device.tls.to_params()
        return compute_tls_parameters(device.fq_params())

    def build_spec(self) -> SweepSpec:
        """SweepSpec of this run, with axes given in f_omega units converted to absolute flux."""
        config = self.config
        run = config.run
        observables = MODE_OBSERVABLES[run.mode]
        if "lambda_spectrum" in run.observables:
            observables = observables + ("lambda_spectrum",)
        return SweepSpec(
            model_kind=config.device.model,
            omega0=config.drive.omega0,
            f_dc=config.drive.f_dc.resolve(self.f_omega),
            f_ac=config.drive.f_ac.resolve(self.f_omega),
            theta=config.drive.theta.resolve(),
            couplings=tuple(CouplingSpec(tag=c.tag, kind=c.kind, strength=c.strength, mixing=c.mixing)
                            for c in config.couplings),
            baths=tuple(b.to_bath() for b in config.baths),
            times=run.times,
            tls=self.tls,
            device=config.device.fq_params(),
            levels=config.device.levels,
            observables=observables,
            solver=SolverSettings(**dataclasses.asdict(config.solver)),
            p_plus_mode=run.p_plus,
            mixing_mode=run.mixing_mode,
            threads=run.threads,
            t_exp=run.t_exp,
        )

    def execute(self) -> RunOutput:
        """Run the sweep of this configuration without writing anything."""
        runner = runner_registry.get_runner(self.config.run.mode)
        context = RunContext(config=self.config, spec=self.build_spec(), tls=self.tls)
        return runner.execute(context)

    def _base_metadata(self) -> Dict[str, Any]:
        return {
            "config": serialize_config_inline(self.config),
            "code_version": __version__,
            "mode": self.config.run.mode,
            "delta": self.tls.delta,
            "i_p": self.tls.i_p,
            "lambda_f": self.tls.lambda_f,
            "lambda_ch": self.tls.lambda_ch,
            "lambda_cc": self.tls.lambda_cc,
            "f_omega": self.f_omega,
        }

    def run(self) -> RunOutput:
        """
        Execute the run and write its files.

        Writes the values CSV at run.output, ``<output>.meta`` and, when requested,
        ``<output>.spectrum.csv``. A failing run still leaves a metadata file with status=failed.
        """
        output_path = self.config.run.output
        meta_path = metadata_path(output_path)
        start_time = time.time()
        logger.info(f"[START] Mode {self.config.run.mode} -> {output_path}")
        try:
            output = self.execute()
        except Exception as e:
            metadata = self._base_metadata()
            metadata.update({"status": "failed", "error": f"{type(e).__name__}: {e}",
                             "wall_time": round(time.time() - start_time, 3)})
            write_metadata(meta_path, metadata)
            logger.error(f"[ERROR] Mode {self.config.run.mode} failed: {e}")
            raise

        metadata = self._base_metadata()
        for key, value in output.metadata.items():
            metadata.setdefault(key, value)
        metadata["wall_time"] = round(time.time() - start_time, 3)

        comments = [f"mode: {self.config.run.mode}", f"status: {metadata.get('status', 'complete')}"]
        write_table(output.frame, output_path, comments)
        if output.spectrum is not None:
            path = spectrum_path(output_path)
            write_table(output.spectrum, path, ["generator eigenvalues per grid point"])
            metadata["spectrum_file"] = path.name
        write_metadata(meta_path, metadata)
        logger.info(f"[OK] Run finished in {metadata['wall_time']:.2f}s, status {metadata.get('status', 'complete')}")
        logger.debug(f"Runner stats: {runner_registry.get_all_stats()}")
        return output


def apply_overrides(config: RunConfig, output: Optional[str] = None, threads: Optional[int] = None) -> RunConfig:
    """Configuration with command-line output and thread overrides applied."""
    changes = {}
    if output is not None:
        changes["output"] = output
    if threads is not None:
        changes["threads"] = threads
    if not changes:
        return config
    return dataclasses.replace(config, run=dataclasses.replace(config.run, **changes))


def run(config: RunConfig) -> int:
    """Run a configuration and write its outputs; returns the process exit status (0 on success)."""
    RunService(config).run()
    return 0
