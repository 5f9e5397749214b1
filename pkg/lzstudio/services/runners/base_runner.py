"""
Base Runner Class for LZS Studio
Standard interface, timing statistics and a registry for the run modes of the command line.
"""

import abc
import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Tuple, Type

import pandas as pd

from ...errors import LzsError, ParameterValidationError
from ...models.config import RunConfig
from ...models.device import TlsParams
from ...models.sweep import LzsMap, SweepSpec

# Configure logger
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunContext:
    """Everything a runner needs: the resolved configuration, its sweep and the two-level reference."""
    config: RunConfig
    spec: SweepSpec
    tls: TlsParams


@dataclass
class RunOutput:
    """Values table plus the metadata and optional extras a runner produced."""
    frame: pd.DataFrame
    metadata: Dict[str, Any] = field(default_factory=dict)
    spectrum: Optional[pd.DataFrame] = None
    lzs_map: Optional[LzsMap] = None


class BaseRunner(abc.ABC):
    """
    Abstract base class for all run modes in LZS Studio.

    Subclasses declare their CSV columns and produce a RunOutput from a RunContext.
    """

    mode: str = ""

    def __init__(self):
        self.stats = {
            'total_runs': 0,
            'total_time': 0.0,
            'error_count': 0,
            'rows_written': 0,
        }
        logger.debug(f"Initialized {self.mode} runner")

    @abc.abstractmethod
    def get_columns(self) -> List[str]:
        """
        Get the CSV columns of this mode.

        Returns:
            Column names in their output order
        """
        pass

    def validate_context(self, context: RunContext) -> None:
        """Reject configurations this mode cannot run (override as needed)."""
        if not context.spec.couplings:
            raise ParameterValidationError(f"Mode '{self.mode}' needs at least one coupling")

    @abc.abstractmethod
    def _run_impl(self, context: RunContext) -> RunOutput:
        """
        Implementation-specific run logic.

        Args:
            context: resolved run context

        Returns:
            RunOutput whose frame has exactly get_columns() as columns
        """
        pass

    def execute(self, context: RunContext) -> RunOutput:
        """
        Validate, run and time one mode.

        Returns:
            RunOutput with the runner statistics merged into its metadata
        """
        start_time = time.time()
        try:
            self.validate_context(context)
            output = self._run_impl(context)
        except LzsError:
            self.stats['error_count'] += 1
            raise
        except Exception as e:
            self.stats['error_count'] += 1
            logger.error(f"[ERROR] Run failed for mode {self.mode}: {e}")
            raise

        output.frame = output.frame[self.get_columns()]
        elapsed = time.time() - start_time
        self.stats['total_runs'] += 1
        self.stats['total_time'] += elapsed
        self.stats['rows_written'] += len(output.frame)
        output.metadata.setdefault("mode", self.mode)
        output.metadata["run_time"] = round(elapsed, 3)
        logger.info(f"[OK] Mode {self.mode}: {len(output.frame)} row(s) in {elapsed:.2f}s")
        return output

    def get_stats(self) -> Dict[str, Any]:
        """Get run statistics."""
        stats = self.stats.copy()
        stats['mode'] = self.mode
        stats['avg_run_time'] = stats['total_time'] / stats['total_runs'] if stats['total_runs'] else 0.0
        return stats

    @staticmethod
    def cells(lzs_map: LzsMap) -> Iterator[Tuple[int, int, int]]:
        """Grid indices in output order (f_dc slowest, theta fastest)."""
        n_fdc, n_fac, n_theta = lzs_map.shape
        for i in range(n_fdc):
            for j in range(n_fac):
                for k in range(n_theta):
                    yield i, j, k

    def spectrum_frame(self, lzs_map: LzsMap) -> Optional[pd.DataFrame]:
        """One row per generator eigenvalue, when the map carries spectra."""
        if not lzs_map.spectra:
            return None
        rows = []
        for index in self.cells(lzs_map):
            eigenvalues = lzs_map.spectra.get(index)
            if eigenvalues is None:
                continue
            i, j, k = index
            for number, value in enumerate(eigenvalues):
                rows.append({
                    "f_dc": lzs_map.axes["f_dc"][i], "f_ac": lzs_map.axes["f_ac"][j],
                    "theta": lzs_map.axes["theta"][k], "index": number,
                    "real": float(value.real), "imag": float(value.imag),
                })
        return pd.DataFrame(rows, columns=["f_dc", "f_ac", "theta", "index", "real", "imag"])


class RunnerRegistry:
    """Registry for managing run-mode classes."""

    def __init__(self):
        self._runner_classes: Dict[str, Type[BaseRunner]] = {}
        self._instances: Dict[str, BaseRunner] = {}

    def register_runner_class(self, mode: str, runner_class: Type[BaseRunner]) -> None:
        """Register a runner class for a mode."""
        self._runner_classes[mode] = runner_class
        logger.debug(f"Registered runner class for mode {mode}")

    def get_runner(self, mode: str) -> BaseRunner:
        """Get (or create) the runner instance for a mode."""
        if mode not in self._runner_classes:
            raise ParameterValidationError(f"Unknown run mode '{mode}', expected one of {self.list_modes()}")
        if mode not in self._instances:
            self._instances[mode] = self._runner_classes[mode]()
        return self._instances[mode]

    def list_modes(self) -> List[str]:
        """List registered modes."""
        return list(self._runner_classes)

    def get_all_stats(self) -> Dict[str, Dict[str, Any]]:
        """Get statistics for all runner instances."""
        return {mode: runner.get_stats() for mode, runner in self._instances.items()}


# Global registry instance
runner_registry = RunnerRegistry()
