"""
LZS Studio Runners Package
One runner class per command-line mode, registered by mode name.
"""

from .base_runner import (
    BaseRunner,
    RunContext,
    RunnerRegistry,
    RunOutput,
    runner_registry
)

from .sweep_runners import (
    FiniteTimeRunner,
    IsolatedRunner,
    RwaCompareRunner,
    SteadyStateRunner,
    TimescalesRunner
)

# Register all runner classes
runner_registry.register_runner_class('finite_time', FiniteTimeRunner)
runner_registry.register_runner_class('steady_state', SteadyStateRunner)
runner_registry.register_runner_class('timescales', TimescalesRunner)
runner_registry.register_runner_class('rwa_compare', RwaCompareRunner)
runner_registry.register_runner_class('isolated', IsolatedRunner)

__all__ = [
    # Base classes
    'BaseRunner',
    'RunContext',
    'RunnerRegistry',
    'RunOutput',
    'runner_registry',

    # Mode runners
    'FiniteTimeRunner',
    'SteadyStateRunner',
    'TimescalesRunner',
    'RwaCompareRunner',
    'IsolatedRunner',
]
