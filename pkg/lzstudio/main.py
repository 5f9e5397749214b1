#!/usr/bin/env python3
"""
LZS Studio - Command-line entry point
Loads a run description, runs the requested mode and writes values and metadata files.

Exit status: 0 on success, 2 for configuration or numerical errors, 1 for anything unexpected.
"""

# Standard library imports
import logging
from typing import Optional

# Third-party imports
import click

# Package imports
from . import __version__
from .errors import ConfigError, LzsError
from .models.config import RUN_MODES, LoggingConfig
from .models.config_manager import get_config_manager
from .services.run_service import RunService, apply_overrides

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_LZS_ERROR = 2

logger = logging.getLogger(__name__)


def configure_logging(settings: LoggingConfig = LoggingConfig()) -> None:
    """Configure root logging with a file handler (if configured) and a stream handler."""
    handlers = [logging.StreamHandler()]
    if settings.file:
        handlers.insert(0, logging.FileHandler(settings.file))
    logging.basicConfig(
        level=getattr(logging, settings.level),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True
    )


@click.command(context_settings={"help_option_names": ["-h", "--help"]})
@click.argument("mode", type=click.Choice(RUN_MODES))
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default="config.yaml",
              show_default=True, help="YAML run description, or a .meta file from an earlier run.")
@click.option("--output", type=click.Path(dir_okay=False), default=None, help="Values file (overrides run.output).")
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Worker threads (overrides run.threads).")
@click.option("--seedless", is_flag=True, default=False, help="Reserved; no random numbers are drawn.")
@click.version_option(__version__, prog_name="lzs")
@click.pass_context
def main(ctx: click.Context, mode: str, config_path: str, output: Optional[str],
         threads: Optional[int], seedless: bool):
    """Run an LZS interferometry MODE described by a YAML configuration."""
    config_manager = get_config_manager(config_path)
    try:
        config = apply_overrides(config_manager.load(mode=mode), output=output, threads=threads)
        config_manager.create_missing_directories(config)
        configure_logging(config.logging)
        config_manager.print_configuration(config)
        RunService(config).run()
    except ConfigError as e:
        click.echo(str(e), err=True)
        ctx.exit(EXIT_LZS_ERROR)
    except LzsError as e:
        logger.error(f"[ERROR] {type(e).__name__}: {e}")
        click.echo(f"error: {type(e).__name__}: {e}", err=True)
        ctx.exit(EXIT_LZS_ERROR)
    except Exception as e:
        logger.exception(f"[ERROR] Unexpected failure: {e}")
        click.echo(f"unexpected error: {type(e).__name__}: {e}", err=True)
        ctx.exit(EXIT_UNEXPECTED)
    ctx.exit(EXIT_OK)


if __name__ == "__main__":
    main()
