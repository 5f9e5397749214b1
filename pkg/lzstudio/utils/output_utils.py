"""
Output utilities for LZS Studio
CSV value files, key=value metadata files and the paths that tie them together.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

import pandas as pd

logger = logging.getLogger(__name__)

UNITS_HEADER = (
    "# LZS Studio output",
    "# units: energy E_J, time hbar/E_J, frequency E_J/hbar, flux Phi_0, temperature E_J/k_B",
    "# t_over_tau in drive periods tau = 2 pi / omega0",
)


def metadata_path(output: str) -> Path:
    """Metadata file next to a values file: same basename, .meta suffix."""
    return Path(output).with_suffix(".meta")


def spectrum_path(output: str) -> Path:
    """Generator-spectrum file next to a values file."""
    path = Path(output)
    return path.with_name(f"{path.stem}.spectrum.csv")


def write_table(frame: pd.DataFrame, path, comments: Optional[Iterable[str]] = None) -> Path:
    """
    Write a values table behind the units header.

    Args:
        frame: one row per grid point, columns in their final order
        path: destination file
        comments: extra comment lines (without the leading '#')

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        for line in UNITS_HEADER:
            handle.write(line + "\n")
        for line in comments or ():
            handle.write(f"# {line}\n")
        frame.to_csv(handle, index=False)
    logger.info(f"[WRITE] {len(frame)} row(s) -> {path}")
    return path


def read_table(path) -> pd.DataFrame:
    """Read a values table written by write_table."""
    return pd.read_csv(path, comment="#", keep_default_na=False, na_values=["nan", "NaN"])


def _format_value(value: Any) -> str:
    text = str(value)
    return text.replace("\n", " ")


def write_metadata(path, entries: Dict[str, Any]) -> Path:
    """Write key=value lines behind the units header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        for line in UNITS_HEADER:
            handle.write(line + "\n")
        for key, value in entries.items():
            handle.write(f"{key}={_format_value(value)}\n")
    logger.info(f"[WRITE] metadata ({len(entries)} entries) -> {path}")
    return path


def read_metadata(path) -> Dict[str, str]:
    """Parse a metadata file into a dict of strings."""
    entries = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, value = line.split("=", 1)
            entries[key] = value
    return entries
