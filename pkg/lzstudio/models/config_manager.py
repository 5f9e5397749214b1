"""
Configuration manager for LZS Studio
Loads the YAML run description, validates every section against its schema with line/column
diagnostics, fills and records defaults, and serializes resolved configurations back to YAML.
"""

import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml

from ..errors import ConfigError, ConfigIssue
from .config import (
    AXIS_UNITS, LIST_SCHEMAS, REQUIRED_SECTIONS, SECTION_SCHEMAS, TLS_SCHEMA,
    AxisSpec, BathConfig, CouplingConfig, DeviceConfig, DriveConfig, LoggingConfig,
    RunConfig, RunSection, SolverConfig, TlsOverride
)
from .sweep import OBSERVABLES

logger = logging.getLogger(__name__)

Mark = Tuple[Optional[int], Optional[int]]
NO_MARK: Mark = (None, None)


class MarkedDict(dict):
    """Mapping that remembers where each key's value starts in the source text."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.marks: Dict[Any, Mark] = {}
        self.key_marks: Dict[Any, Mark] = {}
        self.mark: Mark = NO_MARK
        self.duplicates: List[Tuple[Any, Mark]] = []


class MarkedList(list):
    """Sequence that remembers where each item starts in the source text."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.marks: List[Mark] = []
        self.mark: Mark = NO_MARK


def _position(node) -> Mark:
    return node.start_mark.line + 1, node.start_mark.column + 1


class MarkedLoader(yaml.SafeLoader):
    """SafeLoader whose mappings and sequences carry source positions."""


def _construct_mapping(loader: MarkedLoader, node) -> MarkedDict:
    loader.flatten_mapping(node)
    mapping = MarkedDict()
    mapping.mark = _position(node)
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=True)
        if key in mapping:
            mapping.duplicates.append((key, _position(key_node)))
        mapping[key] = loader.construct_object(value_node, deep=True)
        mapping.marks[key] = _position(value_node)
        mapping.key_marks[key] = _position(key_node)
    return mapping


def _construct_sequence(loader: MarkedLoader, node) -> MarkedList:
    sequence = MarkedList(loader.construct_object(child, deep=True) for child in node.value)
    sequence.marks = [_position(child) for child in node.value]
    sequence.mark = _position(node)
    return sequence


MarkedLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)
MarkedLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_SEQUENCE_TAG, _construct_sequence)


class _Validator(object):
    """Collects every issue of one document instead of stopping at the first."""

    def __init__(self):
        self.issues: List[ConfigIssue] = []
        self.defaults: List[str] = []

    def issue(self, message: str, mark: Mark = NO_MARK) -> None:
        self.issues.append(ConfigIssue(message, *mark))

    # -- scalar coercion ---------------------------------------------------------------

    def scalar(self, path: str, value: Any, spec: Dict[str, Any], mark: Mark) -> Any:
        kind = spec.get("type", "float")
        try:
            value = self._convert(kind, value, path, mark)
        except (TypeError, ValueError) as e:
            self.issue(f"{path}: {e}", mark)
            return None
        if value is None or kind in ("axis", "times", "observables", "tls"):
            return value
        if kind in ("float", "int", "optional_int", "strength") and isinstance(value, (int, float)):
            name = path.split(".")[-1]
            if "min" in spec and value < spec["min"]:
                self.issue(f"{name} must be >= {spec['min']:g}, got {value:g}", mark)
            if "max" in spec and value > spec["max"]:
                self.issue(f"{name} must be <= {spec['max']:g}, got {value:g}", mark)
            if "gt" in spec and not value > spec["gt"]:
                self.issue(f"{name} must be > {spec['gt']:g}, got {value:g}", mark)
            if "lt" in spec and not value < spec["lt"]:
                self.issue(f"{name} must be < {spec['lt']:g}, got {value:g}", mark)
            if spec.get("power_of_two") and (value <= 0 or int(value) & (int(value) - 1)):
                self.issue(f"{name} must be a power of two, got {value}", mark)
        if "choices" in spec and value not in spec["choices"]:
            choices = ", ".join(str(c) for c in spec["choices"])
            self.issue(f"{path} must be one of {choices}, got {value!r}", mark)
        return value

    def _convert(self, kind: str, value: Any, path: str, mark: Mark) -> Any:
        if kind == "float":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise TypeError(f"expected a number, got {type(value).__name__}")
            if not math.isfinite(value):
                raise ValueError("must be finite")
            return float(value)
        if kind in ("int", "optional_int"):
            if value is None and kind == "optional_int":
                return None
            if isinstance(value, bool) or not isinstance(value, int):
                raise TypeError(f"expected an integer, got {type(value).__name__}")
            return int(value)
        if kind == "str":
            if not isinstance(value, str):
                raise TypeError(f"expected a string, got {type(value).__name__}")
            return value
        if kind == "optional_str":
            if value is not None and not isinstance(value, str):
                raise TypeError(f"expected a string or null, got {type(value).__name__}")
            return value
        if kind == "strength":
            if value == "derive":
                return None
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                raise TypeError("expected a finite number or 'derive'")
            if value < 0:
                raise ValueError(f"strength must be >= 0, got {value:g}")
            return float(value)
        if kind == "axis":
            return self.axis(path, value, mark)
        if kind == "times":
            return self.times(path, value, mark)
        if kind == "observables":
            return self.observables(path, value, mark)
        if kind == "tls":
            return self.tls(path, value, mark)
        raise TypeError(f"unsupported schema type {kind}")

    # -- structured values -------------------------------------------------------------

    def axis(self, path: str, value: Any, mark: Mark) -> Optional[AxisSpec]:
        if isinstance(value, bool):
            raise TypeError("expected a number, a list or a range mapping")
        if isinstance(value, (int, float)):
            return AxisSpec(values=(float(self.scalar(path, value, {"type": "float"}, mark)),))
        if isinstance(value, list):
            if not value:
                raise ValueError("axis must not be empty")
            marks = getattr(value, "marks", [mark] * len(value))
            items = [self.scalar(f"{path}[{i}]", v, {"type": "float"}, m) for i, (v, m) in enumerate(zip(value, marks))]
            if any(v is None for v in items):
                return None
            return AxisSpec(values=tuple(items))
        if isinstance(value, dict):
            allowed = {"values", "start", "stop", "num", "units"}
            self._unknown_keys(path, value, allowed)
            units = value.get("units", "absolute")
            if units not in AXIS_UNITS:
                self.issue(f"{path}.units must be one of {', '.join(AXIS_UNITS)}, got {units!r}",
                           self._mark(value, "units"))
            if "values" in value:
                if any(k in value for k in ("start", "stop", "num")):
                    self.issue(f"{path}: give either values or start/stop/num, not both", getattr(value, "mark", mark))
                inner = self.axis(f"{path}.values", value["values"], self._mark(value, "values"))
                return None if inner is None else AxisSpec(values=inner.values, units=units)
            missing = [k for k in ("start", "stop", "num") if k not in value]
            if missing:
                self.issue(f"{path}: range is missing {', '.join(missing)}", getattr(value, "mark", mark))
                return None
            start = self.scalar(f"{path}.start", value["start"], {"type": "float"}, self._mark(value, "start"))
            stop = self.scalar(f"{path}.stop", value["stop"], {"type": "float"}, self._mark(value, "stop"))
            num = self.scalar(f"{path}.num", value["num"], {"type": "int", "min": 1}, self._mark(value, "num"))
            if None in (start, stop, num):
                return None
            return AxisSpec(start=start, stop=stop, num=num, units=units)
        raise TypeError(f"expected a number, a list or a range mapping, got {type(value).__name__}")

    def times(self, path: str, value: Any, mark: Mark) -> Optional[Tuple[float, ...]]:
        items = value if isinstance(value, list) else [value]
        marks = getattr(items, "marks", [mark] * len(items))
        if not items:
            raise ValueError("times must not be empty")
        resolved = []
        for i, (item, item_mark) in enumerate(zip(items, marks)):
            if item in ("inf", "steady") or (isinstance(item, float) and math.isinf(item) and item > 0):
                resolved.append(math.inf)
            elif isinstance(item, (int, float)) and not isinstance(item, bool) and math.isfinite(item) and item >= 0:
                resolved.append(float(item))
            else:
                self.issue(f"{path}[{i}] must be a nonnegative number of periods or 'inf', got {item!r}", item_mark)
        if len(resolved) != len(items):
            return None
        if resolved != sorted(resolved):
            self.issue(f"{path} must be ascending", mark)
        return tuple(resolved)

    def observables(self, path: str, value: Any, mark: Mark) -> Tuple[str, ...]:
        if not isinstance(value, list):
            raise TypeError("expected a list of observable names")
        for item in value:
            if item not in OBSERVABLES:
                self.issue(f"{path}: unknown observable {item!r}, expected a subset of {', '.join(OBSERVABLES)}", mark)
        return tuple(value)

    def tls(self, path: str, value: Any, mark: Mark) -> Optional[TlsOverride]:
        if value == "derive":
            return None
        if not isinstance(value, dict):
            raise TypeError("expected 'derive' or a mapping of two-level parameters")
        fields = self.section(path, value, TLS_SCHEMA)
        if any(fields.get(k) is None for k in ("delta", "i_p")):
            return None
        return TlsOverride(**fields)

    # -- sections ----------------------------------------------------------------------

    @staticmethod
    def _mark(mapping: Any, key: Any) -> Mark:
        return getattr(mapping, "marks", {}).get(key, getattr(mapping, "mark", NO_MARK))

    def _unknown_keys(self, path: str, mapping: Dict[str, Any], allowed) -> None:
        for key in mapping:
            if key not in allowed:
                key_mark = getattr(mapping, "key_marks", {}).get(key, self._mark(mapping, key))
                self.issue(f"{path}: unknown key {key!r}", key_mark)
        for key, key_mark in getattr(mapping, "duplicates", []):
            self.issue(f"{path}: duplicate key {key!r}", key_mark)

    def section(self, path: str, mapping: Any, schema: Dict[str, Dict[str, Any]],
                optional_required: Tuple[str, ...] = ()) -> Dict[str, Any]:
        if mapping is None:
            mapping = MarkedDict()
        if not isinstance(mapping, dict):
            self.issue(f"{path} must be a mapping, got {type(mapping).__name__}", getattr(mapping, "mark", NO_MARK))
            mapping = MarkedDict()
        self._unknown_keys(path, mapping, schema)

        fields: Dict[str, Any] = {}
        for key, spec in schema.items():
            if key in mapping:
                fields[key] = self.scalar(f"{path}.{key}", mapping[key], spec, self._mark(mapping, key))
            elif spec.get("required") and key not in optional_required:
                self.issue(f"missing required key {path}.{key}", getattr(mapping, "mark", NO_MARK))
                fields[key] = None
            elif "default" in spec:
                default = spec["default"]
                fields[key] = self.scalar(f"{path}.{key}", default, spec, NO_MARK) if default is not None else None
                self.defaults.append(f"{path}.{key}")
        return fields

    def section_list(self, path: str, value: Any, schema: Dict[str, Dict[str, Any]], mark: Mark) -> List[Dict[str, Any]]:
        if value is None:
            return []
        if not isinstance(value, list):
            self.issue(f"{path} must be a list, got {type(value).__name__}", mark)
            return []
        marks = getattr(value, "marks", [mark] * len(value))
        return [self.section(f"{path}[{i}]", item, schema) if isinstance(item, dict)
                else self._not_mapping(f"{path}[{i}]", item, item_mark)
                for i, (item, item_mark) in enumerate(zip(value, marks))]

    def _not_mapping(self, path: str, item: Any, mark: Mark) -> Dict[str, Any]:
        self.issue(f"{path} must be a mapping, got {type(item).__name__}", mark)
        return {}


def load_yaml(text: str) -> Any:
    """Parse YAML text into marked mappings and lists."""
    try:
        return yaml.load(text, Loader=MarkedLoader)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark
        position = (mark.line + 1, mark.column + 1) if mark is not None else NO_MARK
        raise ConfigError([ConfigIssue(f"YAML syntax error: {e.problem}", *position)])
    except yaml.YAMLError as e:
        raise ConfigError([ConfigIssue(f"YAML syntax error: {e}")])


def parse_config(text: str, mode: Optional[str] = None) -> RunConfig:
    """
    Parse and validate a YAML run description.

    Args:
        text: YAML document
        mode: run mode given on the command line; replaces run.mode and makes it optional

    Returns:
        RunConfig with defaults filled in and recorded in ``defaults_applied``

    Raises:
        ConfigError: listing every issue found, each with line and column when known
    """
    document = load_yaml(text)
    validator = _Validator()
    if document is None:
        document = MarkedDict()
    if not isinstance(document, dict):
        raise ConfigError([ConfigIssue("configuration must be a mapping of sections", *getattr(document, "mark", NO_MARK))])

    validator._unknown_keys("config", document, set(SECTION_SCHEMAS) | set(LIST_SCHEMAS))
    for name in REQUIRED_SECTIONS:
        if name not in document and not (name == "run" and mode is not None):
            validator.issue(f"missing required section '{name}'", document.mark)
            if name in SECTION_SCHEMAS:
                # report the required keys of the missing section as well
                validator.section(name, MarkedDict(), SECTION_SCHEMAS[name])

    sections = {}
    for name, schema in SECTION_SCHEMAS.items():
        if name in document or name not in REQUIRED_SECTIONS or (name == "run" and mode is not None):
            exempt = ("mode",) if name == "run" and mode is not None else ()
            sections[name] = validator.section(name, document.get(name), schema, exempt)
    lists = {name: validator.section_list(name, document.get(name), schema, validator._mark(document, name))
             for name, schema in LIST_SCHEMAS.items()}

    if mode is not None:
        configured = sections.get("run", {}).get("mode")
        if configured not in (None, mode):
            logger.warning(f"[WARN] Command-line mode '{mode}' replaces run.mode '{configured}'")
        sections.setdefault("run", {})["mode"] = mode
        validator.scalar("run.mode", mode, SECTION_SCHEMAS["run"]["mode"], NO_MARK)

    declared = [b.get("tag") for b in lists["baths"]]
    for i, bath_tag in enumerate(declared):
        if bath_tag is not None and declared.count(bath_tag) > 1 and declared.index(bath_tag) == i:
            validator.issue(f"baths: tag '{bath_tag}' declared more than once", validator._mark(document, "baths"))
    for i, coupling in enumerate(lists["couplings"]):
        tag = coupling.get("tag")
        if tag is not None and tag not in declared:
            marks = getattr(document.get("couplings"), "marks", [])
            validator.issue(f"couplings[{i}].tag '{tag}' references an undeclared bath",
                            marks[i] if i < len(marks) else NO_MARK)

    if validator.issues:
        raise ConfigError(validator.issues)

    config = RunConfig(
        device=DeviceConfig(**sections["device"]),
        drive=DriveConfig(**sections["drive"]),
        baths=tuple(BathConfig(**b) for b in lists["baths"]),
        couplings=tuple(CouplingConfig(**c) for c in lists["couplings"]),
        run=RunSection(**sections["run"]),
        solver=SolverConfig(**sections["solver"]),
        logging=LoggingConfig(**sections["logging"]),
        defaults_applied=tuple(validator.defaults),
    )
    logger.debug(f"Configuration parsed; defaults applied for {len(config.defaults_applied)} key(s)")
    return config


def serialize_config(config: RunConfig) -> str:
    """Block-style YAML of a resolved configuration."""
    return yaml.safe_dump(config.to_dict(), sort_keys=False, default_flow_style=False)


def serialize_config_inline(config: RunConfig) -> str:
    """Single-line flow YAML, suitable for a key=value metadata line."""
    return yaml.safe_dump(config.to_dict(), sort_keys=False, default_flow_style=True,
                          width=float("inf")).strip()


class ConfigManager:
    """
    Loads run descriptions from disk.

    Accepts YAML files and the .meta files written next to every output; for the latter
    the embedded ``config=`` line is parsed.
    """

    def __init__(self, config_path: Optional[str] = None):
        self.config_path = Path(config_path) if config_path else Path("config.yaml")

    def read_text(self) -> str:
        if not self.config_path.exists():
            raise ConfigError([ConfigIssue(f"configuration file not found: {self.config_path}")])
        text = self.config_path.read_text(encoding="utf-8")
        if self.config_path.suffix == ".meta":
            for line in text.splitlines():
                if line.startswith("config="):
                    return line[len("config="):]
            raise ConfigError([ConfigIssue(f"{self.config_path} has no config= line")])
        return text

    def load(self, mode: Optional[str] = None) -> RunConfig:
        return parse_config(self.read_text(), mode=mode)

    @staticmethod
    def create_missing_directories(config: RunConfig) -> None:
        """Create the output directory (and the log directory) if they do not exist."""
        Path(config.run.output).parent.mkdir(parents=True, exist_ok=True)
        if config.logging.file:
            Path(config.logging.file).parent.mkdir(parents=True, exist_ok=True)

    def print_configuration(self, config: RunConfig) -> None:
        """Log a summary of the resolved configuration."""
        logger.info(f"[START] Configuration from {self.config_path}")
        logger.info(f"  mode: {config.run.mode}, model: {config.device.model}, omega0: {config.drive.omega0}")
        logger.info(f"  baths: {', '.join(f'{b.tag}(gamma={b.gamma}, T={b.temperature})' for b in config.baths) or 'none'}")
        logger.info(f"  couplings: {', '.join(f'{c.kind}->{c.tag}' for c in config.couplings) or 'none'}")
        logger.info(f"  output: {config.run.output}, threads: {config.run.threads}")
        if config.defaults_applied:
            logger.info(f"  defaults: {', '.join(config.defaults_applied)}")


_config_managers: Dict[str, ConfigManager] = {}


def get_config_manager(config_path: Optional[str] = None) -> ConfigManager:
    """Shared ConfigManager per path."""
    key = str(config_path or "config.yaml")
    if key not in _config_managers:
        _config_managers[key] = ConfigManager(config_path)
    return _config_managers[key]
