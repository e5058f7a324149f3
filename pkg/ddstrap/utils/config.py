"""
Run configuration loading

JSON documents validated by the pydantic schemas in ``ddstrap.models.schemas``.
Validation errors become ``ConfigError`` naming the section, key and 1-based
line of the offending key; every quantity in a file must carry its unit.
"""

import copy
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Type, TypeVar, get_args

from dotenv import load_dotenv
from pydantic import BaseModel, ValidationError

from ..models.schemas import ConfigError, OptimizationSpec, RunConfig, ScanSpec
from ..presets import OPTIMIZE_PRESETS, PRESETS, SCAN_PRESETS
from .units import Quantity, parse_quantity

load_dotenv()

logger = logging.getLogger(__name__)

Model = TypeVar("Model", bound=BaseModel)

VALIDATION_CONTEXT = {"require_units": True}


def _locate(text: str, loc: Sequence[Any]) -> Optional[int]:
    """1-based line of the innermost key of ``loc`` in a JSON text, following the path."""
    if not text:
        return None
    position = 0
    found = None
    for part in loc:
        if not isinstance(part, str):
            continue
        index = text.find(f'"{part}"', position)
        if index < 0:
            break
        position = index
        found = index
    if found is None:
        return None
    return text.count("\n", 0, found) + 1


def validate_document(data: Dict[str, Any], model: Type[Model] = RunConfig, text: str = "") -> Model:
    """Validate a decoded document; ``text`` (the file body) is only used for line numbers."""
    try:
        return model.model_validate(data, context=VALIDATION_CONTEXT)
    except ValidationError as exc:
        error = exc.errors()[0]
        loc = tuple(error.get("loc", ()))
        names = [str(p) for p in loc if isinstance(p, str)]
        section = names[0] if len(names) > 1 else None
        key = names[-1] if names else None
        if error.get("type") == "missing" and key is not None:
            message = f"missing required key '{key}'" + (f" in section '{section}'" if section else "")
            # the parent section is what exists in the file
            line = _locate(text, loc[:-1])
        else:
            message = error.get("msg", "invalid value")
            line = _locate(text, loc)
        raise ConfigError(message, section=section, key=key, line=line,
                          extras={"errors": len(exc.errors())}) from exc


def parse_config(path: str, model: Type[Model] = RunConfig) -> Model:
    """
    Read and validate a run configuration file.

    Raises:
        ConfigError: unreadable file, malformed JSON or schema violation
    """
    file = Path(path)
    try:
        text = file.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read configuration '{path}': {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object", line=1)
    config = validate_document(data, model, text)
    logger.info("Loaded configuration '%s' from %s", getattr(config, "name", file.stem), file)
    return config


def load_preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset '{name}' (known: {', '.join(sorted(PRESETS))})", key=name)
    return validate_document(copy.deepcopy(PRESETS[name]))


def load_scan_preset(name: str) -> ScanSpec:
    if name not in SCAN_PRESETS:
        raise ConfigError(f"unknown scan preset '{name}' (known: {', '.join(sorted(SCAN_PRESETS))})", key=name)
    return validate_document(copy.deepcopy(SCAN_PRESETS[name]), ScanSpec)


def load_optimization_preset(name: str) -> OptimizationSpec:
    if name not in OPTIMIZE_PRESETS:
        raise ConfigError(f"unknown optimization preset '{name}' (known: {', '.join(sorted(OPTIMIZE_PRESETS))})",
                          key=name)
    return validate_document(copy.deepcopy(OPTIMIZE_PRESETS[name]), OptimizationSpec)


def resolve_config(config_path: Optional[str] = None, preset: Optional[str] = None) -> RunConfig:
    """Configuration from a file or a bundled preset (the file wins when both are given)."""
    if config_path:
        return parse_config(config_path)
    if preset:
        return load_preset(preset)
    raise ConfigError("no configuration given: pass --config <path> or --preset <name>")


def resolve_document(source: str, presets: Dict[str, Any], model: Type[Model]) -> Model:
    """A bundled preset name or the path of a JSON file."""
    if source in presets:
        return validate_document(copy.deepcopy(presets[source]), model)
    return parse_config(source, model)


def emit_config(config: BaseModel) -> str:
    """Canonical JSON: every quantity spelled '<repr(SI value)> <SI unit>'."""
    return json.dumps(config.model_dump(mode="json", exclude_none=True), indent=2)


def write_config(config: BaseModel, path: str) -> None:
    Path(path).write_text(emit_config(config) + "\n", encoding="utf-8")


# =============================================================================
# Dotted-path overrides (scans)
# =============================================================================
def field_dimension(model: Type[BaseModel], path: str) -> Optional[str]:
    """Unit dimension of a dotted field path ('lasers.power_780' -> 'power'); None for plain numbers."""
    current: Any = model
    info = None
    for part in path.split("."):
        if part.isdigit():
            continue
        fields = getattr(current, "model_fields", None)
        if fields is None or part not in fields:
            raise ConfigError(f"unknown parameter '{path}'", key=path)
        info = fields[part]
        current = info.annotation
        # Optional[X] -> X
        args = getattr(current, "__args__", None)
        if args:
            models = [a for a in args if isinstance(a, type) and issubclass(a, BaseModel)]
            current = models[0] if models else current
    for meta in info.metadata:
        if isinstance(meta, Quantity):
            return meta.dimension
    for arg in get_args(info.annotation):
        for meta in getattr(arg, "__metadata__", ()):
            if isinstance(meta, Quantity):
                return meta.dimension
    return None


def parse_parameter(model: Type[BaseModel], path: str, value: Any) -> Any:
    """Value for ``path`` in SI (strings with units) or as given for plain fields."""
    dimension = field_dimension(model, path)
    if dimension is None:
        return float(value) if isinstance(value, str) else value
    try:
        return parse_quantity(value, dimension)
    except ValueError as exc:
        raise ConfigError(str(exc), key=path) from exc


def apply_overrides(config: Model, overrides: Dict[str, Any]) -> Model:
    """Copy of ``config`` with dotted-path SI values replaced, revalidated."""
    data = config.model_dump()
    for path, value in overrides.items():
        node = data
        parts = path.split(".")
        for part in parts[:-1]:
            if isinstance(node, list):
                node = node[int(part)]
                continue
            if node.get(part) is None:
                raise ConfigError(f"section '{part}' is not set in this configuration", key=path)
            node = node[part]
        if isinstance(node, list):
            node[int(parts[-1])] = value
        else:
            node[parts[-1]] = value
    try:
        return type(config).model_validate(data)
    except ValidationError as exc:
        raise ConfigError(exc.errors()[0].get("msg", "invalid override"), key=",".join(overrides)) from exc


def default_threads() -> int:
    value = os.getenv("DDSTRAP_THREADS")
    return max(1, int(value)) if value else max(1, (os.cpu_count() or 2) // 2)
