"""Experiment spec loading utilities."""

import json
from pathlib import Path
from typing import Any

from loguru import logger

from qres.config.schema import ExperimentSpec, Settings
from qres.errors import InvalidParameterError


def load_spec(path: Path | str) -> dict[str, Any]:
    """
    Read a JSON experiment spec.

    Keys may be camelCase or snake_case; the result uses snake_case and is
    validated later by :func:`resolve_spec`.
    """
    path = Path(path)
    try:
        with open(path) as f:
            data = json.load(f)
    except FileNotFoundError as e:
        raise InvalidParameterError(f"spec file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise InvalidParameterError(f"spec file {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise InvalidParameterError(f"spec file {path} must hold a JSON object")
    return convert_keys(data)


def resolve_spec(
    file_data: dict[str, Any] | None = None,
    overrides: dict[str, Any] | None = None,
    settings: Settings | None = None,
) -> ExperimentSpec:
    """
    Merge sources with precedence CLI flags > file > environment > defaults.

    ``None`` override values mean "flag not given".
    """
    settings = settings or Settings()
    data: dict[str, Any] = {
        "cell_cap": settings.cell_cap,
        "support_cap": settings.support_cap,
    }
    if settings.seed is not None:
        data["seed"] = settings.seed
    data["threads"] = settings.threads
    data.update(file_data or {})
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    if data.get("seed") is None:
        data["seed"] = 0
    command = data.get("command")
    if data.get("output") is None and command is not None:
        data["output"] = str(Path(settings.output_dir) / str(getattr(command, "value", command)))
    spec = ExperimentSpec.model_validate(data)
    logger.debug(f"[config] resolved {spec.command.value} spec for {spec.family}")
    return spec


def save_spec(spec: ExperimentSpec, path: Path | str) -> None:
    """Write the fully resolved spec as camelCase JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = convert_to_camel(spec.model_dump(mode="json"))
    with open(path, "w") as f:
        json.dump(data, f, indent=2)


def convert_keys(data: Any) -> Any:
    """Convert camelCase keys to snake_case for Pydantic."""
    if isinstance(data, dict):
        return {camel_to_snake(k): convert_keys(v) for k, v in data.items()}
    if isinstance(data, list):
        return [convert_keys(item) for item in data]
    return data


def convert_to_camel(data: Any) -> Any:
    """Convert snake_case keys to camelCase."""
    if isinstance(data, dict):
        return {snake_to_camel(k): convert_to_camel(v) for k, v in data.items()}
    if isinstance(data, list):
        return [convert_to_camel(item) for item in data]
    return data


def camel_to_snake(name: str) -> str:
    """Convert camelCase to snake_case."""
    result = []
    for i, char in enumerate(name):
        if char.isupper() and i > 0:
            result.append("_")
        result.append(char.lower())
    return "".join(result)


def snake_to_camel(name: str) -> str:
    """Convert snake_case to camelCase."""
    components = name.split("_")
    return components[0] + "".join(x.title() for x in components[1:])
