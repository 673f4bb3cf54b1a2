"""Machine-readable experiment reports and run configuration files."""

from __future__ import annotations

from dataclasses import dataclass, field
import hashlib
import json
import math
import os
from importlib import resources
from pathlib import Path
import tempfile

import jsonschema
import numpy as np
from referencing import Registry, Resource

__all__ = [
    "SCHEMA_VERSION", "ExperimentReport", "ConfigError", "to_jsonable", "canonical_json",
    "write_atomic", "load_schema", "validate_report", "validate_sweep", "load_config",
    "merge_config", "sweep_document",
]

SCHEMA_VERSION = "1.0"
MARKERS = ("heuristic", "exact")


class ConfigError(ValueError):
    """Invalid or unknown configuration keys."""


def to_jsonable(obj):
    """Plain JSON types; non-finite floats become None."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def canonical_json(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


@dataclass
class ExperimentReport:
    experiment: str
    params: dict
    outputs: dict
    error_estimates: dict = field(default_factory=dict)
    wall_time_ms: int = 0
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self):
        # every numeric output needs an estimate or an explicit marker
        for key, val in self.outputs.items():
            if key in self.error_estimates:
                continue
            if isinstance(val, (bool, str)) or val is None:
                continue
            self.error_estimates[key] = "heuristic"
        for key, val in self.error_estimates.items():
            if isinstance(val, str) and val not in MARKERS:
                raise ValueError(f"error estimate marker for {key!r} must be one of {MARKERS}")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentReport":
        data = dict(data)
        data.pop("body_hash", None)
        return cls(**data)

    def body(self) -> dict:
        return to_jsonable({
            "experiment": self.experiment, "params": self.params, "outputs": self.outputs,
            "error_estimates": self.error_estimates, "schema_version": self.schema_version,
        })

    def body_hash(self) -> str:
        return hashlib.sha256(canonical_json(self.body()).encode()).hexdigest()

    def as_dict(self) -> dict:
        out = self.body()
        out["wall_time_ms"] = int(self.wall_time_ms)
        out["body_hash"] = self.body_hash()
        return out

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"


def sweep_document(reports: list, summary: ExperimentReport) -> dict:
    return {"schema_version": SCHEMA_VERSION, "reports": [r.as_dict() for r in reports],
            "summary": summary.as_dict()}


def write_atomic(path, text: str) -> None:
    """Write to a temporary file in the target directory, then rename over."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_schema(name: str) -> dict:
    text = resources.files("rieszlab").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def _registry() -> Registry:
    res = [Resource.from_contents(load_schema(n))
           for n in ("experiment_report", "sweep", "run_config")]
    return Registry().with_resources([(r.contents["$id"], r) for r in res])


def _validate(instance, name):
    schema = load_schema(name)
    jsonschema.Draft202012Validator(schema, registry=_registry()).validate(instance)


def validate_report(doc: dict) -> None:
    _validate(doc, "experiment_report")


def validate_sweep(doc: dict) -> None:
    _validate(doc, "sweep")


def load_config(path) -> dict:
    """Read a JSON run configuration; unknown keys raise :class:`ConfigError`."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        _validate(data, "run_config")
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid config {path}: {exc.message}") from exc
    data.pop("schema_version", None)
    return data


def merge_config(config: dict, flags: dict) -> dict:
    """Flags that were given (not None) override the file."""
    out = dict(config)
    out.update({k: v for k, v in flags.items() if v is not None})
    return out
