"""
canopy/config.py

Configuration layering: seeds/defaults.yml, then the profile's overrides,
then a user --config JSON, then explicit CLI values. The merged mapping is
validated against seeds/schemas/config.schema.json.

Experiment YAML files (garden/experiments/) are loaded and validated here too.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema
import yaml

from soil.errors import ValidationError

logger = logging.getLogger("canopy.config")

PROFILES = ("full", "dev", "test")


def find_project_root(start: Path | None = None) -> Path:
    """Walk up from `start` (default: this file) to the directory holding seeds/."""
    current = (start or Path(__file__)).resolve()
    if current.is_file():
        current = current.parent
    while current != current.parent:
        if (current / "seeds" / "defaults.yml").exists():
            return current
        current = current.parent
    raise FileNotFoundError(
        "Could not find seeds/defaults.yml above the current location.\n"
        "  Run from the project root or pass project_root explicitly."
    )


def _load_yaml(path: Path) -> dict:
    if not path.exists():
        raise FileNotFoundError(f"YAML file not found: {path}")
    with open(path, "r") as f:
        try:
            data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ValidationError(f"Invalid YAML in {path}: {e}") from e
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: expected a mapping at the top level.")
    return data


def _schema_errors(instance: Any, schema: dict) -> list[str]:
    validator = jsonschema.Draft202012Validator(schema)
    errors = []
    for error in sorted(validator.iter_errors(instance), key=lambda e: list(e.absolute_path)):
        path = " → ".join(str(p) for p in error.absolute_path) or "(root)"
        errors.append(f"{path}: {error.message}")
    return errors


# ═══════════════════════════════════════════════════════════════════════════════
# RUN CONFIGURATION
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass
class RunConfig:
    """Merged configuration for one command, plus the profile it came from."""
    values: dict[str, Any]
    profile: str = "full"
    hashing: str = "full"
    bench: dict[str, Any] = field(default_factory=dict)
    sources: list[str] = field(default_factory=list)

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def get(self, key: str, default: Any = None) -> Any:
        return self.values.get(key, default)

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        merged = dict(self.values)
        merged.update({k: v for k, v in overrides.items() if v is not None})
        _validate_values(merged, "overrides")
        return RunConfig(merged, self.profile, self.hashing, dict(self.bench), list(self.sources))

    def resolved_k(self, n: int) -> int:
        from roots.entropy import default_k

        k = self.values.get("k", "auto")
        return default_k(n) if k in (None, "auto") else int(k)


def _validate_values(values: dict, origin: str, project_root: Path | None = None) -> None:
    root = project_root or find_project_root()
    with open(root / "seeds" / "schemas" / "config.schema.json", "r") as f:
        schema = json.load(f)
    errors = _schema_errors(values, schema)
    if errors:
        raise ValidationError(
            f"Configuration from {origin} is invalid:\n" + "\n".join(f"  - {e}" for e in errors)
        )


def load_config(
    config_path: str | Path | None = None,
    profile: str = "full",
    overrides: dict[str, Any] | None = None,
    project_root: str | Path | None = None,
) -> RunConfig:
    """Merge defaults → profile → config JSON → overrides and validate the result."""
    root = Path(project_root) if project_root else find_project_root()
    if profile not in PROFILES:
        raise ValidationError(f"Unknown profile '{profile}'. Available: {', '.join(PROFILES)}")

    values = dict(_load_yaml(root / "seeds" / "defaults.yml").get("defaults", {}))
    sources = ["seeds/defaults.yml"]

    profiles = _load_yaml(root / "seeds" / "profiles" / "profiles.yml").get("profiles", {})
    prof = profiles.get(profile, {})
    values.update(prof.get("overrides") or {})
    sources.append(f"profile:{profile}")

    if config_path is not None:
        config_path = Path(config_path)
        if not config_path.exists():
            raise FileNotFoundError(f"Config file not found: {config_path}")
        with open(config_path, "r") as f:
            try:
                user = json.load(f)
            except json.JSONDecodeError as e:
                raise ValidationError(f"Invalid JSON in {config_path}: {e}") from e
        if not isinstance(user, dict):
            raise ValidationError(f"{config_path}: config JSON must be an object.")
        _validate_values(user, str(config_path), root)
        values.update(user)
        sources.append(str(config_path))

    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
        sources.append("cli")

    _validate_values(values, " + ".join(sources), root)
    logger.debug(f"Config merged from {sources}")
    return RunConfig(
        values=values,
        profile=profile,
        hashing=prof.get("hashing", "full"),
        bench=dict(prof.get("bench") or {}),
        sources=sources,
    )


# ═══════════════════════════════════════════════════════════════════════════════
# EXPERIMENTS
# ═══════════════════════════════════════════════════════════════════════════════

def load_experiment(path: str | Path, project_root: str | Path | None = None) -> dict:
    """Load a garden experiment YAML and validate it against experiment.schema.yml."""
    path = Path(path)
    root = Path(project_root) if project_root else find_project_root()
    experiment = _load_yaml(path)
    schema = _load_yaml(root / "seeds" / "schemas" / "experiment.schema.yml")
    errors = _schema_errors(experiment, schema)
    if errors:
        raise ValidationError(
            f"Experiment {path.name} is invalid:\n" + "\n".join(f"  - {e}" for e in errors)
        )
    if "config" in experiment:
        _validate_values(experiment["config"], f"{path.name} config", root)
    return experiment
