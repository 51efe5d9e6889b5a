"""
canopy/registry.py

Primitive names → versions and output types, read from roots/_registry.yml.
Envelopes stamp every output with the version listed there.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import yaml

from soil.errors import ValidationError

from .config import find_project_root


@dataclass(frozen=True)
class PrimitiveSpec:
    name: str
    path: str  # relative to roots/
    version: str
    semantic_type: str = "unknown"
    data_category: str = "tabular"
    description: str = ""

    @classmethod
    def from_entry(cls, name: str, entry: dict) -> "PrimitiveSpec":
        outputs = entry.get("outputs") or {}
        return cls(
            name=name,
            path=entry["path"],
            version=str(entry.get("version", "1.0.0")),
            semantic_type=outputs.get("semantic_type", "unknown"),
            data_category=outputs.get("data_category", "tabular"),
            description=(entry.get("description") or "").strip(),
        )


@lru_cache(maxsize=4)
def _read_registry(registry_path: str) -> dict[str, PrimitiveSpec]:
    with open(registry_path, "r") as f:
        entries = (yaml.safe_load(f) or {}).get("primitives") or {}
    return {name: PrimitiveSpec.from_entry(name, entry) for name, entry in entries.items()}


def load_registry(project_root: Path | None = None) -> dict[str, PrimitiveSpec]:
    path = (project_root or find_project_root()) / "roots" / "_registry.yml"
    if not path.exists():
        raise FileNotFoundError(f"Primitive registry not found: {path}")
    return _read_registry(str(path))


class RegistryManager:
    """Resolves primitive names for one project root."""

    def __init__(self, project_root: Path | None = None):
        self.project_root = project_root or find_project_root()

    def resolve(self, name: str, check_module: bool = True) -> PrimitiveSpec:
        specs = load_registry(self.project_root)
        spec = specs.get(name)
        if spec is None:
            raise ValidationError(
                f"Primitive '{name}' is not registered in roots/_registry.yml.\n"
                f"  Registered: {', '.join(sorted(specs))}"
            )
        if check_module and not (self.project_root / "roots" / spec.path).exists():
            raise FileNotFoundError(
                f"roots/_registry.yml entry '{name}' points at missing module '{spec.path}'."
            )
        return spec
