"""
canopy/envelope.py

Provenance sidecars. Every file a command writes gets `<file>.envelope.json`
next to it: where the data lives, what it represents, which primitive version
produced it from which (hashed) inputs, and what went wrong along the way.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from functools import lru_cache
from pathlib import Path
from typing import Any

import jsonschema
from referencing import Registry, Resource
from referencing.jsonschema import DRAFT202012

from soil.errors import ValidationError

from .config import find_project_root
from .registry import RegistryManager
from .runlog import plain

logger = logging.getLogger("canopy.envelope")

SCHEMA_VERSION = 1
HASH_MODES = ("full", "metadata", "skipped")
_REFERENCED = ("provenance.schema.json", "warning.schema.json")
_HEAD_BYTES = 4096


class EnvelopeValidationError(ValidationError):
    """An envelope about to be written does not match envelope.schema.json."""
    pass


# ═══════════════════════════════════════════════════════════════════════════════
# RECORDS
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class HashRecord:
    value: str | None
    method: str  # full_file | metadata | skipped
    algorithm: str | None = None
    reason: str | None = None

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"value": self.value, "method": self.method}
        if self.algorithm:
            out["algorithm"] = self.algorithm
        if self.reason:
            out["reason"] = self.reason
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "HashRecord":
        return cls(d["value"], d["method"], d.get("algorithm"), d.get("reason"))


@dataclass(frozen=True)
class InputRecord:
    name: str
    semantic_type: str
    path: str
    hash: HashRecord

    def to_dict(self) -> dict:
        return {"name": self.name, "semantic_type": self.semantic_type,
                "path": self.path, "hash": self.hash.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "InputRecord":
        return cls(d["name"], d["semantic_type"], d["path"], HashRecord.from_dict(d["hash"]))


@dataclass(frozen=True)
class ProvenanceEntry:
    primitive: str
    version: str
    timestamp: str
    params: dict[str, Any]
    inputs: tuple[InputRecord, ...]
    duration_seconds: float

    def to_dict(self) -> dict:
        return {
            "primitive": self.primitive,
            "version": self.version,
            "timestamp": self.timestamp,
            "params": self.params,
            "inputs": [i.to_dict() for i in self.inputs],
            "duration_seconds": self.duration_seconds,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProvenanceEntry":
        return cls(d["primitive"], d["version"], d["timestamp"], d["params"],
                   tuple(InputRecord.from_dict(i) for i in d["inputs"]), d["duration_seconds"])


@dataclass(frozen=True)
class EnvelopeWarning:
    level: str  # info | warning | critical
    primitive: str
    message: str

    def to_dict(self) -> dict:
        return {"level": self.level, "primitive": self.primitive, "message": self.message}


@dataclass
class Envelope:
    data: dict[str, Any]
    metadata: dict[str, Any]
    provenance: list[ProvenanceEntry]
    warnings: list[EnvelopeWarning]

    def to_dict(self) -> dict:
        return {
            "data": self.data,
            "metadata": self.metadata,
            "provenance": [p.to_dict() for p in self.provenance],
            "warnings": [w.to_dict() for w in self.warnings],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Envelope":
        return cls(
            data=d["data"],
            metadata=d["metadata"],
            provenance=[ProvenanceEntry.from_dict(p) for p in d["provenance"]],
            warnings=[EnvelopeWarning(**w) for w in d["warnings"]],
        )


# ═══════════════════════════════════════════════════════════════════════════════
# SCHEMAS
# ═══════════════════════════════════════════════════════════════════════════════

@lru_cache(maxsize=4)
def _validator(schema_dir: str) -> jsonschema.Draft202012Validator:
    root = Path(schema_dir)
    registry = Registry()
    for name in _REFERENCED:
        contents = json.loads((root / name).read_text())
        resource = Resource.from_contents(contents, default_specification=DRAFT202012)
        # $ref is written as a bare filename; register under both names
        registry = registry.with_resources([(contents.get("$id", name), resource), (name, resource)])
    schema = json.loads((root / "envelope.schema.json").read_text())
    return jsonschema.Draft202012Validator(schema, registry=registry)


def validate_envelope(envelope_data: dict, project_root: Path | None = None) -> list[str]:
    """Schema errors as `path → path: message` lines; empty when valid."""
    schema_dir = (project_root or find_project_root()) / "seeds" / "schemas"
    if not (schema_dir / "envelope.schema.json").exists():
        return [f"Envelope schema not found under {schema_dir}"]
    return [
        f"{' → '.join(str(p) for p in err.absolute_path) or '(root)'}: {err.message}"
        for err in _validator(str(schema_dir)).iter_errors(envelope_data)
    ]


# ═══════════════════════════════════════════════════════════════════════════════
# HASHING
# ═══════════════════════════════════════════════════════════════════════════════

def hash_input(path: str | Path, mode: str = "full") -> HashRecord:
    """Hash an input file by profile mode.

    full: sha256 of the whole file. metadata: sha256 of size, mtime and the
    first 4 KiB (cheap, changes when the file does). skipped: no hash.
    """
    if mode not in HASH_MODES:
        raise ValidationError(f"Unknown hashing mode '{mode}'; expected one of {HASH_MODES}.")
    path = Path(path)
    if mode == "skipped":
        return HashRecord(None, "skipped", reason="hashing disabled by profile")
    if not path.is_file():
        return HashRecord(None, "skipped", reason="input is not a file")

    digest = hashlib.sha256()
    with open(path, "rb") as f:
        if mode == "metadata":
            stat = path.stat()
            digest.update(f"{stat.st_size}:{stat.st_mtime_ns}".encode())
            digest.update(f.read(_HEAD_BYTES))
            return HashRecord(digest.hexdigest(), "metadata", "sha256")
        for block in iter(lambda: f.read(1 << 16), b""):
            digest.update(block)
    return HashRecord(digest.hexdigest(), "full_file", "sha256")


# ═══════════════════════════════════════════════════════════════════════════════
# READ / WRITE
# ═══════════════════════════════════════════════════════════════════════════════

def sidecar_path(output_path: str | Path) -> Path:
    output_path = Path(output_path)
    return output_path.with_name(output_path.name + ".envelope.json")


def read_envelope(path: str | Path, validate: bool = True,
                  project_root: Path | None = None) -> Envelope:
    """Read a sidecar. Schema problems are logged, not raised."""
    path = Path(path)
    data = json.loads(path.read_text())
    if validate:
        for problem in validate_envelope(data, project_root):
            logger.warning(f"{path.name}: {problem}")
    return Envelope.from_dict(data)


@dataclass
class EnvelopeInput:
    """An input file consumed by a command."""
    name: str
    path: str
    semantic_type: str


@dataclass
class BuildRequest:
    primitive: str
    output_path: str | Path
    output_format: str
    params: dict[str, Any] = field(default_factory=dict)
    inputs: list[EnvelopeInput] = field(default_factory=list)
    warnings: list[dict] = field(default_factory=list)
    duration_seconds: float = 0.0
    metadata: dict[str, Any] = field(default_factory=dict)
    secondary: dict[str, str] = field(default_factory=dict)
    data_category: str | None = None


class EnvelopeBuilder:
    """
    Builds, validates and writes sidecars for command outputs.

    Example:
        EnvelopeBuilder(hashing="metadata").write(BuildRequest(
            primitive="restructure",
            output_path="low.csv",
            output_format="csv",
            inputs=[EnvelopeInput("points", "points.csv", "point_set")],
            params={"lambda": 0.1, "steps": 500},
        ))
    """

    def __init__(self, hashing: str = "full", project_root: str | Path | None = None):
        if hashing not in HASH_MODES:
            raise ValidationError(f"Unknown hashing mode '{hashing}'; expected one of {HASH_MODES}.")
        self.hashing = hashing
        self.project_root = Path(project_root) if project_root else find_project_root()
        self.registry = RegistryManager(self.project_root)

    def build(self, request: BuildRequest) -> Envelope:
        spec = self.registry.resolve(request.primitive)
        inputs = tuple(
            InputRecord(inp.name, inp.semantic_type, str(inp.path), hash_input(inp.path, self.hashing))
            for inp in request.inputs
        )
        entry = ProvenanceEntry(
            primitive=spec.name,
            version=spec.version,
            timestamp=datetime.now(timezone.utc).isoformat(),
            params=plain(request.params),
            inputs=inputs,
            duration_seconds=round(max(0.0, request.duration_seconds), 3),
        )

        category = request.data_category or ("figure" if request.output_format == "svg"
                                             else spec.data_category)
        metadata = {**plain(request.metadata), "semantic_type": spec.semantic_type,
                    "data_category": category, "schema_version": SCHEMA_VERSION}
        data: dict[str, Any] = {"path": str(request.output_path), "format": request.output_format}
        if request.secondary:
            data["secondary"] = {k: str(v) for k, v in request.secondary.items()}

        warnings = [EnvelopeWarning(w["level"], spec.name, w["message"]) for w in request.warnings]
        return Envelope(data, metadata, [entry], warnings)

    def write(self, request: BuildRequest) -> Path:
        envelope = self.build(request)
        payload = envelope.to_dict()
        problems = validate_envelope(payload, self.project_root)
        if problems:
            raise EnvelopeValidationError(
                f"Envelope for {request.primitive} does not match envelope.schema.json:\n"
                + "\n".join(f"  - {p}" for p in problems)
            )
        path = sidecar_path(request.output_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2) + "\n")
        return path

