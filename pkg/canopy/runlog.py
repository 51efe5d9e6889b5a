"""
canopy/runlog.py

YAML run logs in compost/logs/, one per CLI invocation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import yaml

logger = logging.getLogger("canopy.runlog")


@dataclass
class RunLog:
    command: str
    config: dict[str, Any]
    profile: str = "full"
    seed: int | None = None
    started: datetime = field(default_factory=lambda: datetime.now(timezone.utc))
    outputs: list[str] = field(default_factory=list)
    warnings: list[dict] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)

    @property
    def run_id(self) -> str:
        return f"{self.command}_{self.started.strftime('%Y%m%d_%H%M%S_%f')}"

    def add_warnings(self, primitive: str, warnings: list[dict]) -> None:
        for w in warnings:
            self.warnings.append({"primitive": primitive, **w})

    def write(self, project_root: Path, success: bool, error: str | None = None,
              exit_code: int = 0) -> Path:
        log = {
            "run_id": self.run_id,
            "command": self.command,
            "profile": self.profile,
            "seed": self.seed,
            "config": plain(self.config),
            "timing": {
                "started": self.started.isoformat(),
                "completed": datetime.now(timezone.utc).isoformat(),
            },
            "result": {"success": success, "exit_code": exit_code, "error": error},
            "outputs": self.outputs,
            "warnings": plain(self.warnings),
            "summary": plain(self.summary),
        }
        log_dir = project_root / "compost" / "logs"
        log_dir.mkdir(parents=True, exist_ok=True)
        log_path = log_dir / f"{self.run_id}.yml"
        with open(log_path, "w") as f:
            yaml.dump(log, f, default_flow_style=False, sort_keys=False, allow_unicode=True)
        logger.debug(f"Run log written to {log_path}")
        return log_path


def plain(value: Any) -> Any:
    """numpy scalars/arrays and paths → YAML/JSON-native values."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "tolist"):
        return value.tolist()
    return value
