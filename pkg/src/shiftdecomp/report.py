"""Versioned decomposition report with deterministic JSON serialization."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

from .errors import DataError

SCHEMA_VERSION = 1
SECTIONS = ("covariate", "outcome")


def _clean(obj):
    """JSON-safe copy: tuples to lists, numpy scalars to Python, NaN/inf to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


@dataclass
class DecompositionReport:
    """Everything one run produced.

    ``aggregate`` maps term name to an estimate dict (plus ``warnings``);
    ``detailed[section]`` is a Shapley attribution dict or None when the
    section was not requested or failed; ``errors`` maps the failed stage
    to its message, hint and exit code.
    """

    metadata: dict[str, Any] = field(default_factory=dict)
    aggregate: dict[str, Any] | None = None
    detailed: dict[str, Any] = field(default_factory=lambda: {s: None for s in SECTIONS})
    subset_values: dict[str, list] = field(default_factory=lambda: {s: [] for s in SECTIONS})
    errors: dict[str, dict] = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @property
    def complete(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return _clean({
            "schema_version": self.schema_version,
            "metadata": self.metadata,
            "aggregate": self.aggregate,
            "detailed": self.detailed,
            "subset_values": self.subset_values,
            "errors": self.errors,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "DecompositionReport":
        """Tolerant reader: unknown keys are ignored, missing sections default."""
        if not isinstance(d, dict):
            raise DataError("report must be a JSON object")
        version = d.get("schema_version", SCHEMA_VERSION)
        if not isinstance(version, int) or version > SCHEMA_VERSION:
            raise DataError(f"unsupported report schema version {version!r}")
        detailed = {s: None for s in SECTIONS}
        detailed.update({k: v for k, v in (d.get("detailed") or {}).items() if k in SECTIONS})
        values = {s: [] for s in SECTIONS}
        values.update({k: v for k, v in (d.get("subset_values") or {}).items() if k in SECTIONS})
        return cls(dict(d.get("metadata") or {}), d.get("aggregate"), detailed, values,
                   dict(d.get("errors") or {}), version)

    @classmethod
    def from_json(cls, text: str) -> "DecompositionReport":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise DataError(f"report is not valid JSON: {exc}") from None
