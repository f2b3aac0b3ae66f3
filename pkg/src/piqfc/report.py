"""Analysis report serialization (canonical JSON) and schema-checked reading."""

from __future__ import annotations

import json
import math

import jsonschema

from .config import PipelineConfig
from .pipeline import SCHEMA_VERSION

_NUM = {"type": "number"}
_NUM_OR_NULL = {"type": ["number", "null"]}
_MATRIX = {
    "type": "array",
    "minItems": 4,
    "maxItems": 4,
    "items": {"type": "array", "minItems": 4, "maxItems": 4, "items": _NUM},
}
_METRICS = ("concurrence", "eof", "purity", "max_fidelity", "theta_star_deg")


def _closed(properties: dict, required=None) -> dict:
    return {
        "type": "object",
        "properties": properties,
        "required": sorted(properties if required is None else required),
        "additionalProperties": False,
    }


SCENARIO_SCHEMA = _closed(
    {
        "total_counts": {"type": "integer", "minimum": 0},
        "n_settings": {"type": "integer", "minimum": 1},
        "qfc_success_prob": _NUM_OR_NULL,
        "reconstruction": _closed(
            {
                "rho": _closed({"real": _MATRIX, "imag": _MATRIX}),
                "log_likelihood": _NUM,
                "iterations_used": {"type": "integer", "minimum": 0},
                "converged": {"type": "boolean"},
            }
        ),
        "metrics": _closed({m: _NUM for m in _METRICS}),
        "uncertainties": _closed(
            {m: _closed({"mean": _NUM_OR_NULL, "std": _NUM_OR_NULL}) for m in _METRICS}
        ),
        "bootstrap": _closed(
            {
                "resamples": {"type": "integer", "minimum": 10},
                "failures": {"type": "integer", "minimum": 0},
                "failure_fraction": _NUM,
            }
        ),
    }
)

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "piqfc analysis report",
    **_closed(
        {
            "schema_version": {"const": SCHEMA_VERSION},
            "tool": {"const": "piqfc"},
            "tool_version": {"type": "string"},
            "seed": {"type": "integer"},
            "config": {"type": "object"},
            "uncertainty_method": _closed({"label": {"type": "string"}, "note": {"type": "string"}}),
            "flags": {"type": "array", "items": {"type": "string"}},
            "scenarios": {
                "type": "object",
                "minProperties": 1,
                "additionalProperties": SCENARIO_SCHEMA,
            },
        }
    ),
}


class ReportError(ValueError):
    pass


def _finite(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def dumps_report(report: dict) -> str:
    """Canonical JSON text; equal reports serialize to identical bytes."""
    return json.dumps(_finite(report), indent=2, sort_keys=True, allow_nan=False) + "\n"


def loads_report(text: str) -> tuple[dict, PipelineConfig]:
    """Parse and validate a report; returns it with its re-validated config."""
    try:
        report = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ReportError(f"report is not valid JSON: {exc}") from None
    try:
        jsonschema.validate(report, REPORT_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ReportError(f"report field {path}: {exc.message}") from None
    cfg = PipelineConfig.from_dict(report["config"])
    if set(report["scenarios"]) != {s.name for s in cfg.scenarios}:
        raise ReportError("report scenarios do not match its config echo")
    return report, cfg
