"""Published JSON schema for CLI reports."""

from __future__ import annotations

import jsonschema

SCHEMA_ID = "vn-criterion/1"

_number = {"type": "number"}
_nullable_number = {"type": ["number", "null"]}

CRITERION_REPORT = {
    "type": "object",
    "required": [
        "mean_a", "mean_b", "sq_a", "sq_b", "first_moment_gap",
        "violation_margin", "violated", "commutator",
    ],
    "properties": {
        "mean_a": _number,
        "mean_b": _number,
        "sq_a": _number,
        "sq_b": _number,
        "first_moment_gap": _number,
        "violation_margin": _number,
        "violated": {"type": "boolean"},
        "commutator": _number,
    },
}

VALUATION_AUDIT = {
    "type": "object",
    "required": ["samples", "frac_negative_diff", "min_vC", "frac_sum_rule_holds"],
    "properties": {
        "samples": {"type": "integer", "minimum": 1},
        "frac_negative_diff": {"type": "number", "minimum": 0, "maximum": 1},
        "min_vC": _number,
        "frac_sum_rule_holds": {"type": "number", "minimum": 0, "maximum": 1},
    },
}

FEASIBILITY = {
    "type": "object",
    "required": ["status", "residual", "delta", "constraints_used", "targets"],
    "properties": {
        "status": {"enum": ["feasible", "infeasible"]},
        "residual": _number,
        "delta": _number,
        "constraints_used": {"type": "array", "items": {"type": "string"}},
        "targets": {"type": "object", "additionalProperties": _number},
    },
}

_results = {
    "criterion check": {
        "type": "object",
        "required": ["validity", "report"],
        "properties": {"report": CRITERION_REPORT},
    },
    "criterion optimize": {
        "type": "object",
        "required": ["margin", "amplitudes", "report"],
        "properties": {"margin": _number, "report": CRITERION_REPORT},
    },
    "criterion sweep": {
        "type": "object",
        "required": ["trials", "dim", "seed", "max_margin", "violations"],
        "properties": {"max_margin": _nullable_number, "violations": {"type": "integer"}},
    },
    "hv build": {
        "type": "object",
        "required": ["alphabets", "joint", "factorized", "rho"],
    },
    "hv sample": {
        "type": "object",
        "required": ["n", "seed", "tags", "counts", "moments", "rows"],
    },
    "hv audit": VALUATION_AUDIT,
    "optics simulate": {
        "type": "object",
        "required": [
            "weighted_average", "per_detector_intensity", "normalization",
            "quantum_reference", "deviation", "tuning",
        ],
    },
    "optics compare": {
        "type": "object",
        "required": ["classical", "quantum_reference", "deviation"],
    },
    "phasespace feasibility": {
        "type": "object",
        "required": ["feasibility", "pointwise_order"],
        "properties": {"feasibility": FEASIBILITY},
    },
    "paper": {
        "type": "object",
        "required": [
            "criterion", "hv_pair_moments", "hv_audit", "optics_deviation", "lp", "verdict_lines",
        ],
        "properties": {
            "criterion": CRITERION_REPORT,
            "hv_pair_moments": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["tag", "power", "model", "quantum", "abs_diff"],
                },
            },
            "hv_audit": VALUATION_AUDIT,
            "optics_deviation": _number,
            "lp": FEASIBILITY,
            "verdict_lines": {"type": "array", "items": {"type": "string"}},
        },
    },
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema", "tool", "version", "command", "config", "seeds", "timestamp", "result"],
    "properties": {
        "schema": {"const": SCHEMA_ID},
        "tool": {"const": "quantumness"},
        "version": {"type": "string"},
        "command": {"enum": sorted(_results)},
        "config": {"type": "object"},
        "seeds": {"type": "object"},
        "tolerances": {"type": "object", "additionalProperties": _number},
        "timestamp": {"type": "string"},
        "result": {"type": "object"},
    },
}


def validate_report(doc: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if ``doc`` is not a valid report."""
    jsonschema.validate(doc, REPORT_SCHEMA)
    jsonschema.validate(doc["result"], _results[doc["command"]])
