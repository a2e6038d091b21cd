"""Versioned JSON schemas for the CLI output envelopes."""

SCHEMA_VERSION = "fringelab/1"

RESULT_ENVELOPE = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "fringelab result envelope",
    "type": "object",
    "required": ["config", "result"],
    "properties": {
        "config": {
            "type": "object",
            "required": ["subcommand", "schema"],
            "properties": {
                "subcommand": {"type": "string"},
                "schema": {"const": SCHEMA_VERSION},
            },
        },
        "result": {},
    },
}

EXPERIMENT_REPORT = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "fringelab experiment report",
    "type": "object",
    "required": ["config", "per_size", "verdicts", "all_passed", "schema"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "config": {"type": "object"},
        "all_passed": {"type": "boolean"},
        "per_size": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["size", "replicates", "patterns"],
            },
        },
        "verdicts": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["check", "size", "observed", "tolerance", "passed"],
            },
        },
    },
}
