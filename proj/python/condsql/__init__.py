"""Condition verification and repair for text-to-SQL WHERE clauses."""

from ._condsql import (
    Error,
    IoError,
    ParseError,
    RuntimeViolation,
    Tables,
    ValidationError,
    erosion_augment,
    evaluate,
    execute,
    execute_sql,
    explain,
    refine,
    render,
    run_cli,
    tokenize,
    validate,
)

__all__ = [
    "Error",
    "IoError",
    "ParseError",
    "RuntimeViolation",
    "Tables",
    "ValidationError",
    "erosion_augment",
    "evaluate",
    "execute",
    "execute_sql",
    "explain",
    "refine",
    "render",
    "run_cli",
    "tokenize",
    "validate",
]
