"""Shared error types for log consumers."""

from __future__ import annotations


class MalformedLogError(Exception):
    """An event log violates the stream invariants (code MALFORMED_LOG)."""

    code = "MALFORMED_LOG"

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"{message} (line {line})")
        self.line = line
