"""Exception hierarchy mapped onto CLI exit codes (config=1, data=2, gateway=3)."""

from __future__ import annotations


class FocusmedError(Exception):
    """Base class for all pipeline errors."""


class ConfigError(FocusmedError):
    """Bad configuration or usage: unknown schema, invalid weights, bad flags."""


class DataError(FocusmedError):
    """Malformed or inconsistent input data: bad JSONL, missing fields, id clashes."""


class GatewayError(FocusmedError):
    """Model-backend failure: missing fixtures, exhausted retries, bad responses."""
