"""Tolerant extraction of JSON payloads from free-form model output."""

from __future__ import annotations

import json
from typing import Any

from .errors import FocusmedError

_OPENERS = {"object": "{", "array": "["}


class ResponseParseError(FocusmedError):
    """Model output held no usable payload; callers may retry the request."""


def extract_json_value(text: str, kind: str = "object") -> Any:
    """Return the first balanced JSON object or array embedded in text.

    Surrounding prose and code fences are ignored: the scan simply
    tries to decode at every opener position and keeps the first value
    that parses.
    """
    opener = _OPENERS[kind]
    decoder = json.JSONDecoder()
    start = text.find(opener)
    while start != -1:
        try:
            value, _ = decoder.raw_decode(text, start)
            return value
        except json.JSONDecodeError:
            start = text.find(opener, start + 1)
    raise ResponseParseError(f"no JSON {kind} found in model output")
