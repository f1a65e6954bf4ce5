"""Extraction of JSON values embedded in free-form text.

Chat models wrap their JSON in prose and code fences; external objective
processes may print diagnostics around their result object. Both consumers
share this scanner, which walks the text for balanced ``{...}`` / ``[...]``
spans (string- and escape-aware) and yields every span that parses.
"""

from __future__ import annotations

import json
from typing import Any, Iterator

_OPENERS = {"{": "}", "[": "]"}


def iter_json_values(text: str) -> Iterator[Any]:
    """Yield each parseable JSON object or array found in ``text``, in order.

    Nested values are not re-yielded separately; scanning resumes after the
    end of each successfully parsed span.
    """
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch not in _OPENERS:
            i += 1
            continue
        end = _balanced_end(text, i)
        if end is None:
            i += 1
            continue
        candidate = text[i : end + 1]
        try:
            yield json.loads(candidate)
        except ValueError:
            i += 1
            continue
        i = end + 1


def _balanced_end(text: str, start: int) -> int | None:
    """Index of the bracket closing the span opened at ``start``, or None."""
    stack = [_OPENERS[text[start]]]
    in_string = False
    escaped = False
    for j in range(start + 1, len(text)):
        ch = text[j]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch in _OPENERS:
            stack.append(_OPENERS[ch])
        elif ch in ("}", "]"):
            if ch != stack.pop():
                return None
            if not stack:
                return j
    return None


def first_json_object(text: str) -> dict | None:
    """First JSON *object* in the text, or None."""
    for value in iter_json_values(text):
        if isinstance(value, dict):
            return value
    return None


def first_json_array(text: str) -> list | None:
    """First JSON *array* in the text, or None."""
    for value in iter_json_values(text):
        if isinstance(value, list):
            return value
    return None
