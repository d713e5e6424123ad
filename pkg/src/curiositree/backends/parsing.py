"""Tolerant parsers for the parenthesized list formats the prompts request.

A bounded reprompt loop replaces constrained decoding: callers parse, and on
ParseError re-elicit up to the retry limit. Parsers accept arbitrary
whitespace, newlines between items, optional matching quotes, and trailing
separators, but are strict about item count and value validity.
"""

from __future__ import annotations

import math
import re
from typing import Sequence

from ..core import Label, normalize_text
from ..errors import ParseError

_GROUP = re.compile(r"\(([^()]*)\)")


def _strip_quotes(text: str) -> str:
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1].strip()
    return text


def _groups(text: str, expected: int, what: str) -> list[str]:
    groups = _GROUP.findall(text)
    if len(groups) != expected:
        raise ParseError(f"expected {expected} {what}, found {len(groups)}")
    return groups


def _parse_number(raw: str, what: str) -> float:
    try:
        value = float(raw.strip())
    except ValueError:
        raise ParseError(f"{what} {raw.strip()!r} is not numeric") from None
    if not math.isfinite(value):
        raise ParseError(f"{what} {raw.strip()!r} is not finite")
    if value < 0:
        raise ParseError(f"{what} must be nonnegative, got {value}")
    return value


def parse_tuple_list(text: str, k: int) -> list[tuple[Label, float]]:
    """Parse exactly k "(label, score)" pairs with distinct normalized labels."""
    pairs = []
    seen: set[str] = set()
    for group in _groups(text, k, "candidate pairs"):
        if "," not in group:
            raise ParseError(f"pair {group!r} has no score separator")
        label_part, score_part = group.rsplit(",", 1)
        label_text = _strip_quotes(label_part)
        if not label_text or not normalize_text(label_text):
            raise ParseError(f"pair {group!r} has an empty label")
        score = _parse_number(score_part, "score")
        key = normalize_text(label_text)
        if key in seen:
            raise ParseError(f"duplicate candidate {label_text!r} after normalization")
        seen.add(key)
        pairs.append((Label(label_text), score))
    return pairs


def serialize_tuple_list(pairs: Sequence[tuple[Label, float]]) -> str:
    """Inverse of parse_tuple_list for well-formed labels and scores."""
    return ", ".join(f"({label.text}, {score!r})" for label, score in pairs)


def parse_bool_list(text: str, k: int) -> tuple[bool, ...]:
    """Parse exactly k parenthesized booleans (case-insensitive true/false)."""
    bits = []
    for group in _groups(text, k, "booleans"):
        token = _strip_quotes(group).lower()
        if token == "true":
            bits.append(True)
        elif token == "false":
            bits.append(False)
        else:
            raise ParseError(f"{group.strip()!r} is not a boolean")
    return tuple(bits)


def parse_float_list(text: str, k: int) -> list[float]:
    """Parse exactly k parenthesized nonnegative finite numbers."""
    return [_parse_number(_strip_quotes(g), "score") for g in _groups(text, k, "scores")]


def parse_string_list(text: str, k: int) -> list[str]:
    """Parse exactly k parenthesized nonempty strings (sampled action payloads)."""
    out = []
    for group in _groups(text, k, "actions"):
        payload = _strip_quotes(group)
        if not payload:
            raise ParseError("sampled action payload is empty")
        out.append(payload)
    return out
