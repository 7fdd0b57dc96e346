"""Stable integer error codes shared by the HTTP service and its clients.

Codes are part of the wire contract: clients match on the integer, the
message is for humans.  Decode failures keep their violation kind as a
distinct code so a client can tell a truncated stream from an out-of-range
token without parsing prose.
"""

from __future__ import annotations

OK = 0
INVALID_ARGUMENT = 1

DECODE_LENGTH = 10
DECODE_VOCABULARY = 11
DECODE_EXPANSION_COUNT = 12

MALFORMED_MATRIX = 20
BAD_CHECKPOINT = 30

_VIOLATION_CODES = {
    "length": DECODE_LENGTH,
    "vocabulary": DECODE_VOCABULARY,
    "expansion-count": DECODE_EXPANSION_COUNT,
}


def violation_code(kind: str) -> int:
    """Integer code for a codec violation kind; INVALID_ARGUMENT if the kind
    is not a decode violation."""
    return _VIOLATION_CODES.get(kind, INVALID_ARGUMENT)
