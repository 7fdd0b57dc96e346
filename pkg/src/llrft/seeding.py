"""Deterministic seed derivation.

Every stochastic stage of an experiment draws from a seed derived from the
root seed plus a tag path (e.g. ``derive_seed(seed, "demos", "base", 3)``),
so runs are reproducible end to end and no stage silently shares a stream
with another.
"""

from __future__ import annotations

import hashlib


def derive_seed(root: int, *tags) -> int:
    """Map a root seed and a tag path to an independent 63-bit seed."""
    text = f"{root}|" + "|".join(str(t) for t in tags)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1
