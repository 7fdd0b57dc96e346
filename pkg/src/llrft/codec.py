"""Bidirectional mapping between continuous action chunks and discrete token ids.

A chunk of H timesteps x D dimensions (D-1 pose dims plus one gripper channel)
is flattened row-major (time-major, dimension-minor), each value clamped to its
per-dimension bounds and uniformly quantized into Q bins.  Optionally, maximal
runs of identical bin ids are packed into (value, count) pairs, where count
token ids live directly above the value ids: id Q + (run_length - 1).

The vocabulary is therefore Q value tokens plus H*D count tokens.  Token
streams that do not expand to exactly H*D values are invalid; `format_check`
is the total-function validity test and `decode` raises `DecodeError` with the
violation kind ("length", "vocabulary", "expansion-count").
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

COMPRESSION_NONE = "none"
COMPRESSION_RLE = "run-length"

#: Widening margin applied to fitted per-dimension bounds.
BOUND_MARGIN = 1e-6

TokenSeq = list


class DecodeError(ValueError):
    """Token stream cannot be decoded; `kind` is one of "length",
    "vocabulary", "expansion-count"."""

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


@dataclass
class ActionChunk:
    """H x D matrix of control values; columns 0..D-2 are pose dimensions,
    column D-1 is the gripper channel (0.0 open / 1.0 closed once binarized)."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError(f"chunk must be 2-D, got shape {self.values.shape}")
        h, d = self.values.shape
        if h < 1 or d < 2:
            raise ValueError(f"chunk needs H >= 1 and D >= 2, got {h}x{d}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("chunk contains non-finite values")

    @property
    def h(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def pose(self) -> np.ndarray:
        return self.values[:, :-1]

    @property
    def gripper(self) -> np.ndarray:
        return self.values[:, -1]


@dataclass
class NormalizationStats:
    """Per-dimension [lower, upper) control-unit bounds used for binning."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=np.float64)
        self.upper = np.asarray(self.upper, dtype=np.float64)
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ValueError("lower/upper must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise ValueError("bounds must be finite")
        if not np.all(self.lower < self.upper):
            raise ValueError("lower bound must be strictly below upper in every dimension")


@dataclass
class CodecSpec:
    """Shape and quantization contract: H steps, D dims, Q bins per dim,
    compression mode, and normalization bounds."""

    h: int
    d: int
    q: int
    compression: str
    stats: NormalizationStats

    def __post_init__(self):
        if self.q < 2:
            raise ValueError("need at least two quantization bins")
        if self.h < 1 or self.d < 2:
            raise ValueError("need H >= 1 and D >= 2")
        if self.compression not in (COMPRESSION_NONE, COMPRESSION_RLE):
            raise ValueError(f"unknown compression mode {self.compression!r}")
        if len(self.stats.lower) != self.d:
            raise ValueError("stats dimension does not match D")

    @property
    def n_base(self) -> int:
        """Expanded token count of a valid stream: H*D (also the maximum run length)."""
        return self.h * self.d

    @property
    def vocab_size(self) -> int:
        """Q value tokens followed by H*D run-count tokens."""
        return self.q + self.n_base

    def to_json_dict(self) -> dict:
        return {
            "h": self.h,
            "d": self.d,
            "q": self.q,
            "compression": self.compression,
            "lower": [float(x) for x in self.stats.lower],
            "upper": [float(x) for x in self.stats.upper],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "CodecSpec":
        return cls(
            h=int(obj["h"]),
            d=int(obj["d"]),
            q=int(obj["q"]),
            compression=str(obj["compression"]),
            stats=NormalizationStats(
                lower=np.asarray(obj["lower"], dtype=np.float64),
                upper=np.asarray(obj["upper"], dtype=np.float64),
            ),
        )


def fit_normalizer(demos) -> NormalizationStats:
    """Per-dimension bounds over a collection of chunks: [min - m, max + m]
    with margin m = 1e-6.  The gripper dimension is pinned to [0, 1]."""
    chunks = list(demos)
    if not chunks:
        raise ValueError("no demonstrations")
    d = chunks[0].d
    if any(c.d != d for c in chunks):
        raise ValueError("dimension mismatch")
    stacked = np.concatenate([c.values for c in chunks], axis=0)
    lower = stacked.min(axis=0) - BOUND_MARGIN
    upper = stacked.max(axis=0) + BOUND_MARGIN
    lower[-1] = 0.0
    upper[-1] = 1.0
    return NormalizationStats(lower=lower, upper=upper)


def _quantize(chunk: ActionChunk, spec: CodecSpec) -> np.ndarray:
    lo, hi = spec.stats.lower, spec.stats.upper
    clamped = np.clip(chunk.values, lo, hi)
    unit = (clamped - lo) / (hi - lo)
    bins = np.floor(unit * spec.q).astype(np.int64)
    return np.minimum(bins, spec.q - 1)


def encode(chunk: ActionChunk, spec: CodecSpec) -> list[int]:
    """Clamp, quantize, flatten row-major; pack runs into (value, count) pairs
    when the spec asks for run-length compression."""
    if chunk.h != spec.h or chunk.d != spec.d:
        raise ValueError(
            f"chunk shape {chunk.h}x{chunk.d} does not match spec {spec.h}x{spec.d}"
        )
    base = [int(b) for b in _quantize(chunk, spec).reshape(-1)]
    if spec.compression == COMPRESSION_NONE:
        return base
    out: list[int] = []
    i = 0
    while i < len(base):
        j = i
        while j < len(base) and base[j] == base[i]:
            j += 1
        out.extend((base[i], spec.q + (j - i) - 1))
        i = j
    return out


def format_violation(tokens, spec: CodecSpec) -> str | None:
    """None if the stream decodes to exactly H*D values, else the violation
    kind.  Total: never raises."""
    tokens = list(tokens)
    if spec.compression == COMPRESSION_NONE:
        if len(tokens) != spec.n_base:
            return "length"
        if any(t < 0 or t >= spec.q for t in tokens):
            return "vocabulary"
        return None
    if len(tokens) % 2 != 0:
        return "length"
    count_hi = spec.q + spec.n_base
    for pos, t in enumerate(tokens):
        if pos % 2 == 0:
            if t < 0 or t >= spec.q:
                return "vocabulary"
        elif t < spec.q or t >= count_hi:
            return "vocabulary"
    expanded = sum(tokens[pos] - spec.q + 1 for pos in range(1, len(tokens), 2))
    if expanded != spec.n_base:
        return "expansion-count"
    return None


def format_check(tokens, spec: CodecSpec) -> bool:
    """True iff the token stream is decodable under the spec."""
    return format_violation(tokens, spec) is None


def decode(tokens, spec: CodecSpec) -> ActionChunk:
    """Inverse of `encode` up to quantization: base tokens map to bin centers
    and the gripper column is binarized at the midpoint of its bounds."""
    tokens = list(tokens)
    kind = format_violation(tokens, spec)
    if kind is not None:
        raise DecodeError(kind, f"invalid token stream ({kind})")
    if spec.compression == COMPRESSION_RLE:
        base: list[int] = []
        for pos in range(0, len(tokens), 2):
            base.extend([tokens[pos]] * (tokens[pos + 1] - spec.q + 1))
    else:
        base = tokens
    bins = np.asarray(base, dtype=np.float64).reshape(spec.h, spec.d)
    lo, hi = spec.stats.lower, spec.stats.upper
    values = lo + (bins + 0.5) / spec.q * (hi - lo)
    # Gripper is an open/close state, not a position: threshold the
    # normalized channel at 0.5 and emit exactly 0.0 or 1.0.
    grip_unit = (values[:, -1] - lo[-1]) / (hi[-1] - lo[-1])
    values[:, -1] = np.where(grip_unit >= 0.5, 1.0, 0.0)
    return ActionChunk(values=values)
