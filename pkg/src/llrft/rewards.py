"""Process rewards for predicted action-token sequences.

Three components, each zero whenever the prediction fails the format check:

* token consistency — position-wise match rate against the ground-truth
  stream, normalized by the longer length;
* trajectory alignment — per-step mix of an exponentially decayed mean
  absolute pose error (computed on decoded chunks) and an exact gripper-state
  match, averaged over the chunk;
* format compliance — binary decodability indicator.

The composite is omega * consistency + (1 - omega) * alignment +
lambda * compliance, so its maximum is 1 + lambda.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codec import CodecSpec, decode, format_check


@dataclass
class RewardConfig:
    """Weights: alpha (pose-error decay, > 0), beta (pose/grip mix in [0,1]),
    omega (consistency/alignment mix in [0,1]), lam (compliance scale >= 0)."""

    alpha: float = 5.0
    beta: float = 0.8
    omega: float = 0.7
    lam: float = 0.1

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if not 0.0 <= self.omega <= 1.0:
            raise ValueError("omega must lie in [0, 1]")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")

    def to_json_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "omega": self.omega,
            "lambda": self.lam,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "RewardConfig":
        return cls(
            alpha=float(obj["alpha"]),
            beta=float(obj["beta"]),
            omega=float(obj["omega"]),
            lam=float(obj["lambda"]),
        )

    @classmethod
    def reference(cls) -> "RewardConfig":
        """The canonical weight tuple (alpha, beta, omega, lambda) =
        (5, 0.8, 0.7, 0.1)."""
        return cls(alpha=5.0, beta=0.8, omega=0.7, lam=0.1)


@dataclass
class RewardBreakdown:
    qacr: float
    ctar: float
    fcr: float
    mdpr: float


def _require_valid_gt(gt, spec: CodecSpec) -> None:
    if not format_check(gt, spec):
        raise ValueError("ground truth malformed")


def qacr(pred, gt, spec: CodecSpec) -> float:
    """Position-wise token match rate over min(U, V) positions, divided by
    max(U, V); zero if the prediction is not decodable."""
    _require_valid_gt(gt, spec)
    if not format_check(pred, spec):
        return 0.0
    pred, gt = list(pred), list(gt)
    longer = max(len(pred), len(gt))
    if longer == 0:
        return 0.0
    matches = sum(1 for a, b in zip(pred, gt) if a == b)
    return matches / longer


def ctar(pred, gt, spec: CodecSpec, cfg: RewardConfig) -> float:
    """Decode both streams; per step, exp(-alpha * mean-abs pose error) mixed
    with an exact gripper match by beta, averaged over the chunk.  Zero if the
    prediction is not decodable."""
    _require_valid_gt(gt, spec)
    if not format_check(pred, spec):
        return 0.0
    y = decode(pred, spec)
    y_ref = decode(gt, spec)
    d_t = np.mean(np.abs(y.pose - y_ref.pose), axis=1)
    r_pose = np.exp(-cfg.alpha * d_t)
    r_grip = (y.gripper == y_ref.gripper).astype(np.float64)
    return float(np.mean(cfg.beta * r_pose + (1.0 - cfg.beta) * r_grip))


def fcr(pred, spec: CodecSpec) -> float:
    """1.0 iff the prediction passes the format check, else 0.0."""
    return 1.0 if format_check(pred, spec) else 0.0


def mdpr(pred, gt, spec: CodecSpec, cfg: RewardConfig) -> RewardBreakdown:
    """Weighted composite of all three components."""
    q = qacr(pred, gt, spec)
    c = ctar(pred, gt, spec, cfg)
    f = fcr(pred, spec)
    total = cfg.omega * q + (1.0 - cfg.omega) * c + cfg.lam * f
    return RewardBreakdown(qacr=q, ctar=c, fcr=f, mdpr=total)
