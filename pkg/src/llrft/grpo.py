"""Group-relative advantages and the clipped, KL-regularized policy objective.

Advantages standardize rewards within a sampled group (population standard
deviation; all-zero when the spread falls under a floor).  The objective is
the usual clipped-ratio surrogate evaluated on per-token log-probabilities,
minus a per-token KL penalty against a frozen reference policy, averaged over
tokens then over the group.  A whole-sequence ratio mode (summed log-probs)
is available behind `ratio_level` since the group objective is stated on
sequence probabilities; token-level is the default for gradient-scale
stability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

RATIO_TOKEN = "token"
RATIO_SEQUENCE = "sequence"


@dataclass
class GrpoConfig:
    group_size: int = 8
    clip_epsilon: float = 0.2
    kl_coeff: float = 0.001
    std_floor: float = 1e-8
    temperature: float = 0.8
    ratio_level: str = RATIO_TOKEN

    def __post_init__(self):
        if self.group_size < 2:
            raise ValueError("group size must be at least 2 for advantage normalization")
        if not 0.0 < self.clip_epsilon < 1.0:
            raise ValueError("clip epsilon must lie in (0, 1)")
        if self.kl_coeff < 0:
            raise ValueError("KL coefficient must be nonnegative")
        if not self.std_floor > 0:
            raise ValueError("std floor must be positive")
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        if self.ratio_level not in (RATIO_TOKEN, RATIO_SEQUENCE):
            raise ValueError(f"unknown ratio level {self.ratio_level!r}")

    def to_json_dict(self) -> dict:
        return {
            "group_size": self.group_size,
            "clip_epsilon": self.clip_epsilon,
            "kl_coeff": self.kl_coeff,
            "std_floor": self.std_floor,
            "temperature": self.temperature,
            "ratio_level": self.ratio_level,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "GrpoConfig":
        return cls(
            group_size=int(obj["group_size"]),
            clip_epsilon=float(obj["clip_epsilon"]),
            kl_coeff=float(obj["kl_coeff"]),
            std_floor=float(obj["std_floor"]),
            temperature=float(obj["temperature"]),
            ratio_level=str(obj.get("ratio_level", RATIO_TOKEN)),
        )

    @classmethod
    def reference(cls) -> "GrpoConfig":
        """The canonical optimization constants: groups of 8 at sampling
        temperature 0.8, clip 0.2, KL coefficient 0.001."""
        return cls(group_size=8, clip_epsilon=0.2, kl_coeff=0.001,
                   std_floor=1e-8, temperature=0.8)


@dataclass
class RolloutGroup:
    """G sequences sampled for one prompt, with their rewards and the
    per-token log-probs recorded under the sampling policy and under the
    frozen reference policy."""

    prompt_id: int
    sequences: list
    logp_old: list
    logp_ref: list
    rewards: list

    def __post_init__(self):
        g = len(self.sequences)
        if not (len(self.logp_old) == len(self.logp_ref) == len(self.rewards) == g):
            raise ValueError("group fields must all have length G")
        for seq, lo, lr in zip(self.sequences, self.logp_old, self.logp_ref):
            if len(lo) != len(seq) or len(lr) != len(seq):
                raise ValueError("log-prob lists must match sequence lengths")
        if not all(math.isfinite(r) for r in self.rewards):
            raise ValueError("rewards must be finite")

    @property
    def group_size(self) -> int:
        return len(self.sequences)


def compute_advantages(rewards, std_floor: float) -> np.ndarray:
    """Standardized rewards (r - mean) / population-std; all zeros when the
    spread is below `std_floor` (a degenerate-but-legal all-equal group)."""
    r = np.asarray(rewards, dtype=np.float64)
    if r.size < 2:
        raise ValueError("degenerate group: need at least 2 rewards")
    if not np.all(np.isfinite(r)):
        raise ValueError("rewards must be finite")
    std = float(r.std())
    if std < std_floor:
        return np.zeros_like(r)
    return (r - r.mean()) / std


def token_kl_estimate(logp_new: float, logp_ref: float) -> float:
    """Nonnegative per-sample KL estimator: ratio - log(ratio) - 1 with
    ratio = exp(logp_ref - logp_new).  Zero iff the log-probs agree."""
    if not (math.isfinite(logp_new) and math.isfinite(logp_ref)):
        raise ValueError("log-probabilities must be finite")
    delta = logp_ref - logp_new
    return math.exp(delta) - delta - 1.0


def _clip(x: float, lo: float, hi: float) -> float:
    return min(max(x, lo), hi)


def grpo_objective(group: RolloutGroup, logp_new, advantages, cfg: GrpoConfig) -> float:
    """Maximization objective: group mean of the per-sequence token means of
    min(rho * A, clip(rho, 1-eps, 1+eps) * A) - kl_coeff * kl."""
    obj, _ = grpo_objective_and_grads(group, logp_new, advantages, cfg)
    return obj


def grpo_objective_and_grads(group: RolloutGroup, logp_new, advantages,
                             cfg: GrpoConfig):
    """Objective value plus its gradient with respect to every new log-prob.

    Returned gradients mirror the shape of `logp_new` (one list per sequence)
    so a policy backward pass can push them straight into the logits.
    """
    g = group.group_size
    if len(logp_new) != g or len(advantages) != g:
        raise ValueError("logp_new and advantages must match the group size")
    for seq, ln in zip(group.sequences, logp_new):
        if len(ln) != len(seq):
            raise ValueError("logp_new lists must match sequence lengths")

    lo, hi = 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon
    total = 0.0
    grads = []
    for i in range(g):
        a_i = float(advantages[i])
        new = np.asarray(logp_new[i], dtype=np.float64)
        old = np.asarray(group.logp_old[i], dtype=np.float64)
        ref = np.asarray(group.logp_ref[i], dtype=np.float64)
        n_tok = len(new)
        if n_tok == 0:
            grads.append(np.zeros(0))
            continue

        if cfg.ratio_level == RATIO_SEQUENCE:
            rho = math.exp(float(new.sum() - old.sum()))
            unclipped = rho * a_i
            clipped = _clip(rho, lo, hi) * a_i
            surrogate = min(unclipped, clipped)
            # d/dlogp of exp(sum new - sum old) * A is rho * A at every token
            # when the unclipped branch is active, zero otherwise.
            d_surr = np.full(n_tok, rho * a_i if unclipped <= clipped else 0.0)
            surr_mean = surrogate
            d_surr_mean = d_surr
        else:
            rho = np.exp(new - old)
            unclipped = rho * a_i
            clipped = np.clip(rho, lo, hi) * a_i
            surrogate = np.minimum(unclipped, clipped)
            d_surr = np.where(unclipped <= clipped, rho * a_i, 0.0)
            surr_mean = float(surrogate.mean())
            d_surr_mean = d_surr / n_tok

        delta = ref - new
        kl = np.exp(delta) - delta - 1.0
        # d kl / d logp_new = 1 - exp(delta); the objective subtracts kl.
        d_kl = 1.0 - np.exp(delta)
        obj_i = surr_mean - cfg.kl_coeff * float(kl.mean())
        grad_i = d_surr_mean - cfg.kl_coeff * d_kl / n_tok

        total += obj_i
        grads.append(grad_i / g)
    return total / g, grads
