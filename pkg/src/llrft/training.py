"""Training loops: supervised fine-tuning on demonstrations and reinforcement
fine-tuning on self-sampled token groups scored by the composite reward.

Reinforcement runs start from a short supervised warm-up over the same
demonstrations: a freshly initialized policy emits almost exclusively invalid
sequences, whose uniformly zero rewards give zero advantages and therefore no
gradient.  The warm-up puts enough probability mass on decodable sequences
for the group-relative signal to bite; the post-warm-up snapshot also serves
as the KL reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codec import CodecSpec, DecodeError, decode, encode
from .grpo import GrpoConfig
from .policy import (PolicyParams, greedy_sequence, init_params, rft_update,
                     sample_group, sft_update, strip_eoc)
from .rewards import RewardConfig, mdpr
from .seeding import derive_seed
from .tasks import Demonstration, TaskSpec, generate_demos, is_success

CURVE_COLUMNS = ("step", "mean_mdpr", "mean_qacr", "mean_ctar", "mean_fcr", "objective")


@dataclass
class TrainingSettings:
    """Everything a training stage needs besides the data: codec, reward and
    optimization configs, policy dimensions, learning rates, and the
    evaluation recipe."""

    spec: CodecSpec
    reward: RewardConfig = field(default_factory=RewardConfig)
    grpo: GrpoConfig = field(default_factory=GrpoConfig)
    embed_dim: int = 16
    hidden_dim: int = 64
    l_max: int = 40
    t_max: int = 8
    lr_sft: float = 0.05
    lr_rft: float = 0.05
    rft_warmup_epochs: int = 1
    noise_scale: float = 0.02
    success_tol: float = 0.1

    def __post_init__(self):
        if min(self.embed_dim, self.hidden_dim, self.l_max, self.t_max) < 1:
            raise ValueError("policy dimensions must be positive")
        if self.l_max < self.spec.n_base + 1:
            raise ValueError("L_max too small to emit a full uncompressed chunk")
        if self.lr_sft < 0 or self.lr_rft < 0:
            raise ValueError("learning rates must be nonnegative")
        if self.rft_warmup_epochs < 0:
            raise ValueError("warm-up epochs must be nonnegative")
        if self.noise_scale < 0 or self.success_tol <= 0:
            raise ValueError("noise scale must be nonnegative and tolerance positive")

    @property
    def v_tok(self) -> int:
        # Codec vocabulary plus the end-of-chunk marker.
        return self.spec.vocab_size + 1


def new_policy(settings: TrainingSettings, seed: int) -> PolicyParams:
    return init_params(
        f=settings.spec.d - 1,
        e=settings.embed_dim,
        hd=settings.hidden_dim,
        v_tok=settings.v_tok,
        l_max=settings.l_max,
        t_max=settings.t_max,
        seed=seed,
    )


def _shuffler(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def train_sft(params: PolicyParams, demos: list, settings: TrainingSettings,
              epochs: int, seed: int, collect_curves: bool = False):
    """Token cross-entropy over demonstrations, shuffled each epoch.
    Returns (trained params, curve rows); rows are gathered only on request
    because they cost one greedy rollout per step."""
    if not demos:
        raise ValueError("no demonstrations to train on")
    spec = settings.spec
    rng = _shuffler(derive_seed(seed, "shuffle"))
    targets = [encode(d.chunk, spec) for d in demos]
    rows = []
    step = 0
    for _ in range(epochs):
        for i in rng.permutation(len(demos)):
            demo, gt = demos[i], targets[i]
            params, loss = sft_update(params, demo.context, gt, settings.lr_sft, spec)
            if collect_curves:
                payload = strip_eoc(greedy_sequence(params, demo.context), params.eoc_id)
                b = mdpr(payload, gt, spec, settings.reward)
                rows.append((step, b.mdpr, b.qacr, b.ctar, b.fcr, -loss))
            step += 1
    return params, rows


def train_rft(params: PolicyParams, demos: list, settings: TrainingSettings,
              epochs: int, seed: int, max_steps: int | None = None):
    """Group-relative reinforcement over demonstration prompts.  Each step
    samples a group for one prompt, scores every sequence with the composite
    reward against that prompt's ground-truth tokens, and takes one ascent
    step.  Returns (trained params, curve rows)."""
    if not demos:
        raise ValueError("no demonstrations to train on")
    spec = settings.spec
    if settings.rft_warmup_epochs > 0:
        params, _ = train_sft(params, demos, settings, settings.rft_warmup_epochs,
                              derive_seed(seed, "warmup"))
    ref = params.copy()
    rng = _shuffler(derive_seed(seed, "shuffle"))
    targets = [encode(d.chunk, spec) for d in demos]
    rows = []
    step = 0
    for epoch in range(epochs):
        for i in rng.permutation(len(demos)):
            if max_steps is not None and step >= max_steps:
                return params, rows
            demo, gt = demos[i], targets[i]
            batch = sample_group(params, demo.context, settings.grpo,
                                 derive_seed(seed, "sample", epoch, int(i), step))
            breakdowns = [
                mdpr(strip_eoc(s, params.eoc_id), gt, spec, settings.reward)
                for s in batch.sequences
            ]
            rewards = [b.mdpr for b in breakdowns]
            params, objective = rft_update(params, batch, rewards, ref,
                                           settings.grpo, settings.lr_rft)
            rows.append((
                step,
                float(np.mean([b.mdpr for b in breakdowns])),
                float(np.mean([b.qacr for b in breakdowns])),
                float(np.mean([b.ctar for b in breakdowns])),
                float(np.mean([b.fcr for b in breakdowns])),
                objective,
            ))
            step += 1
    return params, rows


def evaluate_policy(params: PolicyParams, task: TaskSpec,
                    settings: TrainingSettings, n_episodes: int,
                    seed: int) -> float:
    """Greedy success rate over fresh observations: sample an observation,
    decode the greedy token sequence, and compare the chunk against the
    expert chunk for that observation.  Undecodable output counts as
    failure."""
    demos = generate_demos(task, n_episodes, settings.noise_scale, seed,
                           settings.spec)
    hits = 0
    for demo in demos:
        payload = strip_eoc(greedy_sequence(params, demo.context), params.eoc_id)
        try:
            pred = decode(payload, settings.spec)
        except DecodeError:
            continue
        if is_success(pred, demo.chunk, settings.success_tol):
            hits += 1
    return hits / n_episodes


def rollout_demo(params: PolicyParams, demo: Demonstration,
                 settings: TrainingSettings):
    """Greedy prediction and its reward breakdown for one demonstration."""
    gt = encode(demo.chunk, settings.spec)
    payload = strip_eoc(greedy_sequence(params, demo.context), params.eoc_id)
    return payload, mdpr(payload, gt, settings.spec, settings.reward)
