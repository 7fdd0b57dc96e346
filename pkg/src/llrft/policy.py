"""A small autoregressive categorical policy over action tokens.

Per position, the network sees a 3E-wide state: a linear projection of the
observation, the instruction embedding, and the embedding of the previously
emitted token augmented with a fixed sinusoidal position signal (the policy
must know where it is in the chunk to stop and to place step-dependent bins;
the position signal carries no parameters, so checkpoints stay minimal).
State flows through one tanh hidden layer to logits over the token
vocabulary.  The final vocabulary id is a dedicated end-of-chunk marker: it
terminates sampling and is appended to supervised targets, which lets the
policy control its own sequence length.

Gradients are hand-derived throughout; finite-difference checks in the test
suite pin every parameter tensor for both the supervised loss and the
group-relative objective.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .codec import CodecSpec, format_check
from .grpo import GrpoConfig, RolloutGroup, compute_advantages, grpo_objective_and_grads

CHECKPOINT_MAGIC = b"LLRFT1"

# Sinusoidal position signal: amplitude and frequency base chosen for
# sequence lengths up to a few dozen tokens.
PE_SCALE = 0.5
PE_BASE = 64.0

EMBED_INIT_STD = 0.3

_PARAM_FIELDS = ("instr", "tok", "w_obs", "w1", "b1", "w2", "b2")


@dataclass
class PromptContext:
    """Observation features plus an integer instruction label."""

    observation: np.ndarray
    instruction_id: int

    def __post_init__(self):
        self.observation = np.asarray(self.observation, dtype=np.float64)
        if self.observation.ndim != 1 or not np.all(np.isfinite(self.observation)):
            raise ValueError("observation must be a finite 1-D vector")
        if self.instruction_id < 0:
            raise ValueError("instruction id must be nonnegative")


@dataclass
class PolicyParams:
    """All trainable tensors plus the dimensions that shape them."""

    f: int
    e: int
    hd: int
    v_tok: int
    l_max: int
    t_max: int
    instr: np.ndarray
    tok: np.ndarray
    w_obs: np.ndarray
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        expected = self._shapes(self.f, self.e, self.hd, self.v_tok, self.t_max)
        for name, shape in expected.items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")

    @staticmethod
    def _shapes(f, e, hd, v_tok, t_max) -> dict:
        return {
            "instr": (t_max, e),
            "tok": (v_tok, e),
            "w_obs": (f, e),
            "w1": (3 * e, hd),
            "b1": (hd,),
            "w2": (hd, v_tok),
            "b2": (v_tok,),
        }

    @property
    def eoc_id(self) -> int:
        return self.v_tok - 1

    def tensors(self) -> dict:
        return {name: getattr(self, name) for name in _PARAM_FIELDS}

    def copy(self) -> "PolicyParams":
        return PolicyParams(
            f=self.f, e=self.e, hd=self.hd, v_tok=self.v_tok,
            l_max=self.l_max, t_max=self.t_max,
            **{name: getattr(self, name).copy() for name in _PARAM_FIELDS},
        )

    def to_bytes(self) -> bytes:
        """Binary checkpoint: magic, little-endian uint32 dims, then tensors
        in declared order as little-endian 64-bit floats."""
        parts = [CHECKPOINT_MAGIC + struct.pack(
            "<6I", self.f, self.e, self.hd, self.v_tok, self.l_max, self.t_max
        )]
        for name in _PARAM_FIELDS:
            parts.append(np.ascontiguousarray(getattr(self, name), dtype="<f8").tobytes())
        return b"".join(parts)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def from_bytes(cls, blob: bytes) -> "PolicyParams":
        if blob[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
            raise ValueError("not a policy checkpoint (bad magic)")
        off = len(CHECKPOINT_MAGIC)
        f, e, hd, v_tok, l_max, t_max = struct.unpack_from("<6I", blob, off)
        off += struct.calcsize("<6I")
        tensors = {}
        for name, shape in cls._shapes(f, e, hd, v_tok, t_max).items():
            n = int(np.prod(shape))
            arr = np.frombuffer(blob, dtype="<f8", count=n, offset=off).reshape(shape)
            tensors[name] = arr.astype(np.float64)
            off += n * 8
        if off != len(blob):
            raise ValueError("checkpoint has trailing bytes")
        return cls(f=f, e=e, hd=hd, v_tok=v_tok, l_max=l_max, t_max=t_max, **tensors)

    @classmethod
    def load(cls, path) -> "PolicyParams":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


@dataclass
class SampleBatch:
    """Sequences sampled for one prompt together with the log-probs of each
    sampled token recorded at sampling time (temperature-1 scoring)."""

    context: PromptContext
    sequences: list
    logps: list

    def __post_init__(self):
        if len(self.sequences) != len(self.logps):
            raise ValueError("need one log-prob list per sequence")
        for seq, lp in zip(self.sequences, self.logps):
            if len(seq) != len(lp):
                raise ValueError("log-prob list must match sequence length")


def init_params(f: int, e: int, hd: int, v_tok: int, l_max: int, t_max: int,
                seed: int) -> PolicyParams:
    """Random embeddings and first layer; zero final layer so the initial
    token distribution is exactly uniform."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    return PolicyParams(
        f=f, e=e, hd=hd, v_tok=v_tok, l_max=l_max, t_max=t_max,
        instr=rng.normal(0.0, EMBED_INIT_STD, size=(t_max, e)),
        tok=rng.normal(0.0, EMBED_INIT_STD, size=(v_tok, e)),
        w_obs=rng.normal(0.0, 1.0 / np.sqrt(f), size=(f, e)),
        w1=rng.normal(0.0, 1.0 / np.sqrt(3 * e), size=(3 * e, hd)),
        b1=np.zeros(hd),
        w2=np.zeros((hd, v_tok)),
        b2=np.zeros(v_tok),
    )


@lru_cache(maxsize=8)
def _position_encoding(l_max: int, e: int) -> np.ndarray:
    t = np.arange(l_max, dtype=np.float64)[:, None]
    i = np.arange(e, dtype=np.float64)[None, :]
    freq = PE_BASE ** (-2.0 * np.floor(i / 2.0) / e)
    phase = t * freq
    pe = PE_SCALE * np.where(np.arange(e)[None, :] % 2 == 0, np.sin(phase), np.cos(phase))
    pe.flags.writeable = False
    return pe


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


class _Forward:
    """Cached per-position activations for one sequence under one prompt."""

    __slots__ = ("prev_ids", "states", "hidden", "log_probs")

    def __init__(self, params: PolicyParams, ctx: PromptContext, prev_ids: np.ndarray):
        if ctx.observation.shape != (params.f,):
            raise ValueError("observation length does not match policy F")
        if ctx.instruction_id >= params.t_max:
            raise ValueError("instruction id outside embedding table")
        n = len(prev_ids)
        pe = _position_encoding(params.l_max, params.e)
        obs_emb = ctx.observation @ params.w_obs
        ins_emb = params.instr[ctx.instruction_id]
        tok_emb = params.tok[prev_ids] + pe[:n]
        self.prev_ids = prev_ids
        self.states = np.concatenate(
            [np.tile(obs_emb, (n, 1)), np.tile(ins_emb, (n, 1)), tok_emb], axis=1
        )
        self.hidden = np.tanh(self.states @ params.w1 + params.b1)
        self.log_probs = _log_softmax(self.hidden @ params.w2 + params.b2)


def _prev_ids(params: PolicyParams, tokens) -> np.ndarray:
    # Position 0 conditions on the end-of-chunk id, which doubles as the
    # sequence-start marker.
    return np.asarray([params.eoc_id] + list(tokens[:-1]), dtype=np.int64)


def _validate_tokens(params: PolicyParams, tokens) -> None:
    if len(tokens) > params.l_max:
        raise ValueError(f"sequence longer than L_max={params.l_max}")
    for t in tokens:
        if t < 0 or t >= params.v_tok:
            raise ValueError(f"out-of-vocabulary id {t}")


def log_probs(params: PolicyParams, ctx: PromptContext, tokens) -> list[float]:
    """Per-token log-probabilities of `tokens` under the policy, each
    position conditioned on the prompt and the prefix before it.  Scoring
    never applies a sampling temperature."""
    tokens = list(tokens)
    _validate_tokens(params, tokens)
    if not tokens:
        return []
    fwd = _Forward(params, ctx, _prev_ids(params, tokens))
    return [float(fwd.log_probs[t, tok]) for t, tok in enumerate(tokens)]


def sample_group(params: PolicyParams, ctx: PromptContext, cfg: GrpoConfig,
                 seed: int, n: int | None = None, greedy: bool = False) -> SampleBatch:
    """Sample `n` sequences (default: the configured group size)
    autoregressively at the configured temperature, stopping at the
    end-of-chunk token or at L_max.  Each sequence draws from its own
    seed stream, so batches are reproducible regardless of order."""
    count = cfg.group_size if n is None else n
    if count < 1:
        raise ValueError("need at least one sample")
    pe = _position_encoding(params.l_max, params.e)
    obs_emb = ctx.observation @ params.w_obs
    ins_emb = params.instr[ctx.instruction_id]
    sequences, logp_lists = [], []
    for i in range(count):
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(i,)))
        )
        prev = params.eoc_id
        seq: list[int] = []
        lps: list[float] = []
        for t in range(params.l_max):
            state = np.concatenate([obs_emb, ins_emb, params.tok[prev] + pe[t]])
            hidden = np.tanh(state @ params.w1 + params.b1)
            logits = hidden @ params.w2 + params.b2
            if greedy:
                a = int(np.argmax(logits))
            else:
                scaled = _log_softmax(logits / cfg.temperature)
                cdf = np.cumsum(np.exp(scaled))
                a = int(np.searchsorted(cdf, rng.random() * cdf[-1]))
                a = min(a, params.v_tok - 1)
            lps.append(float(_log_softmax(logits)[a]))
            seq.append(a)
            if a == params.eoc_id:
                break
            prev = a
        sequences.append(seq)
        logp_lists.append(lps)
    return SampleBatch(context=ctx, sequences=sequences, logps=logp_lists)


def greedy_sequence(params: PolicyParams, ctx: PromptContext) -> list[int]:
    """Deterministic argmax rollout (temperature-zero limit)."""
    cfg = GrpoConfig()
    return sample_group(params, ctx, cfg, seed=0, n=1, greedy=True).sequences[0]


def strip_eoc(tokens, eoc_id: int) -> list[int]:
    """Payload before the first end-of-chunk marker (the codec never sees it)."""
    out = []
    for t in tokens:
        if t == eoc_id:
            break
        out.append(t)
    return out


def _zero_grads(params: PolicyParams) -> dict:
    return {name: np.zeros_like(arr) for name, arr in params.tensors().items()}


def _backward(params: PolicyParams, ctx: PromptContext, fwd: _Forward,
              dlogits: np.ndarray, grads: dict) -> None:
    """Accumulate parameter gradients for one sequence given dL/dlogits."""
    grads["w2"] += fwd.hidden.T @ dlogits
    grads["b2"] += dlogits.sum(axis=0)
    dhidden = dlogits @ params.w2.T
    dz1 = dhidden * (1.0 - fwd.hidden ** 2)
    grads["w1"] += fwd.states.T @ dz1
    grads["b1"] += dz1.sum(axis=0)
    dstates = dz1 @ params.w1.T
    e = params.e
    d_obs_emb = dstates[:, :e].sum(axis=0)
    grads["w_obs"] += np.outer(ctx.observation, d_obs_emb)
    grads["instr"][ctx.instruction_id] += dstates[:, e:2 * e].sum(axis=0)
    np.add.at(grads["tok"], fwd.prev_ids, dstates[:, 2 * e:])


def _dlogits_from_dlogp(fwd: _Forward, tokens, dlogp: np.ndarray) -> np.ndarray:
    """Chain dL/dlogp(selected token) through the log-softmax."""
    probs = np.exp(fwd.log_probs)
    dlogits = -probs * dlogp[:, None]
    dlogits[np.arange(len(tokens)), tokens] += dlogp
    return dlogits


def _apply(params: PolicyParams, grads: dict, scale: float) -> PolicyParams:
    new = params.copy()
    for name, g in grads.items():
        getattr(new, name)[...] += scale * g
    return new


def sft_update(params: PolicyParams, ctx: PromptContext, gt, lr: float,
               spec: CodecSpec):
    """One gradient-descent step on the mean negative log-likelihood of the
    ground-truth tokens (end-of-chunk marker appended so the policy learns to
    stop).  Returns (updated params, pre-step loss)."""
    gt = list(gt)
    if not format_check(gt, spec):
        raise ValueError("ground truth invalid under codec")
    target = gt + [params.eoc_id]
    _validate_tokens(params, target)
    fwd = _Forward(params, ctx, _prev_ids(params, target))
    picked = fwd.log_probs[np.arange(len(target)), target]
    loss = float(-picked.mean())
    if lr == 0.0:
        return params.copy(), loss
    dlogp = np.full(len(target), -1.0 / len(target))
    grads = _zero_grads(params)
    _backward(params, ctx, fwd, _dlogits_from_dlogp(fwd, target, dlogp), grads)
    return _apply(params, grads, -lr), loss


def rft_update(params: PolicyParams, batch: SampleBatch, rewards,
               ref_params: PolicyParams, cfg: GrpoConfig, lr: float):
    """One gradient-ascent step on the group-relative objective.  Old
    log-probs come from the batch, reference log-probs from `ref_params`.
    Returns (updated params, pre-step objective)."""
    ctx = batch.context
    advantages = compute_advantages(rewards, cfg.std_floor)
    forwards, logp_new, logp_ref = [], [], []
    for seq in batch.sequences:
        _validate_tokens(params, seq)
        fwd = _Forward(params, ctx, _prev_ids(params, seq))
        forwards.append(fwd)
        logp_new.append(fwd.log_probs[np.arange(len(seq)), seq])
        logp_ref.append(log_probs(ref_params, ctx, seq))
    group = RolloutGroup(
        prompt_id=ctx.instruction_id,
        sequences=batch.sequences,
        logp_old=batch.logps,
        logp_ref=logp_ref,
        rewards=list(rewards),
    )
    objective, dlogp_lists = grpo_objective_and_grads(group, logp_new, advantages, cfg)
    if lr == 0.0:
        return params.copy(), objective
    grads = _zero_grads(params)
    for fwd, seq, dlogp in zip(forwards, batch.sequences, dlogp_lists):
        if len(seq) == 0:
            continue
        _backward(params, ctx, fwd, _dlogits_from_dlogp(fwd, seq, np.asarray(dlogp)), grads)
    return _apply(params, grads, lr), objective
