"""Desk-scale reinforcement fine-tuning for action-token policies.

The package trains a small autoregressive policy to emit discretized robot
action chunks, scores sampled chunks with a dense process reward, and
optimizes the policy with group-relative advantage estimation.  A continual
harness runs base + lifelong stages with experience replay and reports
transfer metrics.
"""

from .codec import (ActionChunk, CodecSpec, DecodeError, NormalizationStats,
                    decode, encode, fit_normalizer, format_check,
                    format_violation)
from .config import (ExperimentConfig, PRESETS, default_codec_spec,
                     desk_config, reference_config)
from .continual import (MetricsReport, StagePlan, SuccessMatrix,
                        build_replay_set, compute_metrics, run_base_stage,
                        run_continual, run_lifelong_step)
from .grpo import (GrpoConfig, RolloutGroup, compute_advantages,
                   grpo_objective, grpo_objective_and_grads,
                   token_kl_estimate)
from .policy import (PolicyParams, PromptContext, SampleBatch,
                     greedy_sequence, init_params, log_probs, rft_update,
                     sample_group, sft_update, strip_eoc)
from .rewards import RewardBreakdown, RewardConfig, ctar, fcr, mdpr, qacr
from .tasks import (Demonstration, TaskSpec, generate_demos, is_success,
                    make_task_suite, synthesize_chunk)
from .training import (CURVE_COLUMNS, TrainingSettings, evaluate_policy,
                       new_policy, train_rft, train_sft)

__version__ = "0.1.0"

__all__ = [
    "ActionChunk", "CodecSpec", "DecodeError", "NormalizationStats",
    "decode", "encode", "fit_normalizer", "format_check", "format_violation",
    "ExperimentConfig", "PRESETS", "default_codec_spec", "desk_config",
    "reference_config",
    "MetricsReport", "StagePlan", "SuccessMatrix", "build_replay_set",
    "compute_metrics", "run_base_stage", "run_continual", "run_lifelong_step",
    "GrpoConfig", "RolloutGroup", "compute_advantages", "grpo_objective",
    "grpo_objective_and_grads", "token_kl_estimate",
    "PolicyParams", "PromptContext", "SampleBatch", "greedy_sequence",
    "init_params", "log_probs", "rft_update", "sample_group", "sft_update",
    "strip_eoc",
    "RewardBreakdown", "RewardConfig", "ctar", "fcr", "mdpr", "qacr",
    "Demonstration", "TaskSpec", "generate_demos", "is_success",
    "make_task_suite", "synthesize_chunk",
    "CURVE_COLUMNS", "TrainingSettings", "evaluate_policy", "new_policy",
    "train_rft", "train_sft",
    "__version__",
]
