"""Experiment configuration: serialization, hashing, and presets."""

import json

from llrft.config import (ExperimentConfig, PRESETS, default_codec_spec,
                          desk_config, reference_config)
from llrft.grpo import GrpoConfig
from llrft.rewards import RewardConfig


def test_round_trip_preserves_every_field():
    cfg = desk_config(seed=9)
    cfg.out_dir = "elsewhere"
    cfg.settings.l_max = 36
    cfg.plan.lifelong_task_ids = [2, 3]
    again = ExperimentConfig.from_json_dict(cfg.to_json_dict())
    assert again.to_json_dict() == cfg.to_json_dict()
    assert again.seed == 9
    assert again.out_dir == "elsewhere"
    assert again.settings.l_max == 36
    assert again.plan.lifelong_task_ids == [2, 3]


def test_round_trip_survives_json_text():
    cfg = reference_config(seed=3)
    text = json.dumps(cfg.to_json_dict())
    again = ExperimentConfig.from_json_dict(json.loads(text))
    assert again.config_hash() == cfg.config_hash()


def test_hash_is_stable_and_sensitive():
    a = desk_config()
    b = desk_config()
    assert a.config_hash() == b.config_hash()
    assert len(a.config_hash()) == 16
    int(a.config_hash(), 16)  # hex digest prefix

    b.settings.lr_rft += 1e-9
    assert a.config_hash() != b.config_hash()

    c = desk_config()
    c.seed = 1
    assert a.config_hash() != c.config_hash()


def test_missing_optional_sections_fall_back_to_defaults():
    data = desk_config().to_json_dict()
    del data["policy"]
    del data["training"]
    del data["seed"]
    del data["out_dir"]
    cfg = ExperimentConfig.from_json_dict(data)
    assert cfg.settings.embed_dim == 16
    assert cfg.settings.hidden_dim == 64
    assert cfg.settings.lr_sft == 0.05
    assert cfg.settings.rft_warmup_epochs == 1
    assert cfg.seed == 0
    assert cfg.out_dir == "runs"


def test_desk_preset_values():
    cfg = desk_config()
    s = cfg.settings
    assert (s.embed_dim, s.hidden_dim) == (12, 32)
    assert (s.lr_sft, s.lr_rft) == (0.15, 0.1)
    assert s.rft_warmup_epochs == 64
    assert s.noise_scale == 0.04
    assert s.grpo.kl_coeff == 0.01
    assert cfg.plan.trainer == "rft"
    assert cfg.plan.base_task_ids == [0, 1]
    assert cfg.plan.lifelong_task_ids == [2, 3, 4, 5]
    assert (cfg.plan.base_epochs, cfg.plan.lifelong_epochs) == (80, 600)
    spec = s.spec
    assert (spec.h, spec.d, spec.q) == (8, 4, 32)


def test_reference_preset_uses_canonical_hyperparameters():
    cfg = reference_config()
    assert cfg.settings.reward == RewardConfig.reference()
    assert cfg.settings.grpo == GrpoConfig.reference()
    assert cfg.settings.grpo.kl_coeff == 0.001
    assert cfg.settings.grpo.group_size == 8
    assert cfg.settings.lr_rft == 1e-6


def test_preset_registry_builds_fresh_objects():
    assert set(PRESETS) == {"desk", "reference"}
    a = PRESETS["desk"](seed=1)
    b = PRESETS["desk"](seed=1)
    assert a is not b
    assert a.config_hash() == b.config_hash()
    a.settings.lr_rft = 99.0
    assert b.settings.lr_rft == 0.1


def test_default_codec_spec_bounds():
    spec = default_codec_spec(h=2, d=3, q=4, compression="run-length")
    assert (spec.h, spec.d, spec.q) == (2, 3, 4)
    assert spec.compression == "run-length"
    assert spec.stats.lower.tolist() == [0.0, 0.0, 0.0]
    assert spec.stats.upper.tolist() == [1.0, 1.0, 1.0]
