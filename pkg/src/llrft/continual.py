"""Sequential-task training protocol and its transfer metrics.

A run has two phases: a base stage that trains one policy on several tasks
jointly (always supervised — both trainer arms share the same starting
point), then a lifelong stage that learns the remaining tasks one at a time
with a small replay buffer of earlier demonstrations.  After each lifelong
step the policy is evaluated on every lifelong task learned so far, filling
one row of a lower-triangular success matrix from which forward transfer,
backward transfer, and area-under-curve metrics are computed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .seeding import derive_seed
from .tasks import TaskSpec, generate_demos, make_task_suite
from .training import TrainingSettings, evaluate_policy, new_policy, train_rft, train_sft

TRAINER_SFT = "sft"
TRAINER_RFT = "rft"


@dataclass
class StagePlan:
    """Protocol shape: which tasks belong to which stage and the demo,
    replay, evaluation, and epoch budgets."""

    base_task_ids: list
    lifelong_task_ids: list
    demos_per_base_task: int
    demos_per_new_task: int
    replay_per_old_task: int
    eval_episodes_per_task: int
    trainer: str = TRAINER_SFT
    base_epochs: int = 10
    lifelong_epochs: int = 10
    nbt_includes_final: bool = True

    def __post_init__(self):
        if not self.base_task_ids or not self.lifelong_task_ids:
            raise ValueError("base and lifelong task lists must be nonempty")
        if set(self.base_task_ids) & set(self.lifelong_task_ids):
            raise ValueError("base and lifelong task lists must be disjoint")
        budgets = (self.demos_per_base_task, self.demos_per_new_task,
                   self.replay_per_old_task, self.eval_episodes_per_task)
        if min(budgets) < 0:
            raise ValueError("budgets must be nonnegative")
        if self.trainer not in (TRAINER_SFT, TRAINER_RFT):
            raise ValueError(f"unknown trainer {self.trainer!r}")
        if self.base_epochs < 1 or self.lifelong_epochs < 1:
            raise ValueError("epoch counts must be positive")

    def to_json_dict(self) -> dict:
        return {
            "base_task_ids": list(self.base_task_ids),
            "lifelong_task_ids": list(self.lifelong_task_ids),
            "demos_per_base_task": self.demos_per_base_task,
            "demos_per_new_task": self.demos_per_new_task,
            "replay_per_old_task": self.replay_per_old_task,
            "eval_episodes_per_task": self.eval_episodes_per_task,
            "trainer": self.trainer,
            "base_epochs": self.base_epochs,
            "lifelong_epochs": self.lifelong_epochs,
            "nbt_includes_final": self.nbt_includes_final,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "StagePlan":
        return cls(
            base_task_ids=[int(t) for t in data["base_task_ids"]],
            lifelong_task_ids=[int(t) for t in data["lifelong_task_ids"]],
            demos_per_base_task=int(data["demos_per_base_task"]),
            demos_per_new_task=int(data["demos_per_new_task"]),
            replay_per_old_task=int(data["replay_per_old_task"]),
            eval_episodes_per_task=int(data["eval_episodes_per_task"]),
            trainer=str(data["trainer"]),
            base_epochs=int(data["base_epochs"]),
            lifelong_epochs=int(data["lifelong_epochs"]),
            nbt_includes_final=bool(data.get("nbt_includes_final", True)),
        )


class SuccessMatrix:
    """Lower-triangular success rates: entry(k, j) is the success rate on
    lifelong task j measured after learning the first k lifelong tasks
    (both indices 1-based, defined for j ≤ k only)."""

    def __init__(self, rows):
        rows = [[float(v) for v in row] for row in rows]
        for k, row in enumerate(rows, start=1):
            if len(row) != k:
                raise ValueError(f"row {k} must have exactly {k} entries")
            for v in row:
                if not (0.0 <= v <= 1.0) or not np.isfinite(v):
                    raise ValueError("success rates must lie in [0, 1]")
        self.rows = rows

    @property
    def k(self) -> int:
        return len(self.rows)

    def entry(self, k: int, j: int) -> float:
        if not (1 <= j <= k <= self.k):
            raise ValueError("matrix entries are defined for 1 <= j <= k <= K")
        return self.rows[k - 1][j - 1]

    def to_json(self) -> list:
        return [list(row) for row in self.rows]


@dataclass
class MetricsReport:
    """Aggregate transfer metrics plus their per-step breakdowns."""

    fwt: float
    nbt: float
    auc: float
    nbt_k: list
    auc_k: list

    def to_json_dict(self) -> dict:
        return {
            "fwt": self.fwt,
            "nbt": self.nbt,
            "auc": self.auc,
            "nbt_k": list(self.nbt_k),
            "auc_k": list(self.auc_k),
        }


def compute_metrics(s: SuccessMatrix, include_final_nbt: bool = True) -> MetricsReport:
    """Forward transfer (mean diagonal), negative backward transfer (mean
    post-hoc drop on each task; the final step contributes zero by empty-sum
    convention, optionally excluded from the average), and area under the
    success curve (mean retained success per task)."""
    big_k = s.k
    fwt = sum(s.entry(k, k) for k in range(1, big_k + 1)) / big_k
    nbt_k = []
    auc_k = []
    for k in range(1, big_k + 1):
        later = [s.entry(q, k) for q in range(k + 1, big_k + 1)]
        if k < big_k:
            nbt_k.append(sum(s.entry(k, k) - v for v in later) / (big_k - k))
        else:
            nbt_k.append(0.0)
        auc_k.append((s.entry(k, k) + sum(later)) / (big_k - k + 1))
    if include_final_nbt or big_k == 1:
        nbt = sum(nbt_k) / big_k
    else:
        nbt = sum(nbt_k[:-1]) / (big_k - 1)
    auc = sum(auc_k) / big_k
    return MetricsReport(fwt=fwt, nbt=nbt, auc=auc, nbt_k=nbt_k, auc_k=auc_k)


def build_replay_set(history, replay_per_old_task: int) -> list:
    """Replay buffer: for each previously learned task, its lowest-indexed
    demonstrations up to the budget (all of them if fewer), concatenated in
    the order the tasks were learned."""
    replay = []
    for _, demos in history:
        kept = sorted(demos, key=lambda d: d.demo_index)[:replay_per_old_task]
        replay.extend(kept)
    return replay


def _tasks_by_id(suite) -> dict:
    return {task.task_id: task for task in suite}


def run_base_stage(plan: StagePlan, suite, settings: TrainingSettings, seed: int):
    """Jointly train a fresh policy on all base tasks' demonstrations
    (supervised, shuffled per epoch), then measure greedy success per base
    task on fresh observations.  Returns (params, {task_id: success})."""
    by_id = _tasks_by_id(suite)
    missing = [t for t in plan.base_task_ids if t not in by_id]
    if missing:
        raise ValueError(f"suite does not contain base tasks {missing}")
    params = new_policy(settings, derive_seed(seed, "init"))
    demos = []
    for tid in plan.base_task_ids:
        demos.extend(generate_demos(by_id[tid], plan.demos_per_base_task,
                                    settings.noise_scale,
                                    derive_seed(seed, "demos", "base", tid),
                                    settings.spec))
    params, _ = train_sft(params, demos, settings, plan.base_epochs,
                          derive_seed(seed, "train", "base"))
    success = {
        tid: evaluate_policy(params, by_id[tid], settings,
                             plan.eval_episodes_per_task,
                             derive_seed(seed, "eval", "base", tid))
        for tid in plan.base_task_ids
    }
    return params, success


def run_lifelong_step(params, new_task: TaskSpec, plan: StagePlan, history,
                      settings: TrainingSettings, seed: int):
    """Learn one new task from its demo budget plus the replay buffer, then
    evaluate on every lifelong task learned so far.  Returns
    (params, success row, new-task demos) — callers append the demos to the
    history themselves."""
    if any(task.task_id == new_task.task_id for task, _ in history):
        raise ValueError(f"task {new_task.task_id} was already learned")
    demos_new = generate_demos(new_task, plan.demos_per_new_task,
                               settings.noise_scale,
                               derive_seed(seed, "demos", "life", new_task.task_id),
                               settings.spec)
    train_set = build_replay_set(history, plan.replay_per_old_task) + demos_new
    train_seed = derive_seed(seed, "train", "life", new_task.task_id)
    if plan.trainer == TRAINER_RFT:
        params, _ = train_rft(params, train_set, settings, plan.lifelong_epochs,
                              train_seed)
    else:
        params, _ = train_sft(params, train_set, settings, plan.lifelong_epochs,
                              train_seed)
    learned = [task for task, _ in history] + [new_task]
    row = [
        evaluate_policy(params, task, settings, plan.eval_episodes_per_task,
                        derive_seed(seed, "eval", new_task.task_id, task.task_id))
        for task in learned
    ]
    return params, row, demos_new


def run_continual(plan: StagePlan, settings: TrainingSettings, seed: int,
                  config_hash: str = ""):
    """Full protocol: build the task suite, run the base stage, walk the
    lifelong tasks in order, and assemble the JSON-ready report.  Returns
    (final params, report dict)."""
    n_tasks = max(list(plan.base_task_ids) + list(plan.lifelong_task_ids)) + 1
    suite = make_task_suite(n_tasks, derive_seed(seed, "suite"), settings.spec)
    params, base_success = run_base_stage(plan, suite, settings, seed)
    by_id = _tasks_by_id(suite)
    history = []
    rows = []
    for step_index, tid in enumerate(plan.lifelong_task_ids, start=1):
        params, row, demos = run_lifelong_step(
            params, by_id[tid], plan, history, settings,
            derive_seed(seed, "step", step_index),
        )
        history.append((by_id[tid], demos))
        rows.append(row)
    matrix = SuccessMatrix(rows)
    metrics = compute_metrics(matrix, plan.nbt_includes_final)
    report = {
        "k": matrix.k,
        "s": matrix.to_json(),
        "base_success": {str(tid): base_success[tid] for tid in plan.base_task_ids},
        "trainer": plan.trainer,
        "seed": seed,
        "config_hash": config_hash,
    }
    report.update(metrics.to_json_dict())
    return params, report
