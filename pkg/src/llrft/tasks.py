"""Synthetic manipulation tasks and demonstrations.

Each task is a seeded recipe for short pose trajectories: move from a start
offset toward a goal offset along a straight line, with a sinusoidal wobble
overlaid, closing the gripper at a fixed step.  Observations are the noisy
start pose, so a competent policy can read the trajectory it should emit
straight off the prompt.  A success predicate compares a predicted chunk
against the ground-truth chunk — there is no simulator; chunk fidelity is
the measurable outcome.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codec import ActionChunk, CodecSpec
from .policy import PromptContext

# Pairwise goal separation enforced inside a task suite (max-norm, control units).
MIN_GOAL_SEPARATION = 0.2
# Offsets are drawn away from the normalizer edges by this fraction of the
# per-dimension range, leaving headroom for wobble and observation noise.
OFFSET_MARGIN = 0.1
WOBBLE_AMPLITUDE_MAX = 0.04
WOBBLE_FREQUENCY_RANGE = (0.5, 1.5)

_PLACEMENT_ATTEMPTS = 10_000


@dataclass
class TaskSpec:
    """One synthetic task; `task_id` doubles as the instruction id."""

    task_id: int
    start_offset: np.ndarray
    goal_offset: np.ndarray
    wobble_amplitude: float
    wobble_frequency: float
    grip_close_step: int

    def __post_init__(self):
        self.start_offset = np.asarray(self.start_offset, dtype=np.float64)
        self.goal_offset = np.asarray(self.goal_offset, dtype=np.float64)
        for name in ("start_offset", "goal_offset"):
            vec = getattr(self, name)
            if vec.ndim != 1 or not np.all(np.isfinite(vec)):
                raise ValueError(f"{name} must be a finite 1-D vector")
        if self.start_offset.shape != self.goal_offset.shape:
            raise ValueError("start and goal offsets must have equal length")
        if self.grip_close_step < 0:
            raise ValueError("grip_close_step must be nonnegative")

    def to_json_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "start_offset": [float(v) for v in self.start_offset],
            "goal_offset": [float(v) for v in self.goal_offset],
            "wobble_amplitude": float(self.wobble_amplitude),
            "wobble_frequency": float(self.wobble_frequency),
            "grip_close_step": self.grip_close_step,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "TaskSpec":
        return cls(
            task_id=int(data["task_id"]),
            start_offset=np.asarray(data["start_offset"], dtype=np.float64),
            goal_offset=np.asarray(data["goal_offset"], dtype=np.float64),
            wobble_amplitude=float(data["wobble_amplitude"]),
            wobble_frequency=float(data["wobble_frequency"]),
            grip_close_step=int(data["grip_close_step"]),
        )


@dataclass
class Demonstration:
    """A prompt (observation + instruction) paired with its expert chunk."""

    context: PromptContext
    chunk: ActionChunk
    demo_index: int

    def __post_init__(self):
        if self.context.instruction_id < 0 or self.demo_index < 0:
            raise ValueError("instruction id and demo index must be nonnegative")


def _pose_bounds(spec: CodecSpec):
    return spec.stats.lower[:-1], spec.stats.upper[:-1]


def make_task_suite(n_tasks: int, seed: int, spec: CodecSpec) -> list[TaskSpec]:
    """Derive `n_tasks` tasks deterministically from the seed.  Goal offsets
    are resampled until every pair is at least MIN_GOAL_SEPARATION apart in
    max-norm, so tasks stay distinguishable."""
    if n_tasks < 1:
        raise ValueError("need at least one task")
    lower, upper = _pose_bounds(spec)
    margin = OFFSET_MARGIN * (upper - lower)
    lo, hi = lower + margin, upper - margin
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    goals: list[np.ndarray] = []
    suite: list[TaskSpec] = []
    for task_id in range(n_tasks):
        for _ in range(_PLACEMENT_ATTEMPTS):
            goal = rng.uniform(lo, hi)
            if all(np.max(np.abs(goal - g)) >= MIN_GOAL_SEPARATION for g in goals):
                break
        else:
            raise ValueError(
                f"could not place {n_tasks} goals with separation "
                f"{MIN_GOAL_SEPARATION} inside the normalizer bounds"
            )
        goals.append(goal)
        suite.append(TaskSpec(
            task_id=task_id,
            start_offset=rng.uniform(lo, hi),
            goal_offset=goal,
            wobble_amplitude=float(rng.uniform(0.0, WOBBLE_AMPLITUDE_MAX)),
            wobble_frequency=float(rng.uniform(*WOBBLE_FREQUENCY_RANGE)),
            grip_close_step=int(rng.integers(spec.h // 2, spec.h)) if spec.h > 1 else 0,
        ))
    return suite


def synthesize_chunk(task: TaskSpec, obs: np.ndarray, spec: CodecSpec) -> ActionChunk:
    """Expert trajectory for one observation: straight line from the observed
    start to the goal plus the task's wobble, gripper closing at the task's
    step, all clamped into the normalizer bounds."""
    if spec.h < 2:
        raise ValueError("trajectory synthesis needs a chunk size of at least 2")
    lower, upper = _pose_bounds(spec)
    t = np.arange(spec.h, dtype=np.float64)
    frac = (t / (spec.h - 1))[:, None]
    wobble = task.wobble_amplitude * np.sin(task.wobble_frequency * t)[:, None]
    pose = obs[None, :] + frac * (task.goal_offset - obs)[None, :] + wobble
    pose = np.clip(pose, lower, upper)
    grip = (t >= task.grip_close_step).astype(np.float64)[:, None]
    return ActionChunk(np.hstack([pose, grip]))


def generate_demos(task: TaskSpec, n: int, noise_scale: float, seed: int,
                   spec: CodecSpec) -> list[Demonstration]:
    """`n` demonstrations for one task: each observation is the start offset
    plus uniform noise in ±noise_scale, paired with the expert chunk for that
    observation.  Each demonstration has its own seed stream."""
    if n < 1:
        raise ValueError("need at least one demonstration")
    if task.start_offset.shape != (spec.d - 1,):
        raise ValueError("task offsets do not match the codec's pose dimension")
    demos = []
    for demo_index in range(n):
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(demo_index,)))
        )
        obs = task.start_offset + rng.uniform(-noise_scale, noise_scale,
                                              size=spec.d - 1)
        demos.append(Demonstration(
            context=PromptContext(observation=obs, instruction_id=task.task_id),
            chunk=synthesize_chunk(task, obs, spec),
            demo_index=demo_index,
        ))
    return demos


def is_success(pred: ActionChunk, gt: ActionChunk, tol: float) -> bool:
    """True iff every pose entry is within `tol` of the ground truth
    (max-norm over steps and dimensions) and the gripper columns agree
    exactly."""
    if pred.values.shape != gt.values.shape:
        raise ValueError("chunk shapes differ")
    pose_ok = bool(np.max(np.abs(pred.pose - gt.pose)) <= tol)
    return pose_ok and bool(np.array_equal(pred.gripper, gt.gripper))
