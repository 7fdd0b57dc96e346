"""HTTP facade over the core package.

Stateless by design: every request carries its full configuration, every
response is a pure function of the request, and training endpoints run
synchronously (desk-scale runs finish in seconds to minutes).  Batch
endpoints never abort on a bad element — each element reports its own
integer error code so clients can mix valid and invalid inputs freely.
"""

from __future__ import annotations

import base64
import binascii

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..codec import (ActionChunk, CodecSpec, DecodeError, decode, encode,
                     fit_normalizer, format_violation)
from ..config import ExperimentConfig
from ..continual import SuccessMatrix, compute_metrics, run_continual
from ..grpo import compute_advantages
from ..policy import PolicyParams, PromptContext
from ..rewards import mdpr
from ..tasks import (Demonstration, TaskSpec, generate_demos, make_task_suite)
from ..training import evaluate_policy, new_policy, train_rft, train_sft
from . import errors
from .models import (AdvantagesRequest, AdvantagesResponse, AdvantagesResult,
                     ApiError, ContinualRequest, ContinualResponse,
                     DecodeRequest, DecodeResponse, DecodeResult,
                     DemosRequest, DemosResponse, EncodeRequest,
                     EncodeResponse, EncodeResult, EvalRequest, EvalResponse,
                     FitRequest, FitResponse, FormatCheckRequest,
                     FormatCheckResponse, FormatCheckResult, HealthResponse,
                     MetricsRequest, MetricsResponse, ScoreRequest,
                     ScoreResponse, ScoreResult, SuiteRequest, SuiteResponse,
                     TrainRequest, TrainResponse)


def _bad_request(exc: Exception) -> HTTPException:
    return HTTPException(
        status_code=400,
        detail={"code": errors.INVALID_ARGUMENT, "message": str(exc)},
    )


def _spec_from(payload: dict) -> CodecSpec:
    try:
        return CodecSpec.from_json_dict(payload)
    except (KeyError, TypeError, ValueError) as exc:
        raise _bad_request(exc)


def _config_from(payload: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.from_json_dict(payload)
    except (KeyError, TypeError, ValueError) as exc:
        raise _bad_request(exc)


def _task_from(payload: dict) -> TaskSpec:
    try:
        return TaskSpec.from_json_dict(payload)
    except (KeyError, TypeError, ValueError) as exc:
        raise _bad_request(exc)


def _demo_from(record: dict, d: int, index: int) -> Demonstration:
    try:
        obs = np.asarray(record["obs"], dtype=np.float64)
        chunk = ActionChunk(values=np.asarray(record["chunk"], dtype=np.float64))
        if obs.shape != (d - 1,):
            raise ValueError(f"obs must have {d - 1} values")
        return Demonstration(
            context=PromptContext(observation=obs,
                                  instruction_id=int(record["task_id"])),
            chunk=chunk,
            demo_index=int(record["demo_index"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise HTTPException(
            status_code=400,
            detail={"code": errors.INVALID_ARGUMENT,
                    "message": f"demo {index}: {exc}"},
        )


def _demo_record(demo: Demonstration) -> dict:
    return {
        "task_id": demo.context.instruction_id,
        "demo_index": demo.demo_index,
        "obs": [float(v) for v in demo.context.observation],
        "chunk": [[float(v) for v in row] for row in demo.chunk.values],
    }


def _params_from_b64(blob_b64: str) -> PolicyParams:
    try:
        return PolicyParams.from_bytes(base64.b64decode(blob_b64, validate=True))
    except (ValueError, binascii.Error) as exc:
        raise HTTPException(
            status_code=400,
            detail={"code": errors.BAD_CHECKPOINT, "message": str(exc)},
        )


def create_app() -> FastAPI:
    app = FastAPI(title="llrft", version=__version__)

    @app.get("/v1/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    # --- codec ---------------------------------------------------------

    @app.post("/v1/codec/encode", response_model=EncodeResponse)
    def codec_encode(req: EncodeRequest) -> EncodeResponse:
        spec = _spec_from(req.spec)
        results = []
        for i, rows in enumerate(req.chunks):
            try:
                chunk = ActionChunk(values=np.asarray(rows, dtype=np.float64))
                results.append(EncodeResult(tokens=encode(chunk, spec)))
            except ValueError as exc:
                results.append(EncodeResult(error=ApiError(
                    code=errors.INVALID_ARGUMENT, message=str(exc), index=i)))
        return EncodeResponse(results=results)

    @app.post("/v1/codec/decode", response_model=DecodeResponse)
    def codec_decode(req: DecodeRequest) -> DecodeResponse:
        spec = _spec_from(req.spec)
        results = []
        for i, stream in enumerate(req.streams):
            try:
                chunk = decode(stream, spec)
                results.append(DecodeResult(
                    chunk=[[float(v) for v in row] for row in chunk.values]))
            except DecodeError as exc:
                results.append(DecodeResult(error=ApiError(
                    code=errors.violation_code(exc.kind), message=str(exc),
                    index=i)))
        return DecodeResponse(results=results)

    @app.post("/v1/codec/format-check", response_model=FormatCheckResponse)
    def codec_format_check(req: FormatCheckRequest) -> FormatCheckResponse:
        spec = _spec_from(req.spec)
        results = []
        for stream in req.streams:
            kind = format_violation(stream, spec)
            results.append(FormatCheckResult(
                valid=kind is None,
                violation=kind,
                code=errors.OK if kind is None else errors.violation_code(kind),
            ))
        return FormatCheckResponse(results=results)

    @app.post("/v1/codec/fit", response_model=FitResponse)
    def codec_fit(req: FitRequest) -> FitResponse:
        try:
            chunks = [ActionChunk(values=np.asarray(rows, dtype=np.float64))
                      for rows in req.chunks]
            stats = fit_normalizer(chunks)
            spec = CodecSpec(h=chunks[0].h, d=chunks[0].d, q=req.q,
                             compression=req.compression, stats=stats)
        except (IndexError, ValueError) as exc:
            raise _bad_request(exc)
        return FitResponse(spec=spec.to_json_dict())

    # --- rewards / advantages --------------------------------------------

    @app.post("/v1/rewards/score", response_model=ScoreResponse)
    def rewards_score(req: ScoreRequest) -> ScoreResponse:
        spec = _spec_from(req.spec)
        try:
            from ..rewards import RewardConfig
            weights = RewardConfig.from_json_dict(req.weights)
        except (KeyError, TypeError, ValueError) as exc:
            raise _bad_request(exc)
        results = []
        for i, pair in enumerate(req.pairs):
            try:
                bd = mdpr(pair.pred, pair.gt, spec, weights)
                results.append(ScoreResult(qacr=bd.qacr, ctar=bd.ctar,
                                           fcr=bd.fcr, mdpr=bd.mdpr))
            except ValueError as exc:
                results.append(ScoreResult(error=ApiError(
                    code=errors.INVALID_ARGUMENT, message=str(exc), index=i)))
        return ScoreResponse(results=results)

    @app.post("/v1/grpo/advantages", response_model=AdvantagesResponse)
    def grpo_advantages(req: AdvantagesRequest) -> AdvantagesResponse:
        results = []
        for i, rewards in enumerate(req.groups):
            try:
                adv = compute_advantages(rewards, req.std_floor)
                results.append(AdvantagesResult(
                    advantages=[float(a) for a in adv]))
            except ValueError as exc:
                results.append(AdvantagesResult(error=ApiError(
                    code=errors.INVALID_ARGUMENT, message=str(exc), index=i)))
        return AdvantagesResponse(results=results)

    # --- tasks ----------------------------------------------------------

    @app.post("/v1/tasks/suite", response_model=SuiteResponse)
    def tasks_suite(req: SuiteRequest) -> SuiteResponse:
        spec = _spec_from(req.spec)
        try:
            suite = make_task_suite(req.n_tasks, req.seed, spec)
        except ValueError as exc:
            raise _bad_request(exc)
        return SuiteResponse(tasks=[t.to_json_dict() for t in suite])

    @app.post("/v1/tasks/demos", response_model=DemosResponse)
    def tasks_demos(req: DemosRequest) -> DemosResponse:
        spec = _spec_from(req.spec)
        task = _task_from(req.task)
        try:
            demos = generate_demos(task, req.n_demos, req.noise_scale,
                                   req.seed, spec)
        except ValueError as exc:
            raise _bad_request(exc)
        return DemosResponse(demos=[_demo_record(d) for d in demos])

    # --- metrics ----------------------------------------------------------

    @app.post("/v1/metrics/compute", response_model=MetricsResponse)
    def metrics_compute(req: MetricsRequest) -> MetricsResponse:
        try:
            matrix = SuccessMatrix(req.matrix)
        except ValueError as exc:
            raise HTTPException(
                status_code=400,
                detail={"code": errors.MALFORMED_MATRIX, "message": str(exc)},
            )
        report = compute_metrics(matrix, req.include_final_nbt)
        return MetricsResponse(**report.to_json_dict())

    # --- training ---------------------------------------------------------

    def _train(req: TrainRequest, trainer: str) -> TrainResponse:
        cfg = _config_from(req.config)
        settings = cfg.settings
        demos = [_demo_from(r, settings.spec.d, i)
                 for i, r in enumerate(req.demos)]
        if req.init_checkpoint_b64 is not None:
            params = _params_from_b64(req.init_checkpoint_b64)
        else:
            params = new_policy(settings, req.seed)
        try:
            if trainer == "sft":
                params, curves = train_sft(params, demos, settings,
                                           epochs=req.epochs, seed=req.seed,
                                           collect_curves=req.collect_curves)
            else:
                params, curves = train_rft(params, demos, settings,
                                           epochs=req.epochs, seed=req.seed,
                                           max_steps=req.max_steps)
        except ValueError as exc:
            raise _bad_request(exc)
        return TrainResponse(
            checkpoint_b64=base64.b64encode(params.to_bytes()).decode("ascii"),
            curves=[[float(v) for v in row] for row in curves],
        )

    @app.post("/v1/train/sft", response_model=TrainResponse)
    def train_sft_endpoint(req: TrainRequest) -> TrainResponse:
        return _train(req, "sft")

    @app.post("/v1/train/rft", response_model=TrainResponse)
    def train_rft_endpoint(req: TrainRequest) -> TrainResponse:
        return _train(req, "rft")

    @app.post("/v1/train/continual", response_model=ContinualResponse)
    def train_continual(req: ContinualRequest) -> ContinualResponse:
        cfg = _config_from(req.config)
        try:
            _, report = run_continual(cfg.plan, cfg.settings, cfg.seed,
                                      config_hash=cfg.config_hash())
        except ValueError as exc:
            raise _bad_request(exc)
        return ContinualResponse(report=report)

    @app.post("/v1/eval/policy", response_model=EvalResponse)
    def eval_policy(req: EvalRequest) -> EvalResponse:
        cfg = _config_from(req.config)
        task = _task_from(req.task)
        params = _params_from_b64(req.checkpoint_b64)
        try:
            success = evaluate_policy(params, task, cfg.settings,
                                      req.n_episodes, req.seed)
        except ValueError as exc:
            raise _bad_request(exc)
        return EvalResponse(success=success)

    return app
