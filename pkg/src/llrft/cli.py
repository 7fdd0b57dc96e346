"""Command-line client for the training service.

Every subcommand talks to the HTTP API — by default an in-process instance
of the service, or a remote one via --server — and only file handling stays
local.  Artifacts are byte-reproducible from (config, seed).

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import base64
import json
import sys
from pathlib import Path

import httpx

from .config import ExperimentConfig, PRESETS
from .dataio import (demo_to_line, read_demos, read_tokens, write_curves,
                     write_demos, write_report, write_tokens)
from .seeding import derive_seed

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

ABLATION_PRESETS = (
    ("full", None, None),
    ("no-qacr", 0.0, None),
    ("no-ctar", 1.0, None),
    ("no-fcr", None, 0.0),
)


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; the contract wants 1."""

    def error(self, message):
        raise UsageError(message)


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service import create_app
    return TestClient(create_app(), base_url="http://service",
                      raise_server_exceptions=False)


def _call(client: httpx.Client, method: str, path: str, **kwargs) -> dict:
    response = client.request(method, path, **kwargs)
    if response.status_code != 200:
        try:
            detail = response.json().get("detail")
        except ValueError:
            detail = response.text
        raise DataError(f"{path}: {detail}")
    return response.json()


def _load_config(path: str) -> ExperimentConfig:
    if path in PRESETS:
        return PRESETS[path]()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return ExperimentConfig.from_json_dict(json.load(fh))
    except OSError as exc:
        raise DataError(f"cannot read config: {exc}")
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"bad config {path}: {exc}")


def _demo_payload(demos) -> list[dict]:
    return [json.loads(demo_to_line(d)) for d in demos]


def _read_demo_file(path: str) -> list:
    try:
        return read_demos(path)
    except OSError as exc:
        raise DataError(f"cannot read demos: {exc}")
    except ValueError as exc:
        raise DataError(str(exc))


def _read_token_file(path: str) -> list:
    try:
        return read_tokens(path)
    except OSError as exc:
        raise DataError(f"cannot read tokens: {exc}")
    except ValueError as exc:
        raise DataError(str(exc))


def _out_dir(cfg: ExperimentConfig, override: str | None) -> Path:
    out = Path(override) if override else Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_checkpoint(blob_b64: str, path: Path) -> None:
    path.write_bytes(base64.b64decode(blob_b64))


# --- subcommands ------------------------------------------------------------

def _cmd_gen(args, client) -> int:
    cfg = _load_config(args.config)
    spec = cfg.settings.spec.to_json_dict()
    task_ids = sorted(set(cfg.plan.base_task_ids) | set(cfg.plan.lifelong_task_ids))
    n_tasks = max(task_ids) + 1
    suite = _call(client, "POST", "/v1/tasks/suite",
                  json={"n_tasks": n_tasks, "seed": derive_seed(cfg.seed, "suite"),
                        "spec": spec})["tasks"]
    out = _out_dir(cfg, args.out_dir)
    records = []
    for task in suite:
        if task["task_id"] not in task_ids:
            continue
        demos = _call(client, "POST", "/v1/tasks/demos",
                      json={"task": task, "n_demos": args.n_demos,
                            "noise_scale": cfg.settings.noise_scale,
                            "seed": derive_seed(cfg.seed, "demos", task["task_id"]),
                            "spec": spec})["demos"]
        records.extend(demos)
    tasks_path = out / "tasks.json"
    write_report({"tasks": suite}, tasks_path)
    demos_path = out / "demos.jsonl"
    write_demos(_records_to_demos(records), demos_path)
    print(f"wrote {tasks_path} ({len(suite)} tasks)")
    print(f"wrote {demos_path} ({len(records)} demos)")
    return EXIT_OK


def _records_to_demos(records: list[dict]):
    import numpy as np

    from .codec import ActionChunk
    from .policy import PromptContext
    from .tasks import Demonstration
    out = []
    for r in records:
        out.append(Demonstration(
            context=PromptContext(
                observation=np.asarray(r["obs"], dtype=np.float64),
                instruction_id=int(r["task_id"])),
            chunk=ActionChunk(values=np.asarray(r["chunk"], dtype=np.float64)),
            demo_index=int(r["demo_index"]),
        ))
    return out


def _cmd_tokenize(args, client) -> int:
    cfg = _load_config(args.config)
    spec = cfg.settings.spec.to_json_dict()
    demos = _read_demo_file(args.demos)
    chunks = [[[float(v) for v in row] for row in d.chunk.values] for d in demos]
    encoded = _call(client, "POST", "/v1/codec/encode",
                    json={"spec": spec, "chunks": chunks})["results"]
    streams = []
    for i, result in enumerate(encoded):
        if result.get("error"):
            raise DataError(f"demo {i}: {result['error']['message']}")
        streams.append(result["tokens"])
        print(" ".join(str(t) for t in result["tokens"]))
    decoded = _call(client, "POST", "/v1/codec/decode",
                    json={"spec": spec, "streams": streams})["results"]
    for i, result in enumerate(decoded):
        if result.get("error"):
            raise DataError(f"stream {i}: {result['error']['message']}")
    if args.out:
        write_tokens(streams, args.out)
        print(f"wrote {args.out} ({len(streams)} streams)")
    return EXIT_OK


def _cmd_score(args, client) -> int:
    cfg = _load_config(args.config)
    preds = _read_token_file(args.pred)
    gts = _read_token_file(args.gt)
    if len(preds) != len(gts):
        raise DataError(
            f"pred has {len(preds)} lines but gt has {len(gts)}")
    results = _call(client, "POST", "/v1/rewards/score",
                    json={"spec": cfg.settings.spec.to_json_dict(),
                          "weights": cfg.settings.reward.to_json_dict(),
                          "pairs": [{"pred": p, "gt": g}
                                    for p, g in zip(preds, gts)]})["results"]
    for i, result in enumerate(results):
        if result.get("error"):
            raise DataError(f"line {i + 1}: {result['error']['message']}")
        print(f"{result['mdpr']:.6f}")
    return EXIT_OK


def _train_common(args, client, endpoint: str) -> int:
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    demos = _read_demo_file(args.demos)
    body = {"config": cfg.to_json_dict(), "demos": _demo_payload(demos),
            "epochs": args.epochs, "seed": cfg.seed}
    if endpoint == "/v1/train/rft" and args.max_steps is not None:
        body["max_steps"] = args.max_steps
    result = _call(client, "POST", endpoint, json=body)
    out = _out_dir(cfg, args.out_dir)
    ckpt = out / "policy.bin"
    _write_checkpoint(result["checkpoint_b64"], ckpt)
    curves = out / "curves.csv"
    write_curves(result["curves"], curves)
    print(f"wrote {ckpt}")
    print(f"wrote {curves} ({len(result['curves'])} rows)")
    return EXIT_OK


def _cmd_train_sft(args, client) -> int:
    return _train_common(args, client, "/v1/train/sft")


def _cmd_train_rft(args, client) -> int:
    return _train_common(args, client, "/v1/train/rft")


def _cmd_continual(args, client) -> int:
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    report = _call(client, "POST", "/v1/train/continual",
                   json={"config": cfg.to_json_dict()})["report"]
    out = _out_dir(cfg, args.out_dir)
    path = out / "report.json"
    write_report(report, path)
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_report(args, client) -> int:
    try:
        with open(args.report, "r", encoding="utf-8") as fh:
            report = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read report: {exc}")
    except ValueError as exc:
        raise DataError(f"bad report {args.report}: {exc}")
    try:
        print(f"lifelong steps: {report['k']}   trainer: {report['trainer']}"
              f"   seed: {report['seed']}   config: {report['config_hash']}")
        base = report["base_success"]
        print("base success: " + "  ".join(
            f"task {tid}: {base[tid]:.2f}" for tid in sorted(base)))
        print(f"fwt: {report['fwt']:.4f}   nbt: {report['nbt']:.4f}   "
              f"auc: {report['auc']:.4f}")
        print("success matrix (row k = after lifelong step k):")
        for row in report["s"]:
            print("  " + "  ".join(f"{v:.2f}" for v in row))
    except (KeyError, TypeError) as exc:
        raise DataError(f"report missing field: {exc}")
    return EXIT_OK


def _cmd_ablate(args, client) -> int:
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    demos = _read_demo_file(args.demos)
    out = _out_dir(cfg, args.out_dir)
    payload = _demo_payload(demos)
    for name, omega, lam in ABLATION_PRESETS:
        variant = ExperimentConfig.from_json_dict(cfg.to_json_dict())
        if omega is not None:
            variant.settings.reward.omega = omega
        if lam is not None:
            variant.settings.reward.lam = lam
        result = _call(client, "POST", "/v1/train/rft",
                       json={"config": variant.to_json_dict(),
                             "demos": payload, "epochs": args.epochs,
                             "seed": variant.seed})
        curves = result["curves"]
        final = curves[-1] if curves else [0.0] * 6
        report = {
            "preset": name,
            "config": variant.to_json_dict(),
            "config_hash": variant.config_hash(),
            "seed": variant.seed,
            "final": {
                "mean_mdpr": final[1],
                "mean_qacr": final[2],
                "mean_ctar": final[3],
                "mean_fcr": final[4],
                "objective": final[5],
            },
        }
        path = out / f"ablate-{name}.json"
        write_report(report, path)
        print(f"wrote {path}")
    return EXIT_OK


# --- entry point ---------------------------------------------------------

def _build_parser() -> _Parser:
    parser = _Parser(prog="llrft", description=__doc__)
    parser.add_argument("--server", default=None,
                        help="base URL of a running service; default runs "
                             "the service in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="emit a synthetic task suite and demos")
    p.add_argument("--config", required=True)
    p.add_argument("--n-demos", type=int, default=16)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("tokenize", help="encode a demo file and print the "
                                        "token streams")
    p.add_argument("--config", required=True)
    p.add_argument("--demos", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_tokenize)

    p = sub.add_parser("score", help="composite reward per pred/gt line pair")
    p.add_argument("--config", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("train-sft", help="supervised training on a demo file")
    p.add_argument("--config", required=True)
    p.add_argument("--demos", required=True)
    p.add_argument("--epochs", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=_cmd_train_sft)

    p = sub.add_parser("train-rft", help="reinforcement training on a demo file")
    p.add_argument("--config", required=True)
    p.add_argument("--demos", required=True)
    p.add_argument("--epochs", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=_cmd_train_rft)

    p = sub.add_parser("continual", help="base + lifelong protocol, writes a "
                                         "JSON report")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=_cmd_continual)

    p = sub.add_parser("report", help="pretty-print a continual report")
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("ablate", help="rerun training under the reward-weight "
                                      "presets (full, no-qacr, no-ctar, no-fcr)")
    p.add_argument("--config", required=True)
    p.add_argument("--demos", required=True)
    p.add_argument("--epochs", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=_cmd_ablate)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        with _client(args.server) as client:
            return args.func(args, client)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except httpx.HTTPError as exc:
        print(f"error: cannot reach service: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
