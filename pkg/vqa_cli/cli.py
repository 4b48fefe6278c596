"""`vqa-instruct` entry point.

Every config key is also a dotted flag (`--train.epochs 3`); flags win over the config file.
Status JSON goes to stdout, logs to stderr and `<log_dir>/<command>/<run_id>/run.log`.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from datetime import datetime, timezone
from typing import Any, Callable, Dict, List, Optional

from vqa_cli import commands
from vqa_cli.logging_config import setup_run_logging
from vqa_cli.run_config import RunConfig, config_keys, load_run_config, parse_flag_value
from vqa_core.errors import VQAError

log = logging.getLogger(__name__)

COMMANDS: Dict[str, str] = {
    "preprocess": "decode, chunk and encode every manifest video into the cache",
    "build-prompts": "write the Q&A instruction file (two pairs per video)",
    "train": "instruction-tune the projectors (and toy decoder) and save a checkpoint",
    "evaluate": "run the configured evaluation protocol and write reports",
    "predict": "score one video file with a trained checkpoint",
    "synth": "write a synthetic blur-graded corpus and its manifest",
    "datasets": "list the catalogued benchmark datasets",
}


def _run_id() -> str:
    return f"{datetime.now(timezone.utc).strftime('%Y%m%dT%H%M%SZ')}-{os.getpid()}"


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="YAML run configuration")
    group = parser.add_argument_group("config keys")
    for key, default, type_str in config_keys():
        group.add_argument(
            f"--{key}",
            dest=f"cfg:{key}",
            default=argparse.SUPPRESS,
            metavar=type_str.upper() if "[" not in type_str else "VALUE",
            help=f"(default: {default!r})",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vqa-instruct", description="Video quality assessment with a multimodal decoder")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        if name == "datasets":
            continue
        if name == "synth":
            p.add_argument("--out", required=True, help="output directory")
            p.add_argument("--n", type=int, default=16, help="number of videos (default: 16)")
            p.add_argument("--family", default="A", help="content family A or B (default: A)")
            p.add_argument("--seed", type=int, default=0, help="corpus seed (default: 0)")
            p.add_argument("--frames", type=int, default=8, help="frames per video (default: 8)")
            p.add_argument("--size", type=int, default=32, help="frame edge in pixels (default: 32)")
            continue
        if name == "predict":
            p.add_argument("video", help="video file to score")
            p.add_argument("--video-id", default=None, help="cache id (default: file stem)")
        _add_config_flags(p)
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        dest.split(":", 1)[1]: parse_flag_value(value)
        for dest, value in vars(args).items()
        if dest.startswith("cfg:")
    }


def _emit(payload: Dict[str, Any]) -> None:
    sys.stdout.write(json.dumps(payload, sort_keys=True, default=str) + "\n")
    sys.stdout.flush()


def _cmd_synth(args: argparse.Namespace) -> Dict[str, Any]:
    from vqa_core.synthetic import make_corpus, write_corpus

    videos = make_corpus(
        args.n,
        family=args.family,
        seed=args.seed,
        n_frames=args.frames,
        size=(args.size, args.size),
    )
    manifest = write_corpus(args.out, videos)
    return {"manifest": str(manifest), "videos": len(videos)}


def _cmd_datasets(_args: argparse.Namespace) -> Dict[str, Any]:
    from vqa_prompts.manifest import list_datasets

    return {"datasets": [info.to_json() for info in list_datasets()]}


def _dispatch(command: str, config: RunConfig, args: argparse.Namespace) -> Dict[str, Any]:
    handlers: Dict[str, Callable[[], Dict[str, Any]]] = {
        "preprocess": lambda: commands.cmd_preprocess(config),
        "build-prompts": lambda: commands.cmd_build_prompts(config),
        "train": lambda: commands.cmd_train(config),
        "evaluate": lambda: commands.cmd_evaluate(config),
        "predict": lambda: commands.cmd_predict(config, args.video, video_id=args.video_id),
    }
    return handlers[command]()


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    command = args.command
    try:
        if command == "synth":
            _emit({"command": command, "status": "ok", "outputs": _cmd_synth(args)})
            return 0
        if command == "datasets":
            _emit({"command": command, "status": "ok", "outputs": _cmd_datasets(args)})
            return 0
        config = load_run_config(args.config, _overrides(args))
        log_path = setup_run_logging(
            level=config.log_level,
            command=command,
            run_id=_run_id(),
            base_dir=config.paths.log_dir,
        )
        log.info("vqa-instruct %s (config=%s)", command, args.config or "<defaults>")
        outputs = _dispatch(command, config, args)
    except VQAError as exc:
        log.error("%s failed: %s", command, exc)
        _emit(
            {
                "command": command,
                "status": "error",
                "error": {"type": type(exc).__name__, "message": str(exc)},
                "exit_code": exc.exit_code,
            }
        )
        return exc.exit_code
    except Exception as exc:
        log.exception("%s crashed", command)
        _emit(
            {
                "command": command,
                "status": "error",
                "error": {"type": type(exc).__name__, "message": str(exc)},
                "exit_code": 1,
            }
        )
        return 1
    _emit({"command": command, "status": "ok", "outputs": outputs, "log": str(log_path)})
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
