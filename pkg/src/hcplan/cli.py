"""Command line entry point: ``hcplan <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .actions import parse_action
from .env import apply_mutations, environment_path, load_environment
from .errors import (
    ActionSyntaxError,
    BackendError,
    ConditionSyntaxError,
    ConfigError,
    DocumentError,
    EvaluationError,
    GuideParseError,
    HcplanError,
    LedgerError,
    MutationError,
    ResourceLimitError,
)
from .harness import load_config, parse_table, render_table, run_experiment, table_from_transcripts
from .oracle import DEFAULT_MAX_STATES, min_plan_search, validate_plan
from .prompts import INFO_LEVELS, generate_guide
from .selectors import BACKEND_KINDS, make_backend
from .tasks import bundled_tasks, load_task_pack

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_ENV, EXIT_BACKEND = 0, 1, 2, 3, 4
_EXIT_FOR = (
    (BackendError, EXIT_BACKEND),
    ((DocumentError, MutationError, EvaluationError, LedgerError), EXIT_ENV),
    ((ConfigError, ConditionSyntaxError, GuideParseError, ActionSyntaxError, ResourceLimitError), EXIT_CONFIG),
)


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise CliError(EXIT_CONFIG, "UsageError", message)


def _emit_error(code: int, kind: str, message: str) -> int:
    print(json.dumps({"error": kind, "message": message, "exit": code}), file=sys.stderr)
    return code


def _write(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _pack(args):
    return load_task_pack(args.task_pack) if getattr(args, "task_pack", None) else bundled_tasks()


def _task(args, pack):
    try:
        return pack[args.task]
    except KeyError:
        raise ConfigError(f"unknown task {args.task!r}; known: {', '.join(pack.names())}") from None


def _env(args, pack):
    env = load_environment(environment_path(args.env))
    if getattr(args, "preset", None):
        try:
            env = apply_mutations(env, pack.preset(args.preset))
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None
    return env


def _backend_config(args) -> dict:
    cfg: dict = {"kind": args.backend}
    if args.backend == "remote-chat":
        cfg.update(endpoint=args.endpoint, model=args.model, temperature=args.temperature,
                   timeout=args.timeout, api_key_env=args.api_key_env)
    elif args.backend == "uniform-random":
        cfg["seed"] = args.seed
    elif args.backend == "fixed-text":
        if not args.text_file:
            raise ConfigError("fixed-text backend needs --text-file")
        cfg["text"] = Path(args.text_file).read_text(encoding="utf-8")
    return cfg


def cmd_run(args) -> int:
    overrides: dict = {}
    if args.backend:
        overrides["backend"] = {"kind": args.backend}
    for key in ("repetitions", "seed", "workers", "preset", "variant"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    if args.tasks:
        overrides["tasks"] = [t.strip() for t in args.tasks.split(",") if t.strip()]
    if args.transcripts:
        overrides["transcript_dir"] = args.transcripts
    if args.cache_guide:
        overrides["cache_guide"] = True
    table = None
    for config in load_config(args.config, overrides):
        result = run_experiment(config)
        table = result if table is None else table.merged(result)
    _write(render_table(table.ordered(), args.format), args.output)
    return EXIT_OK


def cmd_gen_guide(args) -> int:
    pack = _pack(args)
    task = _task(args, pack)
    env = _env(args, pack)
    backend = make_backend(_backend_config(args)).fork(args.seed)
    guide = generate_guide(task, args.style, args.info_level, env, backend)
    _write(guide.text() + "\n", args.output)
    return EXIT_OK


def cmd_oracle(args) -> int:
    pack = _pack(args)
    task = _task(args, pack)
    report = min_plan_search(_env(args, pack), task, bound=args.bound, max_states=args.max_states)
    if args.witness and report.witness_plan is not None:
        Path(args.witness).write_text("".join(f"{a}\n" for a in report.witness_plan), encoding="utf-8")
    print(json.dumps(report.to_dict(), indent=2))
    if report.capped:
        raise ResourceLimitError(f"search cap of {args.max_states} states reached")
    return EXIT_OK


def cmd_validate(args) -> int:
    pack = _pack(args)
    task = _task(args, pack)
    try:
        lines = Path(args.plan).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read plan: {exc}") from None
    plan = [parse_action(ln.strip()) for ln in lines if ln.strip()]
    report = validate_plan(_env(args, pack), plan, task)
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK if report.executable else EXIT_FAIL


def cmd_report(args) -> int:
    if args.table:
        fmt = "json" if args.table.endswith(".json") else "csv"
        table = parse_table(Path(args.table).read_text(encoding="utf-8"), fmt)
    else:
        table = table_from_transcripts(args.transcripts)
    _write(render_table(table, args.format), args.output)
    return EXIT_OK


def cmd_env_check(args) -> int:
    env = load_environment(environment_path(args.path))
    pack = _pack(args)
    for name in pack.presets:
        apply_mutations(env, pack.preset(name))
    print(json.dumps({"ok": True, **env.describe(), "agent": env.agent_id}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hcplan", description="Selector-guided hill-climbing planner for household tasks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def env_opts(sp, preset=True):
        sp.add_argument("--env", default="desk", help="bundled name (desk, full) or graph path")
        sp.add_argument("--task-pack", help="task pack JSON (default: bundled)")
        if preset:
            sp.add_argument("--preset", help="named initial-state preset, e.g. adversarial")

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("--config", required=True)
    r.add_argument("--backend", choices=BACKEND_KINDS, help="override the selection backend kind")
    r.add_argument("--repetitions", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--workers", type=int)
    r.add_argument("--tasks", help="comma-separated task names")
    r.add_argument("--preset")
    r.add_argument("--variant")
    r.add_argument("--cache-guide", action="store_true")
    r.add_argument("--transcripts", help="directory for per-repetition JSONL transcripts")
    r.add_argument("--format", choices=("markdown", "csv", "json"), default="markdown")
    r.add_argument("--output")
    r.set_defaults(func=cmd_run)

    g = sub.add_parser("gen-guide", help="generate a guide for one task")
    g.add_argument("--task", required=True)
    g.add_argument("--style", choices=("low-level", "high-level"), default="low-level")
    g.add_argument("--info-level", choices=INFO_LEVELS, default="none")
    g.add_argument("--backend", choices=BACKEND_KINDS, default="scripted-oracle")
    g.add_argument("--endpoint")
    g.add_argument("--model")
    g.add_argument("--temperature", type=float, default=0.2)
    g.add_argument("--timeout", type=float, default=60.0)
    g.add_argument("--api-key-env", default="OPENAI_API_KEY")
    g.add_argument("--text-file", help="canned reply for the fixed-text backend")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--output")
    env_opts(g)
    g.set_defaults(func=cmd_gen_guide)

    o = sub.add_parser("oracle", help="breadth-first minimum plan for one task")
    o.add_argument("--task", required=True)
    o.add_argument("--bound", type=int, default=20)
    o.add_argument("--max-states", type=int, default=DEFAULT_MAX_STATES)
    o.add_argument("--witness", help="write the witness plan here")
    env_opts(o)
    o.set_defaults(func=cmd_oracle)

    v = sub.add_parser("validate", help="replay a plan file and classify the result")
    v.add_argument("--plan", required=True)
    v.add_argument("--task", required=True)
    env_opts(v)
    v.set_defaults(func=cmd_validate)

    rp = sub.add_parser("report", help="results table from transcripts or a saved table")
    src = rp.add_mutually_exclusive_group(required=True)
    src.add_argument("--transcripts")
    src.add_argument("--table", help="saved .json or .csv table")
    rp.add_argument("--format", choices=("markdown", "csv", "json"), default="markdown")
    rp.add_argument("--output")
    rp.set_defaults(func=cmd_report)

    e = sub.add_parser("env", help="environment utilities")
    esub = e.add_subparsers(dest="env_command", required=True, parser_class=_Parser)
    ec = esub.add_parser("check", help="lint an environment document")
    ec.add_argument("path")
    ec.add_argument("--task-pack")
    ec.set_defaults(func=cmd_env_check)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except CliError as exc:
        return _emit_error(exc.code, exc.kind, str(exc))
    except HcplanError as exc:
        for types, code in _EXIT_FOR:
            if isinstance(exc, types):
                return _emit_error(code, type(exc).__name__, str(exc))
        return _emit_error(EXIT_CONFIG, type(exc).__name__, str(exc))
    except OSError as exc:
        return _emit_error(EXIT_CONFIG, type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
