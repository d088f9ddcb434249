"""Experiment orchestration: configs, repetitions, guide-only replay and result tables."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .actions import GroundedAction, SchemaLedger, bundled_ledger, format_action
from .env import EnvironmentState, apply_mutations, environment_path, load_environment
from .errors import BackendError, ConfigError, DocumentError, GuideParseError, MutationError
from .grounding import problem_for
from .prompts import GUIDE_STYLES, INFO_LEVELS, Guide, generate_guide
from .search import EpisodeResult, SearchLimits, run_episode
from .selectors import BACKEND_KINDS, make_backend
from .tasks import Status, TaskDefinition, TaskPack, bundled_tasks, compile_condition, load_task_pack

EXECUTION_MODES = ("guided-search", "search-only", "guide-only", "paired")
GUIDE_POLICIES = ("abort", "skip")
AVERAGES = "Task Averages"
_GUIDE_LABEL = {"none": "NG", "low-level": "LLG", "high-level": "HLG"}


# ---------------------------------------------------------------------------
# Guide-only replay


def _closeness(state_atoms: frozenset, agent: int, action: GroundedAction) -> int:
    return sum((agent, "CLOSE", i) in state_atoms for i in action.ids)


def run_guide_only(env: EnvironmentState, task: TaskDefinition, guide: Guide,
                   ledger: SchemaLedger | None = None, policy: str = "abort",
                   episode_id: str = "") -> EpisodeResult:
    """Execute a low-level guide as a plan.

    Each line resolves to an applicable action with the same names; among
    several, the one whose arguments the agent is CLOSE to wins, then the
    lowest ids. A line with no applicable match stops the replay (``abort``)
    or is passed over (``skip``).
    """
    if guide.style != "low-level":
        raise ConfigError("guide-only replay needs a low-level guide")
    if policy not in GUIDE_POLICIES:
        raise ConfigError(f"unknown guide-only policy {policy!r}")
    ledger = ledger or bundled_ledger()
    problem = problem_for(env, ledger)
    goal = compile_condition(task.goal, problem)
    failure = compile_condition(task.failure, problem) if task.failure else None
    kernel = problem.kernel
    bits = problem.encode(env)
    plan: list[GroundedAction] = []
    notes: list[dict] = []
    status = None
    for line_no, (line, ref) in enumerate(zip(guide.lines, guide.refs())):
        if kernel.holds(bits, goal) or (failure is not None and kernel.holds(bits, failure)):
            break
        matches = [i for i in problem.applicable(bits) if ref.matches(problem.actions[i])]
        if not matches:
            notes.append({"episode_id": episode_id, "stage": "guide-line", "line": line_no, "text": line,
                          "outcome": "aborted" if policy == "abort" else "skipped"})
            if policy == "abort":
                status = Status.INEXECUTABLE
                break
            continue
        atoms = problem.atoms_of(bits)
        best = min(matches, key=lambda i: (-_closeness(atoms, env.agent_id, problem.actions[i]),
                                           problem.actions[i].ids))
        bits = kernel.apply(bits, best)
        plan.append(problem.actions[best])
        notes.append({"episode_id": episode_id, "stage": "guide-line", "line": line_no, "text": line,
                      "outcome": "executed", "action": format_action(problem.actions[best])})
    if kernel.holds(bits, goal):
        status = Status.SUCCESS
    elif failure is not None and kernel.holds(bits, failure):
        status = Status.FAILURE
    elif status is None:
        status = Status.INCOMPLETE
    notes.append({"episode_id": episode_id, "record": "summary", "status": status.value,
                  "plan": [format_action(a) for a in plan], "retries_used": 0, "dead_end": False,
                  "guide_id": guide.guide_id})
    return EpisodeResult(status, plan, notes, 0, problem.decode(bits), env, False, episode_id, guide.guide_id)


# ---------------------------------------------------------------------------
# Configuration


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    tasks: list[str] | None = None
    guide_mode: str = "none"
    execution_mode: str = "guided-search"
    info_level: str = "none"
    repetitions: int = 50
    environment: str = "desk"
    task_pack: str | None = None
    preset: str | None = None
    variant: str | None = None
    backend: dict = field(default_factory=lambda: {"kind": "scripted-oracle"})
    guide_backend: dict | None = None
    guides: dict[str, str] = field(default_factory=dict)
    limits: SearchLimits = field(default_factory=SearchLimits)
    seed: int = 0
    cache_guide: bool = False
    guide_only_policy: str = "abort"
    workers: int = 1
    transcript_dir: str | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.repetitions, int) or self.repetitions < 1:
            raise ConfigError("repetitions must be a positive integer")
        if self.guide_mode not in GUIDE_STYLES:
            raise ConfigError(f"unknown guide_mode {self.guide_mode!r}")
        if self.execution_mode not in EXECUTION_MODES:
            raise ConfigError(f"unknown execution_mode {self.execution_mode!r}")
        if self.info_level not in INFO_LEVELS:
            raise ConfigError(f"unknown info_level {self.info_level!r}")
        if self.execution_mode in ("guide-only", "paired") and self.guide_mode != "low-level":
            raise ConfigError(f"{self.execution_mode} needs guide_mode = 'low-level'")
        if self.execution_mode == "search-only" and self.guide_mode != "none":
            raise ConfigError("search-only runs take guide_mode = 'none'")
        if self.guide_only_policy not in GUIDE_POLICIES:
            raise ConfigError(f"unknown guide_only_policy {self.guide_only_policy!r}")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError("workers must be a positive integer")
        for b in (self.backend, self.guide_backend):
            if b is not None and b.get("kind") not in BACKEND_KINDS:
                raise ConfigError(f"unknown backend kind {b.get('kind')!r}")

    def labels(self) -> list[str]:
        base = _GUIDE_LABEL[self.guide_mode]
        if self.info_level != "none":
            base += f"/{self.info_level}"
        if self.execution_mode == "guide-only":
            return [f"{base} G"]
        if self.execution_mode == "paired":
            return [f"{base} G", f"{base} G+S"]
        return [base if self.guide_mode == "none" else f"{base} G+S"]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["limits"] = asdict(self.limits)
        return out


_CONFIG_KEYS = {f for f in ExperimentConfig.__dataclass_fields__}


def config_from_mapping(raw: Mapping[str, Any]) -> ExperimentConfig:
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    data = dict(raw)
    if "limits" in data:
        try:
            data["limits"] = SearchLimits(**data["limits"])
        except TypeError as exc:
            raise ConfigError(f"bad limits table: {exc}") from None
    return ExperimentConfig(**data)


def load_config(path: str | Path, overrides: Mapping[str, Any] | None = None) -> list[ExperimentConfig]:
    """Read a TOML experiment file.

    Top-level keys are shared; each ``[[configurations]]`` entry overrides them
    and yields one config. ``overrides`` (e.g. from CLI flags) win over both.
    """
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"bad TOML in {path}: {exc}") from None
    entries = raw.pop("configurations", None) or [{}]
    configs = []
    for entry in entries:
        merged = {**raw, **entry, **(overrides or {})}
        configs.append(config_from_mapping(merged))
    return configs


def rep_seed(seed: int, *parts: Any) -> int:
    digest = hashlib.sha256(repr((seed, *parts)).encode()).digest()
    return int.from_bytes(digest[:8], "big")


def guide_id_of(text: str) -> str:
    return hashlib.sha1(text.encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# Results


@dataclass
class ResultRow:
    task: str
    configuration: str
    successes: int
    repetitions: int
    mean_plan_length: float
    mean_retries: float

    @property
    def success_rate(self) -> float:
        return self.successes / self.repetitions if self.repetitions else 0.0


_COLUMNS = ("task", "configuration", "successes", "repetitions", "success_rate",
            "mean_plan_length", "mean_retries")


@dataclass
class ResultsTable:
    rows: list[ResultRow] = field(default_factory=list)

    def configurations(self) -> list[str]:
        return list(dict.fromkeys(r.configuration for r in self.rows))

    def tasks(self) -> list[str]:
        return list(dict.fromkeys(r.task for r in self.rows))

    def row(self, task: str, configuration: str) -> ResultRow:
        for r in self.rows:
            if r.task == task and r.configuration == configuration:
                return r
        raise KeyError((task, configuration))

    def averages(self) -> dict[str, float]:
        out = {}
        for c in self.configurations():
            rates = [r.success_rate for r in self.rows if r.configuration == c]
            out[c] = sum(rates) / len(rates)
        return out

    def merged(self, other: "ResultsTable") -> "ResultsTable":
        return ResultsTable(self.rows + other.rows)

    def ordered(self, task_order: Sequence[str] | None = None) -> "ResultsTable":
        tasks = list(task_order or self.tasks())
        tasks += [t for t in self.tasks() if t not in tasks]
        configs = self.configurations()
        rows = sorted(self.rows, key=lambda r: (tasks.index(r.task), configs.index(r.configuration)))
        return ResultsTable(rows)

    def render(self, fmt: str = "markdown") -> str:
        return render_table(self, fmt)


def render_table(results: ResultsTable, fmt: str = "markdown") -> str:
    if fmt == "json":
        return json.dumps({"rows": [asdict(r) for r in results.rows],
                           "averages": results.averages()}, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(_COLUMNS)
        for r in results.rows:
            w.writerow([r.task, r.configuration, r.successes, r.repetitions, repr(r.success_rate),
                        repr(r.mean_plan_length), repr(r.mean_retries)])
        return buf.getvalue()
    if fmt != "markdown":
        raise ConfigError(f"unknown table format {fmt!r}")
    head = "| Task | Configuration | Successes | Repetitions | Success rate | Mean length | Mean retries |"
    lines = [head, "|" + "---|" * 7]
    for r in results.rows:
        lines.append(f"| {r.task} | {r.configuration} | {r.successes} | {r.repetitions} | "
                     f"{r.success_rate:.2f} | {r.mean_plan_length:.2f} | {r.mean_retries:.2f} |")
    for c, avg in results.averages().items():
        lines.append(f"| {AVERAGES} | {c} | | | {avg:.2f} | | |")
    return "\n".join(lines) + "\n"


def parse_table(text: str, fmt: str) -> ResultsTable:
    """Inverse of :func:`render_table` for ``json`` and ``csv``."""
    if fmt == "json":
        data = json.loads(text)
        return ResultsTable([ResultRow(**r) for r in data["rows"]])
    if fmt == "csv":
        rows = []
        for rec in csv.DictReader(io.StringIO(text)):
            rows.append(ResultRow(rec["task"], rec["configuration"], int(rec["successes"]),
                                  int(rec["repetitions"]), float(rec["mean_plan_length"]),
                                  float(rec["mean_retries"])))
        return ResultsTable(rows)
    raise ConfigError(f"cannot parse table format {fmt!r}")


def summarize(outcomes: Iterable[tuple[str, str, EpisodeResult]]) -> ResultsTable:
    """Fold (task, configuration, result) triples into rows; order-independent."""
    acc: dict[tuple[str, str], list[EpisodeResult]] = {}
    for task, config, res in outcomes:
        acc.setdefault((task, config), []).append(res)
    rows = []
    for (task, config), results in acc.items():
        n = len(results)
        rows.append(ResultRow(task, config, sum(r.success for r in results), n,
                              sum(len(r.plan) for r in results) / n,
                              sum(r.retries_used for r in results) / n))
    return ResultsTable(rows)


# ---------------------------------------------------------------------------
# Running


@dataclass
class PreparedTask:
    task: TaskDefinition
    env: EnvironmentState
    ledger: SchemaLedger


def prepare_tasks(config: ExperimentConfig, pack: TaskPack | None = None) -> list[PreparedTask]:
    pack = pack or (load_task_pack(config.task_pack) if config.task_pack else bundled_tasks())
    try:
        base = load_environment(environment_path(config.environment))
    except DocumentError:
        raise
    if config.preset:
        try:
            base = apply_mutations(base, pack.preset(config.preset))
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None
    names = config.tasks
    if names is None:
        names = pack.names()
        if config.variant:
            names = [n for n in names if any(v.name == config.variant for v in pack.variants.get(n, ()))]
            if not names:
                raise ConfigError(f"no task defines variant {config.variant!r}")
    prepared = []
    for n in names:
        try:
            task = pack[n]
        except KeyError:
            raise ConfigError(f"unknown task {n!r}") from None
        env, ledger = base, bundled_ledger()
        if config.variant:
            try:
                v = pack.variant(n, config.variant)
            except KeyError as exc:
                raise ConfigError(str(exc.args[0])) from None
            if v.suffix:
                task = task.with_hint(v.suffix)
            if v.mutations:
                env = apply_mutations(env, v.mutations)
            if v.excluded_verbs:
                ledger = bundled_ledger(exclude=v.excluded_verbs)
        prepared.append(PreparedTask(task, env, ledger))
    return prepared


def _write_transcript(directory: Path, label: str, task: str, rep: int, records: list[dict]) -> None:
    safe = label.replace("/", "-").replace(" ", "_")
    out = directory / safe / task
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"rep-{rep:03d}.jsonl", "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps({"configuration": label, "task": task, "repetition": rep, **rec},
                                sort_keys=True) + "\n")


def _obtain_guide(config: ExperimentConfig, prep: PreparedTask, seed: int, guide_backend) -> Guide:
    if config.guide_mode == "none":
        return Guide.none()
    text = config.guides.get(prep.task.name)
    if text is not None:
        return Guide.from_text(text, config.guide_mode, config.info_level, guide_id_of(text))
    guide = generate_guide(prep.task, config.guide_mode, config.info_level, prep.env,
                           guide_backend.fork(seed), prep.ledger)
    return replace(guide, guide_id=guide_id_of(guide.text()))


def _failed(prep: PreparedTask, exc: Exception, episode_id: str) -> EpisodeResult:
    error = f"{type(exc).__name__}: {exc}"
    record = {"episode_id": episode_id, "record": "summary", "status": Status.BACKEND_ERROR.value,
              "plan": [], "retries_used": 0, "dead_end": False, "guide_id": "", "error": error}
    return EpisodeResult(Status.BACKEND_ERROR, [], [record], 0, prep.env, prep.env, episode_id=episode_id,
                         error=error)


def run_experiment(config: ExperimentConfig, pack: TaskPack | None = None) -> ResultsTable:
    prepared = prepare_tasks(config, pack)
    selection = make_backend(config.backend, None)
    guide_backend = make_backend(config.guide_backend, None) if config.guide_backend else selection
    labels = config.labels()
    transcript_dir = Path(config.transcript_dir) if config.transcript_dir else None
    cached: dict[str, Guide] = {}

    def one(prep: PreparedTask, rep: int) -> list[tuple[str, str, EpisodeResult]]:
        name = prep.task.name
        seed = rep_seed(config.seed, name, rep)
        episode_id = f"{config.name}:{name}:{rep}"
        try:
            if config.cache_guide and name in cached:
                guide = cached[name]
            else:
                guide = _obtain_guide(config, prep, rep_seed(config.seed, name, 0 if config.cache_guide else rep),
                                      guide_backend)
                if config.cache_guide:
                    cached[name] = guide
        except (BackendError, GuideParseError) as exc:
            return [(name, label, _failed(prep, exc, episode_id)) for label in labels]
        results = []
        modes = {"guide-only": ["G"], "paired": ["G", "G+S"]}.get(config.execution_mode, ["S"])
        for label, mode in zip(labels, modes):
            if mode == "G":
                res = run_guide_only(prep.env, prep.task, guide, prep.ledger, config.guide_only_policy, episode_id)
            else:
                res = run_episode(prep.env, prep.task, guide, selection.fork(seed), prep.ledger,
                                  config.limits, episode_id=episode_id)
            results.append((name, label, res))
        return results

    jobs = [(p, rep) for p in prepared for rep in range(config.repetitions)]
    if config.workers > 1 and not config.cache_guide:
        with ThreadPoolExecutor(config.workers) as pool:
            outcomes = list(pool.map(lambda j: one(*j), jobs))
    else:
        outcomes = [one(*j) for j in jobs]
    flat = []
    for (prep, rep), triples in zip(jobs, outcomes):
        for task, label, res in triples:
            if transcript_dir is not None:
                _write_transcript(transcript_dir, label, task, rep, res.transcript)
            flat.append((task, label, res))
    order = [p.task.name for p in prepared]
    return summarize(flat).ordered(order)


def table_from_transcripts(directory: str | Path) -> ResultsTable:
    """Rebuild a results table from persisted per-repetition transcripts."""
    directory = Path(directory)
    files = sorted(directory.rglob("rep-*.jsonl"))
    if not files:
        raise ConfigError(f"no transcripts under {directory}")
    triples = []
    for path in files:
        summary = None
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                rec = json.loads(line)
                if rec.get("record") == "summary":
                    summary = rec
        if summary is None:
            raise DocumentError(f"{path} has no summary record")
        status = Status(summary["status"])
        res = EpisodeResult(status, [None] * len(summary["plan"]), [], summary["retries_used"], None, None)
        triples.append((summary["task"], summary["configuration"], res))
    return summarize(triples).ordered(bundled_tasks().names())
