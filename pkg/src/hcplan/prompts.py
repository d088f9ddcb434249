"""Prompt construction and response parsing for the selector."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Sequence

from .actions import VERB_ARITY, ActionRef, GroundedAction, SchemaLedger, bundled_ledger, format_action, parse_guide_line
from .env import EnvironmentState, data_path
from .errors import ConfigError, GuideParseError

INFO_LEVELS = ("none", "objects", "static", "dynamic")
GUIDE_STYLES = ("none", "low-level", "high-level")
ENV_MARKER = "[ENVIRONMENT INFO WOULD GO HERE]"
PREVIOUS_MARKER = "[PREVIOUS RESPONSE]"
ORIGINAL_MARKER = "[ORIGINAL PROMPT GOES HERE]"


@lru_cache(maxsize=None)
def template(name: str) -> str:
    return data_path(f"templates/{name}.txt").read_text(encoding="utf-8")


@dataclass(frozen=True)
class Guide:
    style: str
    lines: tuple[str, ...] = ()
    info_level: str = "none"
    guide_id: str = ""

    def __post_init__(self):
        if self.style not in GUIDE_STYLES:
            raise ConfigError(f"unknown guide style {self.style!r}")
        if self.info_level not in INFO_LEVELS:
            raise ConfigError(f"unknown info level {self.info_level!r}")
        if self.style == "none" and self.lines:
            raise ConfigError("a 'none' guide cannot have lines")

    @classmethod
    def none(cls) -> "Guide":
        return cls("none")

    @classmethod
    def from_text(cls, text: str, style: str, info_level: str = "none", guide_id: str = "") -> "Guide":
        lines = tuple(ln.strip() for ln in text.splitlines() if ln.strip())
        guide = cls(style, lines, info_level, guide_id)
        if style == "low-level":
            guide.refs()
        return guide

    def refs(self) -> list[ActionRef]:
        return [parse_guide_line(ln) for ln in self.lines]

    def text(self) -> str:
        return "\n".join(self.lines)


@dataclass(frozen=True)
class SelectionContext:
    """What a local backend may inspect; never rendered into the prompt."""

    task: Any
    state: EnvironmentState | None
    taken: tuple[GroundedAction, ...]
    options: tuple[tuple[int, GroundedAction], ...]
    full_list: tuple[GroundedAction, ...] = ()
    step: int = 0
    guide: Guide | None = None
    ledger: Any = None


@dataclass(frozen=True)
class PromptDocument:
    system_message: str
    user_message: str
    retry_prefix: str | None = None
    kind: str = "final"  # guide | candidate | final
    context: SelectionContext | None = field(default=None, compare=False, repr=False)

    @property
    def rendered_user(self) -> str:
        return (self.retry_prefix or "") + self.user_message

    def as_text(self) -> str:
        return f"{self.system_message}\n\n\n{self.rendered_user}"


@dataclass(frozen=True)
class SelectionResponse:
    raw_text: str
    parsed: tuple[int, ActionRef] | None = None

    @property
    def index(self) -> int | None:
        return self.parsed[0] if self.parsed else None

    @property
    def action(self) -> ActionRef | None:
        return self.parsed[1] if self.parsed else None


# ---------------------------------------------------------------------------
# Environment info and guide prompts


def render_environment_info(env: EnvironmentState, info_level: str) -> str:
    if info_level not in INFO_LEVELS or info_level == "none":
        raise ConfigError(f"cannot render environment info at level {info_level!r}")
    lines = []
    for o in env.objects:
        if info_level == "objects":
            lines.append(o.name)
            continue
        line = f"{o.name}: properties - {{{', '.join(o.static_properties)}}}"
        if info_level == "dynamic":
            line += f" | states - {{{', '.join(o.dynamic_states)}}}"
        lines.append(line)
    return "\n".join(lines)


def verb_listing(ledger: SchemaLedger | None = None) -> str:
    ledger = ledger or bundled_ledger()
    return ", ".join(f"{v.lower()} ({VERB_ARITY[v]})" for v in ledger.verbs)


def guide_question(description: str, style: str) -> str:
    level = "high" if style == "high-level" else "low"
    return f"What is a {level}-level plan for '{description}'?"


def build_guide_prompt(task, style: str, info_level: str, env: EnvironmentState | None = None,
                       ledger: SchemaLedger | None = None) -> PromptDocument:
    if style not in ("low-level", "high-level"):
        raise ConfigError("guide prompts need style 'low-level' or 'high-level'")
    name = "guide_high_system" if style == "high-level" else "guide_low_system"
    system = template(name).replace("{verbs}", verb_listing(ledger))
    if info_level == "none":
        system = system.replace(f"{ENV_MARKER}\n\n", "", 1)
    else:
        if env is None:
            raise ConfigError("environment info requested without an environment")
        system = system.replace(ENV_MARKER, render_environment_info(env, info_level), 1)
    return PromptDocument(system, guide_question(task.prompt_description, style), kind="guide",
                          context=SelectionContext(task, env, (), (), ledger=ledger))


def generate_guide(task, style: str, info_level: str, env: EnvironmentState, backend,
                   ledger: SchemaLedger | None = None, retries: int = 10, guide_id: str = "") -> Guide:
    """Ask ``backend`` for a guide; low-level replies must parse line by line."""
    if style == "none":
        raise ConfigError("generate_guide needs a guide style")
    prompt = build_guide_prompt(task, style, info_level, env, ledger)
    last_error: Exception | None = None
    for _ in range(retries + 1):
        text = backend.complete(prompt)
        try:
            return Guide.from_text(text, style, info_level, guide_id)
        except GuideParseError as exc:
            last_error = exc
    raise GuideParseError(f"no parseable low-level guide after {retries} retries: {last_error}")


# ---------------------------------------------------------------------------
# Selection prompts


def format_option(index: int, action: GroundedAction) -> str:
    return f"{index} {format_action(action, with_ids=False)}"


def format_choice(index: int, action: GroundedAction | ActionRef) -> str:
    text = format_action(action, with_ids=False) if isinstance(action, GroundedAction) else str(action)
    return f"{{{index} {text}}}"


def build_selection_prompt(task, guide: Guide | None, taken: Sequence[GroundedAction],
                           options: Sequence[tuple[int, GroundedAction]], stage: str = "final",
                           retry_context: SelectionResponse | None = None,
                           context: SelectionContext | None = None) -> PromptDocument:
    if stage not in ("candidate", "final"):
        raise ConfigError(f"unknown selection stage {stage!r}")
    if not options:
        raise ConfigError("a selection prompt needs at least one option")
    if stage == "candidate" and any(a[0] >= b[0] for a, b in zip(options, options[1:])):
        raise ConfigError("candidate options must have strictly increasing indices")
    parts = [f"What is the {'next' if taken else 'first'} step to high-level goal '{task.prompt_description}'?"]
    if guide is not None and guide.lines:
        level = "high" if guide.style == "high-level" else "low"
        parts.append(f"**A pregenerated {level}-level plan estimate (might have missing, additional or "
                     f"impossible actions) has been provided:**")
        parts.extend(guide.lines)
        parts.append("")
    if taken:
        parts.append("**The actions you have already taken are**:")
        parts.extend(format_action(a, with_ids=False) for a in taken)
        parts.append("")
    parts.append("**The list of actions available to you are:**")
    parts.extend(format_option(i, a) for i, a in options)
    prefix = None
    if retry_context is not None:
        prefix = retry_prefix(retry_context.raw_text)
    return PromptDocument(template("selection_system"), "\n".join(parts), prefix, stage, context)


def retry_prefix(previous: str) -> str:
    text = template("retry_prefix").replace(PREVIOUS_MARKER, previous, 1)
    return text.replace(ORIGINAL_MARKER, "", 1)


_BLOCK_RE = re.compile(r"\{([^{}]*)\}")
_CHOICE_RE = re.compile(
    r"^\s*(\d+)\s*\[?\s*([A-Za-z]+)\s*\]?\s*((?:<[^<>{}]*>\s*(?:\(\s*\d+\s*\))?\s*)*)$"
)
_NAME_RE = re.compile(r"<([^<>{}]*)>")


def parse_selection(raw: str) -> SelectionResponse:
    """Read the last well-formed ``{INDEX [VERB]<a><b>}`` block of a reply."""
    for body in reversed(_BLOCK_RE.findall(raw)):
        m = _CHOICE_RE.match(body)
        if not m:
            continue
        verb = m.group(2).upper()
        names = tuple(n.strip().lower() for n in _NAME_RE.findall(m.group(3)))
        if verb not in VERB_ARITY or VERB_ARITY[verb] != len(names) or any(not n for n in names):
            continue
        return SelectionResponse(raw, (int(m.group(1)), ActionRef(verb, names)))
    return SelectionResponse(raw, None)
