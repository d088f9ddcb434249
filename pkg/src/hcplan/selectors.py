"""Selector backends: the remote chat client and deterministic local stand-ins."""

from __future__ import annotations

import os
import random
import threading
from dataclasses import dataclass, field
from typing import Any, Mapping, Protocol, Sequence

import httpx

from .actions import ActionRef, GroundedAction, format_action, parse_action
from .errors import (
    AuthenticationError,
    BackendError,
    BackendStatusError,
    BackendTimeoutError,
    ConfigError,
    CredentialsError,
    TransportError,
)
from .prompts import PromptDocument, SelectionContext, format_choice, parse_selection

BACKEND_KINDS = (
    "remote-chat",
    "scripted",
    "scripted-oracle",
    "bfs-oracle-greedy",
    "faulty-wrapper",
    "uniform-random",
    "fixed-text",
)
FAULT_KINDS = ("off-by-one", "off-list", "wrong-name", "garbage")


class SelectorBackend(Protocol):
    kind: str

    def complete(self, prompt: PromptDocument) -> str: ...

    def fork(self, seed: int) -> "SelectorBackend": ...


def _context(prompt: PromptDocument) -> SelectionContext:
    if prompt.context is None:
        raise BackendError("local backends need a prompt context")
    return prompt.context


def _answer(ctx: SelectionContext, wanted: GroundedAction | ActionRef | None) -> str:
    """Reply naming ``wanted`` if it is on offer, else the first option."""
    if wanted is not None:
        for i, a in ctx.options:
            if (a == wanted) if isinstance(wanted, GroundedAction) else wanted.matches(a):
                return format_choice(i, a)
    i, a = ctx.options[0]
    return format_choice(i, a)


def guide_lines(plan: Sequence[GroundedAction]) -> str:
    return "\n".join(" | ".join([a.verb.lower(), *a.names]) for a in plan)


class _Stateless:
    def fork(self, seed: int):
        return self


@dataclass
class ScriptedBackend(_Stateless):
    """Answers with the next action of a fixed plan."""

    plan: Sequence[GroundedAction | ActionRef]
    guide_text: str = ""
    kind: str = "scripted"

    def __post_init__(self):
        self.plan = tuple(parse_action(p) if isinstance(p, str) else p for p in self.plan)
        if not self.plan:
            raise ConfigError("a scripted backend needs a plan")

    def complete(self, prompt: PromptDocument) -> str:
        if prompt.kind == "guide":
            return self.guide_text
        ctx = _context(prompt)
        step = len(ctx.taken)
        return _answer(ctx, self.plan[step] if step < len(self.plan) else None)


@dataclass
class FixedTextBackend(_Stateless):
    """Returns the same text for every prompt; used for canned guides."""

    text: str
    kind: str = "fixed-text"

    def complete(self, prompt: PromptDocument) -> str:
        return self.text


def _witness(ctx: SelectionContext, ledger, bound: int, max_states: int) -> list[GroundedAction]:
    from .grounding import problem_for
    from .oracle import shortest_plan

    problem = problem_for(ctx.state, ledger or ctx.ledger)
    res, _ = shortest_plan(problem, problem.encode(ctx.state), ctx.task, bound, max_states)
    if not res.found:
        why = "search cap reached" if res.capped else f"no plan within {bound} steps"
        raise BackendError(f"oracle backend has no witness for {ctx.task.name}: {why}")
    return [problem.actions[i] for i in res.plan]


@dataclass
class ScriptedOracleBackend:
    """Replays a breadth-first witness computed once per episode."""

    ledger: Any = None
    bound: int = 20
    max_states: int = 6_000_000
    kind: str = "scripted-oracle"
    _plan: list[GroundedAction] | None = field(default=None, repr=False)
    _origin: tuple | None = field(default=None, repr=False)

    def fork(self, seed: int) -> "ScriptedOracleBackend":
        return ScriptedOracleBackend(self.ledger, self.bound, self.max_states, self.kind)

    def complete(self, prompt: PromptDocument) -> str:
        ctx = _context(prompt)
        if prompt.kind == "guide":
            plan = _witness(ctx, self.ledger, self.bound, self.max_states)
            return guide_lines(plan)
        origin = self._origin or ()
        step = len(ctx.taken) - len(origin)
        on_track = (self._plan is not None and ctx.taken[:len(origin)] == origin
                    and 0 <= step and tuple(ctx.taken[len(origin):]) == tuple(self._plan[:step]))
        if not ctx.taken or not on_track:
            # first prompt of an episode, or the episode left the witness
            self._plan = _witness(ctx, self.ledger, self.bound, self.max_states)
            self._origin = ctx.taken
            step = 0
        return _answer(ctx, self._plan[step] if step < len(self._plan) else None)


@dataclass
class GreedyOracleBackend(_Stateless):
    """Recomputes a shortest plan from the current state at every prompt."""

    ledger: Any = None
    bound: int = 20
    max_states: int = 6_000_000
    kind: str = "bfs-oracle-greedy"

    def complete(self, prompt: PromptDocument) -> str:
        ctx = _context(prompt)
        plan = _witness(ctx, self.ledger, self.bound, self.max_states)
        if prompt.kind == "guide":
            return guide_lines(plan)
        return _answer(ctx, plan[0] if plan else None)


@dataclass
class UniformRandomBackend:
    """Picks a uniformly random option; deterministic per seed."""

    seed: int = 0
    kind: str = "uniform-random"

    def __post_init__(self):
        self._rng = random.Random(self.seed)

    def fork(self, seed: int) -> "UniformRandomBackend":
        return UniformRandomBackend(seed)

    def complete(self, prompt: PromptDocument) -> str:
        ctx = _context(prompt)
        if prompt.kind == "guide":
            names = sorted({o.name for o in ctx.state.objects}) if ctx.state else []
            picks = [self._rng.choice(names) for _ in range(self._rng.randint(1, 4))] if names else []
            return "\n".join(f"walk | {n}" for n in picks)
        i, a = self._rng.choice(ctx.options)
        return format_choice(i, a)


def corrupt(reply: str, fault: str, ctx: SelectionContext) -> str:
    """Apply one injected fault to a well-formed reply."""
    if fault == "garbage":
        return "I cannot decide."
    parsed = parse_selection(reply).parsed
    if parsed is None:
        return reply
    index, ref = parsed
    if fault == "off-by-one":
        return f"{{{index + 1} {ref}}}"
    if fault == "off-list":
        top = max(len(ctx.full_list), max(i for i, _ in ctx.options) + 1)
        return f"{{{top + 1000} [WALK]<nowhere>}}"
    if fault == "wrong-name":
        return f"{{{index} {ActionRef(ref.verb, tuple('nowhere' for _ in ref.arg_names))}}}"
    raise ConfigError(f"unknown fault {fault!r}")


@dataclass
class FaultyBackend:
    """Wraps another backend and corrupts replies per a stage schedule.

    ``schedule`` maps a stage (``candidate``/``final``) to the faults applied
    to successive replies of that stage. With ``repeat_last`` the final fault
    of a stage applies forever once its list runs out.
    """

    inner: Any
    schedule: Mapping[str, Sequence[str]]
    repeat_last: bool = False
    kind: str = "faulty-wrapper"

    def __post_init__(self):
        for stage, faults in self.schedule.items():
            if stage not in ("candidate", "final"):
                raise ConfigError(f"unknown stage {stage!r} in fault schedule")
            for f in faults:
                if f not in FAULT_KINDS:
                    raise ConfigError(f"unknown fault {f!r}")
        self._calls = {"candidate": 0, "final": 0}

    def fork(self, seed: int) -> "FaultyBackend":
        return FaultyBackend(self.inner.fork(seed), self.schedule, self.repeat_last, self.kind)

    def complete(self, prompt: PromptDocument) -> str:
        reply = self.inner.complete(prompt)
        if prompt.kind not in self._calls:
            return reply
        faults = list(self.schedule.get(prompt.kind, ()))
        n = self._calls[prompt.kind]
        self._calls[prompt.kind] = n + 1
        if n < len(faults):
            fault = faults[n]
        elif self.repeat_last and faults:
            fault = faults[-1]
        else:
            return reply
        return corrupt(reply, fault, _context(prompt))


@dataclass
class RemoteChatBackend(_Stateless):
    """Chat-completions client. The API key is read from ``api_key_env`` only."""

    base_url: str
    model: str
    temperature: float = 0.2
    timeout: float = 60.0
    api_key_env: str = "OPENAI_API_KEY"
    max_in_flight: int = 4
    transport: httpx.BaseTransport | None = field(default=None, repr=False)
    kind: str = "remote-chat"

    def __post_init__(self):
        if not self.base_url or not self.model:
            raise ConfigError("remote-chat needs an endpoint and a model id")
        if self.max_in_flight < 1:
            raise ConfigError("max_in_flight must be at least 1")
        self._gate = threading.BoundedSemaphore(self.max_in_flight)
        self._client: httpx.Client | None = None

    def _http(self) -> httpx.Client:
        if self._client is None:
            self._client = httpx.Client(base_url=self.base_url.rstrip("/"), timeout=self.timeout,
                                        transport=self.transport)
        return self._client

    def close(self) -> None:
        if self._client is not None:
            self._client.close()
            self._client = None

    def complete(self, prompt: PromptDocument) -> str:
        key = os.environ.get(self.api_key_env)
        if not key:
            raise CredentialsError(f"environment variable {self.api_key_env} is not set")
        body = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [
                {"role": "system", "content": prompt.system_message},
                {"role": "user", "content": prompt.rendered_user},
            ],
        }
        with self._gate:
            try:
                resp = self._http().post("/chat/completions", json=body,
                                         headers={"Authorization": f"Bearer {key}"})
            except httpx.TimeoutException as exc:
                raise BackendTimeoutError(f"request timed out after {self.timeout}s") from exc
            except httpx.TransportError as exc:
                raise TransportError(str(exc)) from exc
        if resp.status_code in (401, 403):
            raise AuthenticationError(resp.status_code, resp.text)
        if not resp.is_success:
            raise BackendStatusError(resp.status_code, resp.text)
        try:
            return resp.json()["choices"][0]["message"]["content"] or ""
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendStatusError(resp.status_code, f"malformed completion body: {exc}") from exc


def make_backend(config: Mapping[str, Any], ledger=None) -> SelectorBackend:
    """Build a backend from a config table (``kind`` plus per-kind keys)."""
    kind = config.get("kind")
    if kind not in BACKEND_KINDS:
        raise ConfigError(f"unknown backend kind {kind!r}")
    try:
        if kind == "remote-chat":
            return RemoteChatBackend(
                base_url=config["endpoint"],
                model=config["model"],
                temperature=float(config.get("temperature", 0.2)),
                timeout=float(config.get("timeout", 60.0)),
                api_key_env=config.get("api_key_env", "OPENAI_API_KEY"),
                max_in_flight=int(config.get("max_in_flight", 4)),
            )
        if kind == "scripted":
            return ScriptedBackend(list(config["plan"]), config.get("guide_text", ""))
        if kind == "scripted-oracle":
            return ScriptedOracleBackend(ledger, int(config.get("bound", 20)))
        if kind == "bfs-oracle-greedy":
            return GreedyOracleBackend(ledger, int(config.get("bound", 20)))
        if kind == "uniform-random":
            return UniformRandomBackend(int(config.get("seed", 0)))
        if kind == "fixed-text":
            return FixedTextBackend(config["text"])
        inner = make_backend(config["inner"], ledger)
        return FaultyBackend(inner, {k: list(v) for k, v in config["schedule"].items()},
                             bool(config.get("repeat_last", False)))
    except KeyError as exc:
        raise ConfigError(f"backend {kind} is missing {exc}") from None


def format_plan(plan: Sequence[GroundedAction], with_ids: bool = True) -> str:
    return "\n".join(format_action(a, with_ids) for a in plan)
