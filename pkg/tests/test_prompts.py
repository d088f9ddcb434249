import re

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import COFFEETABLE_HIGH, COFFEETABLE_LOW, fixture_text
from hcplan.actions import VERB_ARITY, ActionRef, GroundedAction, bundled_ledger
from hcplan.env import EnvironmentState, load_listing
from hcplan.errors import ConfigError, GuideParseError
from hcplan.prompts import (
    Guide,
    build_guide_prompt,
    build_selection_prompt,
    format_choice,
    generate_guide,
    parse_selection,
    render_environment_info,
    retry_prefix,
    template,
    verb_listing,
)
from hcplan.selectors import FixedTextBackend
from hcplan.tasks import TaskDefinition, parse_condition

MICROWAVE_GUIDE = Guide("low-level", (
    "walk | microwave  ", "open | microwave  ", "walk | salmon  ", "grab | salmon  ",
    "walk | microwave  ", "putin | salmon | microwave  ", "close | microwave  ", "switchoff | microwave  ",
))
TAKEN = [GroundedAction("WALK", (("microwave", 296),)), GroundedAction("OPEN", (("microwave", 296),))]
_OPTION_RE = re.compile(r"^(\d+) \[(\w+)\]<(\w+)>$")


def task_named(description: str) -> TaskDefinition:
    return TaskDefinition("t", description, parse_condition("on(tv)"))


def options_from(fixture: str) -> list[tuple[int, GroundedAction]]:
    text = fixture_text(fixture)
    body = text.split("**The list of actions available to you are:**\n", 1)[1]
    out = []
    for line in body.splitlines():
        m = _OPTION_RE.match(line)
        idx = int(m.group(1))
        out.append((idx, GroundedAction(m.group(2), ((m.group(3), 1000 + idx),))))
    return out


def test_system_message_is_the_fixture():
    prompt = build_selection_prompt(task_named("watch tv"), None, [], [(0, TAKEN[0])])
    assert prompt.system_message == fixture_text("selection_system.txt")


def test_partition_prompt_matches_golden(pack):
    task = pack["microwave_salmon"]
    opts = options_from("selection_partition_user.txt")
    assert [i for i, _ in opts] == list(range(100))
    prompt = build_selection_prompt(task, MICROWAVE_GUIDE, TAKEN, opts, "candidate")
    assert prompt.user_message == fixture_text("selection_partition_user.txt")
    assert prompt.retry_prefix is None
    assert prompt.kind == "candidate"


def test_candidate_prompt_matches_golden(pack):
    opts = options_from("selection_candidates_user.txt")
    assert [i for i, _ in opts] == [3, 100, 296, 310, 400]
    prompt = build_selection_prompt(pack["microwave_salmon"], MICROWAVE_GUIDE, TAKEN, opts, "final")
    assert prompt.user_message == fixture_text("selection_candidates_user.txt")


def test_retry_prompt_matches_golden(pack):
    opts = options_from("selection_candidates_user.txt")
    previous = parse_selection("{15 [WALK]<bottle>}")
    prompt = build_selection_prompt(pack["microwave_salmon"], MICROWAVE_GUIDE, TAKEN, opts, "final", previous)
    assert prompt.rendered_user == fixture_text("selection_retry_user.txt")
    assert prompt.retry_prefix.startswith("This query is being repeated for you")
    assert "{15 [WALK]<bottle>}" in prompt.retry_prefix


def test_first_step_phrasing_and_optional_sections():
    prompt = build_selection_prompt(task_named("watch tv"), Guide.none(), [], [(0, TAKEN[0])])
    assert prompt.user_message == (
        "What is the first step to high-level goal 'watch tv'?\n"
        "**The list of actions available to you are:**\n"
        "0 [WALK]<microwave>"
    )


def test_high_level_guide_block_label():
    guide = Guide.from_text(COFFEETABLE_HIGH, "high-level")
    prompt = build_selection_prompt(task_named("x"), guide, [TAKEN[0]], [(4, TAKEN[1])])
    assert "**A pregenerated high-level plan estimate" in prompt.user_message
    assert "1. Walk to the kitchen\n" in prompt.user_message
    assert "What is the next step" in prompt.user_message


def test_selection_prompt_preconditions():
    with pytest.raises(ConfigError):
        build_selection_prompt(task_named("x"), None, [], [])
    with pytest.raises(ConfigError):
        build_selection_prompt(task_named("x"), None, [], [(3, TAKEN[0]), (2, TAKEN[1])], "candidate")
    with pytest.raises(ConfigError):
        build_selection_prompt(task_named("x"), None, [], [(0, TAKEN[0])], "middle")


def test_prompt_building_is_stable(pack):
    opts = options_from("selection_partition_user.txt")
    a = build_selection_prompt(pack["microwave_salmon"], MICROWAVE_GUIDE, TAKEN, opts, "candidate")
    b = build_selection_prompt(pack["microwave_salmon"], MICROWAVE_GUIDE, TAKEN, opts, "candidate")
    assert a == b and a.as_text() == b.as_text()


def test_retry_prefix_interpolates_previous_response():
    assert retry_prefix("abc").startswith("This query is being repeated for you. Your previous response was abc,")
    assert retry_prefix("abc").endswith("correct format. \n\n")


# -- guide prompts -------------------------------------------------------------


def test_high_level_guide_prompt_matches_golden():
    prompt = build_guide_prompt(task_named("put the cat in the bathtub"), "high-level", "none")
    assert prompt.as_text() == fixture_text("guide_high_none.txt")
    assert prompt.kind == "guide"


def test_verb_listing_covers_inventory():
    listing = verb_listing()
    assert listing.startswith("walk (1), close (1), cut (1)")
    assert listing.endswith("watch (1), wipe (2)")
    assert listing.count("(") == len(VERB_ARITY)
    assert "drop (1)" not in verb_listing(bundled_ledger(exclude=["DROP"]))


def test_low_level_guide_prompt(desk):
    prompt = build_guide_prompt(task_named("make toast"), "low-level", "none")
    assert prompt.user_message == "What is a low-level plan for 'make toast'?"
    assert "ENVIRONMENT INFO" not in prompt.system_message
    assert "walk | pencilcase" in prompt.system_message
    assert prompt.system_message.startswith(template("guide_high_system").split("{verbs}")[0])


@pytest.mark.parametrize("level", ["objects", "static", "dynamic"])
def test_guide_prompt_splices_environment(desk, level):
    prompt = build_guide_prompt(task_named("make toast"), "low-level", level, desk)
    listing = render_environment_info(desk, level)
    assert listing in prompt.system_message
    assert "[ENVIRONMENT INFO WOULD GO HERE]" not in prompt.system_message
    with pytest.raises(ConfigError):
        build_guide_prompt(task_named("make toast"), "low-level", level, None)


def test_guide_prompt_rejects_none_style():
    with pytest.raises(ConfigError):
        build_guide_prompt(task_named("x"), "none", "none")


# -- environment rendering ----------------------------------------------------------


def test_dynamic_rendering_reproduces_listing_excerpt():
    text = fixture_text("env_dynamic_excerpt.txt")
    objects = load_listing(text)
    env = EnvironmentState(objects, frozenset(), objects[0].id)
    assert render_environment_info(env, "dynamic") == text
    lines = text.splitlines()
    assert lines[0] == "bathroom: properties - {ROOM} | states - {}"
    assert "facecream: properties - {GRABBABLE, POURABLE, CAN_OPEN, CREAM} | states - {CLOSED}" in lines


def test_rendering_levels(desk):
    dyn = render_environment_info(desk, "dynamic").splitlines()
    static = render_environment_info(desk, "static").splitlines()
    names = render_environment_info(desk, "objects").splitlines()
    assert len(dyn) == len(static) == len(names) == len(desk.objects)
    assert names == [o.name for o in sorted(desk.objects, key=lambda o: o.id)]
    for d, s in zip(dyn, static):
        assert d.startswith(s + " | states - {")
    assert "character: properties - {} | states - {}" in dyn
    with pytest.raises(ConfigError):
        render_environment_info(desk, "none")


# -- guides -----------------------------------------------------------------------


def test_generate_guide_from_reference_text(pack, desk):
    task = pack["bring_items_to_coffeetable"]
    low = generate_guide(task, "low-level", "none", desk, FixedTextBackend(COFFEETABLE_LOW))
    assert len(low.lines) == 8 and low.lines[0] == "1. walk | kitchen"
    assert low.refs()[3] == ActionRef("PLACEON", ("coffeepot", "coffeetable"))
    high = generate_guide(task, "high-level", "none", desk, FixedTextBackend(COFFEETABLE_HIGH + "\n\n"))
    assert len(high.lines) == 8 and high.lines[0].endswith("Walk to the kitchen")


class _Flaky:
    kind = "scripted"

    def __init__(self, replies):
        self.replies = list(replies)
        self.calls = 0

    def complete(self, prompt):
        self.calls += 1
        return self.replies.pop(0) if len(self.replies) > 1 else self.replies[0]


def test_generate_guide_retries_unparseable_low_level(pack, desk):
    backend = _Flaky(["Walk to the kitchen", "walk | kitchen"])
    guide = generate_guide(pack["watch_tv"], "low-level", "none", desk, backend)
    assert guide.lines == ("walk | kitchen",) and backend.calls == 2
    with pytest.raises(GuideParseError):
        generate_guide(pack["watch_tv"], "low-level", "none", desk, _Flaky(["nonsense"]), retries=3)


def test_guide_invariants():
    with pytest.raises(ConfigError):
        Guide("none", ("walk | x",))
    with pytest.raises(ConfigError):
        Guide("sideways")
    with pytest.raises(GuideParseError):
        Guide.from_text("fly | moon", "low-level")
    assert Guide.from_text("fly | moon", "high-level").lines == ("fly | moon",)


# -- response parsing ----------------------------------------------------------------

SELECTION_CORPUS = [
    ("*the microwave is open, grab salmon*\n\n{310 [WALK]<salmon>}", (310, "WALK", ("salmon",))),
    ("I cannot decide.", None),
    ("{12 [WALK]<bottle>} no {13 [GRAB]<bottle>}", (13, "GRAB", ("bottle",))),
    ("{0 [WALK]<bathroom>}", (0, "WALK", ("bathroom",))),
    ("{4 [PUTIN]<salmon><microwave>}", (4, "PUTIN", ("salmon", "microwave"))),
    ("{4 [PUTIN]<salmon>(46)<microwave>(35)}", (4, "PUTIN", ("salmon", "microwave"))),
    ("{7 [STANDUP]}", (7, "STANDUP", ())),
    ("{7 [SLEEP]} trailing words", (7, "SLEEP", ())),
    ("{310 WALK<salmon>}", (310, "WALK", ("salmon",))),
    ("{ 310 [WALK]<salmon> }", (310, "WALK", ("salmon",))),
    ("{310 [walk]<salmon>}", (310, "WALK", ("salmon",))),
    ("{310 [WALK]<Salmon>}", (310, "WALK", ("salmon",))),
    ("{INDEX VERB<action>}", None),
    ("Your output would look like {INDEX [VERB]<item>} so {5 [OPEN]<fridge>}", (5, "OPEN", ("fridge",))),
    ("{5 [OPEN]<fridge>} then {INDEX [VERB]<item>}", (5, "OPEN", ("fridge",))),
    ("{5 [OPEN]<fridge>}{6 [CLOSE]<fridge>}", (6, "CLOSE", ("fridge",))),
    ("{-5 [OPEN]<fridge>}", None),
    ("{5.0 [OPEN]<fridge>}", None),
    ("5 [OPEN]<fridge>", None),
    ("[OPEN]<fridge>", None),
    ("{[OPEN]<fridge>}", None),
    ("{5 [FLY]<fridge>}", None),
    ("{5 [OPEN]}", None),
    ("{5 [OPEN]<fridge><door>}", None),
    ("{5 [PUTIN]<salmon>}", None),
    ("{5 [OPEN]<>}", None),
    ("", None),
    ("{}", None),
    ("{{5 [OPEN]<fridge>}}", (5, "OPEN", ("fridge",))),
    ("reasoning {not a block} {9 [GRAB]<mug>}", (9, "GRAB", ("mug",))),
    ("{9 [GRAB]<mug>} {not a block}", (9, "GRAB", ("mug",))),
    ("{009 [GRAB]<mug>}", (9, "GRAB", ("mug",))),
    ("{123456 [WALK]<kitchen>}", (123456, "WALK", ("kitchen",))),
    ("```\n{3 [WALK]<floor>}\n```", (3, "WALK", ("floor",))),
    ("{3 [WALK]<floor>}.", (3, "WALK", ("floor",))),
    ("**Answer:** {296 [WALK]<microwave>}", (296, "WALK", ("microwave",))),
    ("{296 [WALK]<microwave>\n}", (296, "WALK", ("microwave",))),
    ("{296\n[WALK]<microwave>}", (296, "WALK", ("microwave",))),
    ("{2 [POUR]<toothpaste><toothbrush>}", (2, "POUR", ("toothpaste", "toothbrush"))),
    ("{2 [WIPE]<towel><kitchentable>}", (2, "WIPE", ("towel", "kitchentable"))),
    ("{2 [SWITCHON]<tv>} and {x [SWITCHON]<tv>}", (2, "SWITCHON", ("tv",))),
    ("{2 [SWITCH ON]<tv>}", None),
    ("{2 [SWITCHON]<tv}", None),
    ("{2 [SWITCHON]tv}", None),
    ("{2 [SWITCHON]<tv>(x)}", None),
    ("{1 [WALK]<kitchen>} {2 [WALK]<bedroom>} {3 [WALK]<bathroom>}", (3, "WALK", ("bathroom",))),
    ("The answer is {12 [WALK]<bottle>}.\nWait, I meant {15 [WALK]<bottle>}", (15, "WALK", ("bottle",))),
    ("{12 [WALK]<bottle>} {15 [WALK]<bottle>", (12, "WALK", ("bottle",))),
    ("{ 12 [ WALK ] <bottle> }", (12, "WALK", ("bottle",))),
    ("{12 [WALK] <kitchen counter>}", (12, "WALK", ("kitchen counter",))),
]


def test_corpus_has_fifty_cases():
    assert len(SELECTION_CORPUS) == 50


@pytest.mark.parametrize("raw,expected", SELECTION_CORPUS)
def test_parse_selection_corpus(raw, expected):
    resp = parse_selection(raw)
    assert resp.raw_text == raw
    if expected is None:
        assert resp.parsed is None
    else:
        idx, verb, names = expected
        assert resp.parsed == (idx, ActionRef(verb, names))


_names = st.from_regex(r"[a-z][a-z0-9_]{0,12}", fullmatch=True)


@st.composite
def refs(draw):
    verb = draw(st.sampled_from(sorted(VERB_ARITY)))
    return ActionRef(verb, tuple(draw(_names) for _ in range(VERB_ARITY[verb])))


@given(st.integers(min_value=0, max_value=10**6), refs(), st.text(alphabet=st.characters(blacklist_characters="{}"), max_size=60))
def test_format_then_parse_is_identity(index, ref, reasoning):
    raw = f"{reasoning}\n\n{format_choice(index, ref)}"
    assert parse_selection(raw).parsed == (index, ref)


def test_low_level_dynamic_guide_prompt_is_frozen(desk, pack):
    prompt = build_guide_prompt(pack["make_toast"], "low-level", "dynamic", desk)
    assert prompt.as_text() == fixture_text("guide_low_dynamic_desk.txt")
