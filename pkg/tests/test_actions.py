import pytest

from conftest import COFFEETABLE_LOW
from hcplan.actions import (
    VERB_ARITY,
    ActionRef,
    GroundedAction,
    applicable_actions,
    apply,
    bundled_ledger,
    format_action,
    load_ledger,
    parse_action,
    parse_guide_line,
)
from hcplan.errors import (
    ActionSyntaxError,
    ArityError,
    DocumentError,
    GuideParseError,
    InapplicableActionError,
    UnknownVerbError,
)
from hcplan.grounding import problem_for


def act(text):
    return parse_action(text)


def run(state, *texts):
    for t in texts:
        state = apply(state, act(t))
    return state


def test_inventory():
    assert len(VERB_ARITY) == 31
    assert bundled_ledger().verbs == tuple(VERB_ARITY)
    assert {v for v, n in VERB_ARITY.items() if n == 0} == {"SLEEP", "STANDUP", "WAKEUP"}
    assert {v for v, n in VERB_ARITY.items() if n == 2} == {"POUR", "PLACEON", "PUTIN", "WIPE"}


def test_format_and_parse():
    a = GroundedAction("PUTIN", (("salmon", 46), ("microwave", 35)))
    assert format_action(a) == "[PUTIN]<salmon>(46)<microwave>(35)"
    assert format_action(a, with_ids=False) == "[PUTIN]<salmon><microwave>"
    assert parse_action(str(a)) == a
    assert parse_action("[STANDUP]") == GroundedAction("STANDUP")
    assert str(a.ref()) == "[PUTIN]<salmon><microwave>"


def test_round_trip_every_grounded_action(desk):
    actions = problem_for(desk).actions
    assert len(actions) > 500
    assert all(parse_action(format_action(a)) == a for a in actions)


@pytest.mark.parametrize("text,exc", [
    ("[FLY]<moon>(1)", UnknownVerbError),
    ("[WALK]", ArityError),
    ("[WALK]<a>(1)<b>(2)", ArityError),
    ("[WALK]<kitchen>", ActionSyntaxError),
    ("WALK <kitchen>(3)", ActionSyntaxError),
    ("", ActionSyntaxError),
    ("[WALK]<kitchen>(x)", ActionSyntaxError),
])
def test_parse_errors(text, exc):
    with pytest.raises(exc):
        parse_action(text)


def test_reference_guide_rows_parse():
    refs = [parse_guide_line(line) for line in COFFEETABLE_LOW.splitlines()]
    assert refs[0] == ActionRef("WALK", ("kitchen",))
    assert refs[3] == ActionRef("PLACEON", ("coffeepot", "coffeetable"))
    assert [r.verb for r in refs] == ["WALK", "GRAB", "WALK", "PLACEON"] * 2


@pytest.mark.parametrize("line,expected", [
    ("walk | kitchen", ActionRef("WALK", ("kitchen",))),
    ("  3) grab | Mug  ", ActionRef("GRAB", ("mug",))),
    ("putin|salmon|microwave", ActionRef("PUTIN", ("salmon", "microwave"))),
    ("standup", ActionRef("STANDUP", ())),
    ("switch on | tv", ActionRef("SWITCHON", ("tv",))),
])
def test_guide_lines(line, expected):
    assert parse_guide_line(line) == expected


@pytest.mark.parametrize("line", ["", "fly | moon", "walk", "walk | ", "putin | salmon", "Walk to the kitchen"])
def test_bad_guide_lines(line):
    with pytest.raises(GuideParseError):
        parse_guide_line(line)


def test_ref_matching():
    a = GroundedAction("WALK", (("floor", 6),))
    assert ActionRef("WALK", ("floor",)).matches(a)
    assert not ActionRef("WALK", ("wall",)).matches(a)
    assert not ActionRef("GRAB", ("floor",)).matches(a)


def test_ledger_exclusions():
    led = bundled_ledger(exclude=["drop"])
    assert "DROP" not in led and "DROP" not in led.verbs
    assert led.key != bundled_ledger().key
    with pytest.raises(KeyError):
        led["DROP"]
    with pytest.raises(DocumentError):
        bundled_ledger(exclude=["FLY"])


def test_ledger_validation():
    with pytest.raises(DocumentError):
        load_ledger({"schemas": [{"verb": "FLY", "params": ["x"]}]})
    with pytest.raises(DocumentError):
        load_ledger({"schemas": [{"verb": "WALK", "params": ["x", "y"]}]})
    with pytest.raises(DocumentError):
        load_ledger({"schemas": [{"verb": "WALK", "params": ["x"], "add": ["CLOSE(agent, z)"]}]})
    with pytest.raises(DocumentError):
        load_ledger({"schemas": [{"verb": "WALK", "params": ["x"]}, {"verb": "WALK", "params": ["x"]}]})


def test_every_schema_has_a_doc():
    assert all(s.doc for s in bundled_ledger().schemas)


# -- semantics on the desk world ------------------------------------------------------


def test_initial_applicable_list(desk):
    acts = applicable_actions(desk)
    walk_targets = {a.ids[0] for a in acts if a.verb == "WALK"}
    assert desk.agent_id not in walk_targets
    assert len(walk_targets) == len(desk.objects) - 1
    assert acts == sorted(acts, key=lambda a: (list(VERB_ARITY).index(a.verb), a.ids))


def test_walking_into_a_room_reaches_its_contents(desk):
    s = run(desk, "[WALK]<kitchen>(3)")
    close = {o for (a, k, o) in (r for r in s.relations) if a == s.agent_id and k == "CLOSE"}
    assert {3, 44, 35, 38} <= close and 21 not in close
    s = run(s, "[WALK]<apple>(44)")
    close = {o for (a, k, o) in s.relations if a == s.agent_id and k == "CLOSE"}
    assert close == {44}


def test_grab_uses_right_hand_then_left(desk):
    s = run(desk, "[WALK]<kitchen>(3)", "[GRAB]<apple>(44)", "[GRAB]<salmon>(46)")
    assert (s.agent_id, "HOLDS_RH", 44) in s.relations
    assert (s.agent_id, "HOLDS_LH", 46) in s.relations
    assert not any(r for r in s.relations if r.subject_id == 44 and r.kind == "ON_TOP")
    assert act("[GRAB]<chips>(48)") not in applicable_actions(s)


def test_closed_container_blocks_grab(desk):
    s = run(desk, "[WALK]<livingroom>(4)")
    assert act("[GRAB]<plate>(60)") not in applicable_actions(s)
    s = run(s, "[OPEN]<cabinet>(59)")
    assert act("[GRAB]<plate>(60)") in applicable_actions(s)


def test_putin_releases_and_places(desk):
    s = run(desk, "[WALK]<kitchen>(3)", "[GRAB]<apple>(44)", "[OPEN]<garbagecan>(38)",
            "[PUTIN]<apple>(44)<garbagecan>(38)")
    assert (44, "INSIDE", 38) in s.relations and (44, "INSIDE", 3) in s.relations
    assert not any(r.kind.startswith("HOLDS") for r in s.relations if r.subject_id == s.agent_id)


def test_switchon_container_needs_door_shut(desk):
    s = run(desk, "[WALK]<kitchen>(3)", "[OPEN]<microwave>(35)")
    assert act("[SWITCHON]<microwave>(35)") not in applicable_actions(s)
    s = run(s, "[CLOSE]<microwave>(35)", "[SWITCHON]<microwave>(35)")
    assert "ON" in s.by_id[35].dynamic_states


def test_wash_needs_a_filled_sink(desk):
    s = run(desk, "[WALK]<livingroom>(4)", "[OPEN]<cabinet>(59)", "[GRAB]<plate>(60)", "[WALK]<bathroom>(1)")
    assert act("[WASH]<plate>(60)") not in applicable_actions(s)
    s = run(s, "[SWITCHON]<faucet>(13)")
    assert ("FILLED", 12) in s.atoms
    s = run(s, "[WASH]<plate>(60)")
    assert s.by_id[60].dynamic_states == ("CLEAN",)


def test_sitting_blocks_walking(desk):
    s = run(desk, "[WALK]<livingroom>(4)", "[SIT]<sofa>(55)")
    assert (s.agent_id, "ON_TOP", 55) in s.relations
    assert not any(a.verb == "WALK" for a in applicable_actions(s))
    s = run(s, "[STANDUP]")
    assert any(a.verb == "WALK" for a in applicable_actions(s))


def test_inapplicable_action_reports_reason(desk):
    with pytest.raises(InapplicableActionError) as info:
        apply(desk, act("[GRAB]<apple>(44)"))
    assert "CLOSE" in info.value.failed
    with pytest.raises(InapplicableActionError):
        apply(desk, act("[WALK]<kitchen>(4)"))
    with pytest.raises(InapplicableActionError):
        apply(desk, act("[WALK]<character>(5)"))


def test_excluded_verb_never_applicable(desk):
    led = bundled_ledger(exclude=["DROP"])
    s = run(desk, "[WALK]<kitchen>(3)", "[GRAB]<apple>(44)")
    assert any(a.verb == "DROP" for a in applicable_actions(s))
    assert not any(a.verb == "DROP" for a in applicable_actions(s, led))
