"""Write src/hcplan/data/ledger.json (the human-readable schema ledger).

Kept as a script so the shared precondition snippets stay consistent; the
JSON file is the artifact the package reads.
"""

import json
from pathlib import Path

NEAR = "CLOSE(agent, {v})"
HELD = "HOLDS_RH(agent, {v}) | HOLDS_LH(agent, {v})"
REACH = "CLOSE(agent, {v}) | HOLDS_RH(agent, {v}) | HOLDS_LH(agent, {v})"
FREE_HAND = "!HOLDS_RH(agent, *) | !HOLDS_LH(agent, *)"
UPRIGHT = ["!SITTING(agent)", "!LYING(agent)"]
RELEASE = ["HOLDS_RH(agent, {v})", "HOLDS_LH(agent, {v})"]
TAKE_INTO_HAND = [
    {"if": ["!HOLDS_RH(agent, *)"], "add": ["HOLDS_RH(agent, {v})"]},
    {"if": ["HOLDS_RH(agent, *)"], "add": ["HOLDS_LH(agent, {v})"]},
]


def f(template, v="x"):
    if isinstance(template, list):
        return [f(t, v) for t in template]
    if isinstance(template, dict):
        return {k: f(val, v) for k, val in template.items()}
    return template.replace("{v}", v)


def schema(verb, params, doc, where=(), pre=(), add=(), delete=(), conditional=()):
    return {
        "verb": verb,
        "arity": len(params),
        "params": list(params),
        "doc": doc,
        "where": list(where),
        "preconditions": list(pre),
        "add": list(add),
        "delete": list(delete),
        "conditional": list(conditional),
    }


SCHEMAS = [
    schema("WALK", "x", "Move next to x. Leaves every other object; walking to a room also reaches everything inside it.",
           pre=UPRIGHT,
           delete=["CLOSE(agent, *)", "FACING(agent, *)"],
           add=["CLOSE(agent, x)"],
           conditional=[{"forall": "y", "where": ["ROOM(x)", "y != x"], "if": ["INSIDE(y, x)"], "add": ["CLOSE(agent, y)"]}]),
    schema("CLOSE", "x", "Close an open object within reach.",
           where=["CAN_OPEN(x)"], pre=["OPEN(x)", f(REACH)], delete=["OPEN(x)"], add=["CLOSED(x)"]),
    schema("CUT", "x", "Cut something within reach.",
           where=["CUTTABLE(x)"], pre=[f(REACH)], add=["CUT(x)"]),
    schema("DRINK", "x", "Drink from a held object; no state change is modelled.",
           where=["DRINKABLE(x)"], pre=[f(HELD)]),
    schema("DROP", "x", "Let go of a held object. Only the holds relation is removed; the object is not placed anywhere.",
           pre=[f(HELD)], delete=f(RELEASE)),
    schema("EAT", "x", "Eat a held object.",
           where=["EATABLE(x)"], pre=[f(HELD)], add=["EATEN(x)"]),
    schema("GRAB", "x", "Pick up an object within reach into a free hand (right hand first). Objects in closed containers cannot be grabbed.",
           where=["GRABBABLE(x)"],
           pre=[f(NEAR), "!HOLDS_RH(agent, x)", "!HOLDS_LH(agent, x)", FREE_HAND,
                {"forall": "c", "where": ["CAN_OPEN(c)", "CONTAINERS(c)", "c != x"], "require": "!INSIDE(x, c) | !CLOSED(c)"}],
           delete=["INSIDE(x, *)", "ON_TOP(x, *)"],
           conditional=f(TAKE_INTO_HAND)),
    schema("GREET", "x", "Greet a person within reach.",
           where=["PERSON(x)"], pre=[f(NEAR)]),
    schema("LIE", "x", "Lie down on x.",
           where=["LIEABLE(x)"], pre=[f(NEAR)] + UPRIGHT, add=["LYING(agent)", "ON_TOP(agent, x)"]),
    schema("MOVE", "x", "Push a movable object within reach; no state change is modelled.",
           where=["MOVABLE(x)"], pre=[f(NEAR)]),
    schema("OPEN", "x", "Open a closed object. Needs one free hand; a movable object must be held in the other.",
           where=["CAN_OPEN(x)"],
           pre=["CLOSED(x)", "HOLDS_RH(agent, x) | HOLDS_LH(agent, x) if GRABBABLE(x)",
                "CLOSE(agent, x) if !GRABBABLE(x)", FREE_HAND],
           delete=["CLOSED(x)"], add=["OPEN(x)"]),
    schema("PLUGIN", "x", "Plug in an appliance within reach.",
           where=["HAS_PLUG(x)"], pre=["PLUGGED_OUT(x)", f(NEAR)], delete=["PLUGGED_OUT(x)"], add=["PLUGGED_IN(x)"]),
    schema("PLUGOUT", "x", "Unplug an appliance within reach; a running appliance switches off.",
           where=["HAS_PLUG(x)"], pre=["PLUGGED_IN(x)", f(NEAR)], delete=["PLUGGED_IN(x)"], add=["PLUGGED_OUT(x)"],
           conditional=[{"if": ["ON(x)"], "delete": ["ON(x)"], "add": ["OFF(x)"]}]),
    schema("POUR", "xy", "Pour some of a held, open pourable x into y (held or within reach). x stays in hand.",
           where=["POURABLE(x)", "RECIPIENT(y)", "x != y"],
           pre=[f(HELD), "OPEN(x) if CAN_OPEN(x)", f(REACH, "y")],
           add=["INSIDE(x, y)"]),
    schema("PLACEON", "xy", "Put a held object on a surface within reach.",
           where=["GRABBABLE(x)", "SURFACES(y)", "!GRABBABLE(y)", "x != y"],
           pre=[f(HELD), f(NEAR, "y")],
           delete=f(RELEASE) + ["INSIDE(x, *)", "ON_TOP(x, *)"],
           add=["ON_TOP(x, y)", "INSIDE(x, @room(y))"]),
    schema("PUTIN", "xy", "Put a held object into a container within reach; a container that opens must be open.",
           where=["GRABBABLE(x)", "CONTAINERS(y)", "!GRABBABLE(y)", "x != y"],
           pre=[f(HELD), f(NEAR, "y"), "OPEN(y) if CAN_OPEN(y)"],
           delete=f(RELEASE) + ["INSIDE(x, *)", "ON_TOP(x, *)"],
           add=["INSIDE(x, y)", "INSIDE(x, @room(y))"]),
    schema("PUTON", "x", "Put on a held piece of clothing.",
           where=["CLOTHES(x)"], pre=[f(HELD)], delete=f(RELEASE), add=["WORN(x)"]),
    schema("READ", "x", "Read something within reach; no state change is modelled.",
           where=["READABLE(x)"], pre=[f(REACH)]),
    schema("SIT", "x", "Sit on x.",
           where=["SITTABLE(x)"], pre=[f(NEAR)] + UPRIGHT, add=["SITTING(agent)", "ON_TOP(agent, x)"]),
    schema("SLEEP", "", "Fall asleep while sitting or lying.",
           pre=["SITTING(agent) | LYING(agent)", "!SLEEPING(agent)"], add=["SLEEPING(agent)"]),
    schema("STANDUP", "", "Stand up from sitting or lying.",
           pre=["SITTING(agent) | LYING(agent)", "!SLEEPING(agent)"],
           delete=["SITTING(agent)", "LYING(agent)", "ON_TOP(agent, *)"]),
    schema("SWITCHOFF", "x", "Switch off a running device within reach.",
           where=["HAS_SWITCH(x)"], pre=["ON(x)", f(NEAR)], delete=["ON(x)"], add=["OFF(x)"]),
    schema("SWITCHON", "x", "Switch on a device within reach. Containers that open must be closed; plugged devices must be plugged in.",
           where=["HAS_SWITCH(x)"],
           pre=["OFF(x)", f(NEAR), "CLOSED(x) if CAN_OPEN(x) & CONTAINERS(x)", "PLUGGED_IN(x) if HAS_PLUG(x)"],
           delete=["OFF(x)"], add=["ON(x)"]),
    schema("TAKEOFF", "x", "Take off worn clothing into a free hand.",
           where=["CLOTHES(x)"], pre=["WORN(x)", FREE_HAND], delete=["WORN(x)"], conditional=f(TAKE_INTO_HAND)),
    schema("TOUCH", "x", "Touch a non-room object within reach; no state change is modelled.",
           where=["!ROOM(x)"], pre=[f(REACH)]),
    schema("TYPE", "x", "Type on a keyboard within reach; no state change is modelled.",
           where=["name(x) == keyboard"], pre=[f(REACH)]),
    schema("USE", "x", "Use a held object. It counts as used only when something has been put into it (e.g. toothpaste on a toothbrush).",
           where=["GRABBABLE(x)"], pre=[f(HELD)],
           conditional=[{"if": ["INSIDE(*, x)"], "add": ["USED(x)"]}]),
    schema("WAKEUP", "", "Wake up.",
           pre=["SLEEPING(agent)"], delete=["SLEEPING(agent)"]),
    schema("WASH", "x", "Wash a held object next to a filled sink.",
           where=["GRABBABLE(x)"],
           pre=[f(HELD), {"exists": "s", "where": ["name(s) == sink"], "all": ["CLOSE(agent, s)", "FILLED(s)"]}],
           delete=["DIRTY(x)"], add=["CLEAN(x)"]),
    schema("WATCH", "x", "Watch something within reach; a device must be on.",
           where=["LOOKABLE(x)"], pre=[f(NEAR), "ON(x) if HAS_SWITCH(x)"],
           delete=["FACING(agent, *)"], add=["FACING(agent, x)"]),
    schema("WIPE", "xy", "Wipe surface y with held x; removes dirt but does not make y clean.",
           where=["GRABBABLE(x)", "SURFACES(y)", "x != y"], pre=[f(HELD), f(REACH, "y")], delete=["DIRTY(y)"]),
]

if __name__ == "__main__":
    out = Path(__file__).resolve().parents[1] / "src/hcplan/data/ledger.json"
    out.write_text(json.dumps({"schemas": SCHEMAS}, indent=2) + "\n")
    print(f"wrote {len(SCHEMAS)} schemas to {out}")
