"""Generate the bundled environment graphs.

desk_env.json is hand-laid-out (about sixty objects in four rooms). The
full-scale graph keeps every desk object and pads each room with scenery
and dense proximity edges, the way exported household graphs look.
Output is deterministic.
"""

import json
import random
from pathlib import Path

DATA = Path(__file__).resolve().parents[1] / "src/hcplan/data"

# name, properties, states, room, placement (None | ("ON_TOP"|"INSIDE", holder name))
DESK = [
    ("bathroom", ["ROOM"], [], None, None),
    ("bedroom", ["ROOM"], [], None, None),
    ("kitchen", ["ROOM"], [], None, None),
    ("livingroom", ["ROOM"], [], None, None),
    ("character", [], [], None, None),
    # bathroom
    ("floor", [], [], "bathroom", None),
    ("wall", [], [], "bathroom", None),
    ("ceiling", [], [], "bathroom", None),
    ("bathtub", ["LIEABLE"], [], "bathroom", None),
    ("toilet", ["SITTABLE", "CAN_OPEN", "CONTAINERS"], ["CLOSED"], "bathroom", None),
    ("bathroomcounter", ["SURFACES"], [], "bathroom", None),
    ("sink", ["RECIPIENT", "CONTAINERS"], [], "bathroom", None),
    ("faucet", ["HAS_SWITCH"], ["OFF"], "bathroom", None),
    ("towel", ["GRABBABLE", "COVER_OBJECT"], [], "bathroom", ("ON_TOP", "bathroomcounter")),
    ("toothpaste", ["GRABBABLE", "POURABLE", "CAN_OPEN", "CREAM"], ["CLOSED"], "bathroom", ("ON_TOP", "bathroomcounter")),
    ("toothbrush", ["GRABBABLE", "RECIPIENT"], [], "bathroom", ("ON_TOP", "bathroomcounter")),
    ("door", ["CAN_OPEN"], ["OPEN"], "bathroom", None),
    # bedroom
    ("floor", [], [], "bedroom", None),
    ("wall", [], [], "bedroom", None),
    ("ceiling", [], [], "bedroom", None),
    ("bed", ["LIEABLE", "SITTABLE", "SURFACES"], [], "bedroom", None),
    ("nightstand", ["SURFACES", "CAN_OPEN", "CONTAINERS"], ["CLOSED"], "bedroom", None),
    ("tablelamp", ["HAS_SWITCH", "HAS_PLUG"], ["OFF", "PLUGGED_IN"], "bedroom", None),
    ("book", ["GRABBABLE", "READABLE", "MOVABLE"], [], "bedroom", ("ON_TOP", "nightstand")),
    ("desk", ["SURFACES", "MOVABLE"], [], "bedroom", None),
    ("computer", ["HAS_SWITCH", "LOOKABLE", "HAS_PLUG"], ["OFF", "PLUGGED_IN"], "bedroom", None),
    ("keyboard", ["GRABBABLE", "HAS_PLUG"], ["PLUGGED_IN"], "bedroom", ("ON_TOP", "desk")),
    ("chair", ["SITTABLE", "MOVABLE"], [], "bedroom", None),
    ("closet", ["CAN_OPEN", "CONTAINERS"], ["CLOSED"], "bedroom", None),
    ("clothesshirt", ["GRABBABLE", "CLOTHES"], [], "bedroom", ("INSIDE", "closet")),
    # kitchen
    ("floor", [], [], "kitchen", None),
    ("wall", [], [], "kitchen", None),
    ("ceiling", [], [], "kitchen", None),
    ("fridge", ["HAS_SWITCH", "CAN_OPEN", "CONTAINERS"], ["ON", "CLOSED"], "kitchen", None),
    ("microwave", ["HAS_SWITCH", "CAN_OPEN", "CONTAINERS", "HAS_PLUG"], ["OFF", "CLOSED", "PLUGGED_IN"], "kitchen", None),
    ("toaster", ["HAS_SWITCH", "CONTAINERS", "HAS_PLUG"], ["OFF", "PLUGGED_IN"], "kitchen", None),
    ("stove", ["HAS_SWITCH", "SURFACES"], ["OFF"], "kitchen", None),
    ("garbagecan", ["CAN_OPEN", "CONTAINERS"], ["CLOSED"], "kitchen", None),
    ("kitchencounter", ["SURFACES"], [], "kitchen", None),
    ("kitchentable", ["SURFACES"], [], "kitchen", None),
    ("kitchencabinet", ["CAN_OPEN", "CONTAINERS"], ["CLOSED"], "kitchen", None),
    ("sink", ["RECIPIENT", "CONTAINERS"], [], "kitchen", None),
    ("faucet", ["HAS_SWITCH"], ["OFF"], "kitchen", None),
    ("apple", ["GRABBABLE", "EATABLE", "CUTTABLE"], [], "kitchen", ("ON_TOP", "kitchencounter")),
    ("breadslice", ["GRABBABLE", "EATABLE", "CUTTABLE"], [], "kitchen", ("ON_TOP", "kitchencounter")),
    ("salmon", ["GRABBABLE", "EATABLE", "CUTTABLE"], [], "kitchen", ("ON_TOP", "kitchencounter")),
    ("coffeepot", ["GRABBABLE", "RECIPIENT", "CAN_OPEN", "CONTAINERS"], ["OPEN"], "kitchen", ("ON_TOP", "kitchencounter")),
    ("chips", ["GRABBABLE", "EATABLE"], [], "kitchen", ("ON_TOP", "kitchentable")),
    ("cupcake", ["GRABBABLE", "EATABLE"], [], "kitchen", ("ON_TOP", "kitchentable")),
    ("mug", ["GRABBABLE", "RECIPIENT", "DRINKABLE"], [], "kitchen", ("INSIDE", "kitchencabinet")),
    # livingroom
    ("floor", [], [], "livingroom", None),
    ("wall", [], [], "livingroom", None),
    ("ceiling", [], [], "livingroom", None),
    ("tv", ["HAS_SWITCH", "LOOKABLE", "HAS_PLUG"], ["OFF", "PLUGGED_IN"], "livingroom", None),
    ("sofa", ["SITTABLE", "LIEABLE", "SURFACES"], [], "livingroom", None),
    ("coffeetable", ["SURFACES", "MOVABLE"], [], "livingroom", None),
    ("light", ["HAS_SWITCH"], ["ON"], "livingroom", None),
    ("light", ["HAS_SWITCH"], ["ON"], "livingroom", None),
    ("cabinet", ["CAN_OPEN", "CONTAINERS", "SURFACES"], ["CLOSED"], "livingroom", None),
    ("plate", ["GRABBABLE", "RECIPIENT", "SURFACES"], ["DIRTY"], "livingroom", ("INSIDE", "cabinet")),
    ("remotecontrol", ["GRABBABLE", "HAS_SWITCH"], ["OFF"], "livingroom", ("ON_TOP", "coffeetable")),
    ("window", ["CAN_OPEN"], ["CLOSED"], "livingroom", None),
]

# Static proximity between fixtures, written both ways.
DESK_CLOSE = [
    ("bathroom", "sink", "faucet"),
    ("bathroom", "sink", "bathroomcounter"),
    ("bathroom", "toilet", "bathtub"),
    ("bedroom", "bed", "nightstand"),
    ("bedroom", "desk", "chair"),
    ("bedroom", "desk", "computer"),
    ("kitchen", "sink", "faucet"),
    ("kitchen", "sink", "kitchencounter"),
    ("kitchen", "stove", "kitchencounter"),
    ("kitchen", "fridge", "kitchencounter"),
    ("kitchen", "microwave", "kitchencounter"),
    ("livingroom", "sofa", "coffeetable"),
    ("livingroom", "tv", "sofa"),
]


def build_desk():
    nodes, edges = [], []
    ids = {}
    for i, (name, props, states, room, _) in enumerate(DESK, start=1):
        nodes.append({"id": i, "name": name, "properties": props, "states": states})
        ids[(name, room)] = i
    for i, (name, _p, _s, room, place) in enumerate(DESK, start=1):
        if room is None:
            continue
        edges.append({"from": i, "kind": "INSIDE", "to": ids[(room, None)]})
        if place:
            kind, holder = place
            edges.append({"from": i, "kind": kind, "to": ids[(holder, room)]})
    for room, a, b in DESK_CLOSE:
        edges.append({"from": ids[(a, room)], "kind": "CLOSE", "to": ids[(b, room)]})
        edges.append({"from": ids[(b, room)], "kind": "CLOSE", "to": ids[(a, room)]})
    agent = ids[("character", None)]
    edges.append({"from": agent, "kind": "CLOSE", "to": ids[("bed", "bedroom")]})
    return {"nodes": nodes, "edges": edges}


SCENERY = [
    ("floor", []), ("wall", []), ("ceiling", []), ("ceilinglamp", []), ("walllamp", []),
    ("doorjamb", []), ("powersocket", []), ("lightswitch", []), ("wallpictureframe", []),
    ("curtains", ["CAN_OPEN", "COVER_OBJECT"]), ("rug", ["SURFACES"]), ("wallshelf", ["SURFACES"]),
    ("photoframe", []), ("candle", []), ("plant", []), ("clock", []), ("vase", []),
    ("hanger", []), ("bookshelf", ["SURFACES"]), ("box", ["CAN_OPEN", "CONTAINERS"]),
]
SCENERY_STATES = {"curtains": ["CLOSED"], "box": ["CLOSED"]}


def build_full(desk, n_objects=452, radius=18, seed=7):
    rng = random.Random(seed)
    nodes = [dict(n) for n in desk["nodes"]]
    edges = [dict(e) for e in desk["edges"]]
    rooms = {n["name"]: n["id"] for n in nodes if "ROOM" in n["properties"]}
    members = {r: [] for r in rooms.values()}
    for e in edges:
        if e["kind"] == "INSIDE" and e["to"] in members:
            members[e["to"]].append(e["from"])
    next_id = max(n["id"] for n in nodes) + 1
    room_ids = sorted(rooms.values())
    while len(nodes) < n_objects:
        room = room_ids[(next_id - 1) % len(room_ids)]
        name, props = SCENERY[rng.randrange(len(SCENERY))]
        nodes.append({"id": next_id, "name": name, "properties": list(props),
                      "states": list(SCENERY_STATES.get(name, []))})
        edges.append({"from": next_id, "kind": "INSIDE", "to": room})
        members[room].append(next_id)
        next_id += 1
    movable = {n["id"] for n in nodes if "GRABBABLE" in n["properties"]}
    seen = {(e["from"], e["kind"], e["to"]) for e in edges}
    for room in room_ids:
        # fixtures sit along a line; things within ``radius`` slots are close
        line = sorted(i for i in members[room] if i not in movable)
        for a, x in enumerate(line):
            for y in line[a + 1:a + 1 + radius]:
                for s, o in ((x, y), (y, x)):
                    if (s, "CLOSE", o) not in seen:
                        seen.add((s, "CLOSE", o))
                        edges.append({"from": s, "kind": "CLOSE", "to": o})
            if a % 3 == 0 and a + 1 < len(line):
                edge = (x, "FACING", line[a + 1])
                if edge not in seen:
                    seen.add(edge)
                    edges.append({"from": x, "kind": "FACING", "to": line[a + 1]})
    return {"nodes": nodes, "edges": edges}


def main():
    desk = build_desk()
    full = build_full(desk)
    for name, doc in (("desk_env.json", desk), ("full_env.json", full)):
        path = DATA / name
        path.write_text(json.dumps(doc, indent=None, separators=(",", ":")) + "\n")
        print(f"{name}: {len(doc['nodes'])} nodes, {len(doc['edges'])} edges")


if __name__ == "__main__":
    main()
