import json

import pytest

from conftest import COFFEETABLE_LOW
from hcplan.env import apply_mutations
from hcplan.errors import ConfigError
from hcplan.harness import (
    AVERAGES,
    ExperimentConfig,
    ResultRow,
    ResultsTable,
    config_from_mapping,
    load_config,
    parse_table,
    prepare_tasks,
    render_table,
    rep_seed,
    run_experiment,
    run_guide_only,
    table_from_transcripts,
)
from hcplan.prompts import Guide
from hcplan.search import SearchLimits
from hcplan.selectors import guide_lines
from hcplan.oracle import min_plan_search
from hcplan.tasks import Status


def low(text):
    return Guide.from_text(text, "low-level")


@pytest.mark.parametrize("kw", [
    {"repetitions": 0},
    {"guide_mode": "medium"},
    {"execution_mode": "sideways"},
    {"info_level": "everything"},
    {"execution_mode": "guide-only"},
    {"execution_mode": "paired", "guide_mode": "high-level"},
    {"execution_mode": "search-only", "guide_mode": "low-level"},
    {"guide_only_policy": "retry"},
    {"workers": 0},
    {"backend": {"kind": "psychic"}},
])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        ExperimentConfig(**kw)


def test_labels():
    assert ExperimentConfig().labels() == ["NG"]
    assert ExperimentConfig(guide_mode="high-level", info_level="static").labels() == ["HLG/static G+S"]
    assert ExperimentConfig(guide_mode="low-level", execution_mode="paired").labels() == ["LLG G", "LLG G+S"]
    assert ExperimentConfig(guide_mode="low-level", execution_mode="guide-only").labels() == ["LLG G"]


def test_config_from_mapping():
    cfg = config_from_mapping({"name": "x", "limits": {"max_plan_length": 5}})
    assert cfg.limits == SearchLimits(max_plan_length=5)
    assert cfg.to_dict()["limits"]["max_plan_length"] == 5
    with pytest.raises(ConfigError, match="colour"):
        config_from_mapping({"colour": "red"})
    with pytest.raises(ConfigError):
        config_from_mapping({"limits": {"speed": 1}})


def test_load_config(tmp_path):
    path = tmp_path / "exp.toml"
    path.write_text('name = "e"\nrepetitions = 3\n[backend]\nkind = "uniform-random"\n'
                    '[[configurations]]\nguide_mode = "none"\n'
                    '[[configurations]]\nguide_mode = "low-level"\nexecution_mode = "paired"\n')
    a, b = load_config(path, {"repetitions": 2})
    assert a.repetitions == b.repetitions == 2
    assert a.backend == {"kind": "uniform-random"}
    assert b.labels() == ["LLG G", "LLG G+S"]
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("name = ")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_bundled_configs_load():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "configs"
    for path in sorted(root.glob("*.toml")):
        assert load_config(path)


# -- guide-only replay -------------------------------------------------------------


def test_reference_guide_solves_coffeetable(desk, pack):
    res = run_guide_only(desk, pack["bring_items_to_coffeetable"], low(COFFEETABLE_LOW))
    assert res.status is Status.SUCCESS and len(res.plan) == 8


def test_guide_only_abort_and_skip(desk, pack):
    task = pack["watch_tv"]
    text = "walk | livingroom\ngrab | tv\nswitchon | tv\nwatch | tv"
    aborted = run_guide_only(desk, task, low(text))
    assert aborted.status is Status.INEXECUTABLE and len(aborted.plan) == 1
    assert [r.get("outcome") for r in aborted.transcript[:-1]] == ["executed", "aborted"]
    skipped = run_guide_only(desk, task, low(text), policy="skip")
    assert skipped.status is Status.SUCCESS and len(skipped.plan) == 3
    short = run_guide_only(desk, task, low("walk | livingroom"))
    assert short.status is Status.INCOMPLETE
    with pytest.raises(ConfigError):
        run_guide_only(desk, task, low(text), policy="retry")
    with pytest.raises(ConfigError):
        run_guide_only(desk, task, Guide.from_text("Watch it", "high-level"))


def test_guide_only_stops_at_goal(desk, pack):
    task = pack["watch_tv"]
    witness = min_plan_search(desk, task).witness_plan
    text = guide_lines(witness) + "\nwalk | kitchen"
    res = run_guide_only(desk, task, low(text))
    assert res.success and len(res.plan) == len(witness)


def test_adversarial_tv_guide_scores_zero(desk, pack):
    task = pack["watch_tv"]
    guide = low(guide_lines(min_plan_search(desk, task).witness_plan))
    assert any(r.verb == "SWITCHON" for r in guide.refs())
    adversarial = apply_mutations(desk, pack.preset("adversarial"))
    assert run_guide_only(desk, task, guide).success
    assert not run_guide_only(adversarial, task, guide).success


# -- tables --------------------------------------------------------------------------


def sample_table():
    return ResultsTable([
        ResultRow("watch_tv", "NG", 1, 3, 10 / 3, 0.0),
        ResultRow("watch_tv", "LLG G", 3, 3, 3.0, 1 / 7),
        ResultRow("make_toast", "NG", 0, 3, 20.0, 2.5),
    ])


def test_table_round_trip_json_csv_json():
    t = sample_table()
    j = render_table(t, "json")
    again = parse_table(render_table(parse_table(j, "json"), "csv"), "csv")
    assert again == t
    assert render_table(again, "json") == j
    assert json.loads(j)["averages"] == {"NG": pytest.approx(1 / 6), "LLG G": 1.0}


def test_markdown_table():
    md = render_table(sample_table(), "markdown")
    assert "| watch_tv | NG | 1 | 3 | 0.33 | 3.33 | 0.00 |" in md
    assert f"| {AVERAGES} | LLG G | | | 1.00 | | |" in md
    with pytest.raises(ConfigError):
        render_table(sample_table(), "xml")
    with pytest.raises(ConfigError):
        parse_table("", "markdown")


def test_empty_table():
    empty = ResultsTable()
    assert parse_table(render_table(empty, "json"), "json") == empty
    assert parse_table(render_table(empty, "csv"), "csv") == empty
    assert render_table(empty).count("\n") == 2


def test_ordered_and_row():
    t = sample_table().ordered(["make_toast"])
    assert [r.task for r in t.rows] == ["make_toast", "watch_tv", "watch_tv"]
    assert t.row("watch_tv", "LLG G").success_rate == 1.0
    with pytest.raises(KeyError):
        t.row("watch_tv", "HLG")


def test_rep_seed_is_stable():
    assert rep_seed(0, "watch_tv", 1) == rep_seed(0, "watch_tv", 1)
    assert rep_seed(0, "watch_tv", 1) != rep_seed(0, "watch_tv", 2)


# -- experiments -----------------------------------------------------------------------


def test_prepare_tasks_variant_isolation(pack):
    cfg = ExperimentConfig(variant="hint", repetitions=1)
    prepared = prepare_tasks(cfg, pack)
    assert [p.task.name for p in prepared] == ["throw_away_apple", "brush_teeth", "wash_plate"]
    assert all(p.task.hint_suffix for p in prepared)
    no_drop = prepare_tasks(ExperimentConfig(variant="no_drop", tasks=["throw_away_apple"]), pack)[0]
    assert "DROP" not in no_drop.ledger.verbs
    plain = prepare_tasks(ExperimentConfig(tasks=["throw_away_apple"]), pack)[0]
    assert "DROP" in plain.ledger.verbs and plain.task.hint_suffix is None
    with pytest.raises(ConfigError):
        prepare_tasks(ExperimentConfig(variant="hint", tasks=["watch_tv"]), pack)
    with pytest.raises(ConfigError):
        prepare_tasks(ExperimentConfig(variant="nope"), pack)
    with pytest.raises(ConfigError):
        prepare_tasks(ExperimentConfig(tasks=["nope"]), pack)
    with pytest.raises(ConfigError):
        prepare_tasks(ExperimentConfig(preset="nope"), pack)


def test_no_drop_variant_with_oracle(pack):
    cfg = ExperimentConfig(variant="no_drop", tasks=["throw_away_apple"], repetitions=1)
    row = run_experiment(cfg, pack).row("throw_away_apple", "NG")
    assert row.success_rate == 1.0 and row.mean_retries == 0


def test_reproducible_random_runs(pack, tmp_path):
    cfg = dict(tasks=["watch_tv", "make_toast"], repetitions=4, seed=11,
               backend={"kind": "uniform-random"}, limits=SearchLimits(max_plan_length=6))

    def run(name, **kw):
        out = tmp_path / name
        table = run_experiment(ExperimentConfig(**{**cfg, **kw}, transcript_dir=str(out)), pack)
        files = {p.relative_to(out): p.read_text() for p in sorted(out.rglob("*.jsonl"))}
        return render_table(table, "json"), files

    a, b, c = run("a"), run("b", workers=3), run("c", seed=12)
    assert a == b
    assert a[1] != c[1]


def test_transcripts_rebuild_table(pack, tmp_path):
    cfg = ExperimentConfig(tasks=["watch_tv"], repetitions=2, guide_mode="low-level", execution_mode="paired",
                           transcript_dir=str(tmp_path))
    table = run_experiment(cfg, pack)
    files = sorted(p.relative_to(tmp_path).as_posix() for p in tmp_path.rglob("*.jsonl"))
    assert files == ["LLG_G+S/watch_tv/rep-000.jsonl", "LLG_G+S/watch_tv/rep-001.jsonl",
                     "LLG_G/watch_tv/rep-000.jsonl", "LLG_G/watch_tv/rep-001.jsonl"]
    first = json.loads((tmp_path / files[0]).read_text().splitlines()[0])
    assert first["configuration"] == "LLG G+S" and first["task"] == "watch_tv" and first["repetition"] == 0
    assert render_table(table_from_transcripts(tmp_path), "json") == render_table(table, "json")
    with pytest.raises(ConfigError):
        table_from_transcripts(tmp_path / "empty")


def test_guide_backend_failure_is_recorded(pack):
    cfg = ExperimentConfig(tasks=["watch_tv"], repetitions=1, guide_mode="low-level",
                           guide_backend={"kind": "fixed-text", "text": "not a guide line"})
    row = run_experiment(cfg, pack).row("watch_tv", "LLG G+S")
    assert row.successes == 0


def test_precomputed_and_cached_guides(pack):
    cfg = ExperimentConfig(tasks=["bring_items_to_coffeetable"], repetitions=2, guide_mode="low-level",
                           execution_mode="guide-only", guides={"bring_items_to_coffeetable": COFFEETABLE_LOW})
    assert run_experiment(cfg, pack).rows[0].success_rate == 1.0
    cached = ExperimentConfig(tasks=["watch_tv"], repetitions=3, guide_mode="high-level", cache_guide=True)
    assert run_experiment(cached, pack).rows[0].success_rate == 1.0


def test_skip_policy_notes_unrunnable_line(desk, pack):
    guide = low("putin | salmon | microwave\nwalk | kitchen")
    res = run_guide_only(desk, pack["microwave_salmon"], guide, policy="skip")
    outcomes = [(r["text"], r["outcome"]) for r in res.transcript if r.get("stage") == "guide-line"]
    assert outcomes == [("putin | salmon | microwave", "skipped"), ("walk | kitchen", "executed")]
    assert res.status is Status.INCOMPLETE and len(res.plan) == 1
