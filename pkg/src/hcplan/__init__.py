"""Selector-guided hill-climbing planning over household environment graphs."""

from .actions import (
    ActionRef,
    GroundedAction,
    SchemaLedger,
    applicable_actions,
    apply,
    bundled_ledger,
    format_action,
    load_ledger,
    parse_action,
    parse_guide_line,
)
from .env import EnvironmentState, ObjectNode, Relation, StateMutation, apply_mutations, load_bundled, load_environment
from .harness import ExperimentConfig, ResultsTable, load_config, render_table, run_experiment, run_guide_only
from .kernel import BACKEND
from .oracle import OracleReport, min_plan_search, order_tasks_by_min_length, validate_plan
from .prompts import Guide, PromptDocument, SelectionResponse, build_selection_prompt, generate_guide, parse_selection
from .search import EpisodeResult, SearchLimits, partition_options, run_episode
from .selectors import make_backend
from .tasks import Status, TaskDefinition, bundled_tasks, classify, parse_condition

__version__ = "0.1.0"

__all__ = [
    "ActionRef", "GroundedAction", "SchemaLedger", "applicable_actions", "apply", "bundled_ledger",
    "format_action", "load_ledger", "parse_action", "parse_guide_line",
    "EnvironmentState", "ObjectNode", "Relation", "StateMutation", "apply_mutations", "load_bundled",
    "load_environment",
    "ExperimentConfig", "ResultsTable", "load_config", "render_table", "run_experiment", "run_guide_only",
    "BACKEND",
    "OracleReport", "min_plan_search", "order_tasks_by_min_length", "validate_plan",
    "Guide", "PromptDocument", "SelectionResponse", "build_selection_prompt", "generate_guide", "parse_selection",
    "EpisodeResult", "SearchLimits", "partition_options", "run_episode",
    "make_backend",
    "Status", "TaskDefinition", "bundled_tasks", "classify", "parse_condition",
]
