"""Experiment plans, the resumable runner, the result store and reports."""

from .plan import ExperimentPlan, PlanError, load_plan, plan_from_dict
from .report import emit_report
from .runner import Cell, plan_cells, run_cell, run_plan
from .store import ResultStore, StoreError, read_summary, summarize

__all__ = [
    "Cell",
    "ExperimentPlan",
    "PlanError",
    "ResultStore",
    "StoreError",
    "emit_report",
    "load_plan",
    "plan_cells",
    "plan_from_dict",
    "read_summary",
    "run_cell",
    "run_plan",
    "summarize",
]
