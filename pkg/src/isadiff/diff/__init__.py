"""Differential execution: CPU states, backends, comparison and campaigns."""
from .backends import (
    ExecutorBackend, ProcessBackend, ReplayBackend, ScriptedBackend,
    backend_from_descriptor, render_harness,
)
from .campaign import (
    CampaignConfig, CampaignReport, StreamRecord, read_journal, report_from_journal,
    run_campaign,
)
from .compare import (
    BehaviorCategory, FilterReason, RootCause, Verdict, VerdictKind,
    classify_root_cause, compare_final, prefilter,
)
from .state import CpuState, InitialStateSpec, MemObservation, format_dump, parse_dump

__all__ = [
    "BehaviorCategory", "CampaignConfig", "CampaignReport", "CpuState", "ExecutorBackend",
    "FilterReason", "InitialStateSpec", "MemObservation", "ProcessBackend", "ReplayBackend",
    "RootCause", "ScriptedBackend", "StreamRecord", "Verdict", "VerdictKind",
    "backend_from_descriptor", "classify_root_cause", "compare_final", "format_dump",
    "parse_dump", "prefilter", "read_journal", "render_harness", "report_from_journal",
    "run_campaign",
]
