"""Filtering, the final-state consistency predicate and root-cause labels.

Everything here is pure.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from ..asl.evaluator import DecodeTag, eval_decode
from ..errors import StateSchemaError
from ..spec_ingest import InstructionSpec, SymbolKind
from .state import SIG_HANG, SIG_NONE, SIGILL, CpuState


class VerdictKind(str, enum.Enum):
    CONSISTENT = "Consistent"
    INCONSISTENT = "Inconsistent"
    FILTERED = "Filtered"


class BehaviorCategory(str, enum.Enum):
    SIG_BOTH_NONZERO_DIFFER = "SigBothNonzeroDiffer"
    SIG_EMU_ONLY = "SigEmuOnly"
    SIG_REAL_ONLY = "SigRealOnly"
    SIG_EQUAL_NONZERO_STATE_DIFFER = "SigEqualNonzeroStateDiffer"
    SIG_ZERO_STATE_DIFFER = "SigZeroStateDiffer"
    OTHER = "Other"


class FilterReason(str, enum.Enum):
    SP_FP_ACCESS = "SpFpAccess"
    BRANCH_NORMAL = "BranchNormal"


class RootCause(str, enum.Enum):
    QEMU_BUG_CANDIDATE = "QemuBugCandidate"
    UNPREDICTABLE = "Unpredictable"
    UNDEFINED = "Undefined"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    category: Optional[BehaviorCategory] = None
    reason: Optional[FilterReason] = None
    sig_e: Optional[int] = None
    sig_r: Optional[int] = None

    @classmethod
    def consistent(cls, sig_e=None, sig_r=None) -> "Verdict":
        return cls(VerdictKind.CONSISTENT, sig_e=sig_e, sig_r=sig_r)

    @classmethod
    def inconsistent(cls, category: BehaviorCategory, sig_e=None, sig_r=None) -> "Verdict":
        return cls(VerdictKind.INCONSISTENT, category=category, sig_e=sig_e, sig_r=sig_r)

    @classmethod
    def filtered(cls, reason: FilterReason, sig_e=None, sig_r=None) -> "Verdict":
        return cls(VerdictKind.FILTERED, reason=reason, sig_e=sig_e, sig_r=sig_r)

    @property
    def is_inconsistent(self) -> bool:
        return self.kind is VerdictKind.INCONSISTENT

    @property
    def label(self) -> Optional[str]:
        """Category or filter reason name, None for Consistent."""
        if self.category is not None:
            return self.category.value
        if self.reason is not None:
            return self.reason.value
        return None


# Core-register numbers of FP and SP per execution state.
_SP_FP = {"A64": frozenset({29, 31})}
_SP_FP_AARCH32 = frozenset({11, 13})


def touches_sp_fp(stream, spec: InstructionSpec) -> bool:
    banned = _SP_FP.get(spec.encoding.iset, _SP_FP_AARCH32)
    for fld in spec.encoding.symbols:
        if fld.symbol_type.kind is SymbolKind.REGISTER_INDEX and stream.assignment.get(fld.name) in banned:
            return True
    return False


def prefilter(stream, spec: InstructionSpec, states=None) -> Optional[FilterReason]:
    """Filter reason for a stream, or None.

    Without ``states`` a branch-tagged spec yields a provisional
    ``BranchNormal``. With ``states=(e, r)`` it is confirmed only when both
    sides finished with signal 0.
    """
    if touches_sp_fp(stream, spec):
        return FilterReason.SP_FP_ACCESS
    if spec.is_branch:
        if states is None:
            return FilterReason.BRANCH_NORMAL
        e, r = states
        if e.sig == SIG_NONE and r.sig == SIG_NONE:
            return FilterReason.BRANCH_NORMAL
    return None


def compare_final(e: CpuState, r: CpuState) -> Verdict:
    if len(e.regs) != len(r.regs) and not (e.is_sentinel or r.is_sentinel):
        raise StateSchemaError(f"register count mismatch: {len(e.regs)} vs {len(r.regs)}")
    se, sr = e.sig, r.sig
    if se == SIG_HANG or sr == SIG_HANG:
        return Verdict.inconsistent(BehaviorCategory.OTHER, se, sr)
    if se != sr:
        if se != SIG_NONE and sr != SIG_NONE:
            cat = BehaviorCategory.SIG_BOTH_NONZERO_DIFFER
        elif sr == SIG_NONE:
            cat = BehaviorCategory.SIG_EMU_ONLY
        else:
            cat = BehaviorCategory.SIG_REAL_ONLY
        return Verdict.inconsistent(cat, se, sr)
    same = e.pc == r.pc and e.regs == r.regs and e.sta == r.sta
    if se == SIG_NONE:
        if same and e.mem == r.mem:
            return Verdict.consistent(se, sr)
        return Verdict.inconsistent(BehaviorCategory.SIG_ZERO_STATE_DIFFER, se, sr)
    # memory is excluded when both sides took the same signal
    if same:
        return Verdict.consistent(se, sr)
    return Verdict.inconsistent(BehaviorCategory.SIG_EQUAL_NONZERO_STATE_DIFFER, se, sr)


def classify_root_cause(stream, spec: Optional[InstructionSpec], verdict: Verdict) -> RootCause:
    if not verdict.is_inconsistent:
        raise ValueError("root cause is only defined for inconsistent verdicts")
    tag = stream.decode_tag
    if tag is None and spec is not None:
        tag = eval_decode(spec.decode_ast, stream.assignment).tag
    if tag is DecodeTag.UNPREDICTABLE:
        return RootCause.UNPREDICTABLE
    if tag is DecodeTag.UNDEFINED:
        if verdict.sig_e != SIGILL or verdict.sig_r != SIGILL:
            return RootCause.QEMU_BUG_CANDIDATE
        return RootCause.UNDEFINED
    return RootCause.UNKNOWN
