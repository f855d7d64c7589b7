"""Campaign orchestration, the JSON-lines journal and the aggregate report."""
from __future__ import annotations

import json
import logging
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from ..errors import JournalCorrupt, UnknownEncoding
from ..spec_ingest import InstructionSpec
from .compare import (
    BehaviorCategory, FilterReason, RootCause, Verdict, VerdictKind,
    classify_root_cause, compare_final, prefilter,
)
from .state import InitialStateSpec

log = logging.getLogger(__name__)


@dataclass
class CampaignConfig:
    timeout: float = 5.0
    workers: int = 1
    seed: int = 42
    journal_path: Optional[str] = None
    resume: bool = False
    init: InitialStateSpec = field(default_factory=InitialStateSpec)


@dataclass(frozen=True)
class StreamRecord:
    encoding_id: str
    word: str
    verdict: str
    category: Optional[str]
    root_cause: Optional[str]
    instruction: str = ""
    sig_e: Optional[int] = None
    sig_r: Optional[int] = None

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)

    @classmethod
    def from_dict(cls, d: Mapping) -> "StreamRecord":
        try:
            return cls(d["encoding_id"], d["word"], d["verdict"], d.get("category"),
                       d.get("root_cause"), d.get("instruction", ""), d.get("sig_e"), d.get("sig_r"))
        except (KeyError, TypeError) as exc:
            raise JournalCorrupt(f"record lacks field {exc}") from None

    @property
    def key(self) -> Tuple[str, str]:
        return self.encoding_id, self.word


def evaluate_stream(stream, spec: InstructionSpec, backend_e, backend_r,
                    config: CampaignConfig) -> StreamRecord:
    """Filter, execute on both sides and classify one stream."""
    name = spec.encoding.instruction_name or spec.encoding_id
    if prefilter(stream, spec) is FilterReason.SP_FP_ACCESS:
        return StreamRecord(stream.encoding_id, stream.hex, VerdictKind.FILTERED.value,
                            FilterReason.SP_FP_ACCESS.value, None, name)
    e = backend_e.run(stream, config.init, config.timeout)
    r = backend_r.run(stream, config.init, config.timeout)
    reason = prefilter(stream, spec, states=(e, r))
    if reason is not None:
        verdict = Verdict.filtered(reason, e.sig, r.sig)
    else:
        verdict = compare_final(e, r)
    root = classify_root_cause(stream, spec, verdict).value if verdict.is_inconsistent else None
    return StreamRecord(stream.encoding_id, stream.hex, verdict.kind.value, verdict.label, root,
                        name, e.sig, r.sig)


# -- journal --------------------------------------------------------------


def read_journal(path) -> Tuple[Dict, List[StreamRecord]]:
    """Header and records. A torn final line (crash mid-write) is dropped."""
    header: Dict = {}
    records: List[StreamRecord] = []
    with open(path, encoding="utf-8") as fh:
        lines = fh.readlines()
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            if i == len(lines) - 1 and not line.endswith("\n"):
                log.warning("%s: dropping torn final record", path)
                break
            raise JournalCorrupt(f"{path}:{i + 1}: not JSON") from None
        if not isinstance(obj, dict):
            raise JournalCorrupt(f"{path}:{i + 1}: record is not an object")
        if "header" in obj:
            header = obj["header"]
            continue
        records.append(StreamRecord.from_dict(obj))
    return header, records


def _rewrite(path, header, records):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"header": header}, sort_keys=True) + "\n")
        for rec in records:
            fh.write(rec.to_json() + "\n")
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


class Journal:
    def __init__(self, path, header: Mapping, resume: bool):
        self.path = path
        self.done: List[StreamRecord] = []
        if resume and os.path.exists(path):
            old_header, self.done = read_journal(path)
            if old_header.get("seed") not in (None, header.get("seed")):
                log.warning("resuming journal recorded with seed %s", old_header.get("seed"))
            header = {**old_header, **header}
        _rewrite(path, dict(header), self.done)
        self.fh = open(path, "a", encoding="utf-8")

    def append(self, rec: StreamRecord):
        self.fh.write(rec.to_json() + "\n")
        self.fh.flush()
        os.fsync(self.fh.fileno())

    def close(self):
        self.fh.close()


# -- report -------------------------------------------------------------


@dataclass
class Tally:
    streams: int = 0
    encodings: Set[str] = field(default_factory=set)
    instructions: Set[str] = field(default_factory=set)

    def add(self, rec: StreamRecord):
        self.streams += 1
        self.encodings.add(rec.encoding_id)
        self.instructions.add(rec.instruction or rec.encoding_id)


def _pct(n, d):
    return 100.0 * n / d if d else 0.0


@dataclass
class CampaignReport:
    records: List[StreamRecord] = field(default_factory=list)
    total_streams: int = 0
    total_encodings: int = 0
    total_instructions: int = 0
    seed: Optional[int] = None

    @classmethod
    def from_records(cls, records: Sequence[StreamRecord], total_streams: Optional[int] = None,
                     total_encodings: Optional[int] = None, total_instructions: Optional[int] = None,
                     seed: Optional[int] = None) -> "CampaignReport":
        records = list(records)
        encs = {r.encoding_id for r in records}
        insts = {r.instruction or r.encoding_id for r in records}
        return cls(records,
                   len(records) if total_streams is None else total_streams,
                   len(encs) if total_encodings is None else total_encodings,
                   len(insts) if total_instructions is None else total_instructions,
                   seed)

    def _tally(self, pred) -> Tally:
        t = Tally()
        for r in self.records:
            if pred(r):
                t.add(r)
        return t

    @property
    def filtered(self) -> Dict[str, int]:
        return dict(Counter(r.category for r in self.records if r.verdict == VerdictKind.FILTERED.value))

    @property
    def consistent(self) -> int:
        return sum(1 for r in self.records if r.verdict == VerdictKind.CONSISTENT.value)

    @property
    def compared(self) -> int:
        return sum(1 for r in self.records if r.verdict != VerdictKind.FILTERED.value)

    def inconsistent(self) -> Tally:
        return self._tally(lambda r: r.verdict == VerdictKind.INCONSISTENT.value)

    def by_category(self) -> Dict[str, Tally]:
        return {c.value: self._tally(lambda r, c=c: r.verdict == VerdictKind.INCONSISTENT.value
                                     and r.category == c.value) for c in BehaviorCategory}

    def by_root_cause(self) -> Dict[str, Tally]:
        return {c.value: self._tally(lambda r, c=c: r.root_cause == c.value) for c in RootCause}

    def category_counts(self) -> Dict[str, int]:
        return {k: t.streams for k, t in self.by_category().items()}

    def root_cause_counts(self) -> Dict[str, int]:
        return {k: t.streams for k, t in self.by_root_cause().items()}

    def summary(self) -> Dict:
        inc = self.inconsistent()

        def row(t: Tally, denom):
            return {"streams": t.streams, "stream_pct": round(_pct(t.streams, denom), 3),
                    "encodings": len(t.encodings), "instructions": len(t.instructions)}

        return {
            "seed": self.seed,
            "generated_streams": self.total_streams,
            "total_encodings": self.total_encodings,
            "total_instructions": self.total_instructions,
            "filtered": self.filtered,
            "compared": self.compared,
            "consistent": self.consistent,
            "inconsistent": {**row(inc, self.total_streams),
                             "encoding_pct": round(_pct(len(inc.encodings), self.total_encodings), 3),
                             "instruction_pct": round(_pct(len(inc.instructions), self.total_instructions), 3)},
            "behaviors": {k: row(t, inc.streams) for k, t in self.by_category().items()},
            "root_causes": {k: row(t, inc.streams) for k, t in self.by_root_cause().items()},
        }

    def render_table(self) -> str:
        inc = self.inconsistent()
        lines = []
        if self.seed is not None:
            lines.append(f"# seed={self.seed}")
        lines += [
            f"generated streams: {self.total_streams}   filtered: "
            + (", ".join(f"{k}={v}" for k, v in sorted(self.filtered.items())) or "0")
            + f"   consistent: {self.consistent}",
            "",
            f"{'':<32}{'streams':>22}{'[Enc | Inst]':>16}",
            f"{'Inconsistent streams':<32}{_cell(inc.streams, self.total_streams):>22}"
            f"{_pair(inc):>16}",
            f"{'Inconsistent encodings':<32}{_cell(len(inc.encodings), self.total_encodings):>22}",
            f"{'Inconsistent instructions':<32}{_cell(len(inc.instructions), self.total_instructions):>22}",
            "",
            "Behaviors",
        ]
        for name, t in self.by_category().items():
            lines.append(f"  {name:<30}{_cell(t.streams, inc.streams):>22}{_pair(t):>16}")
        lines += ["", "Root causes"]
        for name, t in self.by_root_cause().items():
            lines.append(f"  {name:<30}{_cell(t.streams, inc.streams):>22}{_pair(t):>16}")
        return "\n".join(lines) + "\n"


def _cell(n, d):
    return f"<{n} | {_pct(n, d):.1f}%>"


def _pair(t: Tally):
    return f"[{len(t.encodings)} | {len(t.instructions)}]"


def run_campaign(streams: Iterable, backend_e, backend_r, config: CampaignConfig,
                 specs: Mapping[str, InstructionSpec]) -> CampaignReport:
    """Compare every stream on both backends.

    Streams already present in a resumed journal are not re-executed.
    A :class:`BackendError` propagates; records written before it stay in
    the journal.
    """
    streams = list(streams)
    for s in streams:
        if s.encoding_id not in specs:
            raise UnknownEncoding(s.encoding_id)
    header = {"seed": config.seed, "generated_streams": len(streams),
              "backend_e": getattr(backend_e, "name", "?"), "backend_r": getattr(backend_r, "name", "?")}
    journal = Journal(config.journal_path, header, config.resume) if config.journal_path else None
    done = {r.key: r for r in journal.done} if journal else {}
    pending = [s for s in streams if (s.encoding_id, s.hex) not in done]

    def work(stream):
        return evaluate_stream(stream, specs[stream.encoding_id], backend_e, backend_r, config)

    fresh: Dict[Tuple[str, str], StreamRecord] = {}
    try:
        with ThreadPoolExecutor(max_workers=max(1, config.workers)) as pool:
            # map yields in submission order, so the journal order is deterministic
            for rec in pool.map(work, pending):
                fresh[rec.key] = rec
                if journal:
                    journal.append(rec)
    finally:
        if journal:
            journal.close()
    records = [fresh.get((s.encoding_id, s.hex)) or done[(s.encoding_id, s.hex)] for s in streams]
    instructions = {spec.encoding.instruction_name or eid for eid, spec in specs.items()}
    return CampaignReport.from_records(records, len(streams), len(specs), len(instructions), config.seed)


def report_from_journal(path, specs: Optional[Mapping[str, InstructionSpec]] = None) -> CampaignReport:
    header, records = read_journal(path)
    total = header.get("generated_streams")
    encs = insts = None
    if specs:
        encs = len(specs)
        insts = len({s.encoding.instruction_name or eid for eid, s in specs.items()})
    return CampaignReport.from_records(records, total, encs, insts, header.get("seed"))
