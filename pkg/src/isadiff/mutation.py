"""Mutation sets, Cartesian-product stream generation and the stream file."""
from __future__ import annotations

import enum
import hashlib
import io
import itertools
import logging
import random
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .asl.evaluator import DecodeTag, eval_decode
from .asl.symbolic import Constraint, Polarity, extract_constraints, symbolize_in
from .errors import MappingError, SolverTimeout, SpecSyntaxError, SymbolizeError
from .solver import Witness, solve_both
from .spec_ingest import Field, InstructionSpec, SymbolKind

log = logging.getLogger(__name__)

MAX_DRAWS = 64
# FP and SP; random register draws avoid them so fewer streams hit the filter
_AVOID_REGISTERS = (11, 13)


class Origin(str, enum.Enum):
    INIT = "InitRule"
    SOLVED = "Solved"
    CONSTANT = "Constant"


@dataclass
class MutationSet:
    field: Field
    values: List[int] = field(default_factory=list)
    origins: List[Origin] = field(default_factory=list)

    def add(self, value: int, origin: Origin) -> bool:
        if not 0 <= value < (1 << self.field.width):
            raise ValueError(f"{value} does not fit field {self.field.label}")
        if value in self.values:
            return False
        self.values.append(value)
        self.origins.append(origin)
        return True

    def __len__(self):
        return len(self.values)

    def bit_strings(self) -> List[str]:
        return [format(v, f"0{self.field.width}b") for v in self.values]


def field_rng(rng_seed: int, encoding_id: str, field_name: str) -> random.Random:
    digest = hashlib.sha256(f"{rng_seed}\x00{encoding_id}\x00{field_name}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _draw(rng, upper, count, taken, avoid=()):
    """Up to ``count`` new distinct values in [0, upper), MAX_DRAWS attempts each."""
    out = []
    for _ in range(count):
        for _ in range(MAX_DRAWS):
            v = rng.randrange(upper)
            if v not in taken and v not in out and v not in avoid:
                out.append(v)
                break
    return out


def init_mutation_set(fld: Field, rng_seed: int, encoding_id: str = "") -> MutationSet:
    """Initial candidates for one field by its symbol type."""
    ms = MutationSet(fld)
    if fld.is_constant:
        ms.add(int(fld.constant, 2), Origin.CONSTANT)
        return ms
    n = fld.width
    upper = 1 << n
    rng = field_rng(rng_seed, encoding_id, fld.name)
    kind = fld.symbol_type.kind
    if kind is SymbolKind.REGISTER_INDEX:
        fixed = [0, 1, min(15, upper - 1)]
        for v in fixed:
            ms.add(v, Origin.INIT)
        for v in _draw(rng, upper, 4 - len(ms), ms.values, _AVOID_REGISTERS):
            ms.add(v, Origin.INIT)
    elif kind is SymbolKind.IMMEDIATE:
        ms.add(upper - 1, Origin.INIT)
        ms.add(0, Origin.INIT)
        for v in _draw(rng, upper, max(n - 2, 0), ms.values):
            ms.add(v, Origin.INIT)
    elif kind is SymbolKind.CONDITION:
        ms.add(0b1110, Origin.INIT)
    elif n == 1:
        ms.add(0, Origin.INIT)
        ms.add(1, Origin.INIT)
    else:
        for v in _draw(rng, upper, n, ms.values):
            ms.add(v, Origin.INIT)
    return ms


def _coerce(value, width):
    if isinstance(value, str):
        return int(value, 2)
    return int(value)


def build_mutation_sets(spec: InstructionSpec, witnesses: Iterable[Witness], rng_seed: int,
                        init_overrides: Optional[Mapping[str, Sequence]] = None) -> List[MutationSet]:
    """Initial sets per field, augmented with every witness value not yet present.

    ``init_overrides`` replaces the initial set of named fields (values as
    ints or bit-strings), e.g. to pin the random draws to known values.
    Auxiliary witness values are mapped back to the case pattern(s) of the
    symbol that selects them.
    """
    overrides = dict(init_overrides or {})
    sets = []
    by_name: Dict[str, MutationSet] = {}
    for fld in spec.encoding.fields:
        if fld.name in overrides:
            ms = MutationSet(fld)
            for v in overrides.pop(fld.name):
                ms.add(_coerce(v, fld.width), Origin.INIT)
        else:
            ms = init_mutation_set(fld, rng_seed, spec.encoding_id)
        sets.append(ms)
        if fld.name:
            by_name[fld.name] = ms
    if overrides:
        raise KeyError(f"{spec.encoding_id}: overrides for unknown fields {sorted(overrides)}")
    for w in witnesses:
        aux = {a.name: a for a in w.aux}
        for name in sorted(w.assignment):
            value = w.assignment[name]
            if name in by_name:
                by_name[name].add(value, Origin.SOLVED)
            elif name in aux:
                inducing = aux[name].inducing(value)
                if not inducing:
                    raise MappingError(f"{spec.encoding_id}: {name}={value} has no inducing case arm")
                for sym, pattern in inducing:
                    by_name[sym].add(pattern, Origin.SOLVED)
            else:
                raise MappingError(f"{spec.encoding_id}: witness names unknown symbol {name!r}")
    return sets


@dataclass(frozen=True)
class InstructionStream:
    encoding_id: str
    iset: str
    width: int
    word: int
    assignment: Mapping[str, int]
    decode_tag: DecodeTag

    @property
    def hex(self) -> str:
        return format(self.word, f"0{self.width // 4}x")

    def to_bytes(self) -> bytes:
        """In-memory byte order: T32 as two little-endian halfwords, first halfword first."""
        if self.width == 16:
            return self.word.to_bytes(2, "little")
        if self.iset == "T32":
            return (self.word >> 16).to_bytes(2, "little") + (self.word & 0xFFFF).to_bytes(2, "little")
        return self.word.to_bytes(4, "little")


def cartesian_generate(sets: Sequence[MutationSet], spec: InstructionSpec) -> List[InstructionStream]:
    """Every combination of the sets, row-major over field order, with decode tags."""
    enc = spec.encoding
    placed = [[(f.place(v), v) for v in ms.values] for ms, f in ((ms, ms.field) for ms in sets)]
    names = [ms.field.name for ms in sets]
    streams = []
    for combo in itertools.product(*placed):
        word = 0
        assignment = {}
        for name, (bits, value) in zip(names, combo):
            word |= bits
            if name is not None:
                assignment[name] = value
        tag = eval_decode(spec.decode_ast, assignment).tag
        streams.append(InstructionStream(enc.encoding_id, enc.iset, enc.width, word, assignment, tag))
    return streams


# -- whole-encoding pipeline ------------------------------------------


@dataclass
class SolvedConstraint:
    constraint: Constraint
    positive: Optional[Witness]
    negative: Optional[Witness]


@dataclass
class GenerationResult:
    spec: InstructionSpec
    sets: List[MutationSet]
    streams: List[InstructionStream]
    solved: List[SolvedConstraint]
    unsolved: List[Constraint] = field(default_factory=list)
    skipped: int = 0

    @property
    def solved_count(self) -> int:
        return sum(1 for s in self.solved if s.positive is not None or s.negative is not None)


def symbolized_constraints(spec: InstructionSpec) -> Tuple[List[Constraint], int]:
    """Assert-polarity constraints of decode+execute rewritten over symbols.

    Guards that read register or memory contents are not about encoding
    symbols; they are counted and skipped.
    """
    program = spec.program
    out, skipped = [], 0
    for c in extract_constraints(program):
        if c.polarity is not Polarity.ASSERT:
            continue
        try:
            out.append(symbolize_in(program, c))
        except SymbolizeError as exc:
            log.debug("%s: skipping guard: %s", spec.encoding_id, exc)
            skipped += 1
    return out, skipped


def generate(spec: InstructionSpec, rng_seed: int = 42,
             init_overrides: Optional[Mapping[str, Sequence]] = None,
             solver_seed: int = 0) -> GenerationResult:
    constraints, skipped = symbolized_constraints(spec)
    solved, unsolved, witnesses = [], [], []
    for c in constraints:
        try:
            pos, neg = solve_both(c, seed=solver_seed)
        except SolverTimeout:
            log.warning("%s: unsolved constraint %s", spec.encoding_id, c.expr)
            unsolved.append(c)
            continue
        solved.append(SolvedConstraint(c, pos, neg))
        witnesses += [w for w in (pos, neg) if w is not None]
    sets = build_mutation_sets(spec, witnesses, rng_seed, init_overrides)
    streams = cartesian_generate(sets, spec)
    return GenerationResult(spec, sets, streams, solved, unsolved, skipped)


# -- stream file --------------------------------------------------------


def format_stream(s: InstructionStream) -> str:
    pairs = ";".join(f"{k}={v}" for k, v in s.assignment.items())
    return f"{s.encoding_id}\t{s.iset}\t{s.hex}\t{s.decode_tag}\t{pairs}"


def emit_streams(streams: Iterable[InstructionStream], sink, header: Optional[Mapping] = None) -> int:
    """Write the stream file format to ``sink`` (a text file object); returns record count."""
    if header:
        sink.write("# " + " ".join(f"{k}={v}" for k, v in header.items()) + "\n")
    count = 0
    for s in streams:
        sink.write(format_stream(s) + "\n")
        count += 1
    return count


def parse_stream_line(line: str, number: int = 0) -> InstructionStream:
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 5:
        raise SpecSyntaxError(f"stream record needs 5 tab-separated columns, got {len(parts)}", number)
    eid, iset, hexword, tag, pairs = parts
    try:
        word = int(hexword, 16)
        assignment = {}
        for item in filter(None, pairs.split(";")):
            k, v = item.split("=", 1)
            assignment[k] = int(v)
        decode_tag = DecodeTag(tag) if tag not in ("", "-") else None
    except ValueError as exc:
        raise SpecSyntaxError(f"bad stream record: {exc}", number) from None
    return InstructionStream(eid, iset, len(hexword) * 4, word, assignment, decode_tag)


def read_streams(source) -> List[InstructionStream]:
    """Parse a stream file; ``source`` is a path or a text file object."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, encoding="utf-8") as fh:
            return read_streams(fh)
    out = []
    for number, line in enumerate(source, start=1):
        if not line.strip() or line.startswith("#"):
            continue
        out.append(parse_stream_line(line, number))
    return out


def read_header(source) -> Dict[str, str]:
    with open(source, encoding="utf-8") as fh:
        first = fh.readline()
    if not first.startswith("#"):
        return {}
    return dict(item.split("=", 1) for item in first[1:].split() if "=" in item)


def streams_to_text(streams, header=None) -> str:
    buf = io.StringIO()
    emit_streams(streams, buf, header)
    return buf.getvalue()
