"""Instruction-specification corpus: encoding diagrams plus decode/execute ASL.

Corpus records look like::

    [encoding] id=STR-imm-T32 name="STR (immediate)" iset=T32 width=32 tags=LoadStore
    bits: '111110000100'@31:20, Rn@19:16, Rt@15:12, '1'@11:11, P@10:10, U@9:9, W@8:8, imm8@7:0
    decode: <<<
        if Rn == '1111' || (P == '0' && W == '0') then UNDEFINED;
        ...
    >>>
    execute: <<< ... >>>

Lines starting with ``#`` outside ASL blocks are comments.
"""
from __future__ import annotations

import enum
import re
import shlex
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple, Union

from .asl.nodes import AslAst
from .asl.parser import assigned_variables, parse_asl
from .errors import SpecSyntaxError, UnknownIdentifier, ValidationError

ISET_WIDTHS = {"A64": (32,), "A32": (32,), "T32": (16, 32), "T16": (16,)}


class SymbolKind(str, enum.Enum):
    REGISTER_INDEX = "RegisterIndex"
    IMMEDIATE = "Immediate"
    CONDITION = "Condition"
    OTHER = "Other"


@dataclass(frozen=True)
class SymbolType:
    kind: SymbolKind
    bits: Optional[int] = None

    def __str__(self):
        return self.kind.value if self.bits is None else f"{self.kind.value}({self.bits})"


class Category(str, enum.Enum):
    BRANCH = "Branch"
    LOAD_STORE = "LoadStore"
    OTHER = "Other"


_REGISTER_RE = re.compile(r"^[RrVv][dmntas][dmntas0-9]?$")
_IMMEDIATE_RE = re.compile(r"^imm\d+[HL]?$")


def infer_symbol_type(name: str, bit_length: int) -> SymbolType:
    """Classify an encoding symbol by its name.

    >>> infer_symbol_type("Rn", 4)
    SymbolType(kind=<SymbolKind.REGISTER_INDEX: 'RegisterIndex'>, bits=None)
    >>> str(infer_symbol_type("imm8", 8))
    'Immediate(8)'
    """
    if not name:
        raise ValueError("symbol name must be non-empty")
    if _REGISTER_RE.match(name):
        return SymbolType(SymbolKind.REGISTER_INDEX)
    if _IMMEDIATE_RE.match(name):
        return SymbolType(SymbolKind.IMMEDIATE, bit_length)
    if name == "cond":
        return SymbolType(SymbolKind.CONDITION)
    return SymbolType(SymbolKind.OTHER, bit_length)


@dataclass(frozen=True)
class Field:
    """One bit span of an encoding: a fixed bit-string or a named symbol."""

    hi: int
    lo: int
    name: Optional[str] = None
    constant: Optional[str] = None
    symbol_type: Optional[SymbolType] = None

    @property
    def width(self) -> int:
        return self.hi - self.lo + 1

    @property
    def is_constant(self) -> bool:
        return self.constant is not None

    @property
    def mask(self) -> int:
        return ((1 << self.width) - 1) << self.lo

    def place(self, value: int) -> int:
        return (value & ((1 << self.width) - 1)) << self.lo

    def extract(self, word: int) -> int:
        return (word >> self.lo) & ((1 << self.width) - 1)

    @property
    def label(self) -> str:
        return self.name if self.name else f"'{self.constant}'"

    def to_text(self) -> str:
        return f"{self.label}@{self.hi}:{self.lo}"


@dataclass(frozen=True)
class EncodingDiagram:
    encoding_id: str
    instruction_name: str
    iset: str
    width: int
    fields: Tuple[Field, ...]

    @property
    def symbols(self) -> Tuple[Field, ...]:
        return tuple(f for f in self.fields if not f.is_constant)

    @property
    def symbol_widths(self) -> Dict[str, int]:
        return {f.name: f.width for f in self.symbols}

    @property
    def fixed_mask(self) -> int:
        out = 0
        for f in self.fields:
            if f.is_constant:
                out |= f.mask
        return out

    @property
    def fixed_bits(self) -> int:
        out = 0
        for f in self.fields:
            if f.is_constant:
                out |= f.place(int(f.constant, 2))
        return out

    def field(self, name: str) -> Field:
        for f in self.fields:
            if f.name == name:
                return f
        raise KeyError(name)

    def encode(self, assignment: Mapping[str, int]) -> int:
        word = self.fixed_bits
        for f in self.symbols:
            value = assignment[f.name]
            if not 0 <= value < (1 << f.width):
                raise ValueError(f"{f.name}={value} does not fit in {f.width} bits")
            word |= f.place(value)
        return word

    def matches(self, word: int) -> bool:
        return 0 <= word < (1 << self.width) and (word & self.fixed_mask) == self.fixed_bits

    def decode(self, word: int) -> Dict[str, int]:
        """Recover the symbol assignment of ``word`` by field placement."""
        if not self.matches(word):
            raise ValidationError(f"word {word:#x} does not match the encoding's fixed bits",
                                  self.encoding_id)
        return {f.name: f.extract(word) for f in self.symbols}


@dataclass(frozen=True)
class InstructionSpec:
    encoding: EncodingDiagram
    decode_ast: AslAst
    execute_ast: AslAst
    category_tags: FrozenSet[Category] = frozenset()
    decode_text: str = field(default="", compare=False, repr=False)
    execute_text: str = field(default="", compare=False, repr=False)

    @property
    def encoding_id(self) -> str:
        return self.encoding.encoding_id

    @property
    def program(self) -> AslAst:
        """Decode followed by execute, the scope constraints are sliced over."""
        return AslAst(self.decode_ast.statements + self.execute_ast.statements)

    @property
    def is_branch(self) -> bool:
        return Category.BRANCH in self.category_tags


# -- parsing -----------------------------------------------------------

_FIELD_RE = re.compile(r"^(?:(?P<name>[A-Za-z_][A-Za-z0-9_]*)|'(?P<bits>[01]+)')@(?P<hi>\d+):(?P<lo>\d+)$")


def _parse_fields(text: str, line: int, encoding_id: str) -> Tuple[Field, ...]:
    fields = []
    for raw in text.split(","):
        item = raw.strip()
        m = _FIELD_RE.match(item)
        if m is None:
            raise SpecSyntaxError(f"[{encoding_id}] bad field {item!r}", line)
        hi, lo = int(m["hi"]), int(m["lo"])
        if hi < lo:
            raise ValidationError(f"field {item!r} has hi < lo", encoding_id, item)
        if m["bits"] is not None:
            if len(m["bits"]) != hi - lo + 1:
                raise ValidationError(
                    f"constant '{m['bits']}' has {len(m['bits'])} bits but spans [{hi}:{lo}]",
                    encoding_id, item)
            fields.append(Field(hi, lo, constant=m["bits"]))
        else:
            name = m["name"]
            fields.append(Field(hi, lo, name=name, symbol_type=infer_symbol_type(name, hi - lo + 1)))
    return tuple(fields)


def validate_diagram(diagram: EncodingDiagram) -> None:
    eid = diagram.encoding_id
    if diagram.iset not in ISET_WIDTHS:
        raise ValidationError(f"unknown instruction set {diagram.iset!r}", eid)
    if diagram.width not in ISET_WIDTHS[diagram.iset]:
        raise ValidationError(f"width {diagram.width} is invalid for {diagram.iset}", eid)
    expected = diagram.width - 1
    names = set()
    for f in diagram.fields:
        if f.hi > expected:
            raise ValidationError(f"overlap at [{f.hi}:{max(f.lo, expected + 1)}]", eid, f.label)
        if f.hi < expected:
            raise ValidationError(f"gap at [{expected}:{f.hi + 1}]", eid, f.label)
        expected = f.lo - 1
        if f.name is not None:
            if f.name in names:
                raise ValidationError(f"duplicate field name {f.name!r}", eid, f.name)
            names.add(f.name)
            st = f.symbol_type
            if st.kind is SymbolKind.CONDITION and f.width != 4:
                raise ValidationError("cond must be exactly 4 bits", eid, f.name)
            if st.bits is not None and st.bits != f.width:
                raise ValidationError("symbol type width disagrees with field", eid, f.name)
        elif len(f.constant) != f.width:
            raise ValidationError("constant length mismatch", eid, f.label)
    if expected != -1:
        raise ValidationError(f"gap at [{expected}:0]", eid)


def _header(line: str, number: int) -> Dict[str, str]:
    try:
        parts = shlex.split(line[len("[encoding]"):])
    except ValueError as exc:
        raise SpecSyntaxError(f"bad record header: {exc}", number) from None
    out = {}
    for part in parts:
        key, sep, value = part.partition("=")
        if not sep:
            raise SpecSyntaxError(f"expected key=value, got {part!r}", number)
        out[key] = value
    missing = {"id", "name", "iset", "width"} - set(out)
    if missing:
        raise SpecSyntaxError(f"record header missing {sorted(missing)}", number)
    return out


def _read_block(lines, i, key):
    """Return (text, first_line_number, next_index) for ``key: <<< ... >>>``."""
    number, line = lines[i]
    rest = line.split(":", 1)[1].strip()
    if not rest.startswith("<<<"):
        raise SpecSyntaxError(f"expected '<<<' after {key}:", number)
    rest = rest[3:]
    if ">>>" in rest:
        body, tail = rest.split(">>>", 1)
        if tail.strip():
            raise SpecSyntaxError("unexpected text after '>>>'", number)
        return body, number, i + 1
    chunks = [rest] if rest.strip() else []
    first = number if rest.strip() else number + 1
    i += 1
    while i < len(lines):
        n, raw = lines[i]
        if ">>>" in raw:
            body, tail = raw.split(">>>", 1)
            if tail.strip():
                raise SpecSyntaxError("unexpected text after '>>>'", n)
            if body.strip():
                chunks.append(body)
            return "\n".join(chunks), first, i + 1
        chunks.append(raw)
        i += 1
    raise SpecSyntaxError(f"unterminated {key} block", number)


def parse_spec_file(document: Union[bytes, str]) -> List[InstructionSpec]:
    """Parse a corpus document into validated :class:`InstructionSpec` objects.

    Raises :class:`SpecSyntaxError` for malformed records and
    :class:`ValidationError` for coverage gaps/overlaps, constant length
    mismatches or ASL naming unknown symbols.
    """
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SpecSyntaxError(f"corpus is not UTF-8: {exc}") from None
    lines = list(enumerate(document.splitlines(), start=1))
    specs = []
    seen_ids = set()
    i = 0
    while i < len(lines):
        number, line = lines[i]
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            i += 1
            continue
        if not stripped.startswith("[encoding]"):
            raise SpecSyntaxError(f"expected '[encoding]', got {stripped[:40]!r}", number)
        header = _header(stripped, number)
        eid = header["id"]
        if eid in seen_ids:
            raise ValidationError("duplicate encoding id", eid)
        seen_ids.add(eid)
        i += 1
        parts = {}
        while i < len(lines) and len(parts) < 3:
            n, raw = lines[i]
            s = raw.strip()
            if not s or s.startswith("#"):
                i += 1
                continue
            key = s.split(":", 1)[0].strip()
            if key == "bits":
                parts["bits"] = (s.split(":", 1)[1], n)
                i += 1
            elif key in ("decode", "execute"):
                lines[i] = (n, s)
                text, first, i = _read_block(lines, i, key)
                parts[key] = (text, first)
            else:
                break
        for key in ("bits", "decode", "execute"):
            if key not in parts:
                raise SpecSyntaxError(f"[{eid}] record missing '{key}:'", number)
        try:
            width = int(header["width"])
        except ValueError:
            raise SpecSyntaxError(f"[{eid}] width must be an integer", number) from None
        tags = frozenset(_parse_tags(header.get("tags", ""), eid))
        fields = _parse_fields(parts["bits"][0], parts["bits"][1], eid)
        diagram = EncodingDiagram(eid, header["name"], header["iset"], width, fields)
        validate_diagram(diagram)
        symbols = diagram.symbol_widths
        try:
            decode = parse_asl(parts["decode"][0], symbols, first_line=parts["decode"][1])
            execute = parse_asl(parts["execute"][0], symbols, predefined=assigned_variables(decode),
                                first_line=parts["execute"][1])
        except UnknownIdentifier as exc:
            raise ValidationError(f"unknown symbol in ASL: {exc}", eid, exc.name) from None
        except SpecSyntaxError as exc:
            raise SpecSyntaxError(f"[{eid}] {exc}") from None
        specs.append(InstructionSpec(diagram, decode, execute, tags,
                                     parts["decode"][0], parts["execute"][0]))
    return specs


def _parse_tags(text, eid):
    out = []
    for t in filter(None, (x.strip() for x in text.split(","))):
        try:
            out.append(Category(t))
        except ValueError:
            raise ValidationError(f"unknown category tag {t!r}", eid) from None
    return out


def format_spec(spec: InstructionSpec) -> str:
    """Serialize one spec back to the corpus container format."""
    enc = spec.encoding
    tags = ",".join(sorted(t.value for t in spec.category_tags))
    header = (f"[encoding] id={shlex.quote(enc.encoding_id)} name={shlex.quote(enc.instruction_name)} "
              f"iset={enc.iset} width={enc.width} tags={tags}")
    bits = ", ".join(f.to_text() for f in enc.fields)

    def block(text):
        body = "\n".join(line for line in text.splitlines() if line.strip())
        return "<<<\n" + body + "\n>>>" if body else "<<< >>>"

    return (f"{header}\nbits: {bits}\ndecode: {block(spec.decode_text)}\n"
            f"execute: {block(spec.execute_text)}\n")


def format_corpus(specs) -> str:
    return "\n".join(format_spec(s) for s in specs)


def load_corpus(path) -> List[InstructionSpec]:
    with open(path, "rb") as fh:
        return parse_spec_file(fh.read())
