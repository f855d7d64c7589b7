"""Immutable AST for the ASL subset found in decode/execute pseudocode.

Expressions and statements are frozen dataclasses so they hash, compare
structurally and can be shared freely between workers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

BUILTINS = {"UInt": 1, "SInt": 1, "ZeroExtend": 2, "SignExtend": 2}

# Register/memory arrays that may appear indexed in execute code. They are
# parsed and sliced but never interpreted.
ARRAYS = frozenset({"R", "X", "D", "S", "Q", "Mem", "MemU", "MemA"})

ARITH_OPS = frozenset({"+", "-", "*", "DIV", "<<"})
CMP_OPS = frozenset({"==", "!=", "<", ">", "<=", ">="})
BOOL_OPS = frozenset({"&&", "||"})


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class SymbolRef(Expr):
    """An encoding symbol, or an auxiliary symbol introduced by symbolization."""

    name: str
    width: int


@dataclass(frozen=True)
class VarRef(Expr):
    name: str
    width: Optional[int] = None


@dataclass(frozen=True)
class BitLit(Expr):
    bits: str

    @property
    def value(self) -> int:
        return int(self.bits, 2)

    @property
    def width(self) -> int:
        return len(self.bits)


@dataclass(frozen=True)
class IntLit(Expr):
    value: int


@dataclass(frozen=True)
class Concat(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Call(Expr):
    name: str
    args: Tuple[Expr, ...]


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Not(Expr):
    operand: Expr


@dataclass(frozen=True)
class IfExpr(Expr):
    cond: Expr
    then: Expr
    else_: Expr


@dataclass(frozen=True)
class Index(Expr):
    """``R[n]`` / ``MemU[address, 4]``: an execute-phase location."""

    base: str
    args: Tuple[Expr, ...]


class Stmt:
    __slots__ = ()


@dataclass(frozen=True)
class Assign(Stmt):
    target: Union[str, Index]
    rhs: Expr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class If(Stmt):
    cond: Expr
    then: Tuple[Stmt, ...]
    else_: Optional[Tuple[Stmt, ...]] = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Case(Stmt):
    """``case X of when 'p' ...``.

    An arm whose pattern is ``None`` is the ``otherwise`` arm. Without one,
    a scrutinee matching no arm decodes as UNDEFINED (the stream belongs to
    some other encoding).
    """

    scrutinee: Expr
    arms: Tuple[Tuple[Optional[str], Tuple[Stmt, ...]], ...]
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Undefined(Stmt):
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Unpredictable(Stmt):
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class AslAst:
    statements: Tuple[Stmt, ...] = ()

    def __iter__(self):
        return iter(self.statements)

    def __len__(self):
        return len(self.statements)


def static_width(expr: Expr) -> Optional[int]:
    """Bit width of a bitvector-valued expression, or None when unknown."""
    if isinstance(expr, (SymbolRef, BitLit)):
        return expr.width
    if isinstance(expr, VarRef):
        return expr.width
    if isinstance(expr, Concat):
        a, b = static_width(expr.lhs), static_width(expr.rhs)
        return None if a is None or b is None else a + b
    if isinstance(expr, Call) and expr.name in ("ZeroExtend", "SignExtend"):
        n = expr.args[1]
        return n.value if isinstance(n, IntLit) else None
    if isinstance(expr, IfExpr):
        a, b = static_width(expr.then), static_width(expr.else_)
        return a if a == b else None
    return None


def children(expr: Expr) -> Tuple[Expr, ...]:
    if isinstance(expr, (Concat, Binary)):
        return (expr.lhs, expr.rhs)
    if isinstance(expr, (Call, Index)):
        return expr.args
    if isinstance(expr, Not):
        return (expr.operand,)
    if isinstance(expr, IfExpr):
        return (expr.cond, expr.then, expr.else_)
    return ()


def walk(expr: Expr):
    stack = [expr]
    while stack:
        e = stack.pop()
        yield e
        stack.extend(reversed(children(e)))


def var_refs(expr: Expr) -> set:
    return {e.name for e in walk(expr) if isinstance(e, VarRef)}


def symbol_refs(expr: Expr) -> dict:
    """Map of symbol name to width for every SymbolRef in ``expr``."""
    return {e.name: e.width for e in walk(expr) if isinstance(e, SymbolRef)}


def is_boolean(expr: Expr, bool_vars=frozenset()) -> bool:
    if isinstance(expr, Binary):
        return expr.op in CMP_OPS or expr.op in BOOL_OPS
    if isinstance(expr, Not):
        return True
    if isinstance(expr, VarRef):
        return expr.name in bool_vars
    if isinstance(expr, IfExpr):
        return is_boolean(expr.then, bool_vars) and is_boolean(expr.else_, bool_vars)
    return False


_PREC = {"||": 1, "&&": 2, "==": 3, "!=": 3, "<": 3, ">": 3, "<=": 3, ">=": 3,
         "<<": 4, "+": 5, "-": 5, "*": 6, "DIV": 6}


def to_text(node, _parent_prec=0) -> str:
    """Render an expression back to ASL-like source text."""
    if isinstance(node, (SymbolRef, VarRef)):
        return node.name
    if isinstance(node, BitLit):
        return f"'{node.bits}'"
    if isinstance(node, IntLit):
        return str(node.value)
    if isinstance(node, Concat):
        return f"{to_text(node.lhs, 8)}:{to_text(node.rhs, 8)}"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_text(a) for a in node.args)})"
    if isinstance(node, Index):
        return f"{node.base}[{', '.join(to_text(a) for a in node.args)}]"
    if isinstance(node, Not):
        return f"!{to_text(node.operand, 9)}"
    if isinstance(node, IfExpr):
        text = f"if {to_text(node.cond)} then {to_text(node.then)} else {to_text(node.else_)}"
        return f"({text})" if _parent_prec else text
    if isinstance(node, Binary):
        prec = _PREC[node.op]
        text = f"{to_text(node.lhs, prec)} {node.op} {to_text(node.rhs, prec + 1)}"
        return f"({text})" if prec < _parent_prec else text
    raise TypeError(f"not an expression: {node!r}")
