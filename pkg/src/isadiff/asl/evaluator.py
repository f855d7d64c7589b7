"""Concrete integer semantics for ASL expressions and decode programs."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, Mapping

from ..errors import EvalError
from .nodes import (
    AslAst, Assign, Binary, BitLit, Call, Case, Concat, Expr, If, IfExpr,
    Index, IntLit, Not, SymbolRef, Undefined, Unpredictable, VarRef,
    static_width,
)


class DecodeTag(str, enum.Enum):
    OK = "Ok"
    UNDEFINED = "Undefined"
    UNPREDICTABLE = "Unpredictable"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class DecodeOutcome:
    tag: DecodeTag
    bindings: Mapping[str, object] = field(default_factory=dict)


def eval_expr(expr: Expr, env: Mapping[str, object]):
    """Evaluate ``expr`` with bitvectors as unsigned ints and booleans as bools."""
    if isinstance(expr, (SymbolRef, VarRef)):
        try:
            return env[expr.name]
        except KeyError:
            raise EvalError(f"unbound name {expr.name!r}") from None
    if isinstance(expr, BitLit):
        return expr.value
    if isinstance(expr, IntLit):
        return expr.value
    if isinstance(expr, Concat):
        width = static_width(expr.rhs)
        if width is None:
            raise EvalError("concatenation operand of unknown width")
        return (eval_expr(expr.lhs, env) << width) | eval_expr(expr.rhs, env)
    if isinstance(expr, Binary):
        op = expr.op
        if op == "&&":
            return bool(eval_expr(expr.lhs, env)) and bool(eval_expr(expr.rhs, env))
        if op == "||":
            return bool(eval_expr(expr.lhs, env)) or bool(eval_expr(expr.rhs, env))
        a = eval_expr(expr.lhs, env)
        b = eval_expr(expr.rhs, env)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "DIV":
            if b == 0:
                raise EvalError("division by zero")
            return a // b
        if op == "<<":
            if b < 0:
                raise EvalError("negative shift amount")
            return a << b
        if op == "==":
            return a == b
        if op == "!=":
            return a != b
        if op == "<":
            return a < b
        if op == ">":
            return a > b
        if op == "<=":
            return a <= b
        if op == ">=":
            return a >= b
        raise EvalError(f"unknown operator {op!r}")
    if isinstance(expr, Not):
        return not eval_expr(expr.operand, env)
    if isinstance(expr, IfExpr):
        if eval_expr(expr.cond, env):
            return eval_expr(expr.then, env)
        return eval_expr(expr.else_, env)
    if isinstance(expr, Call):
        x = eval_expr(expr.args[0], env)
        if expr.name in ("UInt", "ZeroExtend"):
            return x
        width = static_width(expr.args[0])
        if expr.name == "SInt":
            return x - (1 << width) if x >> (width - 1) & 1 else x
        if expr.name == "SignExtend":
            n = eval_expr(expr.args[1], env)
            if x >> (width - 1) & 1:
                return x | (((1 << n) - 1) ^ ((1 << width) - 1))
            return x
        raise EvalError(f"unknown builtin {expr.name!r}")
    if isinstance(expr, Index):
        raise EvalError(f"{expr.base}[...] is an execute-phase effect and is not interpreted")
    raise EvalError(f"cannot evaluate {expr!r}")


class _Stop(Exception):
    def __init__(self, tag):
        self.tag = tag


def _run(stmts, env):
    for stmt in stmts:
        if isinstance(stmt, Assign):
            if isinstance(stmt.target, Index):
                raise EvalError(f"line {stmt.line}: writes to {stmt.target.base}[...] are not interpreted")
            env[stmt.target] = eval_expr(stmt.rhs, env)
        elif isinstance(stmt, If):
            if eval_expr(stmt.cond, env):
                _run(stmt.then, env)
            elif stmt.else_:
                _run(stmt.else_, env)
        elif isinstance(stmt, Case):
            value = eval_expr(stmt.scrutinee, env)
            for pattern, body in stmt.arms:
                if pattern is None or int(pattern, 2) == value:
                    _run(body, env)
                    break
            else:
                raise _Stop(DecodeTag.UNDEFINED)
        elif isinstance(stmt, Undefined):
            raise _Stop(DecodeTag.UNDEFINED)
        elif isinstance(stmt, Unpredictable):
            raise _Stop(DecodeTag.UNPREDICTABLE)


def eval_decode(ast: AslAst, assignment: Mapping[str, int]) -> DecodeOutcome:
    """Run a decode program under a full symbol assignment.

    Stops at the first UNDEFINED/UNPREDICTABLE reached. A ``case`` with no
    matching arm and no ``otherwise`` also decodes as UNDEFINED.
    """
    env: Dict[str, object] = dict(assignment)
    try:
        _run(ast.statements, env)
    except _Stop as stop:
        return DecodeOutcome(stop.tag)
    bindings = {k: v for k, v in env.items() if k not in assignment}
    return DecodeOutcome(DecodeTag.OK, bindings)


def run_assignments(stmts, assignment: Mapping[str, int]) -> Dict[str, object]:
    """Execute ``stmts`` for their variable bindings only.

    UNDEFINED/UNPREDICTABLE and writes to register/memory arrays are skipped,
    so the result reflects the value every variable would take on the path
    selected by ``assignment``. Used to compare guards against their
    symbolized forms.
    """
    env: Dict[str, object] = dict(assignment)

    def run(block):
        for stmt in block:
            if isinstance(stmt, Assign):
                if isinstance(stmt.target, str):
                    env[stmt.target] = eval_expr(stmt.rhs, env)
            elif isinstance(stmt, If):
                if eval_expr(stmt.cond, env):
                    run(stmt.then)
                elif stmt.else_:
                    run(stmt.else_)
            elif isinstance(stmt, Case):
                value = eval_expr(stmt.scrutinee, env)
                for pattern, body in stmt.arms:
                    if pattern is None or int(pattern, 2) == value:
                        run(body)
                        break

    run(stmts.statements if isinstance(stmts, AslAst) else stmts)
    return env
