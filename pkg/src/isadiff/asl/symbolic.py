"""Constraint extraction and backward symbolic execution.

Every guard in decode/execute code becomes a :class:`Constraint`. Before
solving, :func:`symbolize` rewrites it so that only encoding symbols (and
auxiliary symbols standing for case-selected constants) remain, e.g.::

    d4 > 31   ==>   Vd + 16*D + 3*inc > 31,   inc == 1 || inc == 2
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..errors import EvalError, SymbolizeError, ValidationError
from .evaluator import eval_expr, run_assignments
from .nodes import (
    BOOL_OPS, CMP_OPS, AslAst, Assign, Binary, BitLit, Call, Case, Concat,
    Expr, If, IfExpr, Index, IntLit, Not, SymbolRef, VarRef, static_width,
    symbol_refs, var_refs, walk,
)
from .slicing import backward_slice

MAX_PATH_DEPTH = 8


class Polarity(str, enum.Enum):
    ASSERT = "assert"
    NEGATE = "negate"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class AuxSymbol:
    """A variable assigned a constant in each arm of a ``case`` on a symbol.

    ``options`` lists ``(value, scrutinee symbol, pattern value)``; a witness
    value for the auxiliary maps back to the scrutinee pattern(s) that
    produce it.
    """

    name: str
    width: int
    options: Tuple[Tuple[int, str, int], ...]

    @property
    def values(self) -> Tuple[int, ...]:
        return tuple(sorted({v for v, _, _ in self.options}))

    def defining_constraint(self) -> Expr:
        ref = SymbolRef(self.name, self.width)
        terms = [Binary("==", ref, IntLit(v)) for v in self.values]
        out = terms[0]
        for t in terms[1:]:
            out = Binary("||", out, t)
        return out

    def inducing(self, value: int) -> List[Tuple[str, int]]:
        return [(sym, pat) for v, sym, pat in self.options if v == value]


@dataclass(frozen=True)
class Constraint:
    """A boolean guard plus the enclosing guards under which it is reached.

    ``expr`` is the guard as written in source; it is never pre-negated.
    ``polarity`` selects whether solving targets the guard or its negation.
    ``site`` is the index of the top-level statement holding the guard.
    """

    expr: Expr
    polarity: Polarity = Polarity.ASSERT
    path_condition: Tuple[Expr, ...] = ()
    side_constraints: Tuple[Expr, ...] = ()
    aux: Tuple[AuxSymbol, ...] = ()
    site: Optional[int] = field(default=None, compare=False)

    def with_polarity(self, polarity: Polarity) -> "Constraint":
        return Constraint(self.expr, polarity, self.path_condition, self.side_constraints,
                          self.aux, self.site)

    def goal(self) -> Expr:
        return self.expr if self.polarity is Polarity.ASSERT else Not(self.expr)

    def free_symbols(self) -> Dict[str, int]:
        out = {}
        for e in (self.expr, *self.path_condition, *self.side_constraints):
            out.update(symbol_refs(e))
        return out

    def holds(self, env) -> bool:
        """True when goal, path condition and side constraints all hold."""
        try:
            if not eval_expr(self.goal(), env):
                return False
            return all(eval_expr(e, env) for e in (*self.path_condition, *self.side_constraints))
        except EvalError:
            return False


# -- extraction -------------------------------------------------------


def _bool_vars(ast: AslAst, extra=frozenset()):
    out = set(extra)

    def visit(stmts):
        for stmt in stmts:
            if isinstance(stmt, Assign) and isinstance(stmt.target, str):
                rhs = stmt.rhs
                if isinstance(rhs, Binary) and (rhs.op in CMP_OPS or rhs.op in BOOL_OPS):
                    out.add(stmt.target)
                elif isinstance(rhs, Not) or (isinstance(rhs, VarRef) and rhs.name in out):
                    out.add(stmt.target)
            elif isinstance(stmt, If):
                visit(stmt.then)
                visit(stmt.else_ or ())
            elif isinstance(stmt, Case):
                for _, body in stmt.arms:
                    visit(body)

    visit(ast.statements)
    return frozenset(out)


def _atoms(expr: Expr, bool_vars) -> List[Expr]:
    """Leaves of a boolean formula: comparisons and boolean variables."""
    if isinstance(expr, Binary) and expr.op in BOOL_OPS:
        return _atoms(expr.lhs, bool_vars) + _atoms(expr.rhs, bool_vars)
    if isinstance(expr, Not):
        return _atoms(expr.operand, bool_vars)
    if isinstance(expr, Binary) and expr.op in CMP_OPS:
        return [expr]
    if isinstance(expr, VarRef) and expr.name in bool_vars:
        return [expr]
    return []


def _is_bool(expr, bool_vars):
    if isinstance(expr, Binary):
        return expr.op in CMP_OPS or expr.op in BOOL_OPS
    if isinstance(expr, Not):
        return True
    return isinstance(expr, VarRef) and expr.name in bool_vars


def extract_constraints(ast: AslAst, bool_vars=frozenset()) -> List[Constraint]:
    """All branch constraints in ``ast``, both polarities.

    Sources are If guards, if-expression conditions, case arms (scrutinee ==
    pattern) and boolean-valued assignments such as ``wback = (m != 15)``.
    A compound guard contributes itself and each of its atomic comparisons.
    Duplicates (same guard, same path) are dropped, keeping first occurrence.
    """
    bool_vars = _bool_vars(ast, bool_vars)
    found: List[Constraint] = []
    seen = set()

    def emit(guard, path, site, atoms=True):
        candidates = [guard]
        if atoms:
            candidates += [a for a in _atoms(guard, bool_vars) if a != guard]
        for g in candidates:
            key = (g, path)
            if key in seen:
                continue
            seen.add(key)
            for pol in (Polarity.ASSERT, Polarity.NEGATE):
                found.append(Constraint(g, pol, path, site=site))

    def scan_expr(expr, path, site):
        for e in walk(expr):
            if isinstance(e, IfExpr):
                emit(e.cond, path, site)

    def visit(stmts, path, site):
        if len(path) > MAX_PATH_DEPTH:
            raise ValidationError(f"path condition deeper than {MAX_PATH_DEPTH}")
        for i, stmt in enumerate(stmts):
            s = i if site is None else site
            if isinstance(stmt, Assign):
                if isinstance(stmt.target, str) and _is_bool(stmt.rhs, bool_vars):
                    emit(stmt.rhs, path, s)
                scan_expr(stmt.rhs, path, s)
            elif isinstance(stmt, If):
                emit(stmt.cond, path, s)
                scan_expr(stmt.cond, path, s)
                visit(stmt.then, path + (stmt.cond,), s)
                if stmt.else_:
                    visit(stmt.else_, path + (Not(stmt.cond),), s)
            elif isinstance(stmt, Case):
                scan_expr(stmt.scrutinee, path, s)
                taken = []
                for pattern, body in stmt.arms:
                    if pattern is None:
                        arm_guard = None
                        for t in taken:
                            neg = Not(t)
                            arm_guard = neg if arm_guard is None else Binary("&&", arm_guard, neg)
                        visit(body, path + ((arm_guard,) if arm_guard is not None else ()), s)
                        continue
                    eq = Binary("==", stmt.scrutinee, BitLit(pattern))
                    taken.append(eq)
                    emit(eq, path, s, atoms=False)
                    visit(body, path + (eq,), s)

    visit(ast.statements, (), None)
    return found


# -- symbolization ----------------------------------------------------


def _uint_model(expr: Expr) -> Expr:
    """UInt/ZeroExtend of bitvectors as integer arithmetic on the symbols."""
    if isinstance(expr, Concat):
        width = static_width(expr.rhs)
        if width is None:
            raise SymbolizeError("concatenation of unknown width")
        return Binary("+", _uint_model(expr.rhs), Binary("*", IntLit(1 << width), _uint_model(expr.lhs)))
    if isinstance(expr, BitLit):
        return IntLit(expr.value)
    return expr


def _rewrite(expr: Expr, env: Dict[str, Expr]) -> Expr:
    if isinstance(expr, VarRef):
        if expr.name not in env:
            raise SymbolizeError(f"no definition reaches {expr.name!r}")
        return env[expr.name]
    if isinstance(expr, (SymbolRef, BitLit, IntLit)):
        return expr
    if isinstance(expr, Concat):
        return Concat(_rewrite(expr.lhs, env), _rewrite(expr.rhs, env))
    if isinstance(expr, Call):
        args = tuple(_rewrite(a, env) for a in expr.args)
        if expr.name in ("UInt", "ZeroExtend"):
            return _uint_model(args[0])
        return Call(expr.name, args)
    if isinstance(expr, Binary):
        return Binary(expr.op, _rewrite(expr.lhs, env), _rewrite(expr.rhs, env))
    if isinstance(expr, Not):
        return Not(_rewrite(expr.operand, env))
    if isinstance(expr, IfExpr):
        return IfExpr(_rewrite(expr.cond, env), _rewrite(expr.then, env), _rewrite(expr.else_, env))
    if isinstance(expr, Index):
        raise SymbolizeError(f"{expr.base}[...] has no symbolic value")
    raise SymbolizeError(f"cannot rewrite {expr!r}")


def _const_value(expr: Expr) -> Optional[int]:
    if isinstance(expr, IntLit):
        return expr.value
    if isinstance(expr, BitLit):
        return expr.value
    return None


def _symbolic_run(stmts, env, aux: Dict[str, AuxSymbol]):
    for stmt in stmts:
        if isinstance(stmt, Assign):
            if isinstance(stmt.target, Index):
                continue
            env[stmt.target] = _rewrite(stmt.rhs, env)
        elif isinstance(stmt, If):
            cond = _rewrite(stmt.cond, env)
            then_env = dict(env)
            _symbolic_run(stmt.then, then_env, aux)
            else_env = dict(env)
            _symbolic_run(stmt.else_ or (), else_env, aux)
            for name in set(then_env) | set(else_env):
                a, b = then_env.get(name), else_env.get(name)
                if a is None or b is None:
                    env[name] = a if b is None else b
                elif a != b:
                    env[name] = IfExpr(cond, a, b)
                else:
                    env[name] = a
        elif isinstance(stmt, Case):
            _symbolic_case(stmt, env, aux)


def _symbolic_case(stmt: Case, env, aux):
    scrut = _rewrite(stmt.scrutinee, env)
    arm_envs = []
    for pattern, body in stmt.arms:
        arm_env = dict(env)
        _symbolic_run(body, arm_env, aux)
        arm_envs.append((pattern, arm_env))
    changed = set()
    for _, arm_env in arm_envs:
        changed |= {k for k, v in arm_env.items() if env.get(k) != v}
    for name in sorted(changed):
        values = [(p, e.get(name)) for p, e in arm_envs if e.get(name) is not None]
        consts = [(p, _const_value(v)) for p, v in values]
        if (isinstance(scrut, SymbolRef) and values
                and all(c is not None for _, c in consts) and all(p is not None for p, _ in consts)):
            options = tuple((c, scrut.name, int(p, 2)) for p, c in consts)
            width = max(max(c for _, c in consts).bit_length(), 1)
            aux[name] = AuxSymbol(name, width, options)
            env[name] = SymbolRef(name, width)
            continue
        # general form: nested if-expressions over the arm patterns
        default = None
        for p, v in values:
            if p is None:
                default = v
        chain = default if default is not None else values[-1][1]
        for p, v in reversed(values):
            if p is None or v is chain:
                continue
            chain = IfExpr(Binary("==", scrut, IntLit(int(p, 2))), v, chain)
        env[name] = chain


def domain_constraint(name: str, width: int) -> Expr:
    ref = SymbolRef(name, width)
    return Binary("&&", Binary(">=", ref, IntLit(0)), Binary("<", ref, IntLit(1 << width)))


def symbolize(slice_ast: AslAst, constraint: Constraint) -> Constraint:
    """Rewrite ``constraint`` over encoding symbols using the slice's definitions.

    Auxiliary symbols carry their defining disjunction as a side constraint,
    and every free symbol gets its ``0 <= s < 2**width`` domain constraint.
    """
    env: Dict[str, Expr] = {}
    aux: Dict[str, AuxSymbol] = {}
    _symbolic_run(slice_ast.statements, env, aux)
    expr = simplify(_rewrite(constraint.expr, env))
    path = tuple(simplify(_rewrite(p, env)) for p in constraint.path_condition)
    used_aux = []
    for e in (expr, *path):
        for name in symbol_refs(e):
            if name in aux and aux[name] not in used_aux:
                used_aux.append(aux[name])
    side = [a.defining_constraint() for a in used_aux]
    widths: Dict[str, int] = {}
    for e in (expr, *path, *side):
        widths.update(symbol_refs(e))
    side += [domain_constraint(n, w) for n, w in sorted(widths.items())]
    return Constraint(expr, constraint.polarity, path, tuple(side), tuple(used_aux), constraint.site)


def symbolize_in(program: AslAst, constraint: Constraint) -> Constraint:
    """Slice ``program`` up to the constraint's site, then symbolize."""
    sl = backward_slice(program, constraint.expr, upto=constraint.site,
                        extra=constraint.path_condition)
    return symbolize(sl, constraint)


def aux_values(constraint: Constraint, assignment) -> Dict[str, int]:
    """Auxiliary-symbol values implied by an encoding-symbol assignment."""
    out = {}
    for a in constraint.aux:
        for value, sym, pat in a.options:
            if assignment.get(sym) == pat:
                out[a.name] = value
                break
    return out


def guard_value(program: AslAst, constraint: Constraint, assignment) -> bool:
    """Concrete value of the original guard reached by ``assignment``."""
    stmts = program.statements if constraint.site is None else program.statements[:constraint.site]
    env = run_assignments(stmts, assignment)
    return bool(eval_expr(constraint.expr, env))


# -- linear normal form -----------------------------------------------


def linearize(expr: Expr) -> Optional[Tuple[Dict[str, int], int]]:
    """``(coefficients, constant)`` when ``expr`` is linear in its symbols."""
    if isinstance(expr, SymbolRef):
        return {expr.name: 1}, 0
    if isinstance(expr, (IntLit, BitLit)):
        return {}, expr.value
    if isinstance(expr, Call) and expr.name in ("UInt", "ZeroExtend"):
        return linearize(_uint_model(expr.args[0]))
    if isinstance(expr, Concat):
        return linearize(_uint_model(expr))
    if isinstance(expr, Binary) and expr.op in ("+", "-"):
        a, b = linearize(expr.lhs), linearize(expr.rhs)
        if a is None or b is None:
            return None
        sign = 1 if expr.op == "+" else -1
        coeffs = dict(a[0])
        for k, v in b[0].items():
            coeffs[k] = coeffs.get(k, 0) + sign * v
        return {k: v for k, v in coeffs.items() if v}, a[1] + sign * b[1]
    if isinstance(expr, Binary) and expr.op in ("*", "<<"):
        a, b = linearize(expr.lhs), linearize(expr.rhs)
        if a is None or b is None:
            return None
        if expr.op == "<<":
            if b[0]:
                return None
            return {k: v << b[1] for k, v in a[0].items()}, a[1] << b[1]
        if a[0] and b[0]:
            return None
        (coeffs, c), k = (a, b[1]) if not b[0] else (b, a[1])
        return {s: v * k for s, v in coeffs.items() if v * k}, c * k
    return None


def _from_linear(coeffs: Dict[str, int], const: int, widths: Dict[str, int]) -> Expr:
    terms: List[Expr] = []
    for name, k in coeffs.items():
        ref = SymbolRef(name, widths[name])
        terms.append(ref if k == 1 else Binary("*", IntLit(k), ref))
    if const or not terms:
        terms.append(IntLit(const))
    out = terms[0]
    for t in terms[1:]:
        out = Binary("+", out, t)
    return out


def simplify(expr: Expr) -> Expr:
    """Collect linear arithmetic into ``c1*s1 + c2*s2 + ... + k`` form."""
    if isinstance(expr, Binary) and (expr.op in CMP_OPS or expr.op in BOOL_OPS):
        return Binary(expr.op, simplify(expr.lhs), simplify(expr.rhs))
    if isinstance(expr, Not):
        return Not(simplify(expr.operand))
    if isinstance(expr, IfExpr):
        return IfExpr(simplify(expr.cond), simplify(expr.then), simplify(expr.else_))
    if isinstance(expr, (Binary, Call, Concat)):
        lin = linearize(expr)
        if lin is not None and all(v >= 0 for v in lin[0].values()):
            return _from_linear(lin[0], lin[1], symbol_refs(expr))
    return expr


def constraint_vars(constraint: Constraint):
    return var_refs(constraint.expr).union(*(var_refs(p) for p in constraint.path_condition))
