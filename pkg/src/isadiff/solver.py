"""Satisfiability over bounded bitvector symbol domains.

Two tiers:

* joint domain <= 2**16: exhaustive enumeration, lexicographic by symbol
  name then ascending value, so witnesses are reproducible and ``None``
  means the constraint is truly unsatisfiable;
* larger domains: interval propagation over the linear atoms of the
  constraint, exhaustive search if the propagated box is small enough,
  otherwise a seeded random search with a fixed trial budget.
"""
from __future__ import annotations

import itertools
import logging
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from .asl.evaluator import eval_expr
from .asl.nodes import (
    BOOL_OPS, CMP_OPS, Binary, BitLit, Call, Concat, Expr, IfExpr, Index,
    IntLit, Not, SymbolRef, VarRef, static_width,
)
from .asl.symbolic import AuxSymbol, Constraint, Polarity, linearize
from .errors import EvalError, SolverTimeout

log = logging.getLogger(__name__)

EXHAUSTIVE_LIMIT = 1 << 16
RANDOM_BUDGET = 100_000
MAX_WIDTH = 24


@dataclass(frozen=True)
class SymbolDomain:
    symbol: str
    width: int

    def __post_init__(self):
        if not 1 <= self.width <= MAX_WIDTH:
            raise ValueError(f"{self.symbol}: width {self.width} outside [1, {MAX_WIDTH}]")

    @property
    def domain_size(self) -> int:
        return 1 << self.width


@dataclass(frozen=True)
class Witness:
    assignment: Mapping[str, int]
    polarity: Polarity
    aux: Tuple[AuxSymbol, ...] = field(default=(), compare=False)


def domains_for(constraint: Constraint) -> List[SymbolDomain]:
    return [SymbolDomain(n, w) for n, w in sorted(constraint.free_symbols().items())]


# -- compilation -------------------------------------------------------


def _div(a, b):
    if b == 0:
        raise ZeroDivisionError
    return a // b


def _shl(a, b):
    if b < 0:
        raise ZeroDivisionError
    return a << b


def _sint(x, w):
    return x - (1 << w) if x >> (w - 1) & 1 else x


def _sext(x, w, n):
    return x | (((1 << n) - 1) ^ ((1 << w) - 1)) if x >> (w - 1) & 1 else x


_HELPERS = {"_div": _div, "_shl": _shl, "_sint": _sint, "_sext": _sext}
_PY_OPS = {"+": "+", "-": "-", "*": "*", "==": "==", "!=": "!=", "<": "<", ">": ">",
           "<=": "<=", ">=": ">=", "&&": "and", "||": "or"}


def _py(expr: Expr, names: Dict[str, str]) -> str:
    if isinstance(expr, (SymbolRef, VarRef)):
        return names[expr.name]
    if isinstance(expr, (BitLit, IntLit)):
        return str(expr.value)
    if isinstance(expr, Concat):
        return f"(({_py(expr.lhs, names)} << {static_width(expr.rhs)}) | {_py(expr.rhs, names)})"
    if isinstance(expr, Binary):
        a, b = _py(expr.lhs, names), _py(expr.rhs, names)
        if expr.op == "DIV":
            return f"_div({a}, {b})"
        if expr.op == "<<":
            return f"_shl({a}, {b})"
        return f"({a} {_PY_OPS[expr.op]} {b})"
    if isinstance(expr, Not):
        return f"(not {_py(expr.operand, names)})"
    if isinstance(expr, IfExpr):
        return f"({_py(expr.then, names)} if {_py(expr.cond, names)} else {_py(expr.else_, names)})"
    if isinstance(expr, Call):
        x = _py(expr.args[0], names)
        if expr.name in ("UInt", "ZeroExtend"):
            return x
        w = static_width(expr.args[0])
        if expr.name == "SInt":
            return f"_sint({x}, {w})"
        return f"_sext({x}, {w}, {_py(expr.args[1], names)})"
    if isinstance(expr, Index):
        raise ValueError(f"{expr.base}[...] cannot appear in a solver constraint")
    raise TypeError(f"cannot compile {expr!r}")


def compile_predicate(exprs: Sequence[Expr], order: Sequence[str]) -> Callable[..., bool]:
    """A positional-argument predicate equal to the conjunction of ``exprs``."""
    names = {n: f"v{i}" for i, n in enumerate(order)}
    body = " and ".join(f"bool({_py(e, names)})" for e in exprs) or "True"
    src = f"lambda {', '.join(names[n] for n in order)}: {body}"
    return eval(src, dict(_HELPERS))


# -- linear atoms and interval propagation ----------------------------

_FLIP = {"==": "!=", "!=": "==", "<": ">=", ">=": "<", ">": "<=", "<=": ">"}


def _conjuncts(expr: Expr, negate=False) -> Optional[List[Expr]]:
    """Flatten into a conjunction of literals, or None if a disjunction remains."""
    if isinstance(expr, Not):
        return _conjuncts(expr.operand, not negate)
    if isinstance(expr, Binary) and expr.op in BOOL_OPS:
        conj = (expr.op == "&&") != negate
        if not conj:
            return None
        a = _conjuncts(expr.lhs, negate)
        b = _conjuncts(expr.rhs, negate)
        return None if a is None or b is None else a + b
    if negate:
        if isinstance(expr, Binary) and expr.op in CMP_OPS:
            return [Binary(_FLIP[expr.op], expr.lhs, expr.rhs)]
        return [Not(expr)]
    return [expr]


def _linear_atom(expr: Expr):
    """``(coeffs, const, op)`` meaning ``sum(coeffs) + const op 0``."""
    if not (isinstance(expr, Binary) and expr.op in CMP_OPS):
        return None
    a, b = linearize(expr.lhs), linearize(expr.rhs)
    if a is None or b is None:
        return None
    coeffs = dict(a[0])
    for k, v in b[0].items():
        coeffs[k] = coeffs.get(k, 0) - v
    coeffs = {k: v for k, v in coeffs.items() if v}
    const = a[1] - b[1]
    op = expr.op
    # integers: strict -> non-strict
    if op == "<":
        op, const = "<=", const + 1
    elif op == ">":
        op, const = ">=", const - 1
    return coeffs, const, op


def propagate(atoms, lo: Dict[str, int], hi: Dict[str, int], rounds=64) -> bool:
    """Tighten ``lo``/``hi`` in place. Returns False when some box is empty."""
    for _ in range(rounds):
        changed = False
        for coeffs, const, op in atoms:
            if not coeffs:
                ok = {"<=": const <= 0, ">=": const >= 0, "==": const == 0, "!=": const != 0}[op]
                if not ok:
                    return False
                continue
            if op == "!=":
                continue
            for x, c in coeffs.items():
                rmin = const + sum(min(k * lo[y], k * hi[y]) for y, k in coeffs.items() if y != x)
                rmax = const + sum(max(k * lo[y], k * hi[y]) for y, k in coeffs.items() if y != x)
                new_lo, new_hi = lo[x], hi[x]
                if op in ("<=", "=="):
                    # c*x <= -rmin
                    if c > 0:
                        new_hi = min(new_hi, math.floor(-rmin / c))
                    else:
                        new_lo = max(new_lo, math.ceil(-rmin / c))
                if op in (">=", "=="):
                    # c*x >= -rmax
                    if c > 0:
                        new_lo = max(new_lo, math.ceil(-rmax / c))
                    else:
                        new_hi = min(new_hi, math.floor(-rmax / c))
                if new_lo > new_hi:
                    return False
                if (new_lo, new_hi) != (lo[x], hi[x]):
                    lo[x], hi[x] = new_lo, new_hi
                    changed = True
        if not changed:
            break
    return True


# -- solving ------------------------------------------------------------


def _all_exprs(constraint: Constraint) -> List[Expr]:
    return [constraint.goal(), *constraint.path_condition, *constraint.side_constraints]


def _check(constraint: Constraint, env: Mapping[str, int]) -> bool:
    try:
        return all(eval_expr(e, env) for e in _all_exprs(constraint))
    except EvalError:
        return False


def _enumerate(pred, order, ranges):
    for values in itertools.product(*ranges):
        try:
            if pred(*values):
                return dict(zip(order, values))
        except ZeroDivisionError:
            continue
    return None


def solve(constraint: Constraint, domains: Optional[Sequence[SymbolDomain]] = None,
          seed: int = 0, budget: int = RANDOM_BUDGET) -> Optional[Witness]:
    """A witness satisfying the constraint with its path and side constraints.

    Returns None when the constraint is unsatisfiable. Raises
    :class:`SolverTimeout` when the large-domain search runs out of budget.
    """
    if domains is None:
        domains = domains_for(constraint)
    widths = {d.symbol: d.width for d in domains}
    missing = set(constraint.free_symbols()) - set(widths)
    if missing:
        raise ValueError(f"no domain for {sorted(missing)}")
    order = sorted(widths)
    exprs = _all_exprs(constraint)
    pred = compile_predicate(exprs, order)
    size = math.prod(1 << widths[n] for n in order)

    if size <= EXHAUSTIVE_LIMIT:
        found = _enumerate(pred, order, [range(1 << widths[n]) for n in order])
    else:
        found = _solve_large(constraint, exprs, pred, order, widths, seed, budget)
    if found is None:
        return None
    if not _check(constraint, found):
        raise AssertionError(f"solver produced a non-witness {found}")
    return Witness(found, constraint.polarity, constraint.aux)


def _solve_large(constraint, exprs, pred, order, widths, seed, budget):
    lo = {n: 0 for n in order}
    hi = {n: (1 << widths[n]) - 1 for n in order}
    atoms = []
    nonlinear = False
    for e in exprs:
        conj = _conjuncts(e)
        if conj is None:
            nonlinear = True
            continue
        for lit in conj:
            atom = _linear_atom(lit)
            if atom is None:
                nonlinear = True
            else:
                atoms.append(atom)
    if not propagate(atoms, lo, hi):
        return None
    box = math.prod(hi[n] - lo[n] + 1 for n in order)
    if box <= EXHAUSTIVE_LIMIT:
        return _enumerate(pred, order, [range(lo[n], hi[n] + 1) for n in order])
    if nonlinear:
        log.warning("non-linear or disjunctive constraint routed to randomized search: %s",
                    constraint.expr)
    rng = random.Random(seed)
    corners = [sorted({lo[n], hi[n], (lo[n] + hi[n]) // 2}) for n in order]
    trials = 0
    for values in itertools.product(*corners):
        trials += 1
        if trials > budget:
            break
        try:
            if pred(*values):
                return dict(zip(order, values))
        except ZeroDivisionError:
            pass
    while trials < budget:
        trials += 1
        values = [rng.randint(lo[n], hi[n]) for n in order]
        try:
            if pred(*values):
                return dict(zip(order, values))
        except ZeroDivisionError:
            pass
    raise SolverTimeout(budget)


def solve_both(constraint: Constraint, domains: Optional[Sequence[SymbolDomain]] = None,
               seed: int = 0, budget: int = RANDOM_BUDGET
               ) -> Tuple[Optional[Witness], Optional[Witness]]:
    """Witnesses for the guard and for its negation, path condition held in both."""
    pos = solve(constraint.with_polarity(Polarity.ASSERT), domains, seed, budget)
    neg = solve(constraint.with_polarity(Polarity.NEGATE), domains, seed, budget)
    return pos, neg
