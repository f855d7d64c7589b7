"""Backward slicing over decode/execute statement lists."""
from __future__ import annotations

from typing import Optional, Set, Tuple

from .nodes import AslAst, Assign, Case, Expr, If, Index, Stmt, var_refs


def _slice_block(stmts: Tuple[Stmt, ...], needed: Set[str]):
    """Slice ``stmts`` in reverse, updating ``needed`` in place.

    An unconditional assignment kills the variable it defines; assignments
    under a branch do not, because the earlier definition may still reach.
    """
    kept = []
    for stmt in reversed(stmts):
        if isinstance(stmt, Assign):
            if isinstance(stmt.target, str) and stmt.target in needed:
                kept.append(stmt)
                needed.discard(stmt.target)
                needed |= var_refs(stmt.rhs)
        elif isinstance(stmt, If):
            then, then_needed = _slice_branch(stmt.then, needed)
            else_, else_needed = _slice_branch(stmt.else_ or (), needed)
            if then or else_:
                kept.append(If(stmt.cond, then, else_ if stmt.else_ is not None and else_ else None,
                               stmt.line))
                needed |= then_needed | else_needed | var_refs(stmt.cond)
        elif isinstance(stmt, Case):
            arms = []
            arm_needed = set()
            for pattern, body in stmt.arms:
                sliced, used = _slice_branch(body, needed)
                arms.append((pattern, sliced))
                arm_needed |= used
            if any(body for _, body in arms):
                kept.append(Case(stmt.scrutinee, tuple(arms), stmt.line))
                needed |= arm_needed | var_refs(stmt.scrutinee)
    kept.reverse()
    return tuple(kept)


def _slice_branch(stmts, needed):
    local = set(needed)
    sliced = _slice_block(tuple(stmts), local)
    # variables still needed inside the branch plus whatever it read
    return sliced, local


def backward_slice(ast: AslAst, target: Expr, upto: Optional[int] = None,
                   extra: Tuple[Expr, ...] = ()) -> AslAst:
    """Statements whose assignments transitively feed ``target``.

    Only the first ``upto`` top-level statements are considered (all when
    None), which is how a guard sees only the definitions preceding it.
    ``extra`` expressions (typically path-condition guards) are sliced for
    together with ``target``. Compound statements are kept with just the
    contributing statements in each branch, so the branch structure that
    selects a definition survives.
    """
    stmts = ast.statements if upto is None else ast.statements[:upto]
    needed = set(var_refs(target))
    for e in extra:
        needed |= var_refs(e)
    return AslAst(_slice_block(stmts, needed))


def defined_names(stmt: Stmt) -> Set[str]:
    if isinstance(stmt, Assign):
        return set() if isinstance(stmt.target, Index) else {stmt.target}
    out = set()
    if isinstance(stmt, If):
        for s in stmt.then + (stmt.else_ or ()):
            out |= defined_names(s)
    elif isinstance(stmt, Case):
        for _, body in stmt.arms:
            for s in body:
                out |= defined_names(s)
    return out
