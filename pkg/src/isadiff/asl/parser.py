"""Parser for the ASL subset.

Blocks are delimited by indentation, as in ARM's published pseudocode::

    case type of
        when '0000'
            inc = 1;
        when '0001'
            inc = 2;
    if size == '11' then UNDEFINED;

Simple statements end with ``;``. A compound statement either carries a
single statement on the same line (``if c then UNDEFINED;``) or opens an
indented block on the following lines.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Iterable, List, Mapping, Optional

from ..errors import SpecSyntaxError, UnknownIdentifier
from .nodes import (
    ARRAYS, BUILTINS, CMP_OPS, AslAst, Assign, Binary, BitLit, Call, Case,
    Concat, Expr, If, IfExpr, Index, IntLit, Not, SymbolRef, Undefined,
    Unpredictable, VarRef, static_width, walk,
)

log = logging.getLogger(__name__)

KEYWORDS = {"if", "then", "else", "elsif", "case", "of", "when", "otherwise",
            "UNDEFINED", "UNPREDICTABLE", "DIV"}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t]+)
  | (?P<bits>'[01]*')
  | (?P<int>0x[0-9A-Fa-f]+|\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==|!=|<=|>=|<<|&&|\|\||[<>=+\-*:()\[\],;!])
""", re.VERBOSE)

# Binding power, lowest first. ':' (concatenation) binds tightest.
_BINARY_PREC = {
    "||": 1, "&&": 2,
    "==": 3, "!=": 3, "<": 3, ">": 3, "<=": 3, ">=": 3,
    "<<": 4, "+": 5, "-": 5, "*": 6, "DIV": 6, ":": 7,
}


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


@dataclass
class _Line:
    indent: int
    tokens: List[Token]
    number: int


def _tokenize(text: str, first_line: int = 1) -> List[_Line]:
    lines = []
    for offset, raw in enumerate(text.splitlines()):
        number = first_line + offset
        src = raw.split("//", 1)[0].rstrip()
        if not src.strip():
            continue
        expanded = src.expandtabs(4)
        indent = len(expanded) - len(expanded.lstrip(" "))
        pos, tokens = 0, []
        while pos < len(src):
            m = _TOKEN_RE.match(src, pos)
            if m is None:
                raise SpecSyntaxError(f"unexpected character {src[pos]!r}", number, pos + 1)
            kind = m.lastgroup
            if kind != "ws":
                tok = m.group()
                if kind == "ident" and tok == "DIV":
                    kind = "op"
                tokens.append(Token(kind, tok, number, pos + 1))
            pos = m.end()
        lines.append(_Line(indent, tokens, number))
    return lines


class _Parser:
    def __init__(self, lines, symbols, predefined):
        self.lines = lines
        self.li = 0
        self.ti = 0
        self.symbols = dict(symbols)
        self.var_widths = dict(predefined)
        self.if_expr_depth = 0

    # -- token cursor -------------------------------------------------
    @property
    def line(self) -> Optional[_Line]:
        return self.lines[self.li] if self.li < len(self.lines) else None

    def peek(self) -> Optional[Token]:
        line = self.line
        if line is None or self.ti >= len(line.tokens):
            return None
        return line.tokens[self.ti]

    def at_eol(self) -> bool:
        return self.peek() is None

    def next_line(self):
        self.li += 1
        self.ti = 0

    def error(self, message, tok=None):
        tok = tok or self.peek()
        if tok is not None:
            return SpecSyntaxError(message, tok.line, tok.col)
        line = self.line or (self.lines[-1] if self.lines else None)
        return SpecSyntaxError(message, line.number if line else None)

    def take(self, text=None, kind=None) -> Token:
        tok = self.peek()
        if tok is None:
            raise self.error(f"expected {text or kind}, found end of line")
        if (text is not None and tok.text != text) or (kind is not None and tok.kind != kind):
            raise self.error(f"expected {text or kind}, found {tok.text!r}")
        self.ti += 1
        return tok

    def accept(self, text) -> bool:
        tok = self.peek()
        if tok is not None and tok.text == text and tok.kind in ("op", "ident"):
            self.ti += 1
            return True
        return False

    # -- statements ---------------------------------------------------
    def parse_program(self):
        stmts = []
        while self.line is not None:
            if self.at_eol():
                self.next_line()
                continue
            stmts.append(self.statement())
        return stmts

    def block(self, owner_indent):
        """Statements on following lines indented deeper than ``owner_indent``."""
        if not self.at_eol():
            raise self.error("unexpected tokens before block")
        self.next_line()
        if self.line is None or self.line.indent <= owner_indent:
            raise self.error("expected an indented block")
        indent = self.line.indent
        stmts = []
        while self.line is not None and self.line.indent >= indent:
            if self.line.indent > indent and self.ti == 0:
                raise self.error("unexpected indentation")
            if self.at_eol():
                self.next_line()
                continue
            stmts.append(self.statement())
        return tuple(stmts)

    def statement(self):
        tok = self.peek()
        line = self.line
        if tok.text == "if" and tok.kind == "ident":
            return self.if_stmt(line.indent)
        if tok.text == "case" and tok.kind == "ident":
            return self.case_stmt(line.indent)
        if tok.text in ("UNDEFINED", "UNPREDICTABLE"):
            self.ti += 1
            self.take(";")
            self.finish_line()
            return Undefined(tok.line) if tok.text == "UNDEFINED" else Unpredictable(tok.line)
        return self.assignment()

    def finish_line(self):
        if self.at_eol():
            self.next_line()

    def if_stmt(self, indent, first="if"):
        tok = self.take(first)
        cond = self.expr()
        self.take("then")
        if self.at_eol():
            then = self.block(indent)
        else:
            then = (self.statement_inline(),)
        else_ = None
        tok2 = self.peek()
        # same-line else, or an else/elsif line aligned with its if
        if tok2 is not None and tok2.text in ("else", "elsif") and (self.ti > 0 or self.line.indent == indent):
            if tok2.text == "elsif":
                else_ = (self.if_stmt(indent, first="elsif"),)
            else:
                self.take("else")
                if self.at_eol():
                    else_ = self.block(indent)
                else:
                    else_ = (self.statement_inline(),)
        return If(cond, then, else_, tok.line)

    def statement_inline(self):
        """A single statement following ``then``/``else`` on the same line."""
        tok = self.peek()
        if tok.text in ("UNDEFINED", "UNPREDICTABLE"):
            self.ti += 1
            self.take(";")
            stmt = Undefined(tok.line) if tok.text == "UNDEFINED" else Unpredictable(tok.line)
        elif tok.text in ("if", "case"):
            raise self.error("compound statement must start its own line")
        else:
            stmt = self.assignment(finish=False)
        if self.at_eol():
            self.next_line()
        return stmt

    def case_stmt(self, indent):
        tok = self.take("case")
        scrutinee = self.expr()
        self.take("of")
        if not self.at_eol():
            raise self.error("expected end of line after 'of'")
        self.next_line()
        if self.line is None or self.line.indent <= indent:
            raise self.error("case without arms", tok)
        arm_indent = self.line.indent
        width = static_width(scrutinee)
        arms = []
        seen = set()
        while self.line is not None and self.line.indent == arm_indent:
            head = self.peek()
            if head.text == "when":
                self.ti += 1
                pat_tok = self.take(kind="bits")
                pattern = pat_tok.text.strip("'")
                if width is not None and len(pattern) != width:
                    raise self.error(f"pattern '{pattern}' does not match scrutinee width {width}", pat_tok)
                if pattern in seen:
                    raise self.error(f"duplicate case pattern '{pattern}'", pat_tok)
                seen.add(pattern)
            elif head.text == "otherwise":
                self.ti += 1
                pattern = None
                if None in seen:
                    raise self.error("duplicate otherwise arm", head)
                seen.add(None)
            else:
                raise self.error("expected 'when' or 'otherwise'")
            if self.at_eol():
                body = self.block(arm_indent)
            else:
                body = []
                while not self.at_eol():
                    body.append(self.statement_inline_keep())
                self.next_line()
                body = tuple(body)
            arms.append((pattern, body))
        if not arms:
            raise self.error("case without arms", tok)
        return Case(scrutinee, tuple(arms), tok.line)

    def statement_inline_keep(self):
        tok = self.peek()
        if tok.text in ("UNDEFINED", "UNPREDICTABLE"):
            self.ti += 1
            self.take(";")
            return Undefined(tok.line) if tok.text == "UNDEFINED" else Unpredictable(tok.line)
        return self.assignment(finish=False)

    def assignment(self, finish=True):
        tok = self.take(kind="ident")
        name = tok.text
        if name in KEYWORDS:
            raise self.error(f"unexpected keyword {name!r}", tok)
        if self.peek() is not None and self.peek().text == "[":
            if name not in ARRAYS:
                raise UnknownIdentifier(name, tok.line, tok.col)
            target = Index(name, self.index_args())
        else:
            if name in self.symbols:
                raise self.error(f"cannot assign to encoding symbol {name!r}", tok)
            if name in BUILTINS:
                raise self.error(f"cannot assign to builtin {name!r}", tok)
            target = name
        self.take("=")
        rhs = self.expr()
        self.take(";")
        if isinstance(target, str):
            width = static_width(rhs)
            if target not in self.var_widths:
                self.var_widths[target] = width
            elif self.var_widths[target] != width:
                self.var_widths[target] = None
        if finish:
            self.finish_line()
        return Assign(target, rhs, tok.line)

    def index_args(self):
        self.take("[")
        args = [self.expr()]
        while self.accept(","):
            args.append(self.expr())
        self.take("]")
        return tuple(args)

    # -- expressions --------------------------------------------------
    def expr(self, min_prec=1) -> Expr:
        lhs = self.unary()
        while True:
            tok = self.peek()
            if tok is None or tok.kind != "op" or tok.text not in _BINARY_PREC:
                return lhs
            prec = _BINARY_PREC[tok.text]
            if prec < min_prec:
                return lhs
            self.ti += 1
            # comparisons are non-associative; everything else is left-assoc
            rhs = self.expr(prec + 1)
            if tok.text == ":":
                lhs = Concat(lhs, rhs)
            else:
                lhs = Binary(tok.text, lhs, rhs)
            if tok.text in CMP_OPS:
                nxt = self.peek()
                if nxt is not None and nxt.text in CMP_OPS:
                    raise self.error("chained comparison needs parentheses", nxt)

    def unary(self) -> Expr:
        tok = self.peek()
        if tok is None:
            raise self.error("expected expression, found end of line")
        if tok.kind == "op" and tok.text == "!":
            self.ti += 1
            return Not(self.unary())
        return self.primary()

    def primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "bits":
            self.ti += 1
            bits = tok.text.strip("'")
            if not bits:
                raise self.error("empty bit-string", tok)
            return BitLit(bits)
        if tok.kind == "int":
            self.ti += 1
            return IntLit(int(tok.text, 0))
        if tok.kind == "op" and tok.text == "(":
            self.ti += 1
            inner = self.expr()
            self.take(")")
            return inner
        if tok.kind == "ident":
            if tok.text == "if":
                return self.if_expr()
            if tok.text in KEYWORDS:
                raise self.error(f"unexpected keyword {tok.text!r}", tok)
            self.ti += 1
            return self.name(tok)
        raise self.error(f"unexpected token {tok.text!r}", tok)

    def if_expr(self) -> Expr:
        tok = self.take("if")
        self.if_expr_depth += 1
        if self.if_expr_depth > 2:
            log.warning("line %d: if-expression nested deeper than one level; flagged for corpus review",
                        tok.line)
        cond = self.expr()
        self.take("then")
        then = self.expr()
        self.take("else")
        else_ = self.expr()
        self.if_expr_depth -= 1
        return IfExpr(cond, then, else_)

    def name(self, tok) -> Expr:
        name = tok.text
        nxt = self.peek()
        if nxt is not None and nxt.text == "(":
            if name not in BUILTINS:
                raise UnknownIdentifier(name, tok.line, tok.col)
            self.ti += 1
            args = [self.expr()]
            while self.accept(","):
                args.append(self.expr())
            self.take(")")
            if len(args) != BUILTINS[name]:
                raise SpecSyntaxError(
                    f"{name} takes {BUILTINS[name]} argument(s), got {len(args)}", tok.line, tok.col)
            if name == "SInt" and static_width(args[0]) is None:
                raise SpecSyntaxError("SInt needs an operand of known width", tok.line, tok.col)
            if name == "SignExtend" and static_width(args[0]) is None:
                raise SpecSyntaxError("SignExtend needs an operand of known width", tok.line, tok.col)
            return Call(name, tuple(args))
        if nxt is not None and nxt.text == "[":
            if name not in ARRAYS:
                raise UnknownIdentifier(name, tok.line, tok.col)
            return Index(name, self.index_args())
        if name in self.symbols:
            return SymbolRef(name, self.symbols[name])
        if name in self.var_widths:
            return VarRef(name, self.var_widths[name])
        raise UnknownIdentifier(name, tok.line, tok.col)


def _check_definite_assignment(stmts, defined, lines_hint=None):
    """Raise UnknownIdentifier if a variable can be read before assignment.

    Returns the set of variables definitely assigned after ``stmts``, or
    None when every path through ``stmts`` ends in UNDEFINED/UNPREDICTABLE.
    """
    def check_expr(expr, defined, line):
        for e in walk(expr):
            if isinstance(e, VarRef) and e.name not in defined:
                raise UnknownIdentifier(e.name, line)

    for stmt in stmts:
        if defined is None:
            return None
        if isinstance(stmt, Assign):
            check_expr(stmt.rhs, defined, stmt.line)
            if isinstance(stmt.target, Index):
                for a in stmt.target.args:
                    check_expr(a, defined, stmt.line)
            else:
                defined = defined | {stmt.target}
        elif isinstance(stmt, If):
            check_expr(stmt.cond, defined, stmt.line)
            a = _check_definite_assignment(stmt.then, defined)
            b = _check_definite_assignment(stmt.else_ or (), defined)
            defined = _meet(a, b)
        elif isinstance(stmt, Case):
            check_expr(stmt.scrutinee, defined, stmt.line)
            outs = [_check_definite_assignment(body, defined) for _, body in stmt.arms]
            # an absent otherwise arm decodes as UNDEFINED, so it adds no path
            result = None
            for out in outs:
                result = _meet(result, out)
            defined = result
        elif isinstance(stmt, (Undefined, Unpredictable)):
            return None
    return defined


def _meet(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a & b


def parse_asl(text: str, symbols: Iterable = (), predefined: Mapping[str, Optional[int]] = None,
              first_line: int = 1) -> AslAst:
    """Parse ASL ``text`` into a validated :class:`AslAst`.

    ``symbols`` is either a mapping of name to bit width or an iterable of
    :class:`~isadiff.spec_ingest.Field` objects (constants are skipped).
    ``predefined`` names variables already assigned by an earlier program,
    which is how execute code sees the results of decode.
    """
    if isinstance(symbols, Mapping):
        widths = dict(symbols)
    else:
        widths = {f.name: f.width for f in symbols if getattr(f, "name", None)}
    predefined = dict(predefined or {})
    parser = _Parser(_tokenize(text, first_line), widths, predefined)
    stmts = parser.parse_program()
    _check_definite_assignment(stmts, frozenset(predefined))
    return AslAst(tuple(stmts))


def assigned_variables(ast) -> dict:
    """Variables assigned anywhere in ``ast`` with their (possibly unknown) widths."""
    out = {}

    def visit(stmts):
        for stmt in stmts:
            if isinstance(stmt, Assign) and isinstance(stmt.target, str):
                w = static_width(stmt.rhs)
                out[stmt.target] = w if stmt.target not in out or out[stmt.target] == w else None
            elif isinstance(stmt, If):
                visit(stmt.then)
                visit(stmt.else_ or ())
            elif isinstance(stmt, Case):
                for _, body in stmt.arms:
                    visit(body)

    visit(ast.statements if isinstance(ast, AslAst) else ast)
    return out
