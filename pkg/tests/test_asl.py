import pytest

from isadiff.asl import (
    DecodeTag, Polarity, backward_slice, eval_decode, extract_constraints, guard_value,
    parse_asl, symbolize, symbolize_in,
)
from isadiff.asl.evaluator import eval_expr
from isadiff.asl.nodes import (
    Assign, Binary, BitLit, Case, If, Index, SymbolRef, Undefined, VarRef, to_text,
)
from isadiff.asl.symbolic import aux_values
from isadiff.errors import EvalError, SpecSyntaxError, UnknownIdentifier

STR_SYMBOLS = {"Rn": 4, "Rt": 4, "P": 1, "U": 1, "W": 1, "imm8": 8}


# -- parser -------------------------------------------------------------


def test_parse_undefined_guard():
    ast = parse_asl("if Rn == '1111' || (P == '0' && W == '0') then UNDEFINED;", STR_SYMBOLS)
    (stmt,) = ast.statements
    assert isinstance(stmt, If)
    rn, p, w = SymbolRef("Rn", 4), SymbolRef("P", 1), SymbolRef("W", 1)
    assert stmt.cond == Binary("||", Binary("==", rn, BitLit("1111")),
                               Binary("&&", Binary("==", p, BitLit("0")), Binary("==", w, BitLit("0"))))
    assert stmt.then == (Undefined(),)
    assert stmt.else_ is None


def test_parse_assignment_chain():
    ast = parse_asl("d = UInt(D:Vd);\ninc = 1;\nd2 = d + inc;", {"D": 1, "Vd": 4})
    assert ast.statements[2] == Assign("d2", Binary("+", VarRef("d"), VarRef("inc")))


def test_builtin_arity_is_checked():
    with pytest.raises(SpecSyntaxError):
        parse_asl("x = UInt(D:Vd, 3);", {"D": 1, "Vd": 4})


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifier) as exc:
        parse_asl("x = y + 1;", {})
    assert exc.value.name == "y"


def test_syntax_error_has_position():
    with pytest.raises(SpecSyntaxError) as exc:
        parse_asl("x = (1 + ;", {})
    assert exc.value.line == 1
    assert exc.value.column is not None


def test_cannot_assign_to_symbol():
    with pytest.raises(SpecSyntaxError):
        parse_asl("Rn = 1;", {"Rn": 4})


def test_case_pattern_width_checked():
    with pytest.raises(SpecSyntaxError):
        parse_asl("case type of\n    when '01'\n        inc = 1;", {"type": 4})


def test_block_if_else():
    text = "if P == '1' then\n    x = 1;\nelse\n    x = 2;\ny = x;"
    ast = parse_asl(text, {"P": 1})
    assert isinstance(ast.statements[0], If)
    assert len(ast.statements[0].else_) == 1


def test_variable_used_after_one_branch_is_rejected():
    with pytest.raises(UnknownIdentifier):
        parse_asl("if P == '1' then\n    x = 1;\ny = x;", {"P": 1})


def test_arrays_parse(str_t32):
    targets = [s.target for s in str_t32.execute_ast.statements if isinstance(s, Assign)]
    assert any(isinstance(t, Index) and t.base == "MemU" for t in targets)


def test_comments_ignored():
    ast = parse_asl("x = 1; // trailing\n// whole line\ny = x;", {})
    assert len(ast.statements) == 2


# -- evaluator --------------------------------------------------------------


def test_motivating_stream_is_undefined(str_t32):
    a = str_t32.encoding.decode(0xF84F0DDD)
    assert eval_decode(str_t32.decode_ast, a).tag is DecodeTag.UNDEFINED


def test_t_equals_15_is_unpredictable(str_t32):
    out = eval_decode(str_t32.decode_ast, {"Rn": 0, "Rt": 15, "P": 1, "U": 1, "W": 1, "imm8": 0})
    assert out.tag is DecodeTag.UNPREDICTABLE


def test_ok_decode_returns_bindings(str_t32):
    out = eval_decode(str_t32.decode_ast, {"Rn": 1, "Rt": 2, "P": 1, "U": 1, "W": 0, "imm8": 7})
    assert out.tag is DecodeTag.OK
    assert out.bindings["t"] == 2 and out.bindings["imm32"] == 7
    assert out.bindings["index"] is True and out.bindings["wback"] is False


def test_vld4_d4_over_31_is_unpredictable(vld4):
    a = {"D": 1, "Vd": 13, "type": 0b0001, "size": 0b01, "align": 0, "Rn": 0, "Rm": 0}
    out = eval_decode(vld4.decode_ast, a)
    assert out.tag is DecodeTag.UNPREDICTABLE


def test_unmatched_case_is_undefined(vld4):
    a = {"D": 0, "Vd": 0, "type": 0b0111, "size": 0, "align": 0, "Rn": 0, "Rm": 0}
    assert eval_decode(vld4.decode_ast, a).tag is DecodeTag.UNDEFINED


def test_integer_semantics():
    ast = parse_asl("a = UInt(D:Vd);\nb = 7 DIV 2;\nc = 1 << 4;\ne = SInt(imm4);\nf = SignExtend(imm4, 8);",
                    {"D": 1, "Vd": 4, "imm4": 4})
    b = eval_decode(ast, {"D": 1, "Vd": 13, "imm4": 0b1110}).bindings
    assert (b["a"], b["b"], b["c"], b["e"], b["f"]) == (29, 3, 16, -2, 0xFE)


def test_division_by_zero():
    ast = parse_asl("x = 4 DIV UInt(imm2);", {"imm2": 2})
    with pytest.raises(EvalError):
        eval_decode(ast, {"imm2": 0})


def test_eval_decode_is_deterministic(vld4):
    a = {"D": 0, "Vd": 3, "type": 1, "size": 1, "align": 2, "Rn": 4, "Rm": 7}
    assert eval_decode(vld4.decode_ast, a) == eval_decode(vld4.decode_ast, dict(a))


# -- constraint extraction ------------------------------------------------


def _exprs(constraints, polarity=Polarity.ASSERT):
    return [to_text(c.expr) for c in constraints if c.polarity is polarity]


def test_vld4_constraints(vld4):
    cs = extract_constraints(vld4.program)
    asserted = _exprs(cs)
    for expected in ["d4 > 31", "type == '0000'", "type == '0001'", "size == '11'", "m != 15", "m != 13"]:
        assert expected in asserted
    assert "d4 > 31" in _exprs(cs, Polarity.NEGATE)


def test_both_polarities_emitted(vld4):
    cs = extract_constraints(vld4.program)
    assert sorted(_exprs(cs)) == sorted(_exprs(cs, Polarity.NEGATE))


def test_path_condition_recorded(vld4):
    cs = extract_constraints(vld4.program)
    (inner,) = [c for c in cs if to_text(c.expr) == "register_index" and c.polarity is Polarity.ASSERT]
    assert [to_text(p) for p in inner.path_condition] == ["wback"]


def test_no_branches_no_constraints():
    assert extract_constraints(parse_asl("x = 1;\ny = x + 2;", {})) == []


# -- slicing --------------------------------------------------------------


def test_slice_d4(vld4):
    sl = backward_slice(vld4.decode_ast, VarRef("d4"))
    kinds = [(type(s).__name__, getattr(s, "target", None)) for s in sl.statements]
    assert kinds == [("Case", None), ("Assign", "d"), ("Assign", "d2"), ("Assign", "d3"), ("Assign", "d4")]
    assert isinstance(sl.statements[0], Case)


def test_slice_wback(str_t32):
    sl = backward_slice(str_t32.decode_ast, VarRef("wback"))
    (stmt,) = sl.statements
    assert stmt.target == "wback"
    assert to_text(stmt.rhs) == "W == '1'"


def test_slice_of_symbol_is_empty(vld4):
    assert backward_slice(vld4.decode_ast, SymbolRef("Rn", 4)).statements == ()


def test_slice_is_idempotent(vld4):
    once = backward_slice(vld4.decode_ast, VarRef("d4"))
    assert backward_slice(once, VarRef("d4")) == once


# -- symbolization ------------------------------------------------------------


def _d4_constraint(vld4):
    cs = extract_constraints(vld4.program)
    (c,) = [c for c in cs if to_text(c.expr) == "d4 > 31" and c.polarity is Polarity.ASSERT]
    return c


def test_symbolize_d4(vld4):
    sym = symbolize_in(vld4.program, _d4_constraint(vld4))
    assert to_text(sym.expr) == "Vd + 16 * D + 3 * inc > 31"
    side = [to_text(s) for s in sym.side_constraints]
    assert "inc == 1 || inc == 2" in side
    assert any("D >= 0" in s and "D < 2" in s for s in side)
    assert any("Vd >= 0" in s and "Vd < 16" in s for s in side)
    assert [a.name for a in sym.aux] == ["inc"]


def test_symbolize_uint_concat():
    ast = parse_asl("d = UInt(D:Vd);\nif d > 3 then UNDEFINED;", {"D": 1, "Vd": 4})
    (c, _neg) = extract_constraints(ast)
    sl = backward_slice(ast, c.expr, upto=c.site)
    assert to_text(symbolize(sl, c).expr) == "Vd + 16 * D > 3"


def test_symbol_only_constraint_unchanged(str_t32):
    cs = extract_constraints(str_t32.program)
    (c,) = [c for c in cs if to_text(c.expr) == "Rn == '1111'" and c.polarity is Polarity.ASSERT]
    sym = symbolize_in(str_t32.program, c)
    assert sym.expr == c.expr
    assert [to_text(s) for s in sym.side_constraints] == ["Rn >= 0 && Rn < 16"]


def test_symbolic_matches_concrete_on_vld4(vld4):
    c = _d4_constraint(vld4)
    sym = symbolize_in(vld4.program, c)
    for D in range(2):
        for Vd in range(16):
            for t in (0, 1):
                a = {"D": D, "Vd": Vd, "type": t, "size": 0, "align": 0, "Rn": 0, "Rm": 0}
                env = {**a, **aux_values(sym, a)}
                assert bool(eval_expr(sym.expr, env)) == guard_value(vld4.program, c, a)
