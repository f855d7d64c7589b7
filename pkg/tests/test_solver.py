import pytest

from isadiff.asl import Polarity, extract_constraints, parse_asl, symbolize_in
from isadiff.asl.nodes import to_text
from isadiff.asl.symbolic import Constraint
from isadiff.errors import SolverTimeout
from isadiff.solver import SymbolDomain, domains_for, solve, solve_both


def guard(text, symbols):
    """Symbolized assert-polarity constraint for ``if <text> then UNDEFINED;``."""
    ast = parse_asl(f"if {text} then UNDEFINED;", symbols)
    c = next(c for c in extract_constraints(ast) if c.polarity is Polarity.ASSERT and c.path_condition == ())
    return symbolize_in(ast, c)


def _d4(vld4):
    c = next(c for c in extract_constraints(vld4.program)
             if to_text(c.expr) == "d4 > 31" and c.polarity is Polarity.ASSERT)
    return symbolize_in(vld4.program, c)


def test_d4_both_polarities(vld4):
    c = _d4(vld4)
    pos, neg = solve_both(c)
    assert pos is not None and neg is not None
    assert pos.polarity is Polarity.ASSERT and neg.polarity is Polarity.NEGATE
    a = pos.assignment
    assert a["Vd"] + 16 * a["D"] + 3 * a["inc"] > 31 and a["inc"] in (1, 2)
    b = neg.assignment
    assert b["Vd"] + 16 * b["D"] + 3 * b["inc"] <= 31 and b["inc"] in (1, 2)


def test_contradiction_is_unsat():
    c = guard("D == '1' && D == '0'", {"D": 1})
    assert solve(c) is None


def test_size_11():
    w = solve(guard("size == '11'", {"size": 2}))
    assert w.assignment == {"size": 3}


def test_tautology_negation_unsat():
    pos, neg = solve_both(guard("UInt(D) >= 0", {"D": 1}))
    assert pos is not None and neg is None


def test_m_not_15(vld4):
    c = next(c for c in extract_constraints(vld4.program)
             if to_text(c.expr) == "m != 15" and c.polarity is Polarity.ASSERT)
    pos, neg = solve_both(symbolize_in(vld4.program, c))
    assert pos.assignment["Rm"] != 15
    assert neg.assignment == {"Rm": 15}


def test_deterministic(vld4):
    c = _d4(vld4)
    assert solve_both(c, seed=3) == solve_both(c, seed=3)


def test_large_domain_linear():
    c = guard("UInt(imm24) + UInt(imm12) == 10000000", {"imm24": 24, "imm12": 12})
    w = solve(c)
    assert w.assignment["imm24"] + w.assignment["imm12"] == 10000000


def test_large_domain_unsat_by_propagation():
    c = guard("UInt(imm24) > 20000000", {"imm24": 24})
    assert solve(c) is None


def test_large_domain_budget_exhaustion():
    # parity over a wide product: non-linear, tiny budget
    c = guard("(UInt(imm20) * UInt(imm20b)) == 999983 * 999979", {"imm20": 20, "imm20b": 20})
    with pytest.raises(SolverTimeout) as exc:
        solve(c, budget=50)
    assert exc.value.budget == 50


def test_missing_domain_rejected():
    c = guard("UInt(imm4) == 3", {"imm4": 4})
    with pytest.raises(ValueError):
        solve(c, domains=[])


def test_domain_width_bounds():
    with pytest.raises(ValueError):
        SymbolDomain("x", 0)
    with pytest.raises(ValueError):
        SymbolDomain("x", 25)
    assert SymbolDomain("x", 4).domain_size == 16


def test_domains_for_sorted():
    c = guard("UInt(b) + UInt(a) > 2", {"a": 2, "b": 3})
    assert [d.symbol for d in domains_for(c)] == ["a", "b"]


def test_path_condition_held_in_both():
    c = Constraint(parse_asl("x = UInt(a) > 1;", {"a": 2}).statements[0].rhs,
                   path_condition=(parse_asl("y = UInt(a) != 3;", {"a": 2}).statements[0].rhs,))
    pos, neg = solve_both(c)
    assert pos.assignment == {"a": 2}
    assert neg.assignment["a"] in (0, 1)
