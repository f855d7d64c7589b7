"""Parser, interpreter, slicer and symbolizer for the ASL subset."""
from .evaluator import DecodeOutcome, DecodeTag, eval_decode, eval_expr
from .nodes import AslAst
from .parser import parse_asl
from .slicing import backward_slice
from .symbolic import (
    AuxSymbol, Constraint, Polarity, extract_constraints, guard_value, symbolize, symbolize_in,
)

__all__ = [
    "AslAst", "AuxSymbol", "Constraint", "DecodeOutcome", "DecodeTag", "Polarity",
    "backward_slice", "eval_decode", "eval_expr", "extract_constraints", "guard_value",
    "parse_asl", "symbolize", "symbolize_in",
]
