"""Specification-driven instruction stream generation and differential
testing of CPU emulators against reference executions."""
from .errors import IsaDiffError
from .mutation import InstructionStream, generate
from .solver import solve, solve_both
from .spec_ingest import InstructionSpec, infer_symbol_type, load_corpus, parse_spec_file

__version__ = "0.1.0"

__all__ = [
    "InstructionSpec", "InstructionStream", "IsaDiffError", "generate", "infer_symbol_type",
    "load_corpus", "parse_spec_file", "solve", "solve_both",
]


def fixture_corpus_path():
    """Path of the bundled fixture corpus."""
    from importlib import resources
    return resources.files("isadiff.data").joinpath("fixture_corpus.isa")
