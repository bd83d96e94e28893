"""Synthesis of equivalent database programs across schema refactorings.

Pipeline: enumerate value correspondences between the source and target
schemas best-first (MaxSAT), generate the most general program sketch for
each candidate, and complete the sketch by symbolic search over hole
assignments with blocking clauses derived from minimum failing inputs.
"""

from .core import (
    MigratorError,
    Program,
    Schema,
    ValidationError,
    validate_program,
)
from .equiv import TestConfig, bounded_verify, find_mfi
from .parser import ParseError, SchemaError, parse_program, parse_schema, pretty_print
from .sketch_gen import SketchGenError, gen_sketch
from .sketch_solver import SolveConfig, complete_sketch
from .value_corr import encode_vc, next_value_corr

__version__ = "0.1.0"

__all__ = [
    "MigratorError",
    "ParseError",
    "Program",
    "Schema",
    "SchemaError",
    "SketchGenError",
    "SolveConfig",
    "TestConfig",
    "ValidationError",
    "bounded_verify",
    "complete_sketch",
    "encode_vc",
    "find_mfi",
    "gen_sketch",
    "next_value_corr",
    "parse_program",
    "parse_schema",
    "pretty_print",
    "validate_program",
]
