"""Translation of ground instances into CASP programs and their text form."""

from .compile import encode, encode_instance, encode_planning_module
from .program import CaspProgram, GroundRule, Rule, StepVar, emit_text, ground_program, term_text

__all__ = ["CaspProgram", "GroundRule", "Rule", "StepVar", "emit_text", "encode",
           "encode_instance", "encode_planning_module", "ground_program", "term_text"]
