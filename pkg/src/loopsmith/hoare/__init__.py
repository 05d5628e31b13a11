"""Static checking of annotated loops: wp, simplification, entailment, VCs."""
from .entail import EntailResult, check_entailment, entails, find_counterexample
from .simplify import Simplifier, simplify
from .translate import Translator, Unsupported
from .vcgen import (
    VC, DragTrace, LoopSite, VerifyReport, check_program, find_loops,
    program_translator, sp_trace, verify_loop, wp,
)

__all__ = [
    "EntailResult", "check_entailment", "entails", "find_counterexample",
    "Simplifier", "simplify", "Translator", "Unsupported", "VC", "DragTrace",
    "LoopSite", "VerifyReport", "check_program", "find_loops",
    "program_translator", "sp_trace", "verify_loop", "wp",
]
