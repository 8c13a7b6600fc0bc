"""Model checking the SPE fragment of HyperSL on concurrent game structures."""
from .automata import APA, DPA, Limits, ResourceLimitError, apa_to_dpa, solve_parity_game
from .cgs import CGS, parse_cgs
from .formula import parse_formula, print_formula, spe_decompose
from .mc import Result, Verdict, check_rank1_direct, model_check
from .oracle import eval_direct

__all__ = ["APA", "CGS", "DPA", "Limits", "ResourceLimitError", "Result", "Verdict", "apa_to_dpa",
           "check_rank1_direct", "eval_direct", "model_check", "parse_cgs", "parse_formula", "print_formula",
           "solve_parity_game", "spe_decompose"]
__version__ = "0.1.0"
