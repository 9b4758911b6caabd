"""Finite-structure toolkit for patch-width, addition operations and tree interpretations."""
from .addition import ConstructibleSpec, apply_addition, eval_construction
from .mso import characteristic, model_check, parse
from .patchwidth import PWClassSpec, eval_term
from .structures import ConstStructure, Structure, Vocabulary, iso_check
from .trees import InterpScheme, Tree, interpret

__version__ = "0.1.0"

__all__ = [
    "ConstStructure", "ConstructibleSpec", "InterpScheme", "PWClassSpec", "Structure", "Tree",
    "Vocabulary", "apply_addition", "characteristic", "eval_construction", "eval_term",
    "interpret", "iso_check", "model_check", "parse",
]
