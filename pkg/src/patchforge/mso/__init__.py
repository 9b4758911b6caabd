from .formula import *  # noqa: F401,F403
from .formula import Formula, FormulaError, qdepth, free_vars, relativize
from .sexpr import ParseError, parse, to_text
from .checker import Checker, UnboundVariable, model_check
from .characteristic import CapExceeded, TypeHandle, characteristic, theory_eq
from .sampler import random_sentences
