from .ast_nodes import Ast, SourceUnit
from .elaborate import ElaboratedDesign, FlatAssign, FlatNet, const_eval, elaborate
from .labels import extract_labels
from .parser import parse

__all__ = [
    "Ast", "SourceUnit", "ElaboratedDesign", "FlatAssign", "FlatNet",
    "const_eval", "elaborate", "extract_labels", "parse",
]
