from .model import NT, Cls, Grammar, GrammarError, Lit, terminal_for
from .bnf import (
    BNFSyntaxError, from_bnf, from_json, load_grammar, save_grammar, to_bnf,
    to_json,
)
from .derivation import DTree
from .earley import KERNEL, EarleyParser, ParseResult, parse_with_grammar
from .fuzz import FuzzResult, GrammarFuzzer, fuzz
from .simplify import simplify
from .stats import GrammarStats, stats

__all__ = [
    "NT", "Cls", "Grammar", "GrammarError", "Lit", "terminal_for",
    "BNFSyntaxError", "from_bnf", "from_json", "load_grammar", "save_grammar",
    "to_bnf", "to_json", "DTree", "KERNEL", "EarleyParser", "ParseResult",
    "parse_with_grammar", "FuzzResult", "GrammarFuzzer", "fuzz", "simplify",
    "GrammarStats", "stats",
]
