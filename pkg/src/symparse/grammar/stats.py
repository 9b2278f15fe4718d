"""Readability statistics: NT, RA, l(RA) and S."""
from __future__ import annotations

from dataclasses import dataclass

from .. import charset
from .model import Cls


@dataclass
class GrammarStats:
    nt: int
    ra: int
    avg_len: float
    s: int

    def row(self):
        return f"{self.nt}\t{self.ra}\t{self.avg_len:.2f}\t{self.s}"


def stats(grammar):
    """Count nonterminals, alternatives and symbols.

    An alternative that is a single character class stands for one
    alternative per member byte (each of length one); classes inside longer
    alternatives count as one symbol.
    """
    nt = len(grammar.rules)
    ra = 0
    s = 0
    for alts in grammar.rules.values():
        for alt in alts:
            if len(alt) == 1 and type(alt[0]) is Cls:
                k = charset.popcount(alt[0].mask)
                ra += k
                s += k
            else:
                ra += 1
                s += len(alt)
    avg = s / ra if ra else 0.0
    return GrammarStats(nt, ra, avg, s)
