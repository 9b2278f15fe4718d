"""Grammar data model.

A grammar maps nonterminal names to an ordered list of alternatives.
An alternative is a tuple of symbols: :class:`NT` references (optionally
quantified with ``?`` or ``+``), :class:`Lit` byte strings and :class:`Cls`
byte sets.  The empty tuple is the empty alternative.
"""
from __future__ import annotations

from typing import NamedTuple

from .. import charset

QUANTIFIERS = ("", "?", "+")


class NT(NamedTuple):
    name: str
    quant: str = ""

    def plain(self):
        return NT(self.name) if self.quant else self

    def __repr__(self):
        return f"<{self.name}>{self.quant}"


class Lit(NamedTuple):
    data: bytes

    def __repr__(self):
        return charset.literal_text(self.data)


class Cls(NamedTuple):
    mask: int

    def __repr__(self):
        return charset.class_text(self.mask)


def terminal_for(mask):
    """Singleton sets become literals, anything else a class."""
    if mask and mask & (mask - 1) == 0:
        return Lit(bytes([charset.lowest(mask)]))
    return Cls(mask)


def is_terminal(sym):
    return type(sym) is not NT


class GrammarError(Exception):
    pass


class Grammar:
    def __init__(self, rules=None, start="start"):
        self.rules = {}
        self.start = start
        if rules:
            for name, alts in rules.items():
                self.rules.setdefault(name, [])
                for alt in alts:
                    self.add_rule(name, alt)

    # construction ----------------------------------------------------
    def add_rule(self, name, alt):
        alt = tuple(alt)
        alts = self.rules.setdefault(name, [])
        if alt not in alts:
            alts.append(alt)
            return True
        return False

    def define(self, name, alts):
        self.rules[name] = []
        for alt in alts:
            self.add_rule(name, alt)

    def union(self, other):
        for name, alts in other.rules.items():
            self.rules.setdefault(name, [])
            for alt in alts:
                self.add_rule(name, alt)
        return self

    def copy(self):
        g = Grammar(start=self.start)
        g.rules = {k: list(v) for k, v in self.rules.items()}
        return g

    # queries ---------------------------------------------------------
    def __contains__(self, name):
        return name in self.rules

    def __getitem__(self, name):
        return self.rules[name]

    def __len__(self):
        return len(self.rules)

    def __eq__(self, other):
        return (isinstance(other, Grammar) and self.start == other.start
                and self.rules == other.rules)

    def nonterminals(self):
        return list(self.rules)

    def referenced(self):
        out = set()
        for alts in self.rules.values():
            for alt in alts:
                for s in alt:
                    if type(s) is NT:
                        out.add(s.name)
        return out

    def reachable(self):
        seen = {self.start}
        todo = [self.start]
        while todo:
            name = todo.pop()
            for alt in self.rules.get(name, ()):
                for s in alt:
                    if type(s) is NT and s.name not in seen:
                        seen.add(s.name)
                        todo.append(s.name)
        return seen

    def prune(self):
        """Drop unreachable definitions (keeps definition order)."""
        live = self.reachable()
        self.rules = {k: v for k, v in self.rules.items() if k in live}
        return self

    def validate(self):
        if self.start not in self.rules:
            raise GrammarError(f"start symbol <{self.start}> undefined")
        missing = self.referenced() - set(self.rules)
        if missing:
            raise GrammarError("undefined nonterminals: "
                               + ", ".join(sorted(f"<{m}>" for m in missing)))
        for name, alts in self.rules.items():
            if not alts:
                raise GrammarError(f"<{name}> has no alternatives")
            for alt in alts:
                for s in alt:
                    if type(s) is Cls and not s.mask:
                        raise GrammarError(f"empty character class in <{name}>")
                    if type(s) is NT and s.quant not in QUANTIFIERS:
                        raise GrammarError(f"bad quantifier {s.quant!r}")
        return self

    def __repr__(self):
        return f"Grammar({len(self.rules)} nonterminals, start=<{self.start}>)"
