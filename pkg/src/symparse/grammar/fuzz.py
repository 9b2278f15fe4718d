"""Random generation of inputs from a grammar.

Alternatives are picked uniformly until the depth budget is spent; after
that the generator closes the tree with cheapest expansions.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .. import charset
from .derivation import DTree
from .model import NT, Lit

INF = float("inf")


def expansion_costs(grammar):
    """Minimum derivation height per nonterminal (INF if unproductive)."""
    cost = {name: INF for name in grammar.rules}
    changed = True
    while changed:
        changed = False
        for name, alts in grammar.rules.items():
            for alt in alts:
                c = 1 + max((_sym_cost(s, cost) for s in alt), default=0)
                if c < cost[name]:
                    cost[name] = c
                    changed = True
    return cost


def _sym_cost(s, cost):
    if type(s) is not NT:
        return 0
    if s.quant == "?":
        return 0
    return cost.get(s.name, INF)


@dataclass
class FuzzResult:
    inputs: list
    trees: list
    exhausted: bool = False

    def __iter__(self):
        return iter(zip(self.inputs, self.trees))

    def __len__(self):
        return len(self.inputs)


class GrammarFuzzer:
    def __init__(self, grammar, seed=0, max_depth=12, max_plus=3):
        self.grammar = grammar
        self.rng = random.Random(seed)
        self.max_depth = max_depth
        self.max_plus = max_plus
        self.cost = expansion_costs(grammar)
        self._cheap = {}
        for name, alts in grammar.rules.items():
            best = None
            for i, alt in enumerate(alts):
                c = 1 + max((_sym_cost(s, self.cost) for s in alt), default=0)
                if best is None or c < best[0]:
                    best = (c, i)
            self._cheap[name] = [i for i, alt in enumerate(alts)
                                 if 1 + max((_sym_cost(s, self.cost) for s in alt),
                                            default=0) == best[0]]
        self._members = {}

    def _byte(self, mask):
        m = self._members.get(mask)
        if m is None:
            m = self._members[mask] = charset.members(mask)
        return self.rng.choice(m)

    def expand(self, name, depth=0):
        alts = self.grammar.rules[name]
        if depth < self.max_depth:
            productive = [i for i, alt in enumerate(alts)
                          if all(_sym_cost(s, self.cost) < INF for s in alt)]
            ai = self.rng.choice(productive)
        else:
            ai = self.rng.choice(self._cheap[name])
        node = DTree(name, ai)
        for si, s in enumerate(alts[ai]):
            if type(s) is NT:
                if s.quant == "?":
                    take = (depth < self.max_depth and self.cost.get(s.name, INF) < INF
                            and self.rng.random() < 0.5)
                    reps = 1 if take else 0
                elif s.quant == "+":
                    reps = 1
                    if depth < self.max_depth:
                        while reps < self.max_plus and self.rng.random() < 0.5:
                            reps += 1
                else:
                    reps = 1
                for _ in range(reps):
                    node.add(si, self.expand(s.name, depth + 1))
            elif type(s) is Lit:
                node.add(si, s.data)
            else:
                node.add(si, bytes([self._byte(s.mask)]))
        return node

    def generate(self, start=None):
        return self.expand(start or self.grammar.start)

    def fuzz(self, n, start=None, budget_factor=50):
        """``n`` distinct inputs, or all that turned up within the budget."""
        seen = set()
        inputs, trees = [], []
        attempts = 0
        budget = max(1, budget_factor * n)
        while len(inputs) < n and attempts < budget:
            attempts += 1
            t = self.generate(start)
            s = t.text()
            if s in seen:
                continue
            seen.add(s)
            inputs.append(s)
            trees.append(t)
        return FuzzResult(inputs, trees, exhausted=len(inputs) < n)


def fuzz(grammar, n, seed=0, max_depth=12, start=None):
    return GrammarFuzzer(grammar, seed, max_depth).fuzz(n, start)
