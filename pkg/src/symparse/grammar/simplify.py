"""Fixed-point grammar simplification: inlining and optional merging."""
from __future__ import annotations

import re

from .model import NT

LOOP_NAME = re.compile(r"^L\d+'*(_continue|_exit)?'*$")


def is_loop_name(name):
    return bool(LOOP_NAME.match(name))


def _recursive(grammar):
    """Nonterminals that can reach themselves."""
    edges = {name: {s.name for alt in alts for s in alt if type(s) is NT}
             for name, alts in grammar.rules.items()}
    out = set()
    for name in edges:
        seen = set()
        todo = list(edges[name])
        while todo:
            x = todo.pop()
            if x == name:
                out.add(name)
                break
            if x in seen:
                continue
            seen.add(x)
            todo.extend(edges.get(x, ()))
    return out


def _inline_candidates(grammar, mode):
    rec = _recursive(grammar) if mode == "single" else set()
    out = {}
    for name, alts in grammar.rules.items():
        if name == grammar.start or len(alts) != 1 or is_loop_name(name):
            continue
        alt = alts[0]
        if mode == "terminal":
            if any(type(s) is NT for s in alt):
                continue
        elif name in rec:
            continue
        out[name] = alt
    return out


def inline_once(grammar, mode="terminal"):
    """Inline one round of single-alternative definitions.

    ``mode="terminal"`` only inlines definitions whose sole alternative is
    made of terminals; ``mode="single"`` inlines any non-recursive
    single-alternative definition.  Quantified references are left alone.
    """
    cands = _inline_candidates(grammar, mode)
    if not cands:
        return False
    # do not inline into another candidate in the same round: keeps the
    # substitution well defined for chains
    changed = False
    for name, alts in list(grammar.rules.items()):
        new_alts = []
        for alt in alts:
            out = []
            for s in alt:
                if type(s) is NT and not s.quant and s.name in cands and s.name != name:
                    out.extend(cands[s.name])
                    changed = True
                else:
                    out.append(s)
            new_alts.append(tuple(out))
        grammar.define(name, new_alts)
    grammar.prune()
    return changed


def _optional_pair(a, b):
    """Position p such that ``b`` is ``a`` with a plain nonterminal inserted at p."""
    if len(b) != len(a) + 1:
        return None
    p = 0
    while p < len(a) and a[p] == b[p]:
        p += 1
    s = b[p]
    if type(s) is not NT or s.quant:
        return None
    if a[p:] != b[p + 1:]:
        return None
    return p


def merge_optionals_once(grammar):
    changed = False
    for name, alts in list(grammar.rules.items()):
        alts = list(alts)
        merged = True
        while merged:
            merged = False
            for i in range(len(alts)):
                for j in range(len(alts)):
                    if i == j:
                        continue
                    p = _optional_pair(alts[i], alts[j])
                    if p is None:
                        continue
                    b = alts[j]
                    new = b[:p] + (NT(b[p].name, "?"),) + b[p + 1:]
                    keep = min(i, j)
                    alts[keep] = new
                    del alts[max(i, j)]
                    merged = changed = True
                    break
                if merged:
                    break
        if merged or changed:
            grammar.define(name, alts)
    return changed


def simplify(grammar, inline_mode="terminal", optional=True, max_rounds=None):
    """Apply inlining and optional merging until nothing changes."""
    g = grammar.copy()
    g.prune()
    limit = max_rounds or (4 * sum(len(a) for a in g.rules.values()) + 10)
    rounds = 0
    while rounds < limit:
        rounds += 1
        changed = inline_once(g, inline_mode)
        if optional:
            changed = merge_optionals_once(g) or changed
        if not changed:
            break
    return g
