"""Earley parsing with derivation recovery.

The recognizer kernel is compiled with Cython when available; the
pure-Python kernel is used otherwise, or when ``SYMPARSE_PURE_PYTHON`` is
set in the environment.  Quantified symbols (``<X>?``, ``<X>+``) and
multi-byte literals are expanded into helper rules before recognition;
derivation trees are reported in terms of the original grammar.
"""
from __future__ import annotations

import os
import sys
from array import array
from dataclasses import dataclass

from .. import charset
from .derivation import DTree
from .model import NT, Cls, Lit
from . import _earley_py

END = _earley_py.END

if os.environ.get("SYMPARSE_PURE_PYTHON"):
    _kernel = None
else:
    try:
        from . import _earley_kernel as _kernel
    except ImportError:  # pragma: no cover - depends on the build
        _kernel = None

KERNEL = "cython" if _kernel is not None else "python"


def _run_kernel(cg, data, want_chart, kernel=None):
    kind = kernel or KERNEL
    fn = _kernel.earley if kind == "cython" else _earley_py.earley
    return fn(cg.lhs, cg.ritem, cg.dsym, cg.drule, cg.nt_rules, cg.term,
              cg.nullable, cg.start, data, want_chart)


class CompiledGrammar:
    """Integer encoding of a grammar for the recognizer kernels."""

    def __init__(self, grammar):
        self.grammar = grammar
        self.nt_ids = {}
        self.nt_names = []
        self.nt_rules = []
        lhs, rhs, origin = [], [], []
        term_ids = {}
        term_rows = []

        def nt_id(name):
            i = self.nt_ids.get(name)
            if i is None:
                i = self.nt_ids[name] = len(self.nt_names)
                self.nt_names.append(name)
                self.nt_rules.append([])
            return i

        def term_id(mask):
            t = term_ids.get(mask)
            if t is None:
                t = term_ids[mask] = len(term_rows)
                row = bytearray(256)
                for v in charset.members(mask):
                    row[v] = 1
                term_rows.append(bytes(row))
            return -(t + 1)

        def add(head, syms, orig):
            r = len(lhs)
            lhs.append(head)
            rhs.append(syms)
            origin.append(orig)
            self.nt_rules[head].append(r)

        helpers = {}

        def sym_ref(s):
            if not s.quant:
                return nt_id(s.name)
            key = (s.name, s.quant)
            h = helpers.get(key)
            if h is None:
                h = helpers[key] = nt_id(f"{s.name}{s.quant}#")
                x = nt_id(s.name)
                if s.quant == "?":
                    add(h, [], ("?", s.name, 0))
                    add(h, [x], ("?", s.name, 1))
                else:
                    add(h, [x], ("+", s.name, 0))
                    add(h, [x, h], ("+", s.name, 1))
            return h

        for name in grammar.rules:
            nt_id(name)
        for name, alts in grammar.rules.items():
            head = nt_id(name)
            for ai, alt in enumerate(alts):
                syms = []
                slots = []
                for si, s in enumerate(alt):
                    if type(s) is NT:
                        syms.append(sym_ref(s))
                        slots.append(si)
                    elif type(s) is Lit:
                        for v in s.data:
                            syms.append(term_id(1 << v))
                            slots.append(si)
                    else:
                        syms.append(term_id(s.mask))
                        slots.append(si)
                add(head, syms, ("alt", name, ai, tuple(slots)))
        if grammar.start not in self.nt_ids:
            nt_id(grammar.start)
        self.start = self.nt_ids[grammar.start]
        self.rhs = rhs
        self.origin = origin
        ritem, dsym, drule = [], [], []
        for r, syms in enumerate(rhs):
            ritem.append(len(dsym))
            for s in syms:
                dsym.append(s)
                drule.append(r)
            dsym.append(END)
            drule.append(r)
        self.lhs = array("i", lhs)
        self.ritem = array("i", ritem)
        self.dsym = array("i", dsym)
        self.drule = array("i", drule)
        self.term = b"".join(term_rows) or bytes(256)
        self.term_rows = term_rows
        self.nullable = bytes(self._nullable())

    def _nullable(self):
        null = [0] * len(self.nt_names)
        changed = True
        while changed:
            changed = False
            for r, syms in enumerate(self.rhs):
                h = self.lhs[r]
                if not null[h] and all(s >= 0 and null[s] for s in syms):
                    null[h] = 1
                    changed = True
        return null


@dataclass
class ParseResult:
    accepted: bool
    furthest: int
    tree: DTree | None = None

    def __bool__(self):
        return self.accepted


class EarleyParser:
    def __init__(self, grammar, kernel=None):
        self.cg = CompiledGrammar(grammar)
        self.kernel = kernel

    def recognize(self, data):
        if isinstance(data, str):
            data = data.encode("latin-1")
        ok, furthest, _ = _run_kernel(self.cg, data, False, self.kernel)
        return ok, (len(data) if ok else furthest)

    def accepts(self, data):
        return self.recognize(data)[0]

    def parse(self, data):
        if isinstance(data, str):
            data = data.encode("latin-1")
        ok, furthest, chart = _run_kernel(self.cg, data, True, self.kernel)
        if not ok:
            return ParseResult(False, furthest)
        tree = _Extractor(self.cg, data, chart).tree()
        return ParseResult(True, len(data), tree)


class _Extractor:
    """Recover one derivation from the completed items of the chart."""

    def __init__(self, cg, data, chart):
        self.cg = cg
        self.data = data
        # (nt, origin, end) -> rules completed there, smallest index first
        done = {}
        for j, items in enumerate(chart):
            for r, o in items:
                done.setdefault((cg.lhs[r], o, j), set()).add(r)
        self.done = {k: sorted(v) for k, v in done.items()}
        self.memo = {}
        self.smemo = {}
        self.active = set()

    def tree(self):
        n = len(self.data)
        limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, 20000 + 40 * n))
        try:
            raw = self.derive(self.cg.start, 0, n)
            return self.build(raw)
        finally:
            sys.setrecursionlimit(limit)

    def derive(self, nt, i, j):
        key = (nt, i, j)
        if key in self.memo:
            return self.memo[key]
        if key in self.active:
            return None
        self.active.add(key)
        out = None
        for r in self.done.get(key, ()):
            kids = self.split(r, 0, i, j)
            if kids is not None:
                out = (r, kids)
                break
        self.active.discard(key)
        if out is not None:
            self.memo[key] = out
        return out

    def split(self, r, k, i, j):
        key = (r, k, i, j)
        if key in self.smemo:
            return self.smemo[key]
        syms = self.cg.rhs[r]
        out = None
        if k == len(syms):
            out = [] if i == j else None
        elif syms[k] < 0:
            s = syms[k]
            if i < j and self.cg.term_rows[-s - 1][self.data[i]]:
                rest = self.split(r, k + 1, i + 1, j)
                if rest is not None:
                    out = [self.data[i]] + rest
        else:
            s = syms[k]
            for m in range(i, j + 1):
                if (s, i, m) not in self.done:
                    continue
                rest = self.split(r, k + 1, m, j)
                if rest is None:
                    continue
                sub = self.derive(s, i, m)
                if sub is not None:
                    out = [sub] + rest
                    break
        self.smemo[key] = out
        return out

    def build(self, raw):
        r, kids = raw
        orig = self.cg.origin[r]
        assert orig[0] == "alt"
        _, name, ai, slots = orig
        node = DTree(name, ai)
        for slot, kid in zip(slots, kids):
            self._attach(node, slot, kid)
        return node

    def _attach(self, node, slot, kid):
        if type(kid) is int:
            # consecutive bytes of one literal share a slot: merge them
            if node.slots and node.slots[-1] == slot and type(node.children[-1]) is bytes:
                node.children[-1] += bytes([kid])
            else:
                node.children.append(bytes([kid]))
                node.slots.append(slot)
            return
        orig = self.cg.origin[kid[0]]
        if orig[0] == "alt":
            node.children.append(self.build(kid))
            node.slots.append(slot)
            return
        # helper rule of a quantified symbol: splice its children
        for sub in kid[1]:
            self._attach(node, slot, sub)


def parse_with_grammar(grammar, data, kernel=None):
    return EarleyParser(grammar, kernel).parse(data)
