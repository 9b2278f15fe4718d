"""From execution traces to parse trees to a context-free grammar.

Every consumed position contributes the path decoded from its consuming
execution context; paths are merged into one parse tree per trace.  The
tree is then turned into grammar rules, where loops become right-recursive
``<Lk> ::= <Lk_continue> <Lk> | <Lk_exit>`` definitions.

Nonterminals are told apart by their immediate call site.  Because a loop
body and a loop exit can call the same function from the same site, the
loop roles (continue/exit) active in the caller frame are part of the key
as well; those definitions then receive primed names (``<value'>``).
"""
from __future__ import annotations

import re

from . import charset
from .consumption import identify_input_consumptions
from .grammar.model import NT, Grammar, terminal_for
from .grammar.simplify import is_loop_name
from .symexec import SENTINEL

_LOOP_MARK = re.compile(r"^L(\d+)I(\d+)$")


class GrammarEmpty(ValueError):
    """No accepting trace to learn from."""


class ContextError(ValueError):
    pass


class PTNode:
    """Parse tree node: ``inner`` (call frame), ``loop``, ``iter`` or ``leaf``."""
    __slots__ = ("kind", "label", "children", "solutions", "fn", "caller",
                 "site", "loop_id", "index")

    def __init__(self, kind, label, solutions=None):
        self.kind = kind
        self.label = label
        self.children = []
        self.solutions = solutions
        self.fn = self.caller = self.site = None
        self.loop_id = self.index = None

    def child(self, label):
        """Last child if it carries ``label``; paths only merge there."""
        if self.children and self.children[-1].kind != "leaf" \
                and self.children[-1].label == label:
            return self.children[-1]
        return None

    def leaves(self):
        out = []
        stack = [self]
        while stack:
            n = stack.pop()
            if n.kind == "leaf":
                out.append(n)
            else:
                stack.extend(reversed(n.children))
        return out

    def shape(self):
        """Hashable structural form (for equality checks)."""
        if self.kind == "leaf":
            return ("leaf", self.solutions)
        return (self.kind, self.label, tuple(c.shape() for c in self.children))

    def format(self, indent=0):
        pad = "  " * indent
        if self.kind == "leaf":
            text = repr(terminal_for(self.solutions)) if self.label == "input" \
                else f"token{charset.members(self.solutions)}"
            return pad + text
        head = {"inner": self.label, "loop": f"Loop {self.loop_id}",
                "iter": f"Iteration {self.index}"}[self.kind]
        return "\n".join([pad + head] + [c.format(indent + 1) for c in self.children])

    def __repr__(self):
        return f"PTNode({self.kind}, {self.label!r}, {len(self.children)} children)"


def tree_path(context):
    """Decode a context string into (kind, label, info) path steps.

    ``main:value@main.0:array@value.2:L1I1`` yields inner, inner, inner,
    loop and iteration steps.
    """
    if not context:
        raise ContextError("empty execution context")
    steps = []
    for part in context.split(":"):
        m = _LOOP_MARK.match(part)
        if m:
            lid, it = int(m.group(1)), int(m.group(2))
            if not steps:
                raise ContextError(f"loop marker before any frame: {context!r}")
            steps.append(("loop", f"L{lid}", lid))
            steps.append(("iter", f"I{it}", it))
            continue
        fn, _, where = part.partition("@")
        if not fn or not re.match(r"^[A-Za-z_]\w*$", fn):
            raise ContextError(f"bad frame {part!r} in {context!r}")
        caller = site = None
        if where:
            caller, _, site = where.rpartition(".")
            if not caller or not site.isdigit():
                raise ContextError(f"bad call site {where!r} in {context!r}")
            site = int(site)
        steps.append(("inner", part, (fn, caller, site)))
    return steps


def trace_to_tree(trace, assignment=None, drop_sentinels=True):
    """Parse tree of one trace; ``assignment`` defaults to the consumption heuristic."""
    if assignment is None:
        assignment = identify_input_consumptions(trace)
    root = PTNode("root", "")
    mode = trace.mode
    for pos, ctx in enumerate(assignment.contexts):
        p = trace.positions[pos]
        if drop_sentinels and mode == "input" and p.solutions == SENTINEL:
            continue
        node = root
        for kind, label, info in tree_path(ctx):
            nxt = node.child(label)
            if nxt is None or nxt.kind != kind:
                nxt = PTNode(kind, label)
                if kind == "inner":
                    nxt.fn, nxt.caller, nxt.site = info
                elif kind == "loop":
                    nxt.loop_id = info
                else:
                    nxt.index = info
                node.children.append(nxt)
            node = nxt
        node.children.append(PTNode("leaf", mode, p.solutions))
    if not root.children and assignment.contexts:
        # nothing but the end marker was consumed: an empty entry frame
        kind, label, info = tree_path(assignment.contexts[0])[0]
        entry = PTNode(kind, label)
        entry.fn, entry.caller, entry.site = info
        root.children.append(entry)
    if len(root.children) != 1:
        raise ContextError("trace contexts do not share one entry frame")
    return root.children[0]


class Namer:
    """Stable nonterminal names for context keys, primed on collisions."""

    def __init__(self):
        self.names = {}
        self.used = {}

    def name(self, key, base):
        n = self.names.get(key)
        if n is None:
            k = self.used.get(base, 0)
            self.used[base] = k + 1
            n = base + "'" * k
            self.names[key] = n
        return n


class TreeConverter:
    """Turns parse trees into grammar rules; share one across traces."""

    def __init__(self, token_names=None, start="start"):
        self.namer = Namer()
        self.token_names = token_names or {}
        self.start = start

    def leaf_symbol(self, leaf, grammar):
        if leaf.label == "input":
            return terminal_for(leaf.solutions)
        ids = charset.members(leaf.solutions)
        names = [self.token_names.get(i, f"tok_{i}") for i in ids]
        if len(names) == 1:
            return NT(names[0])
        name = self.namer.name(("tokset", tuple(ids)), "tokens_" + "_".join(names))
        for t in names:
            grammar.add_rule(name, (NT(t),))
        return NT(name)

    def convert(self, tree, grammar=None):
        g = grammar if grammar is not None else Grammar(start=self.start)
        g.rules.setdefault(self.start, [])
        top = self._inner(tree, (), g)
        g.add_rule(self.start, (NT(top),))
        return g

    def _inner(self, node, roles, g):
        # immediate call site plus the loop roles active in the caller
        key = ("fn", node.fn, node.caller, node.site, roles)
        name = self.namer.name(key, node.fn)
        g.rules.setdefault(name, [])  # keeps definitions in pre-order
        g.add_rule(name, self._children(node.children, key, (), g))
        return name

    def _children(self, children, frame_key, roles, g):
        syms = []
        for c in children:
            if c.kind == "leaf":
                syms.append(self.leaf_symbol(c, g))
            elif c.kind == "inner":
                syms.append(NT(self._inner(c, roles, g)))
            elif c.kind == "loop":
                syms.append(NT(self._loop(c, frame_key, roles, g)))
            else:
                raise ContextError(f"iteration node outside a loop: {c!r}")
        return tuple(syms)

    def _loop(self, node, frame_key, roles, g):
        key = ("loop", node.loop_id, frame_key, roles)
        base = self.namer.name(key, f"L{node.loop_id}")
        cont, exit_ = base + "_continue", base + "_exit"
        g.rules.setdefault(base, [])
        g.add_rule(base, (NT(cont), NT(base)))
        g.add_rule(base, (NT(exit_),))
        last = len(node.children) - 1
        for i, it in enumerate(node.children):
            role = "exit" if i == last else "cont"
            body = self._children(it.children, frame_key, roles + ((node.loop_id, role),), g)
            g.add_rule(exit_ if i == last else cont, body)
        return base


def tree_to_grammar(tree, converter=None):
    """Grammar rules of a single parse tree (unreferenced helpers pruned)."""
    conv = converter or TreeConverter()
    g = conv.convert(tree)
    _drop_dangling(g)
    return g


def _drop_dangling(g):
    # a loop whose iterations were all exits has no _continue definition:
    # drop the alternative that refers to it
    # (token nonterminals are defined later, by token generalization)
    defined = set(g.rules)
    for name, alts in list(g.rules.items()):
        keep = [a for a in alts
                if all(type(s) is not NT or s.name in defined
                       or not is_loop_name(s.name) for s in a)]
        if len(keep) != len(alts):
            g.define(name, keep)
    g.prune()


def traces_to_grammar(traces, token_names=None, start="start"):
    """Union of the per-trace grammars (before token generalization)."""
    traces = [t for t in traces if t.accept]
    if not traces:
        raise GrammarEmpty("no accepting traces")
    conv = TreeConverter(token_names, start)
    g = Grammar(start=start)
    for t in traces:
        conv.convert(trace_to_tree(t), g)
    _drop_dangling(g)
    return g


def base_name(name):
    """Nonterminal name without the primes that mark context copies."""
    return name.replace("'", "")


def merge_contexts(grammar):
    """Fold all context copies (``<F>``, ``<F'>``, ...) into one definition.

    Under small input-length bounds, copies reached through deep contexts
    only see the short alternatives; folding them restores the shared
    definition at the price of call-site precision (left to refinement).
    """
    out = Grammar(start=base_name(grammar.start))
    for name, alts in grammar.rules.items():
        b = base_name(name)
        out.rules.setdefault(b, [])
        for alt in alts:
            out.add_rule(b, tuple(NT(base_name(s.name), s.quant) if type(s) is NT else s
                                  for s in alt))
    return out
