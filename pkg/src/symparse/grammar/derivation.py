"""Derivation trees over a grammar."""
from __future__ import annotations


class DTree:
    """A nonterminal expanded with alternative ``alt``.

    ``children`` holds sub-trees and byte strings (terminal yields);
    ``slots[i]`` is the index of the alternative symbol that produced
    ``children[i]`` (a quantified ``<X>+`` slot may produce several).
    """
    __slots__ = ("name", "alt", "children", "slots")

    def __init__(self, name, alt, children=None, slots=None):
        self.name = name
        self.alt = alt
        self.children = children if children is not None else []
        self.slots = slots if slots is not None else []

    def add(self, slot, child):
        self.children.append(child)
        self.slots.append(slot)

    def text(self):
        out = bytearray()
        stack = [self]
        while stack:
            n = stack.pop()
            if type(n) is bytes:
                out += n
            else:
                stack.extend(reversed(n.children))
        return bytes(out)

    def subtrees(self):
        """Pre-order walk over inner nodes."""
        stack = [self]
        while stack:
            n = stack.pop()
            yield n
            stack.extend(c for c in reversed(n.children) if type(c) is DTree)

    def postorder(self):
        out = []

        def walk(n, path):
            for i, c in enumerate(n.children):
                if type(c) is DTree:
                    walk(c, path + (i,))
            out.append((path, n))
        walk(self, ())
        return out

    def at(self, path):
        n = self
        for i in path:
            n = n.children[i]
        return n

    def replace(self, path, new):
        """Copy of this tree with the node at ``path`` swapped for ``new``."""
        if not path:
            return new
        kids = list(self.children)
        kids[path[0]] = kids[path[0]].replace(path[1:], new)
        return DTree(self.name, self.alt, kids, list(self.slots))

    def size(self):
        return sum(1 for _ in self.subtrees())

    def depth(self):
        kids = [c.depth() for c in self.children if type(c) is DTree]
        return 1 + max(kids, default=0)

    def __eq__(self, other):
        return (type(other) is DTree and self.name == other.name
                and self.alt == other.alt and self.children == other.children
                and self.slots == other.slots)

    def __hash__(self):
        return hash((self.name, self.alt, len(self.children)))

    def format(self, indent=0):
        """Indented text form for debugging."""
        pad = "  " * indent
        lines = [f"{pad}<{self.name}> #{self.alt}"]
        for c in self.children:
            if type(c) is DTree:
                lines.append(c.format(indent + 1))
            else:
                lines.append(f"{pad}  {c!r}")
        return "\n".join(lines)

    def __repr__(self):
        return f"DTree(<{self.name}>#{self.alt}, {self.text()!r})"
