"""BNF text and JSON serialization of grammars.

Text form::

    <start> ::= <value>
    <value> ::= '[' <items> ']'
              | /[0-9]/
              | ''

Literals use single or double quotes (backslash escapes, ``\\xHH``),
character classes are written ``/[...]/``, and a nonterminal may carry a
trailing ``?`` or ``+``.  ``#`` starts a comment outside of terminals.
"""
from __future__ import annotations

import json

from .. import charset
from .model import Cls, Grammar, Lit, NT


class BNFSyntaxError(ValueError):
    def __init__(self, msg, line, col):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


def format_symbol(sym):
    if type(sym) is NT:
        return f"<{sym.name}>{sym.quant}"
    if type(sym) is Lit:
        return charset.literal_text(sym.data)
    return charset.class_text(sym.mask)


def format_alt(alt):
    if not alt:
        return "''"
    return " ".join(format_symbol(s) for s in alt)


def to_bnf(grammar, align=True):
    names = list(grammar.rules)
    if grammar.start in grammar.rules:
        names.remove(grammar.start)
        names.insert(0, grammar.start)
    width = max((len(n) + 2 for n in names), default=0) if align else 0
    lines = []
    for name in names:
        head = f"<{name}>".ljust(width)
        alts = grammar.rules[name]
        pad = " " * len(head)
        for i, alt in enumerate(alts):
            lead = f"{head} ::= " if i == 0 else f"{pad}   | "
            lines.append(lead + format_alt(alt))
    return "\n".join(lines) + "\n"


_ESC = {"n": 10, "t": 9, "r": 13, "0": 0, "\\": 92, "'": 39, '"': 34,
        "/": 47, "]": 93, "[": 91, "-": 45, "^": 94}


class _Reader:
    def __init__(self, text):
        self.text = text
        self.i = 0

    def where(self, i=None):
        i = self.i if i is None else i
        line = self.text.count("\n", 0, i) + 1
        col = i - (self.text.rfind("\n", 0, i) + 1) + 1
        return line, col

    def error(self, msg, i=None):
        raise BNFSyntaxError(msg, *self.where(i))

    def skip(self, newlines=True):
        t = self.text
        while self.i < len(t):
            c = t[self.i]
            if c == "#":
                while self.i < len(t) and t[self.i] != "\n":
                    self.i += 1
            elif c in " \t\r" or (newlines and c == "\n"):
                self.i += 1
            else:
                break

    def peek(self):
        return self.text[self.i] if self.i < len(self.text) else ""

    def escape(self):
        t = self.text
        self.i += 1  # backslash
        if self.i >= len(t):
            self.error("dangling escape")
        c = t[self.i]
        if c == "x":
            h = t[self.i + 1:self.i + 3]
            try:
                v = int(h, 16)
            except ValueError:
                self.error(f"bad hex escape {h!r}")
            self.i += 3
            return v
        if c not in _ESC:
            self.error(f"unknown escape \\{c}")
        self.i += 1
        return _ESC[c]

    def literal(self):
        q = self.peek()
        start = self.i
        self.i += 1
        out = bytearray()
        t = self.text
        while True:
            if self.i >= len(t) or t[self.i] == "\n":
                self.error("unterminated literal", start)
            c = t[self.i]
            if c == q:
                self.i += 1
                return bytes(out)
            if c == "\\":
                out.append(self.escape())
            else:
                v = ord(c)
                if v > 255:
                    self.error("non-latin-1 character in literal")
                out.append(v)
                self.i += 1

    def char_class(self):
        start = self.i
        t = self.text
        if t[self.i:self.i + 2] != "/[":
            self.error("expected /[")
        self.i += 2
        negate = False
        if self.peek() == "^":
            negate = True
            self.i += 1
        mask = 0

        def one():
            if self.i >= len(t):
                self.error("unterminated character class", start)
            if t[self.i] == "\\":
                return self.escape()
            v = ord(t[self.i])
            self.i += 1
            return v

        while True:
            if self.i >= len(t):
                self.error("unterminated character class", start)
            if t[self.i] == "]":
                self.i += 1
                break
            lo = one()
            if self.peek() == "-" and self.text[self.i + 1:self.i + 2] != "]":
                self.i += 1
                hi = one()
                if hi < lo:
                    self.error("reversed range in character class")
                mask |= charset.mask_range(lo, hi)
            else:
                mask |= 1 << lo
        if self.peek() != "/":
            self.error("expected / after character class")
        self.i += 1
        if negate:
            mask = charset.NON_NUL & ~mask
        if not mask:
            self.error("empty character class", start)
        return mask

    def nonterminal(self):
        start = self.i
        end = self.text.find(">", self.i)
        nl = self.text.find("\n", self.i)
        if end < 0 or (0 <= nl < end):
            self.error("unterminated nonterminal", start)
        name = self.text[self.i + 1:end]
        if not name or any(c.isspace() for c in name):
            self.error(f"bad nonterminal name {name!r}", start)
        self.i = end + 1
        return name


def from_bnf(text, start=None):
    """Parse BNF text; the first defined nonterminal is the start symbol."""
    r = _Reader(text)
    g = Grammar()
    first = None
    current = None
    alt = []
    have_alt = False

    def close():
        nonlocal alt, have_alt
        if current is not None and have_alt:
            g.add_rule(current, alt)
        alt = []
        have_alt = False

    while True:
        r.skip(newlines=False)
        c = r.peek()
        if c == "":
            break
        if c == "\n":
            r.i += 1
            continue
        if c == "<":
            save = r.i
            name = r.nonterminal()
            r.skip(newlines=False)
            if r.text.startswith("::=", r.i):
                close()
                r.i += 3
                current = name
                g.rules.setdefault(name, [])
                if first is None:
                    first = name
                have_alt = True
                continue
            r.i = save
            if current is None:
                r.error("symbol outside of a rule")
            r.nonterminal()
            q = r.peek()
            quant = ""
            if q in ("?", "+"):
                quant = q
                r.i += 1
            alt.append(NT(name, quant))
            continue
        if current is None:
            r.error("expected a rule definition")
        if c == "|":
            g.add_rule(current, alt)
            alt = []
            r.i += 1
            continue
        if c in ("'", '"'):
            data = r.literal()
            if data:
                alt.append(Lit(data))
            continue
        if c == "/":
            alt.append(Cls(r.char_class()))
            continue
        r.error(f"unexpected character {c!r}")
    close()
    if first is None:
        raise BNFSyntaxError("no rules", 1, 1)
    g.start = start or ("start" if "start" in g.rules else first)
    return g


# ---------------------------------------------------------------- JSON

def _sym_to_json(s):
    if type(s) is NT:
        return ["nt", s.name, s.quant] if s.quant else ["nt", s.name]
    if type(s) is Lit:
        return ["lit", s.data.decode("latin-1")]
    return ["cls", charset.hex_ranges(s.mask)]


def _sym_from_json(v):
    kind = v[0]
    if kind == "nt":
        return NT(v[1], v[2] if len(v) > 2 else "")
    if kind == "lit":
        return Lit(v[1].encode("latin-1"))
    if kind == "cls":
        return Cls(charset.parse_hex_ranges(v[1]))
    raise ValueError(f"unknown symbol kind {kind!r}")


def to_json(grammar):
    doc = {"start": grammar.start,
           "rules": [[name, [[_sym_to_json(s) for s in alt] for alt in alts]]
                     for name, alts in grammar.rules.items()]}
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def from_json(text):
    doc = json.loads(text)
    g = Grammar(start=doc["start"])
    for name, alts in doc["rules"]:
        g.rules.setdefault(name, [])
        for alt in alts:
            g.add_rule(name, [_sym_from_json(s) for s in alt])
    return g


def load_grammar(path):
    from pathlib import Path
    path = Path(path)
    text = path.read_text(encoding="latin-1")
    if path.suffix == ".json":
        return from_json(text)
    return from_bnf(text)


def save_grammar(grammar, path):
    from pathlib import Path
    path = Path(path)
    text = to_json(grammar) if path.suffix == ".json" else to_bnf(grammar)
    path.write_text(text, encoding="latin-1")
