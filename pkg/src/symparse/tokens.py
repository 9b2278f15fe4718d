"""Token generalization: observed token instances become category rules.

Token identifiers with at most three distinct instances are taken to be
keywords or operators and kept verbatim.  Everything else is matched
against a ranked table of string categories (``data/categories.tsv``);
the least permissive category accepting every instance wins.  Leading
whitespace is stripped first and turned into an optional ``<WS>`` prefix.
"""
from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass, field
from importlib import resources

try:  # python >= 3.11
    import re._parser as _sre
    from re._constants import (
        ANY, BRANCH, CATEGORY, CATEGORY_DIGIT, CATEGORY_NOT_DIGIT,
        CATEGORY_NOT_SPACE, CATEGORY_NOT_WORD, CATEGORY_SPACE, CATEGORY_WORD,
        IN, LITERAL, MAX_REPEAT, MAXREPEAT, MIN_REPEAT, NEGATE, NOT_LITERAL,
        RANGE, SUBPATTERN,
    )
except ImportError:  # pragma: no cover - 3.10
    import sre_parse as _sre
    from sre_constants import (
        ANY, BRANCH, CATEGORY, CATEGORY_DIGIT, CATEGORY_NOT_DIGIT,
        CATEGORY_NOT_SPACE, CATEGORY_NOT_WORD, CATEGORY_SPACE, CATEGORY_WORD,
        IN, LITERAL, MAX_REPEAT, MAXREPEAT, MIN_REPEAT, NEGATE, NOT_LITERAL,
        RANGE, SUBPATTERN,
    )

from . import charset
from .grammar.model import NT, Cls, Grammar, Lit

log = logging.getLogger(__name__)

KEYWORD_THRESHOLD = 3
WS_BYTES = b" \t\r\n"
WS_NAME = "WS"
_LEAD_WS = re.compile(rb"^[ \t\r\n]*")


@dataclass(frozen=True)
class StringCategory:
    name: str
    pattern: str
    rank: int

    @property
    def regex(self):
        return _compiled(self.pattern)

    def accepts(self, s):
        return self.regex.fullmatch(s) is not None

    def single_class(self):
        """Byte mask if the pattern is one character class, else None."""
        return _single_class(self.pattern)

    def class_plus(self):
        """Byte mask if the pattern is ``[...]+``, else None."""
        items = _sre.parse(self.pattern)
        if len(items) == 1 and items[0][0] is MAX_REPEAT:
            lo, hi, sub = items[0][1]
            if lo == 1 and hi == MAXREPEAT and len(sub) == 1:
                return _item_mask(sub[0])
        return None


_REGEX_CACHE = {}


def _compiled(pattern):
    r = _REGEX_CACHE.get(pattern)
    if r is None:
        r = _REGEX_CACHE[pattern] = re.compile(pattern.encode("latin-1"), re.DOTALL)
    return r


def _single_class(pattern):
    items = _sre.parse(pattern)
    if len(items) == 1 and items[0][0] in (IN, LITERAL):
        return _item_mask(items[0])
    return None


def load_categories(path=None):
    """Category table sorted by rank (from the bundled TSV by default)."""
    if path is None:
        text = resources.files("symparse").joinpath("data/categories.tsv").read_text()
    else:
        with open(path) as fp:
            text = fp.read()
    rows = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    out = []
    for row in csv.DictReader(rows, delimiter="\t", quoting=csv.QUOTE_NONE):
        out.append(StringCategory(row["name"], row["pattern"], int(row["rank"])))
    out.sort(key=lambda c: c.rank)
    ranks = [c.rank for c in out]
    if len(set(ranks)) != len(ranks):
        raise ValueError("category ranks must be distinct")
    return out


_DEFAULT = None


def default_categories():
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_categories()
    return _DEFAULT


def _as_bytes(s):
    return s.encode("latin-1") if isinstance(s, str) else bytes(s)


def strip_ws(instance):
    """(leading whitespace, rest)."""
    b = _as_bytes(instance)
    m = _LEAD_WS.match(b)
    return b[:m.end()], b[m.end():]


def match_category(instances, categories=None):
    """Least permissive category accepting all instances (whitespace stripped).

    Falls back to the last category (``any_char+``) with a warning.
    """
    cats = categories or default_categories()
    if not instances:
        raise ValueError("match_category needs at least one instance")
    body = [strip_ws(s)[1] for s in instances]
    for cat in cats:
        if all(cat.accepts(b) for b in body):
            return cat
    log.warning("no string category covers %r; using %s", sorted(body)[:5], cats[-1].name)
    return cats[-1]


# ---------------------------------------------------------------- regex -> BNF

_CAT_MASKS = {
    CATEGORY_DIGIT: charset.mask_range(48, 57),
    CATEGORY_SPACE: charset.mask_of(b" \t\n\r\f\v"),
    CATEGORY_WORD: (charset.mask_range(48, 57) | charset.mask_range(65, 90)
                    | charset.mask_range(97, 122) | charset.mask_of(b"_")),
}
_CAT_MASKS[CATEGORY_NOT_DIGIT] = charset.FULL & ~_CAT_MASKS[CATEGORY_DIGIT]
_CAT_MASKS[CATEGORY_NOT_SPACE] = charset.FULL & ~_CAT_MASKS[CATEGORY_SPACE]
_CAT_MASKS[CATEGORY_NOT_WORD] = charset.FULL & ~_CAT_MASKS[CATEGORY_WORD]


def _item_mask(item):
    op, av = item
    if op is LITERAL:
        return 1 << av
    if op is NOT_LITERAL:
        return charset.NON_NUL & ~(1 << av)
    if op is ANY:
        return charset.NON_NUL & ~(1 << 10)
    if op is not IN:
        return None
    mask = 0
    neg = False
    for sub, arg in av:
        if sub is NEGATE:
            neg = True
        elif sub is LITERAL:
            mask |= 1 << arg
        elif sub is RANGE:
            mask |= charset.mask_range(arg[0], arg[1])
        elif sub is CATEGORY:
            mask |= _CAT_MASKS[arg]
        else:
            raise ValueError(f"unsupported class item {sub}")
    return charset.NON_NUL & ~mask if neg else mask


class RegexConverter:
    """Turns a category regex into grammar rules.

    Classes equal to a single-character category are referenced by that
    category's name (``<digit>``); other constructs get helper
    nonterminals ``<base_1>``, ``<base_2>``, ...
    """

    def __init__(self, grammar, categories=None):
        self.g = grammar
        self.class_names = {}
        for cat in categories or default_categories():
            m = cat.single_class()
            if m is not None and m not in self.class_names:
                self.class_names[m] = cat.name
        self.counter = {}

    def helper(self, base):
        k = self.counter.get(base, 0) + 1
        self.counter[base] = k
        return f"{base}_{k}"

    def define(self, name, pattern):
        """Define ``<name>`` as the language of ``pattern``."""
        alts = self.alternatives(_sre.parse(pattern), name)
        self.g.define(name, alts)
        return name

    def class_symbol(self, mask, base, name_hint=None):
        name = self.class_names.get(mask) or name_hint
        if name is None:
            return Cls(mask) if charset.popcount(mask) > 1 else Lit(bytes([charset.lowest(mask)]))
        if name not in self.g.rules:
            self.g.define(name, [(Cls(mask),)])
        return NT(name)

    def alternatives(self, items, base):
        items = list(items)
        if len(items) == 1 and items[0][0] is BRANCH:
            return [self.sequence(alt, base) for alt in items[0][1][1]]
        return [self.sequence(items, base)]

    def sequence(self, items, base):
        out = []
        for op, av in items:
            if op is LITERAL:
                if out and type(out[-1]) is Lit:
                    out[-1] = Lit(out[-1].data + bytes([av]))
                else:
                    out.append(Lit(bytes([av])))
            elif op in (IN, NOT_LITERAL, ANY):
                out.append(self.class_symbol(_item_mask((op, av)), base))
            elif op is SUBPATTERN:
                sub = av[-1]
                alts = self.alternatives(sub, base)
                if len(alts) == 1:
                    out.extend(alts[0])
                else:
                    h = self.helper(base)
                    self.g.define(h, alts)
                    out.append(NT(h))
            elif op is BRANCH:
                h = self.helper(base)
                self.g.define(h, [self.sequence(a, base) for a in av[1]])
                out.append(NT(h))
            elif op in (MAX_REPEAT, MIN_REPEAT):
                out.extend(self.repeat(av, base))
            else:
                raise ValueError(f"unsupported regex construct {op}")
        return tuple(out)

    def _unit(self, sub, base):
        """A plain nonterminal standing for one occurrence of ``sub``."""
        sub = list(sub)
        if len(sub) == 1 and sub[0][0] in (IN, LITERAL, NOT_LITERAL, ANY):
            sym = self.class_symbol(_item_mask(sub[0]), base)
            if type(sym) is NT:
                return sym.name
            h = self.helper(base)
            self.g.define(h, [(sym,)])
            return h
        if len(sub) == 1 and sub[0][0] is SUBPATTERN:
            sub = list(sub[0][1][-1])
        h = self.helper(base)
        self.g.define(h, self.alternatives(sub, base))
        return h

    def repeat(self, av, base):
        lo, hi, sub = av
        unit = self._unit(sub, base)
        out = [NT(unit)] * lo
        if hi == MAXREPEAT:
            if lo >= 1:
                out[-1] = NT(unit, "+")
            else:
                h = self.helper(base)
                self.g.define(h, [(NT(unit, "+"),)])
                out.append(NT(h, "?"))
        else:
            out.extend([NT(unit, "?")] * (hi - lo))
        return out


def regex_to_grammar(pattern, name="start", categories=None):
    """Grammar with start ``<name>`` for a regular expression (test helper)."""
    g = Grammar(start=name)
    RegexConverter(g, categories).define(name, pattern)
    return g


# ---------------------------------------------------------------- token rules

@dataclass
class TokenRule:
    name: str
    literals: list = field(default_factory=list)
    category: StringCategory | None = None
    whitespace: bool = False

    @property
    def verbatim(self):
        return self.category is None

    def install(self, grammar, converter):
        """Define the token nonterminal (and helpers) in ``grammar``."""
        prefix = (NT(WS_NAME, "?"),) if self.whitespace else ()
        if self.verbatim:
            alts = [prefix + ((Lit(lit),) if lit else ()) for lit in self.literals]
        else:
            alts = [prefix + self._category_body(converter)]
        grammar.define(self.name, alts)

    def _category_body(self, conv):
        cat = self.category
        m = cat.single_class()
        if m is not None:
            return (conv.class_symbol(m, cat.name, cat.name),)
        m = cat.class_plus()
        if m is not None:
            sym = conv.class_symbol(m, cat.name, cat.name.rstrip("+"))
            if type(sym) is NT:
                return (NT(sym.name, "+"),)
        if cat.name not in conv.g.rules:
            conv.define(cat.name, cat.pattern)
        return (NT(cat.name),)


def token_rule(name, instances, categories=None, threshold=KEYWORD_THRESHOLD):
    parts = [strip_ws(s) for s in instances]
    ws = any(p[0] for p in parts)
    distinct = sorted({p[1] for p in parts})
    if len(distinct) <= threshold:
        return TokenRule(name, distinct, None, ws)
    return TokenRule(name, [], match_category([p[1] for p in parts], categories), ws)


def _ws_mask(instances):
    m = 0
    for s in instances:
        m |= charset.mask_of(strip_ws(s)[0])
    return m


def token_rules(observations, categories=None, threshold=KEYWORD_THRESHOLD):
    """One :class:`TokenRule` per observation (``name`` and ``instances``)."""
    return [token_rule(o.name, o.instances, categories, threshold) for o in observations]


def generalize_tokens(grammar, observations, categories=None,
                      threshold=KEYWORD_THRESHOLD):
    """Define every observed token nonterminal in a copy of ``grammar``."""
    g = grammar.copy()
    conv = RegexConverter(g, categories)
    rules = token_rules(observations, categories, threshold)
    ws = 0
    for o, r in zip(observations, rules):
        r.install(g, conv)
        if r.whitespace:
            ws |= _ws_mask(o.instances)
    if ws:
        g.define("space", [(Cls(ws) if charset.popcount(ws) > 1
                            else Lit(bytes([charset.lowest(ws)])),)])
        g.define(WS_NAME, [(NT("space", "+"),)])
    if g.start in g.rules:
        g.prune()
    return g


def token_grammar(observations, categories=None, threshold=KEYWORD_THRESHOLD):
    """The generalized token grammar alone (one definition per token)."""
    g = Grammar(start=None)
    g = generalize_tokens(g, observations, categories, threshold)
    return g


def generalize_embedded(grammar, names, categories=None,
                        threshold=KEYWORD_THRESHOLD):
    """Ad-hoc lexing: generalize the terminal-only definitions of ``names``.

    Only nonterminals standing for external functions should be passed;
    alternatives that are not plain byte strings are left untouched.
    """
    g = grammar.copy()
    conv = RegexConverter(g, categories)
    for name in names:
        alts = g.rules.get(name)
        if not alts:
            continue
        inst = []
        for alt in alts:
            if not all(type(s) is Lit for s in alt):
                break
            inst.append(b"".join(s.data for s in alt))
        else:
            token_rule(name, inst, categories, threshold).install(g, conv)
    return g
