"""Dynamic repair of overapproximating grammar rules.

Inputs fuzzed from the mined grammar are run through the subject.  For a
rejected input, subtrees of its derivation are swapped (post-order) for
random subtrees of the same nonterminal until the subject accepts.  The
rule chosen at the root of the passing replacement then restricts the
grammar: first the nonterminal itself, then, if that loses valid inputs,
the alternative of each ancestor in turn.  A restriction is kept only if
every input of a pre-generated valid corpus still parses.
"""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field

from .grammar.derivation import DTree
from .grammar.earley import EarleyParser
from .grammar.fuzz import GrammarFuzzer
from .grammar.model import NT
from .subjectlang.concrete import ConcreteRunner

log = logging.getLogger(__name__)

LOW_CONFIDENCE_CORPUS = 100


@dataclass
class RefinementConfig:
    candidates: int = 1000
    corpus_size: int = 500
    attempts: int = 20
    seed: int = 0
    replacement_depth: int = 6
    holdout: int = 200
    max_depth: int = 12
    # extra fuzz-and-fix passes over the updated grammar; stops early once
    # a pass accepts no update
    rounds: int = 1

    def __post_init__(self):
        for k in ("candidates", "corpus_size", "attempts", "replacement_depth",
                  "holdout", "max_depth", "rounds"):
            if getattr(self, k) <= 0:
                raise ValueError(f"{k} must be positive")


@dataclass
class Candidate:
    """One proposed grammar update and its fate."""
    input: bytes
    replacement: bytes
    nonterminal: str
    level: int
    rule: str
    accepted: bool


@dataclass
class RefinementReport:
    candidates: int = 0
    rounds: int = 0
    failing: int = 0
    skipped: int = 0
    inputs_fixed: int = 0
    already_fixed: int = 0
    gave_up: int = 0
    updates_accepted: int = 0
    updates_discarded: int = 0
    corpus_size: int = 0
    precision_before: float = 0.0
    precision_after: float = 0.0
    low_confidence: bool = False
    log: list = field(default_factory=list)

    def summary(self):
        lines = [
            f"candidates\t{self.candidates}",
            f"rounds\t{self.rounds}",
            f"failing\t{self.failing}",
            f"skipped\t{self.skipped}",
            f"inputs_fixed\t{self.inputs_fixed}",
            f"already_fixed\t{self.already_fixed}",
            f"gave_up\t{self.gave_up}",
            f"updates_accepted\t{self.updates_accepted}",
            f"updates_discarded\t{self.updates_discarded}",
            f"corpus_size\t{self.corpus_size}",
            f"precision_before\t{self.precision_before:.4f}",
            f"precision_after\t{self.precision_after:.4f}",
        ]
        if self.low_confidence:
            lines.append("warning\tvalid corpus below "
                         f"{LOW_CONFIDENCE_CORPUS} inputs; updates are low-confidence")
        return "\n".join(lines)


class Oracle:
    """Memoized subject verdicts: True, False, or None (budget exhausted)."""

    def __init__(self, program, step_budget=None):
        self.runner = (ConcreteRunner(program, step_budget) if step_budget
                       else ConcreteRunner(program))
        self.memo = {}
        self.calls = 0

    def __call__(self, data):
        v = self.memo.get(data)
        if v is None and data not in self.memo:
            self.calls += 1
            r = self.runner.run(data)
            v = None if r.budget_exceeded else r.accept
            self.memo[data] = v
        return v


def _rule_text(name, alts):
    from .grammar.bnf import to_bnf
    from .grammar.model import Grammar
    g = Grammar({name: alts}, start=name)
    return to_bnf(g, align=False).strip()


def _chain(tree, path, replacement, level, grammar):
    """Restricted alternative for the ancestor ``level`` steps above ``path``.

    Returns (ancestor name, old alternative, new alternative) or None when
    the child sits in a repeated (``+``) slot.
    """
    seq = grammar.rules[replacement.name][replacement.alt]
    for k in range(1, level + 1):
        anc = tree.at(path[:len(path) - k])
        idx = path[len(path) - k]
        slot = anc.slots[idx]
        alt = grammar.rules[anc.name][anc.alt]
        sym = alt[slot]
        if type(sym) is NT and sym.quant == "+":
            return None
        seq = alt[:slot] + tuple(seq) + alt[slot + 1:]
    anc = tree.at(path[:len(path) - level])
    return anc.name, grammar.rules[anc.name][anc.alt], tuple(seq)


def propose_fix(tree, path, replacement, grammar, level=0):
    """Candidate grammar restricting the node at ``path`` (or an ancestor).

    Level 0 keeps only the rule used at the replacement's root.  Level k
    keeps all alternatives of the k-th ancestor but specializes the one
    used in the failing derivation, inlining the restricted chain.
    """
    original = tree.at(path)
    if replacement.name != original.name:
        raise ValueError("replacement must be rooted at the same nonterminal")
    g = grammar.copy()
    if replacement == original:
        return g
    if level == 0:
        g.define(original.name, [grammar.rules[original.name][replacement.alt]])
        return g
    r = _chain(tree, path, replacement, level, grammar)
    if r is None:
        return None
    name, old, new = r
    alts = [new if a == old else a for a in grammar.rules[name]]
    g.define(name, alts)
    return g


def check_underapproximation(candidate, corpus, kernel=None):
    """True iff every corpus input still parses under ``candidate``."""
    if not corpus:
        log.warning("empty valid corpus: underapproximation check is vacuous")
        return True
    p = EarleyParser(candidate, kernel)
    return all(p.accepts(x) for x in corpus)


def valid_corpus(grammar, oracle, size, seed, max_depth=12):
    """Up to ``size`` distinct fuzzed inputs that the subject accepts."""
    fz = GrammarFuzzer(grammar, seed, max_depth)
    seen = set()
    out = []
    attempts = 0
    budget = 50 * size
    while len(out) < size and attempts < budget:
        attempts += 1
        s = fz.generate().text()
        if s in seen:
            continue
        seen.add(s)
        if oracle(s):
            out.append(s)
    return out


def sample_precision(grammar, oracle, n, seed, max_depth=12):
    res = GrammarFuzzer(grammar, seed, max_depth).fuzz(n)
    if not res.inputs:
        return 0.0
    return sum(1 for x in res.inputs if oracle(x)) / len(res.inputs)


class Refiner:
    def __init__(self, grammar, oracle, config=None, corpus=None, kernel=None,
                 extra_valid=None):
        self.grammar = grammar.copy()
        self.oracle = oracle
        self.config = config or RefinementConfig()
        self.corpus = corpus
        # known-valid inputs (e.g. trace concretizations) that must stay parseable
        self.extra_valid = list(extra_valid or ())
        self.kernel = kernel
        self.report = RefinementReport()
        self.rng = random.Random(self.config.seed * 7919 + 2)
        self._parser = None
        self._fuzzer = None

    def _current(self):
        if self._parser is None:
            self._parser = EarleyParser(self.grammar, self.kernel)
            self._fuzzer = GrammarFuzzer(self.grammar, 0, self.config.replacement_depth)
            self._fuzzer.rng = self.rng
        return self._parser, self._fuzzer

    def _commit(self, g):
        self.grammar = g
        self._parser = self._fuzzer = None

    def run(self):
        cfg, rep = self.config, self.report
        start = self.grammar.copy()
        cands = GrammarFuzzer(start, cfg.seed, cfg.max_depth).fuzz(cfg.candidates)
        rep.candidates = len(cands.inputs)
        if self.corpus is None:
            self.corpus = valid_corpus(start, self.oracle, cfg.corpus_size,
                                       cfg.seed + 1, cfg.max_depth)
        if self.extra_valid:
            known = set(self.corpus)
            self.corpus = self.corpus + [x for x in self.extra_valid
                                         if x not in known and self.oracle(x)]
        rep.corpus_size = len(self.corpus)
        rep.low_confidence = rep.corpus_size < LOW_CONFIDENCE_CORPUS
        for r in range(cfg.rounds):
            if r:
                # later rounds sample the updated grammar
                cands = GrammarFuzzer(self.grammar, cfg.seed + 1000 * r,
                                      cfg.max_depth).fuzz(cfg.candidates)
                rep.candidates += len(cands.inputs)
            failing = []
            for x in cands.inputs:
                v = self.oracle(x)
                if v is None:
                    rep.skipped += 1
                elif not v:
                    failing.append(x)
            rep.failing += len(failing)
            rep.rounds = r + 1
            before = rep.updates_accepted
            for x in failing:
                self.fix_input(x)
            if rep.updates_accepted == before:
                break
        rep.precision_before = sample_precision(start, self.oracle, cfg.holdout,
                                                cfg.seed + 3, cfg.max_depth)
        rep.precision_after = sample_precision(self.grammar, self.oracle, cfg.holdout,
                                               cfg.seed + 3, cfg.max_depth)
        return self.grammar, rep

    def fix_input(self, x):
        rep = self.report
        parser, fz = self._current()
        res = parser.parse(x)
        if not res.accepted:
            rep.already_fixed += 1
            return False
        tree = res.tree
        for path, node in tree.postorder():
            for _ in range(self.config.attempts):
                parser, fz = self._current()
                sub = fz.expand(node.name, 0)
                y = tree.replace(path, sub).text()
                if y == x or not self.oracle(y):
                    continue
                if self._try_levels(x, y, tree, path, sub):
                    rep.inputs_fixed += 1
                    return True
                break  # this node's restrictions all underapproximate
        rep.gave_up += 1
        return False

    def _try_levels(self, x, y, tree, path, sub):
        rep = self.report
        for level in range(len(path) + 1):
            cand = propose_fix(tree, path, sub, self.grammar, level)
            if cand is None:
                return False
            name = tree.at(path[:len(path) - level]).name
            if cand == self.grammar:
                continue
            ok = (not EarleyParser(cand, self.kernel).accepts(x)
                  and check_underapproximation(cand, self.corpus, self.kernel))
            rep.log.append(Candidate(x, y, name, level,
                                     _rule_text(name, cand.rules[name]), ok))
            if ok:
                rep.updates_accepted += 1
                self._commit(cand)
                return True
            rep.updates_discarded += 1
        return False


def refine(grammar, subject, config=None, corpus=None, kernel=None,
           extra_valid=None):
    """Refine ``grammar`` against ``subject`` (a program or an oracle callable).

    ``extra_valid`` inputs join the fuzzed valid corpus; passing one
    concretization per mined trace keeps rare explored constructs from
    being restricted away.
    """
    oracle = subject if callable(subject) else Oracle(subject)
    return Refiner(grammar, oracle, config, corpus, kernel, extra_valid).run()
