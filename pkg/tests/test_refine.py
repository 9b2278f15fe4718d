import logging

import pytest

from symparse.grammar import EarleyParser, load_grammar, to_bnf
from symparse.pipeline import fixture_path
from symparse.refine import (
    Oracle, RefinementConfig, Refiner, check_underapproximation, propose_fix,
    refine, sample_precision, valid_corpus,
)
from symparse.subjectlang import parse_subject


@pytest.fixture(scope="module")
def tinyc(subject):
    m, p = subject("tinyc")
    return load_grammar(fixture_path("tinyc_refine.bnf")), Oracle(p)


def _node(tree, name):
    for path, n in tree.postorder():
        if n.name == name:
            return path, n
    raise LookupError(name)


def _rule(g, name):
    from symparse.refine import _rule_text
    return _rule_text(name, g.rules[name])


def test_propose_fix_levels(tinyc):
    g, _ = tinyc
    p = EarleyParser(g)
    tree = p.parse(b"5 = 1;").tree
    path, _ = _node(tree, "term")
    _, sub = _node(p.parse(b"c;").tree, "term")
    level0 = propose_fix(tree, path, sub, g, 0)
    assert _rule(level0, "term") == "<term> ::= <ID>"
    level3 = propose_fix(tree, path, sub, g, 3)
    assert _rule(level3, "expr").split() == \
        "<expr> ::= <ID> <WS>? '=' <expr> | <test>".split()


def test_propose_fix_identity(tinyc):
    g, _ = tinyc
    tree = EarleyParser(g).parse(b"5 = 1;").tree
    path, node = _node(tree, "term")
    assert propose_fix(tree, path, node, g, 0) == g


def test_propose_fix_name_mismatch(tinyc):
    g, _ = tinyc
    tree = EarleyParser(g).parse(b"5 = 1;").tree
    path, _ = _node(tree, "term")
    _, other = _node(tree, "sum")
    with pytest.raises(ValueError):
        propose_fix(tree, path, other, g, 0)


def test_underapproximation_check(tinyc):
    g, _ = tinyc
    tree = EarleyParser(g).parse(b"5 = 1;").tree
    path, _ = _node(tree, "term")
    _, sub = _node(EarleyParser(g).parse(b"c;").tree, "term")
    cand = propose_fix(tree, path, sub, g, 0)
    corpus = [b"x = 1 + 2;"]
    assert not check_underapproximation(cand, corpus)
    assert check_underapproximation(g, corpus)


def test_empty_corpus_warns(tinyc, caplog):
    g, _ = tinyc
    with caplog.at_level(logging.WARNING):
        assert check_underapproximation(g, [])
    assert "vacuous" in caplog.text


def test_walkthrough_sequence(tinyc):
    g, oracle = tinyc
    r = Refiner(g, oracle, RefinementConfig(seed=0))
    r.corpus = valid_corpus(g, oracle, 500, 1)
    assert r.fix_input(b"5 = 1;")
    seq = [(c.nonterminal, c.level, c.accepted) for c in r.report.log]
    assert seq == [("term", 0, False), ("sum", 1, False), ("test", 2, False),
                   ("expr", 3, True)]
    assert r.report.log[-1].rule.split() == \
        "<expr> ::= <ID> <WS>? '=' <expr> | <test>".split()
    assert not EarleyParser(r.grammar).accepts(b"5 = 1;")


def test_no_failing_candidates(subject):
    m, p = subject("calc")
    gold = load_grammar(m.golden_path())
    out, rep = refine(gold, p, RefinementConfig(candidates=50, corpus_size=50))
    assert out == gold
    assert rep.failing == 0 and rep.updates_accepted == 0


def test_refine_improves_fixture(tinyc):
    g, oracle = tinyc
    out, rep = refine(g, oracle, RefinementConfig(candidates=200, seed=0))
    assert rep.updates_accepted >= 1
    assert rep.precision_after > rep.precision_before
    assert "precision_after" in rep.summary()


def test_refine_deterministic(tinyc):
    g, oracle = tinyc
    cfg = RefinementConfig(candidates=60, corpus_size=100, seed=3)
    a, ra = refine(g, oracle, cfg)
    b, rb = refine(g, oracle, cfg)
    assert to_bnf(a) == to_bnf(b) and ra.summary() == rb.summary()


def test_low_confidence_flag(tinyc):
    g, oracle = tinyc
    _, rep = refine(g, oracle, RefinementConfig(candidates=10, corpus_size=5))
    assert rep.low_confidence and "low-confidence" in rep.summary()


@pytest.mark.parametrize("field", ["candidates", "corpus_size", "rounds", "attempts"])
def test_config_validation(field):
    with pytest.raises(ValueError):
        RefinementConfig(**{field: 0})


def test_oracle_memo_and_budget():
    p = parse_subject("fn main(){ if (input(0) == 'l') { while (1) { } } return 0; }")
    o = Oracle(p, step_budget=500)
    assert o(b"a") is True
    assert o(b"l") is None
    o(b"a")
    assert o.calls == 2


def test_sample_precision_bounds(tinyc):
    g, oracle = tinyc
    v = sample_precision(g, oracle, 50, 0)
    assert 0.0 <= v <= 1.0
