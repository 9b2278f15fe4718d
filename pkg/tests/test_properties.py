"""Randomized invariant checks (fixed seeds, at least 200 cases each)."""
import random
import re
from itertools import product

import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from symparse import charset
from symparse.consumption import consume_orders, longest_increasing_subsequence
from symparse.grammar import (
    KERNEL, NT, Cls, EarleyParser, Grammar, GrammarFuzzer, Lit, from_bnf,
    from_json, simplify, stats, to_bnf, to_json,
)
from symparse.inference import merge_contexts, traces_to_grammar, tree_path
from symparse.pipeline import evaluate, fixture_path, resolve_subject
from symparse.refine import Oracle, RefinementConfig, Refiner, valid_corpus
from symparse.subjectlang import list_loops, parse_subject, run_concrete
from symparse.subjectlang.bytecode import BINOPS
from symparse.symcore import Domains, Read, assert_constraint, binop, lnot, neg
from symparse.symexec import ExploreConfig, concretize, explore
from symparse.tokens import (
    default_categories, generalize_tokens, match_category, strip_ws, token_rule,
)
from symparse.symexec import TokenObservation

from oracles import brute_lis, language
from worked_examples import ARRAY_GRAMMAR

PROP = settings(max_examples=200, derandomize=True, deadline=None,
                suppress_health_check=list(HealthCheck))


# ---------------------------------------------------------------- symcore

def _py_eval(e, v):
    """Independent evaluator over Python ints (C-style division)."""
    if type(e) is int:
        return e
    if type(e) is Read:
        return v
    if e.op == "neg":
        return -_py_eval(e.args[0], v)
    if e.op == "!":
        return int(not _py_eval(e.args[0], v))
    a, b = (_py_eval(x, v) for x in e.args)
    return {"+": a + b, "-": a - b, "*": a * b,
            "==": int(a == b), "!=": int(a != b), "<": int(a < b),
            "<=": int(a <= b), ">": int(a > b), ">=": int(a >= b)}[e.op]


consts = st.integers(-300, 300)


def _terms():
    base = st.just(Read(0))
    return st.recursive(base, lambda t: st.one_of(
        st.tuples(st.sampled_from("+-"), t, consts).map(lambda a: binop(a[0], a[1], a[2])),
        st.tuples(consts, t).map(lambda a: binop("-", a[0], a[1])),
        st.tuples(t, st.integers(-3, 3)).map(lambda a: binop("*", a[0], a[1])),
        t.map(neg),
    ), max_leaves=4)


conditions = st.one_of(
    st.tuples(st.sampled_from(["==", "!=", "<", "<=", ">", ">="]), _terms(), consts)
      .map(lambda a: binop(a[0], a[1], a[2])),
    st.tuples(st.sampled_from(["==", "!=", "<", ">="]), consts, _terms())
      .map(lambda a: binop(a[0], a[1], a[2])),
    _terms(),
).flatmap(lambda c: st.sampled_from([c, lnot(c)]))


@PROP
@given(conditions, st.booleans(), st.integers(0, (1 << 256) - 1))
def test_solver_matches_brute_force(cond, truth, start):
    assume(type(cond) is not int)
    d0 = Domains()
    d0.set(Read(0), start)
    ok, d = assert_constraint(d0, cond, truth)
    got = d.domain(Read(0))
    want = 0
    for v in range(256):
        if start >> v & 1 and bool(_py_eval(cond, v)) == truth:
            want |= 1 << v
    assert got == want
    assert ok == bool(want)
    assert got & ~start == 0  # monotone


@PROP
@given(st.integers(0, 6), st.integers(0, 7), st.integers(1, 255))
def test_copy_preserves_identity(pos, slot, c):
    src = f"""
    fn main(){{
        buf b[8];
        var i = 0;
        while (i < {pos}) {{ if (input(i) != 'x') return 1; i = i + 1; }}
        b[{slot}] = input({pos});
        if (b[{slot}] != {c}) return 1;
        return 0;
    }}"""
    traces, _ = explore(parse_subject(src), ExploreConfig(max_input_len=8, loop_bound=8))
    assert len(traces) == 1
    p = traces[0].positions[pos]
    assert p.solutions == 1 << c
    assert len(p.access_orders) == 2


# ---------------------------------------------------------------- subjectlang

GOLDEN_SUBJECTS = ["calc", "cgidecode", "json", "lisp", "tinyc"]


@pytest.fixture(scope="module")
def programs():
    out = {}
    for name in GOLDEN_SUBJECTS:
        m = resolve_subject(name)
        from symparse.grammar import load_grammar
        out[name] = (m.load_program(), load_grammar(m.golden_path()))
    return out


@PROP
@given(st.sampled_from(GOLDEN_SUBJECTS), st.integers(0, 10 ** 6))
def test_concrete_runs_terminate(programs, name, seed):
    prog, gold = programs[name]
    x = GrammarFuzzer(gold, seed, 8).generate().text()
    v = run_concrete(prog, x, step_budget=200_000)
    assert v.budget_exceeded or v.accept in (True, False)
    assert run_concrete(prog, x, step_budget=200_000) == v  # pure


def test_ids_stable_across_reloads():
    for name in GOLDEN_SUBJECTS:
        m = resolve_subject(name)
        a, b = m.load_program(), m.load_program()
        assert list_loops(a) == list_loops(b)
        assert [(f.name, f.n_sites, f.n_statements) for f in a.functions.values()] == \
            [(f.name, f.n_sites, f.n_statements) for f in b.functions.values()]


# ---------------------------------------------------------------- symexec

@pytest.fixture(scope="module")
def explored():
    out = {}
    for name, L in (("calc", 5), ("cgidecode", 4), ("json", 7), ("lisp", 6)):
        m = resolve_subject(name)
        p = m.load_program()
        out[name] = (p, explore(p, ExploreConfig(max_input_len=L))[0])
    return out


def _check_bounds(trace):
    for q in trace.positions:
        for ctx in q.contexts:
            frames = {}
            for kind, label, info in tree_path(ctx):
                if kind == "inner":
                    frames[label] = frames.get(label, 0) + 1
                    assert frames[label] <= 3, ctx
                elif kind == "iter":
                    assert info <= 4, ctx


@PROP
@given(st.sampled_from(["calc", "cgidecode", "json", "lisp"]), st.integers(0, 10 ** 6))
def test_trace_bounds_and_soundness(explored, name, seed):
    prog, traces = explored[name]
    t = traces[seed % len(traces)]
    _check_bounds(t)
    orders = sorted(o for q in t.positions for o in q.access_orders)
    assert orders == list(range(len(orders)))
    rng = random.Random(seed)
    assert run_concrete(prog, concretize(t, rng)).accept


def test_small_traces_exhaustively_sound(explored):
    checked = 0
    for name, (prog, traces) in explored.items():
        for t in traces:
            sols = [charset.members(q.solutions) for q in t.positions if not q.is_sentinel]
            n = 1
            for s in sols:
                n *= len(s)
            if n > 1000:
                continue
            for combo in product(*sols):
                assert run_concrete(prog, bytes(combo)).accept
                checked += 1
    assert checked > 1000


# ---------------------------------------------------------------- consumption

@st.composite
def access_lists(draw):
    n = draw(st.integers(1, 7))
    total = draw(st.integers(n, 3 * n + 4))
    owner = list(range(n)) + [draw(st.integers(0, n - 1)) for _ in range(total - n)]
    order = draw(st.permutations(list(range(total))))
    lists = [[] for _ in range(n)]
    for o, pos in zip(order, owner):
        lists[pos].append(o)
    return [sorted(l) for l in lists]


@PROP
@given(access_lists())
def test_consumption_monotone(lists):
    orders, _ = consume_orders(lists)
    assert orders == sorted(orders)
    last = [l[-1] for l in lists]
    if last == sorted(last):
        assert orders == last


@PROP
@given(st.lists(st.integers(0, 30), max_size=8))
def test_lis_is_longest(seq):
    got = longest_increasing_subsequence(seq)
    assert got == sorted(got)
    want = brute_lis(seq)
    assert len(got) == len(want[0])


# ---------------------------------------------------------------- inference

@PROP
@given(st.lists(st.integers(0, 9), min_size=5, max_size=12))
def test_array_loop_generalizes(programs, digits):
    g = from_bnf(ARRAY_GRAMMAR)
    x = b"[" + b"".join(b"%d," % d for d in digits) + b'""]'
    assert EarleyParser(g).accepts(x)
    assert run_concrete(programs["json"][0], x).accept


@PROP
@given(st.integers(0, 10 ** 6), st.integers(1, 12))
def test_union_monotone(explored, seed, k):
    _, traces = explored["calc"]
    rng = random.Random(seed)
    base = rng.sample(traces, k)
    extra = rng.choice(traces)
    g1 = traces_to_grammar(base)
    g2 = traces_to_grammar(base + [extra])
    g2.validate()
    assert language(g1, 3) <= language(g2, 3)


# ---------------------------------------------------------------- tokens

instance_sets = st.one_of(
    st.sets(st.from_regex(r"\A[0-9]{1,4}\Z"), min_size=1, max_size=8),
    st.sets(st.from_regex(r"\A[a-z]\Z"), min_size=1, max_size=8),
    st.sets(st.from_regex(r"\A[a-zA-Z_][a-zA-Z0-9_]{0,4}\Z"), min_size=1, max_size=8),
    st.sets(st.from_regex(r"\A-?[0-9]{1,3}(\.[0-9]{0,2})?([eE][0-9])?\Z"), min_size=1, max_size=8),
    st.sets(st.from_regex(r"\A[0-9a-fA-F]\Z"), min_size=1, max_size=8),
).flatmap(lambda s: st.tuples(st.just(sorted(s)), st.lists(st.sampled_from(["", " ", "  ", "\n "]),
                                                             min_size=len(s), max_size=len(s))))


@PROP
@given(instance_sets)
def test_token_rule_coverage_and_minimality(data):
    words, ws = data
    inst = {(w0 + w).encode() for w, w0 in zip(words, ws)}
    rule = token_rule("T", inst)
    g = generalize_tokens(Grammar({"start": [(NT("T"),)]}), [TokenObservation(0, "T", inst)])
    p = EarleyParser(g)
    for s in inst:
        assert p.accepts(s), s
    bodies = {strip_ws(s)[1] for s in inst}
    if rule.verbatim:
        assert len(bodies) <= 3
    else:
        assert len(bodies) > 3
        for cat in default_categories():
            if cat.rank >= rule.category.rank:
                break
            assert not all(re.fullmatch(cat.pattern.encode(), b) for b in bodies)


def test_keyword_threshold_boundary():
    assert token_rule("K", [b"a", b"b", b"c"]).verbatim
    assert not token_rule("K", [b"a", b"b", b"c", b"d"]).verbatim


# ---------------------------------------------------------------- grammar

ALPHA = b"ab"


@st.composite
def small_grammars(draw, max_nt=8):
    k = draw(st.integers(1, max_nt))
    names = ["S"] + [f"N{i}" for i in range(1, k)]
    sym = st.one_of(
        st.sampled_from([Lit(b"a"), Lit(b"b"), Lit(b"ab"), Cls(charset.mask_of(b"ab")),
                         Cls(charset.mask_of(b"b"))]),
        st.tuples(st.sampled_from(names), st.sampled_from(["", "", "?", "+"]))
          .map(lambda t: NT(*t)),
    )
    rules = {}
    for n in names:
        rules[n] = draw(st.lists(st.lists(sym, max_size=3).map(tuple), min_size=1, max_size=3))
    return Grammar(rules, start="S")


STRINGS6 = [bytes(p) for n in range(7) for p in product(ALPHA, repeat=n)]


@PROP
@given(small_grammars())
def test_earley_matches_enumeration(g):
    lang = language(g, 6)
    for kernel in {"python", KERNEL}:
        p = EarleyParser(g, kernel)
        for s in STRINGS6:
            assert p.accepts(s) == (s in lang), (to_bnf(g), s, kernel)


def _productive(g):
    from symparse.grammar.fuzz import INF, expansion_costs
    return expansion_costs(g)[g.start] < INF


@PROP
@given(small_grammars(), st.integers(0, 1000))
def test_fuzz_reparses(g, seed):
    assume(_productive(g))
    res = GrammarFuzzer(g, seed, 10).fuzz(5)
    p = EarleyParser(g)
    for x, t in res:
        assert p.accepts(x) and t.text() == x
    assert GrammarFuzzer(g, seed, 10).fuzz(5).inputs == res.inputs


@PROP
@given(small_grammars())
def test_serialization_and_stats(g):
    assert from_bnf(to_bnf(g)) == g
    assert from_json(to_json(g)) == g
    s = stats(g)
    total = 0
    for alts in g.rules.values():
        for alt in alts:
            if len(alt) == 1 and type(alt[0]) is Cls:
                total += charset.popcount(alt[0].mask)
            else:
                total += len(alt)
    assert s.s == total


@PROP
@given(small_grammars())
def test_simplify_preserves_small_languages(g):
    assert language(simplify(g), 6) == language(g, 6)


def _pre_simplify(res):
    g = merge_contexts(res.raw)
    if res.observations:
        g = generalize_tokens(g, res.observations)
    return g


@pytest.mark.parametrize("name", GOLDEN_SUBJECTS)
@settings(max_examples=500, derandomize=True, deadline=None,
          suppress_health_check=list(HealthCheck))
@given(seed=st.integers(0, 10 ** 9))
def test_simplify_preserves_membership(mined, name, seed):
    res = mined(name)
    pre = _pre_simplify(res)
    post = res.grammar
    a = GrammarFuzzer(pre, seed, 12).generate().text()
    b = GrammarFuzzer(post, seed, 12).generate().text()
    assert EarleyParser(post).accepts(a)
    assert EarleyParser(pre).accepts(b)


@pytest.mark.parametrize("name", ["calc", "cgidecode", "json", "lisp"])
@settings(max_examples=500, derandomize=True, deadline=None,
          suppress_health_check=list(HealthCheck))
@given(seed=st.integers(0, 10 ** 9))
def test_raw_grammar_sound_within_bounds(mined, subject, name, seed):
    res = mined(name)
    m, prog = subject(name)
    x = GrammarFuzzer(res.raw, seed, 12).generate().text()
    assume(len(x) <= m.max_input_len)
    assert run_concrete(prog, x).accept


# ---------------------------------------------------------------- refine

@pytest.fixture(scope="module")
def fixture_refiner(subject):
    from symparse.grammar import load_grammar
    _, prog = subject("tinyc")
    g = load_grammar(fixture_path("tinyc_refine.bnf"))
    oracle = Oracle(prog)
    corpus = valid_corpus(g, oracle, 150, 1)
    failing = [x for x in GrammarFuzzer(g, 5, 8).fuzz(600).inputs if oracle(x) is False]
    return g, oracle, corpus, failing


@PROP
@given(st.integers(0, 10 ** 6))
def test_refinement_keeps_corpus(fixture_refiner, seed):
    g, oracle, corpus, failing = fixture_refiner
    r = Refiner(g, oracle, RefinementConfig(seed=seed, attempts=5), corpus=corpus)
    x = failing[seed % len(failing)]
    r.fix_input(x)
    p = EarleyParser(r.grammar)
    assert all(p.accepts(c) for c in corpus)
    for c in r.report.log:
        if c.accepted:
            assert not p.accepts(c.input)


# ---------------------------------------------------------------- evaluation

@PROP
@given(small_grammars(max_nt=3), small_grammars(max_nt=3), st.integers(0, 100))
def test_eval_one_iff_agreement(g1, g2, seed):
    assume(_productive(g1) and _productive(g2))
    p2 = EarleyParser(g2)
    r = evaluate(g1, g2, p2.accepts, n=10, seed=seed, max_depth=6)
    mined_in = GrammarFuzzer(g1, seed, 6).fuzz(10).inputs
    gold_in = GrammarFuzzer(g2, seed + 1, 6).fuzz(10).inputs
    p1 = EarleyParser(g1)
    agree = all(p2.accepts(x) for x in mined_in) and all(p1.accepts(x) for x in gold_in)
    assert (r.precision == 1.0 and r.recall == 1.0) == (agree and bool(mined_in) and bool(gold_in))
