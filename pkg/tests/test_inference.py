import pytest

from symparse.grammar import NT, Cls, Lit, from_bnf, simplify, to_bnf
from symparse.inference import (
    ContextError, GrammarEmpty, merge_contexts, trace_to_tree, traces_to_grammar,
    tree_path, tree_to_grammar,
)
from symparse.symexec import Trace, TracePosition

from oracles import isomorphic
from worked_examples import ARRAY_GRAMMAR, array_trace


def _trace(rows, accept=True):
    return Trace(0, accept, [TracePosition([i], [c], m) for i, (c, m) in enumerate(rows)])


def test_tree_path_steps():
    steps = tree_path("main:value@main.0:array@value.2:L1I1")
    assert [s[0] for s in steps] == ["inner", "inner", "inner", "loop", "iter"]
    assert steps[2][2] == ("array", "value", 2)


@pytest.mark.parametrize("bad", ["", "L1I1", "main:9x", "main:f@g.x"])
def test_tree_path_errors(bad):
    with pytest.raises(ContextError):
        tree_path(bad)


def test_call_tree_shape():
    tree = trace_to_tree(array_trace())
    text = tree.format()
    lines = [l.strip() for l in text.splitlines()]
    assert lines[0] == "parse"
    assert lines[1] == "value@parse.0"
    assert lines[2] == "'['"
    assert "Loop 1" in lines and "Iteration 1" in lines and "Iteration 2" in lines


def test_single_position_tree():
    tree = trace_to_tree(_trace([("main", 1 << ord("x"))]))
    assert tree.kind == "inner" and len(tree.children) == 1
    assert tree.children[0].kind == "leaf"


def test_shared_prefix_same_shape():
    a = trace_to_tree(_trace([("main:f@main.0", 1 << 97), ("main", 1 << 98)]))
    b = trace_to_tree(_trace([("main:f@main.0", 1 << 97), ("main", 1 << 99)]))
    assert a.children[0].shape() == b.children[0].shape()


def test_array_trace_grammar():
    g = simplify(traces_to_grammar([array_trace()]))
    assert to_bnf(g) == ARRAY_GRAMMAR
    assert isomorphic(g, from_bnf(ARRAY_GRAMMAR))


def test_tree_grammar_equals_union_of_one():
    t = array_trace()
    assert tree_to_grammar(trace_to_tree(t)) == traces_to_grammar([t])


def test_single_iteration_loop_has_exit_only():
    g = traces_to_grammar([_trace([
        ("main:L1I1", 1 << 97), ("main:L1I1", 1 << 98)])])
    assert "L1_exit" in g.rules and "L1_continue" not in g.rules
    assert g.rules["L1"] == [(NT("L1_exit"),)]


def test_leaf_only_tree():
    g = traces_to_grammar([_trace([("main", 1 << 97)]), _trace([("main", 1 << 98)])])
    assert g.rules["main"] == [(Lit(b"a"),), (Lit(b"b"),)]


def test_call_sites_get_primed_names():
    rows1 = [("main:value@main.0:arr@value.0:L1I1:value@arr.0", 1 << 49),
             ("main:value@main.0:arr@value.0:L1I1", 1 << 44),
             ("main:value@main.0:arr@value.0:L1I2:value@arr.0", 1 << 49)]
    g = traces_to_grammar([_trace(rows1)])
    assert "value'" in g.rules or "value''" in g.rules
    m = merge_contexts(g)
    assert not any("'" in n for n in m.rules)


def test_object_and_array_value_copies(subject):
    # value reached from two call sites -> two definitions with shared alternatives
    from symparse.symexec import ExploreConfig, explore
    _, p = subject("json")
    traces, _ = explore(p, ExploreConfig(max_input_len=6))
    g = traces_to_grammar(traces)
    copies = [n for n in g.rules if n.startswith("json_parse_value")]
    assert len(copies) >= 2
    alts = [set(g.rules[n]) for n in copies]
    assert any(a & b for i, a in enumerate(alts) for b in alts[i + 1:])


def test_no_accepting_traces():
    with pytest.raises(GrammarEmpty):
        traces_to_grammar([_trace([("main", 2)], accept=False)])


def test_merge_keeps_language():
    g = from_bnf("""<start> ::= <a> <a'>
<a> ::= 'x'
<a'> ::= 'y' | 'x'
""")
    m = merge_contexts(g)
    assert m.rules["a"] == [(Lit(b"x"),), (Lit(b"y"),)]
    assert m.rules["start"] == [(NT("a"), NT("a"))]
