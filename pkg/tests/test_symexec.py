import io
import random

import pytest

from symparse import charset
from symparse.subjectlang import parse_subject, run_concrete
from symparse.symexec import (
    ExploreConfig, analyze_tokenizer, concretize, display_context, dump_traces,
    explore, explore_with_proxy, load_traces,
)

from worked_examples import ARRAY_TRACE


def run(src, **cfg):
    return explore(parse_subject(src), ExploreConfig(**cfg))


def test_single_branch():
    traces, _ = run("fn main(){ if(input(0)=='a') return 0; return 1; }")
    assert len(traces) == 1
    (p,) = traces[0].positions
    assert p.solutions == charset.mask_of(b"a")


REC = """
fn f(n){ if (n == 0) return 0; return f(n - 1); }
fn main(){ if (input(0) != 'x') return 1; return f(%d); }
"""


@pytest.mark.parametrize("depth, alive", [(3, True), (4, False)])
def test_recursion_bound(depth, alive):
    traces, diag = run(REC % depth)
    assert bool(traces) is alive
    assert bool(diag.terminated["recursion-bound"]) is not alive


def test_mutual_recursion_counts_pairs():
    src = """
    fn a(n){ if (n == 0) return 0; return b(n - 1); }
    fn b(n){ if (n == 0) return 0; return a(n - 1); }
    fn main(){ if (input(0) != 'x') return 1; return a(6); }
    """
    # a@b and b@a each occur three times at depth 6
    traces, _ = run(src)
    assert len(traces) == 1


def test_deep_chain_alive():
    fns = "".join(f"fn f{i}(){{ return f{i + 1}(); }}\n" for i in range(50))
    src = fns + "fn f50(){ return 0; }\nfn main(){ if (input(0) != 'x') return 1; return f0(); }"
    traces, _ = run(src)
    assert len(traces) == 1


def test_json_array_loop_bound(subject):
    m, p = subject("json")
    traces, _ = explore(p, ExploreConfig(max_input_len=8))
    assert traces
    for t in traces:
        for pos in t.positions:
            for ctx in pos.contexts:
                assert ":L" not in ctx or "I5" not in ctx


def test_loop_without_input_untouched():
    src = "fn main(){ var i = 0; while (i < 3) { i = i + 1; } if (input(0) != 'x') return 1; return 0; }"
    traces, diag = run(src)
    assert len(traces) == 1 and not diag.terminated


def test_safety_bound():
    src = "fn main(){ var i = 0; while (i < 300) { i = i + 1; } if (input(0) != 'x') return 1; return 0; }"
    p = parse_subject(src)
    assert run_concrete(p, b"x").accept  # the concrete run does finish
    traces, diag = explore(p)
    assert not traces and diag.terminated["safety-bound"] == 1


def test_copy_is_tracked():
    src = """
    fn main(){
        buf tmp[4];
        var i = 0;
        while (i < 2) { tmp[i] = input(1 + i); i = i + 1; }
        if (input(0) != '#') return 1;
        if (tmp[0] != 'a') return 1;
        if (tmp[1] != 'b') return 1;
        return 0;
    }"""
    (t,), _ = run(src)
    assert t.positions[1].solutions == charset.mask_of(b"a")
    assert len(t.positions[1].access_orders) == 2  # copy + check


def test_transformed_load_not_recorded():
    src = """
    fn main(){
        var d = input(0) - 48;
        if (d != 1) return 1;
        return 0;
    }"""
    (t,), _ = run(src)
    # only the read itself is an access; the load of d is not
    assert len(t.positions[0].access_orders) == 1


def test_ten_loads_of_one_byte():
    body = "".join("if (input(1) == 'z') return 1;\n" for _ in range(10))
    src = "fn main(){ if (input(0) != 'a') return 1;\n" + body + "return 0; }"
    (t,), _ = run(src)
    assert t.positions[1].access_orders[:10] == list(range(1, 11))


JSON_NAMES = {"parse": "json_parse", "value": "json_parse_value",
              "array": "json_parse_array"}


def _rename(ctx):
    return ":".join(JSON_NAMES.get(p, p) for p in ctx.split(":"))


def test_array_trace_path(subject):
    from symparse.consumption import identify_input_consumptions
    _, p = subject("json")
    traces, _ = explore(p, ExploreConfig(max_input_len=7))
    want = [list(s) for _, s in ARRAY_TRACE]
    hits = [t for t in traces
            if [charset.members(q.solutions) for q in t.positions[:6]] == want
            and t.positions[6].is_sentinel]
    assert len(hits) == 1
    a = identify_input_consumptions(hits[0])
    got = [display_context(c) for c in a.contexts[:6]]
    assert got == [_rename(display_context(c)) for c, _ in ARRAY_TRACE]


def test_calc_zero_plus_zero(subject):
    _, p = subject("calc")
    traces, _ = explore(p, ExploreConfig(max_input_len=4))
    digit = charset.mask_range(48, 57)
    shaped = [t for t in traces if len(t.positions) == 4
              and t.positions[0].solutions == digit
              and t.positions[1].solutions == charset.mask_of(b"+")
              and t.positions[2].solutions == digit]
    assert shaped
    assert shaped[0].last_orders() == [5, 26, 21, 28]
    assert shaped[0].positions[1].access_orders[:10] == list(range(6, 16))


def test_trace_invariants(subject):
    _, p = subject("lisp")
    traces, _ = explore(p, ExploreConfig(max_input_len=5))
    for t in traces:
        orders = sorted(o for q in t.positions for o in q.access_orders)
        assert orders == list(range(len(orders)))
        for q in t.positions:
            assert len(q.access_orders) == len(q.contexts) > 0


def test_dump_roundtrip(subject):
    _, p = subject("calc")
    traces, _ = explore(p, ExploreConfig(max_input_len=3))
    buf = io.StringIO()
    dump_traces(traces, buf)
    back = load_traces(io.StringIO(buf.getvalue()))
    buf2 = io.StringIO()
    dump_traces(back, buf2)
    assert buf.getvalue() == buf2.getvalue()


def test_explore_deterministic(subject):
    _, p = subject("cgidecode")
    a, _ = explore(p, ExploreConfig(max_input_len=4))
    b, _ = explore(p, ExploreConfig(max_input_len=4))
    sa, sb = io.StringIO(), io.StringIO()
    dump_traces(a, sa)
    dump_traces(b, sb)
    assert sa.getvalue() == sb.getvalue()


def test_state_budget_partial(subject):
    _, p = subject("json")
    _, diag = explore(p, ExploreConfig(max_input_len=9, max_states=50))
    assert diag.exhausted


def test_tokenizer_observations(subject):
    m, p = subject("tinyc")
    obs = {o.name: o for o in analyze_tokenizer(p, m)}
    assert {i.strip() for i in obs["WHILE_SYM"].instances} == {b"while"}
    assert {i.strip() for i in obs["LPAR"].instances} == {b"("}
    ints = {i.strip() for i in obs["INT"].instances}
    assert len(ints) > 3 and all(i.isdigit() for i in ints)


def test_tokenizer_instances_reproduce_id(subject):
    m, p = subject("tinyc")
    from symparse.symexec import TokenizerHarness
    obs = analyze_tokenizer(p, m)
    # every instance re-tokenizes to the same id when run concretely
    src = p.source + "\nfn __probe(){ next_sym(); return sym; }"
    probe = parse_subject(src, entry="__probe")
    for o in obs:
        for inst in o.instances:
            v = run_concrete(probe, inst)
            assert v.status == o.token_id


def test_proxy_traces_over_token_ids(subject):
    m, p = subject("tinyc")
    obs = analyze_tokenizer(p, m)
    traces, _ = explore_with_proxy(p, m, obs, ExploreConfig(max_input_len=4))
    universe = charset.mask_of(o.token_id for o in obs)
    assert traces and all(t.mode == "token" for t in traces)
    for t in traces:
        for q in t.positions:
            assert q.solutions and q.solutions & ~universe == 0


def test_concretize_accepts(subject):
    _, p = subject("json")
    traces, _ = explore(p, ExploreConfig(max_input_len=6))
    rng = random.Random(1)
    for t in traces[:200]:
        assert run_concrete(p, concretize(t, rng)).accept
