"""Bounded forking symbolic execution over subject bytecode.

Each accepting path yields a :class:`Trace` that lists, for every input
position (or token position in composite mode), all recorded accesses
with their access order and execution context, plus the feasible
solutions of that position.
"""
from __future__ import annotations

import json
import logging
import random
from collections import Counter, deque
from dataclasses import dataclass, field

from . import charset
from .subjectlang.bytecode import (
    BIN, BLOAD, BSTORE, BUFNEW, CALL, GLOAD, GSTORE, INPUT, JMP, JNZ, JZ, LOAD,
    LOOP_ENTER, LOOP_EXIT, LOOP_HEAD, NEG, NOT, POP, PUSH, RET, STORE,
    compile_program,
)
from .symcore import (
    Domains, Op, Read, TokenRead, UnsupportedConstraint, binop, lnot, neg,
    split,
)

log = logging.getLogger(__name__)

SENTINEL = 1  # mask of {0}: the end-of-input byte


@dataclass
class ExploreConfig:
    loop_bound: int = 4
    recursion_bound: int = 3
    max_input_len: int = 64
    max_states: int = 2_000_000
    safety_bound: int = 256


@dataclass
class TracePosition:
    access_orders: list
    contexts: list
    solutions: int

    @property
    def is_sentinel(self):
        return self.solutions == SENTINEL


@dataclass
class Trace:
    path_id: int
    accept: bool
    positions: list
    mode: str = "input"

    def __len__(self):
        return len(self.positions)

    def last_orders(self):
        return [p.access_orders[-1] for p in self.positions]

    def to_record(self):
        return {
            "pathId": self.path_id,
            "accept": self.accept,
            "mode": self.mode,
            "positions": [
                {"accessOrders": p.access_orders,
                 "contexts": p.contexts,
                 "solutions": charset.hex_ranges(p.solutions)}
                for p in self.positions
            ],
        }

    @classmethod
    def from_record(cls, rec):
        return cls(rec["pathId"], rec["accept"], [
            TracePosition(list(p["accessOrders"]), list(p["contexts"]),
                          charset.parse_hex_ranges(p["solutions"]))
            for p in rec["positions"]], rec.get("mode", "input"))


def dump_traces(traces, fp):
    for t in traces:
        fp.write(json.dumps(t.to_record(), sort_keys=True, separators=(",", ":")))
        fp.write("\n")


def load_traces(fp):
    return [Trace.from_record(json.loads(line)) for line in fp if line.strip()]


def display_context(ctx):
    """Drop call-site ids: ``main:value@main.0:L1I1`` -> ``main:value:L1I1``."""
    return ":".join(part.split("@", 1)[0] for part in ctx.split(":"))


@dataclass
class Diagnostics:
    terminated: Counter = field(default_factory=Counter)
    rejected: int = 0
    accepted: int = 0
    states: int = 0
    exhausted: bool = False
    messages: list = field(default_factory=list)

    def note(self, reason, detail=None):
        self.terminated[reason] += 1
        if detail and len(self.messages) < 50:
            self.messages.append(f"{reason}: {detail}")


class _Terminate(Exception):
    def __init__(self, reason, detail=None):
        self.reason = reason
        self.detail = detail


class Frame:
    __slots__ = ("fn", "code", "pc", "locs", "bufs", "stack", "site", "name",
                 "loops")

    def clone(self):
        f = Frame.__new__(Frame)
        f.fn = self.fn
        f.code = self.code
        f.pc = self.pc
        f.locs = list(self.locs)
        f.bufs = [None if b is None else list(b) for b in self.bufs]
        f.stack = list(self.stack)
        f.site = self.site
        f.name = self.name
        f.loops = [list(lp) for lp in self.loops]
        return f


class State:
    """One symbolic path: frame stack, domains, and the trace in progress."""
    __slots__ = ("frames", "globals", "dom", "order", "trace", "end",
                 "marked", "next_token")

    def clone(self):
        s = State.__new__(State)
        s.frames = [f.clone() for f in self.frames]
        s.globals = list(self.globals)
        s.dom = self.dom.copy()
        s.order = self.order
        s.trace = dict(self.trace)
        s.end = self.end
        s.marked = self.marked
        s.next_token = self.next_token
        return s

    def call_path(self, upto=None):
        frames = self.frames if upto is None else self.frames[:upto + 1]
        return ":".join(f.name for f in frames)

    def context(self):
        parts = []
        for f in self.frames:
            parts.append(f.name)
            for lp in f.loops:
                parts.append(f"L{lp[0]}I{lp[1]}")
        return ":".join(parts)


class SymbolicExecutor:
    """Explores all accepting paths of a subject under loop/recursion bounds.

    With ``proxy`` set (composite mode), calls to the tokenizer are
    detoured: the sink receives a fresh :class:`TokenRead` whose domain is
    the set of observed token identifiers.
    """

    def __init__(self, program, config=None, entry=None, proxy=None):
        self.program = program
        self.config = config or ExploreConfig()
        self.compiled = compile_program(program, markers=True)
        self.entry = entry or program.entry
        self.proxy = proxy
        self.diagnostics = Diagnostics()
        self.mode = "token" if proxy else "input"

    # ---------------------------------------------------------- setup
    def initial_state(self):
        fn = self.compiled.functions[self.entry]
        f = Frame.__new__(Frame)
        f.fn = fn
        f.code = fn.code
        f.pc = 0
        f.locs = [0] * fn.n_locals
        f.bufs = [None] * len(fn.buf_sizes)
        f.stack = []
        f.site = None
        f.name = fn.name
        f.loops = []
        s = State.__new__(State)
        s.frames = [f]
        s.globals = list(self.compiled.global_init)
        universe = self.proxy.universe if self.proxy else 0
        s.dom = Domains(token_universe=universe)
        s.order = 0
        s.trace = {}
        s.end = None
        s.marked = frozenset()
        s.next_token = 0
        return s

    # ---------------------------------------------------------- driver
    def explore(self):
        """Run the worklist to completion; returns finished paths in order."""
        cfg = self.config
        work = deque([self.initial_state()])
        finished = []
        diag = self.diagnostics
        while work:
            if diag.states >= cfg.max_states:
                diag.exhausted = True
                log.warning("state budget of %d exhausted; result is partial",
                            cfg.max_states)
                break
            st = work.popleft()
            diag.states += 1
            try:
                outcome = self._run(st)
            except _Terminate as t:
                diag.note(t.reason, t.detail)
                continue
            except UnsupportedConstraint as exc:
                diag.note("unsupported-constraint", str(exc))
                continue
            if outcome is None:
                continue
            if isinstance(outcome, tuple):
                work.extend(outcome)
            else:
                finished.append(outcome)
        return finished

    # ---------------------------------------------------------- events
    def _record(self, st, var):
        """Append an access to ``var`` with the current execution context."""
        pos = var.pos
        order = st.order
        st.order = order + 1
        ctx = st.context()
        prev = st.trace.get(pos)
        entry = (order, ctx)
        st.trace[pos] = prev + (entry,) if prev else (entry,)
        for depth, f in enumerate(st.frames):
            for lp in f.loops:
                if lp[3]:
                    continue
                seen = lp[2]
                if pos not in seen:
                    lp[2] = seen | {pos}
                    if len(lp[2]) >= 2:
                        lp[3] = True
                        key = (st.call_path(depth), lp[0])
                        st.marked = st.marked | {key}

    def _is_tracked(self, v):
        t = type(v)
        if self.mode == "input":
            return t is Read
        return t is TokenRead

    def _input(self, st, i):
        if type(i) is not int:
            raise UnsupportedConstraint(f"symbolic input index {i!r}")
        if i < 0:
            raise _Terminate("negative-index")
        if i > self.config.max_input_len:
            raise _Terminate("max-input-len", f"read of position {i}")
        dom = st.dom.inputs
        if i not in dom:
            if i >= self.config.max_input_len or (st.end is not None and i > st.end):
                dom[i] = SENTINEL
            else:
                dom[i] = charset.FULL
        return Read(i)

    def _restrict(self, st, var, mask):
        """Set a domain and maintain the NUL-terminated-string invariant."""
        if type(var) is TokenRead:
            st.dom.tokens[var.pos] = mask
            return True
        dom = st.dom.inputs
        dom[var.pos] = mask
        if mask == SENTINEL:
            if st.end is None or var.pos < st.end:
                st.end = var.pos
            for p, m in dom.items():
                if p > var.pos:
                    if not m & SENTINEL:
                        return False
                    dom[p] = SENTINEL
        elif not mask & SENTINEL:
            for p, m in dom.items():
                if p < var.pos and m & SENTINEL:
                    m &= ~SENTINEL
                    if not m:
                        return False
                    dom[p] = m
        return True

    def _branch(self, st, cond, true_pc, false_pc):
        var, t, f = split(st.dom, cond)
        out = []
        if t:
            s_t = st if not f else st.clone()
            s_t.frames[-1].pc = true_pc
            if self._restrict(s_t, var, t):
                out.append(s_t)
        if f:
            st.frames[-1].pc = false_pc
            if self._restrict(st, var, f):
                out.append(st)
        return tuple(out)

    def _call(self, st, callee_name, site, args):
        caller = st.frames[-1]
        if self.proxy is not None and callee_name == self.proxy.function:
            return self.proxy.invoke(self, st)
        fn = self.compiled.functions[callee_name]
        f = Frame.__new__(Frame)
        f.fn = fn
        f.code = fn.code
        f.pc = 0
        f.locs = args + [0] * (fn.n_locals - len(args))
        f.bufs = [None] * len(fn.buf_sizes)
        f.stack = []
        f.site = (caller.fn.name, site)
        f.name = f"{fn.name}@{caller.fn.name}.{site}"
        f.loops = []
        st.frames.append(f)
        bound = self.config.recursion_bound
        count = 0
        for fr in st.frames:
            if fr.name == f.name:
                count += 1
        if count > bound:
            raise _Terminate("recursion-bound", f.name)
        return None

    def _loop_head(self, st, loop_id):
        f = st.frames[-1]
        lp = f.loops[-1]
        assert lp[0] == loop_id, "loop stack out of sync"
        lp[1] += 1
        if not lp[3] and (st.call_path(len(st.frames) - 1), loop_id) in st.marked:
            lp[3] = True
        if lp[3]:
            if lp[1] > self.config.loop_bound:
                raise _Terminate("loop-bound")
        elif lp[1] > self.config.safety_bound:
            raise _Terminate("safety-bound", f"loop L{loop_id} in {f.name}")

    def _finish(self, st, value):
        if type(value) is not int:
            var, t, f = split(st.dom, Op("==", (value, 0)))
            if not t or not self._restrict(st, var, t):
                self.diagnostics.rejected += 1
                return None
            value = 0
        if value != 0:
            self.diagnostics.rejected += 1
            return None
        return self.make_trace(st)

    def make_trace(self, st, path_id=None):
        positions = sorted(st.trace)
        if positions != list(range(len(positions))):
            raise _Terminate("non-contiguous", str(positions))
        out = []
        doms = st.dom.inputs if self.mode == "input" else st.dom.tokens
        for p in positions:
            accesses = st.trace[p]
            mask = doms[p]
            if self.mode == "input" and mask != SENTINEL:
                mask &= charset.NON_NUL
            out.append(TracePosition([a[0] for a in accesses],
                                     [a[1] for a in accesses], mask))
        self.diagnostics.accepted += 1
        return Trace(self.diagnostics.accepted - 1, True, out, self.mode)

    # ---------------------------------------------------------- interpreter
    def _run(self, st):
        """Run ``st`` until it forks, finishes or dies.

        Returns a tuple of successor states, a finished Trace, or None.
        """
        funcs = self.compiled.functions
        tracked = Read if self.mode == "input" else TokenRead
        f = st.frames[-1]
        code = f.code
        stack = f.stack
        locs = f.locs
        g = st.globals
        steps = 0
        while True:
            steps += 1
            if steps > 5_000_000:
                raise _Terminate("step-budget")
            op, a, b = code[f.pc]
            f.pc += 1
            if op == PUSH:
                stack.append(a)
            elif op == LOAD:
                v = locs[a]
                if type(v) is tracked:
                    self._record(st, v)
                stack.append(v)
            elif op == JZ or op == JNZ:
                c = stack.pop()
                if type(c) is int:
                    if (not c) == (op == JZ):
                        f.pc = a
                    continue
                fall, jump = f.pc, a
                if op == JZ:
                    return self._branch(st, c, fall, jump)
                return self._branch(st, c, jump, fall)
            elif op == INPUT:
                v = self._input(st, stack.pop())
                if self.mode == "input":
                    self._record(st, v)
                stack.append(v)
            elif op == BIN:
                r = stack.pop()
                l = stack.pop()
                stack.append(binop(a, l, r))
            elif op == STORE:
                locs[a] = stack.pop()
            elif op == GLOAD:
                v = g[a]
                if type(v) is tracked:
                    self._record(st, v)
                stack.append(v)
            elif op == GSTORE:
                g[a] = stack.pop()
            elif op == JMP:
                f.pc = a
            elif op == CALL:
                callee = funcs[a]
                k = len(callee.params)
                args = stack[len(stack) - k:] if k else []
                if k:
                    del stack[len(stack) - k:]
                res = self._call(st, a, b, args)
                if res is not None:
                    # proxied tokenizer call: result pushed by the proxy
                    if isinstance(res, tuple):
                        return res
                    continue
                f = st.frames[-1]
                code, stack, locs = f.code, f.stack, f.locs
            elif op == RET:
                value = stack.pop()
                st.frames.pop()
                if not st.frames:
                    return self._finish(st, value)
                f = st.frames[-1]
                code, stack, locs = f.code, f.stack, f.locs
                stack.append(value)
            elif op == POP:
                stack.pop()
            elif op == LOOP_HEAD:
                self._loop_head(st, a)
            elif op == LOOP_ENTER:
                f.loops.append([a, 0, frozenset(), False])
            elif op == LOOP_EXIT:
                lp = f.loops.pop()
                assert lp[0] == a
            elif op == BLOAD:
                i = stack.pop()
                if type(i) is not int:
                    raise UnsupportedConstraint(f"symbolic buffer index {i!r}")
                buf = f.bufs[a]
                if buf is None or not 0 <= i < len(buf):
                    raise _Terminate("out-of-bounds")
                v = buf[i]
                if type(v) is tracked:
                    self._record(st, v)
                stack.append(v)
            elif op == BSTORE:
                v = stack.pop()
                i = stack.pop()
                if type(i) is not int:
                    raise UnsupportedConstraint(f"symbolic buffer index {i!r}")
                buf = f.bufs[a]
                if buf is None or not 0 <= i < len(buf):
                    raise _Terminate("out-of-bounds")
                buf[i] = v
            elif op == BUFNEW:
                f.bufs[a] = [0] * b
            elif op == NEG:
                stack.append(neg(stack.pop()))
            elif op == NOT:
                stack.append(lnot(stack.pop()))
            else:  # pragma: no cover
                raise RuntimeError(f"bad opcode {op}")


def explore(program, config=None, entry=None):
    """All accepting-path traces of ``program`` under the given bounds."""
    ex = SymbolicExecutor(program, config, entry)
    traces = ex.explore()
    if not traces:
        log.warning("no accepting path found (%s)", dict(ex.diagnostics.terminated))
    return traces, ex.diagnostics


# ---------------------------------------------------------------- composite mode

@dataclass
class TokenObservation:
    """Instances observed for one token identifier."""
    token_id: int
    name: str
    instances: set = field(default_factory=set)
    class_sequences: list = field(default_factory=list)


class TokenizerHarness:
    """Runs the tokenizer alone on a symbolic input and reads the sink."""

    def __init__(self, program, manifest, config=None, seed=0):
        self.program = program
        self.manifest = manifest
        cfg = config or ExploreConfig()
        if manifest.tokenizer_loop_bound:
            cfg = ExploreConfig(manifest.tokenizer_loop_bound, cfg.recursion_bound,
                                cfg.max_input_len, cfg.max_states, cfg.safety_bound)
        self.config = cfg
        self.samples = manifest.tokenizer_samples
        self.seed = seed

    def token_names(self):
        names = {}
        if self.manifest.tokenizer_enum:
            members = self.program.enums.get(self.manifest.tokenizer_enum, [])
            names = {i: m for i, m in enumerate(members)}
        return names

    def run(self):
        m = self.manifest
        ex = SymbolicExecutor(self.program, self.config, entry=m.tokenizer)
        compiled = ex.compiled
        sink_idx = (compiled.global_index(m.tokenizer_sink)
                    if m.tokenizer_sink_kind == "global" else None)
        cursor_idx = (compiled.global_index(m.tokenizer_cursor)
                      if m.tokenizer_cursor else None)
        finished = []

        def finish(st, value):
            if sink_idx is None:
                token, status = value, 0
            else:
                token, status = st.globals[sink_idx], value
            if type(status) is not int or status != 0:
                ex.diagnostics.rejected += 1
                return None
            if type(token) is not int:
                dom = st.dom.inputs.get(token.pos, 0) if type(token) is Read else 0
                if charset.popcount(dom) == 1:
                    token = charset.lowest(dom)
                else:
                    ex.diagnostics.note("token-not-concrete", repr(token))
                    return None
            extent = None
            if cursor_idx is not None:
                extent = st.globals[cursor_idx]
                if type(extent) is not int:
                    ex.diagnostics.note("cursor-not-concrete", repr(extent))
                    return None
            trace = ex.make_trace(st)
            finished.append((token, extent, trace))
            return None

        ex._finish = finish
        ex.explore()
        names = self.token_names()
        rng = random.Random(self.seed)
        obs = {}
        for token, extent, trace in finished:
            classes = [p.solutions for p in trace.positions if not p.is_sentinel]
            if extent is not None:
                classes = classes[:extent]
            o = obs.get(token)
            if o is None:
                o = obs[token] = TokenObservation(token, names.get(token, f"tok_{token}"))
            o.class_sequences.append(tuple(classes))
            for _ in range(self.samples):
                o.instances.add(bytes(rng.choice(charset.members(c)) for c in classes))
        self.diagnostics = ex.diagnostics
        return [obs[k] for k in sorted(obs)]


def analyze_tokenizer(program, manifest, config=None, seed=0):
    harness = TokenizerHarness(program, manifest, config, seed)
    return harness.run()


class TokenProxy:
    """Stands in for the tokenizer during parser exploration."""

    def __init__(self, function, sink_kind, sink_index, universe):
        self.function = function
        self.sink_kind = sink_kind
        self.sink_index = sink_index
        self.universe = universe

    def invoke(self, ex, st):
        k = st.next_token
        if k >= ex.config.max_input_len:
            raise _Terminate("max-input-len", f"token {k}")
        st.next_token = k + 1
        st.dom.tokens[k] = self.universe
        tok = TokenRead(k)
        f = st.frames[-1]
        if self.sink_kind == "global":
            st.globals[self.sink_index] = tok
            f.stack.append(0)
        else:
            f.stack.append(tok)
        return True


def explore_with_proxy(program, manifest, observations, config=None):
    compiled = compile_program(program, markers=True)
    universe = charset.mask_of(o.token_id for o in observations)
    sink_index = (compiled.global_index(manifest.tokenizer_sink)
                  if manifest.tokenizer_sink_kind == "global" else None)
    proxy = TokenProxy(manifest.tokenizer, manifest.tokenizer_sink_kind,
                       sink_index, universe)
    ex = SymbolicExecutor(program, config, proxy=proxy)
    traces = ex.explore()
    return traces, ex.diagnostics


def concretize(trace, rng, token_instances=None):
    """One concrete input drawn from the solutions of ``trace``.

    Input mode picks a byte per position up to the end marker.  Token mode
    picks a token identifier per position and an observed instance for it
    (``token_instances`` maps identifiers to instance lists); instances are
    joined with single spaces so neighbouring words stay apart.
    """
    if trace.mode == "input":
        out = bytearray()
        for p in trace.positions:
            if p.solutions & SENTINEL:
                break
            out.append(rng.choice(charset.members(p.solutions)))
        return bytes(out)
    parts = []
    for p in trace.positions:
        tid = rng.choice(charset.members(p.solutions))
        inst = token_instances.get(tid) if token_instances else None
        if not inst:
            return None
        word = rng.choice(inst).lstrip(b" \t\r\n")
        if word:
            parts.append(word)
    return b" ".join(parts)


def trace_samples(traces, oracle=None, seed=0, token_instances=None):
    """One concretization per accepting trace (kept only if ``oracle`` agrees)."""
    rng = random.Random(seed)
    out = []
    seen = set()
    for t in traces:
        if not t.accept:
            continue
        s = concretize(t, rng, token_instances)
        if s is None or s in seen:
            continue
        if oracle is not None and not oracle(s):
            continue
        seen.add(s)
        out.append(s)
    return out
