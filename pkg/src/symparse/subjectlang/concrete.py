"""Concrete interpreter: the ground-truth oracle for a subject parser."""
from __future__ import annotations

from dataclasses import dataclass

from .bytecode import (
    BIN, BINOPS, BLOAD, BSTORE, BUFNEW, CALL, GLOAD, GSTORE, INPUT, JMP, JNZ,
    JZ, LOAD, LOOP_ENTER, LOOP_EXIT, LOOP_HEAD, NEG, NOT, POP, PUSH, RET, STORE,
    compile_program,
)

DEFAULT_STEP_BUDGET = 1_000_000
MAX_CALL_DEPTH = 10_000


@dataclass(frozen=True)
class ParseVerdict:
    accept: bool
    status: int | None
    positions_read: int
    steps: int
    budget_exceeded: bool = False
    out_of_bounds: bool = False
    error: str | None = None


class _Reject(Exception):
    pass


class ConcreteRunner:
    """Runs a compiled subject on concrete byte strings.

    Steps are executed bytecode instructions; a run exceeding the budget
    is reported as a rejection with ``budget_exceeded`` set.
    """

    def __init__(self, program, step_budget=DEFAULT_STEP_BUDGET):
        self.program = program
        self.compiled = compile_program(program, markers=False)
        self.step_budget = step_budget

    def run(self, data, entry=None, globals_out=None):
        if isinstance(data, str):
            data = data.encode("latin-1")
        funcs = self.compiled.functions
        g = list(self.compiled.global_init)
        n = len(data)
        budget = self.step_budget
        steps = 0
        max_read = -1

        fn = funcs[entry or self.compiled.entry]
        code = fn.code
        locs = [0] * fn.n_locals
        bufs = [None] * len(fn.buf_sizes)
        stack = []
        pc = 0
        frames = []
        try:
            while True:
                steps += 1
                if steps > budget:
                    return ParseVerdict(False, None, max_read + 1, steps,
                                        budget_exceeded=True)
                op, a, b = code[pc]
                pc += 1
                if op == PUSH:
                    stack.append(a)
                elif op == LOAD:
                    stack.append(locs[a])
                elif op == JZ:
                    if not stack.pop():
                        pc = a
                elif op == INPUT:
                    i = stack.pop()
                    if i < 0:
                        raise _Reject("negative input index")
                    if i > max_read:
                        max_read = i
                    stack.append(data[i] if i < n else 0)
                elif op == BIN:
                    r = stack.pop()
                    l = stack.pop()
                    stack.append(BINOPS[a](l, r))
                elif op == STORE:
                    locs[a] = stack.pop()
                elif op == GLOAD:
                    stack.append(g[a])
                elif op == GSTORE:
                    g[a] = stack.pop()
                elif op == JMP:
                    pc = a
                elif op == JNZ:
                    if stack.pop():
                        pc = a
                elif op == CALL:
                    callee = funcs[a]
                    k = len(callee.params)
                    args = stack[len(stack) - k:] if k else []
                    if k:
                        del stack[len(stack) - k:]
                    frames.append((code, pc, locs, bufs, stack))
                    if len(frames) > MAX_CALL_DEPTH:
                        raise _Reject("call depth exceeded")
                    code = callee.code
                    locs = args + [0] * (callee.n_locals - k)
                    bufs = [None] * len(callee.buf_sizes)
                    stack = []
                    pc = 0
                elif op == RET:
                    value = stack.pop()
                    if not frames:
                        if globals_out is not None:
                            globals_out.update(zip(self.compiled.global_names, g))
                        return ParseVerdict(value == 0, value, max_read + 1, steps)
                    code, pc, locs, bufs, stack = frames.pop()
                    stack.append(value)
                elif op == POP:
                    stack.pop()
                elif op == BLOAD:
                    i = stack.pop()
                    buf = bufs[a]
                    if buf is None or not 0 <= i < len(buf):
                        return ParseVerdict(False, None, max_read + 1, steps,
                                            out_of_bounds=True)
                    stack.append(buf[i])
                elif op == BSTORE:
                    v = stack.pop()
                    i = stack.pop()
                    buf = bufs[a]
                    if buf is None or not 0 <= i < len(buf):
                        return ParseVerdict(False, None, max_read + 1, steps,
                                            out_of_bounds=True)
                    buf[i] = v
                elif op == BUFNEW:
                    bufs[a] = [0] * b
                elif op == NEG:
                    stack.append(-stack.pop())
                elif op == NOT:
                    stack.append(int(not stack.pop()))
                elif op in (LOOP_ENTER, LOOP_HEAD, LOOP_EXIT):
                    pass
                else:  # pragma: no cover
                    raise RuntimeError(f"bad opcode {op}")
        except _Reject as exc:
            return ParseVerdict(False, None, max_read + 1, steps, error=str(exc))


def run_concrete(program, data, step_budget=DEFAULT_STEP_BUDGET):
    """Run ``program`` on ``data``; accept iff the entry function returns 0."""
    return ConcreteRunner(program, step_budget).run(data)
