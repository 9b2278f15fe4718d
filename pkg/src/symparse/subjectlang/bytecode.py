"""Compile the mini-language AST to a flat stack bytecode.

Both the concrete interpreter and the symbolic executor run this code.
Loops compile to explicit ``LOOP_ENTER``/``LOOP_HEAD``/``LOOP_EXIT``
markers so that the symbolic executor sees every header transition.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from . import syntax as ast

# opcodes
PUSH, LOAD, STORE, GLOAD, GSTORE, INPUT, BLOAD, BSTORE, BUFNEW = range(9)
BIN, NEG, NOT, JMP, JZ, JNZ, CALL, RET, POP = range(9, 18)
LOOP_ENTER, LOOP_HEAD, LOOP_EXIT = range(18, 21)

OPNAMES = ["PUSH", "LOAD", "STORE", "GLOAD", "GSTORE", "INPUT", "BLOAD",
           "BSTORE", "BUFNEW", "BIN", "NEG", "NOT", "JMP", "JZ", "JNZ",
           "CALL", "RET", "POP", "LOOP_ENTER", "LOOP_HEAD", "LOOP_EXIT"]

ARITH = ("+", "-", "*", "/", "%")
COMPARE = ("==", "!=", "<", "<=", ">", ">=")


def c_div(a, b):
    # division by zero yields 0 (and x % 0 yields x): subjects never trap
    if b == 0:
        return 0
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def c_mod(a, b):
    return a - b * c_div(a, b)


BINOPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": c_div,
    "%": c_mod,
    "==": lambda a, b: int(a == b),
    "!=": lambda a, b: int(a != b),
    "<": lambda a, b: int(a < b),
    "<=": lambda a, b: int(a <= b),
    ">": lambda a, b: int(a > b),
    ">=": lambda a, b: int(a >= b),
}


@dataclass
class Code:
    name: str
    params: list
    n_locals: int
    buf_sizes: list
    code: list
    local_names: list = field(default_factory=list)
    # (site id) -> callee name
    sites: dict = field(default_factory=dict)


@dataclass
class Compiled:
    functions: dict
    global_names: list
    global_init: list
    entry: str
    markers: bool

    def global_index(self, name):
        return self.global_names.index(name)


class _FunctionCompiler:
    def __init__(self, program, func, gindex, markers):
        self.program = program
        self.func = func
        self.gindex = gindex
        self.markers = markers
        self.code = []
        self.locals = {p: i for i, p in enumerate(func.params)}
        self.local_names = list(func.params)
        self.bufs = {}
        self.buf_sizes = []
        self.loop_stack = []  # (loop_id, head_label, break_patches)
        self.sites = {}

    def emit(self, op, a=None, b=None):
        self.code.append((op, a, b))
        return len(self.code) - 1

    def patch(self, at, target):
        op, _, b = self.code[at]
        self.code[at] = (op, target, b)

    def local(self, name):
        if name not in self.locals:
            self.locals[name] = len(self.local_names)
            self.local_names.append(name)
        return self.locals[name]

    def compile(self):
        self.stmts(self.func.body)
        self.emit(PUSH, 0)
        self.emit(RET)
        return Code(self.func.name, list(self.func.params), len(self.local_names),
                    self.buf_sizes, self.code, self.local_names, self.sites)

    # statements
    def stmts(self, stmts):
        for s in stmts:
            self.stmt(s)

    def stmt(self, s):
        if isinstance(s, ast.VarDecl):
            slot = self.local(s.name)
            if s.init is None:
                self.emit(PUSH, 0)
            else:
                self.expr(s.init)
            self.emit(STORE, slot)
        elif isinstance(s, ast.BufDecl):
            if s.name not in self.bufs:
                self.bufs[s.name] = len(self.buf_sizes)
                self.buf_sizes.append(s.size)
            self.emit(BUFNEW, self.bufs[s.name], s.size)
        elif isinstance(s, ast.Assign):
            self.expr(s.value)
            if s.target in self.locals:
                self.emit(STORE, self.locals[s.target])
            else:
                self.emit(GSTORE, self.gindex[s.target])
        elif isinstance(s, ast.Store):
            self.expr(s.index)
            self.expr(s.value)
            self.emit(BSTORE, self.bufs[s.buf])
        elif isinstance(s, ast.If):
            jf = self.cond_false(s.cond)
            self.stmts(s.then)
            if s.orelse:
                jend = self.emit(JMP)
                self.patch_all(jf, len(self.code))
                self.stmts(s.orelse)
                self.patch(jend, len(self.code))
            else:
                self.patch_all(jf, len(self.code))
        elif isinstance(s, ast.While):
            if self.markers:
                self.emit(LOOP_ENTER, s.loop_id)
            head = len(self.code)
            if self.markers:
                self.emit(LOOP_HEAD, s.loop_id)
            jf = self.cond_false(s.cond)
            breaks = []
            self.loop_stack.append((s.loop_id, head, breaks))
            self.stmts(s.body)
            self.loop_stack.pop()
            self.emit(JMP, head)
            exit_at = len(self.code)
            self.patch_all(jf, exit_at)
            self.patch_all(breaks, exit_at)
            if self.markers:
                self.emit(LOOP_EXIT, s.loop_id)
        elif isinstance(s, ast.Break):
            self.loop_stack[-1][2].append(self.emit(JMP))
        elif isinstance(s, ast.Continue):
            self.emit(JMP, self.loop_stack[-1][1])
        elif isinstance(s, ast.Return):
            if s.value is None:
                self.emit(PUSH, 0)
            else:
                self.expr(s.value)
            self.emit(RET)
        elif isinstance(s, ast.ExprStmt):
            self.expr(s.expr)
            self.emit(POP)
        else:  # pragma: no cover
            raise TypeError(s)

    def patch_all(self, ats, target):
        for at in ats:
            self.patch(at, target)

    # conditions: return list of jump instructions to patch with the false target
    def cond_false(self, e):
        if isinstance(e, ast.Binary) and e.op == "&&":
            return self.cond_false(e.left) + self.cond_false(e.right)
        if isinstance(e, ast.Binary) and e.op == "||":
            trues = self.cond_true(e.left)
            falses = self.cond_false(e.right)
            self.patch_all(trues, len(self.code))
            return falses
        if isinstance(e, ast.Unary) and e.op == "!":
            return self.cond_true(e.operand)
        self.expr(e)
        return [self.emit(JZ)]

    def cond_true(self, e):
        if isinstance(e, ast.Binary) and e.op == "||":
            return self.cond_true(e.left) + self.cond_true(e.right)
        if isinstance(e, ast.Binary) and e.op == "&&":
            falses = self.cond_false(e.left)
            trues = self.cond_true(e.right)
            self.patch_all(falses, len(self.code))
            return trues
        if isinstance(e, ast.Unary) and e.op == "!":
            return self.cond_false(e.operand)
        self.expr(e)
        return [self.emit(JNZ)]

    # expressions
    def expr(self, e):
        if isinstance(e, ast.Num):
            self.emit(PUSH, e.value)
        elif isinstance(e, ast.Name):
            if e.ident in self.locals:
                self.emit(LOAD, self.locals[e.ident])
            elif e.ident in self.gindex:
                self.emit(GLOAD, self.gindex[e.ident])
            else:
                self.emit(PUSH, self.program.consts[e.ident])
        elif isinstance(e, ast.Input):
            self.expr(e.index)
            self.emit(INPUT)
        elif isinstance(e, ast.Index):
            self.expr(e.index)
            self.emit(BLOAD, self.bufs[e.buf])
        elif isinstance(e, ast.Call):
            for a in e.args:
                self.expr(a)
            self.sites[e.site] = e.func
            self.emit(CALL, e.func, e.site)
        elif isinstance(e, ast.Unary):
            self.expr(e.operand)
            self.emit(NEG if e.op == "-" else NOT)
        elif isinstance(e, ast.Binary):
            if e.op in ("&&", "||"):
                jf = self.cond_false(e)
                self.emit(PUSH, 1)
                jend = self.emit(JMP)
                self.patch_all(jf, len(self.code))
                self.emit(PUSH, 0)
                self.patch(jend, len(self.code))
            else:
                self.expr(e.left)
                self.expr(e.right)
                self.emit(BIN, e.op)
        else:  # pragma: no cover
            raise TypeError(e)


def compile_program(program, markers=True):
    gnames = list(program.globals)
    gindex = {n: i for i, n in enumerate(gnames)}
    funcs = {}
    for f in program.functions.values():
        funcs[f.name] = _FunctionCompiler(program, f, gindex, markers).compile()
    return Compiled(funcs, gnames, [program.globals[n] for n in gnames],
                    program.entry, markers)


def disassemble(code):
    lines = []
    for i, (op, a, b) in enumerate(code.code):
        args = " ".join(str(x) for x in (a, b) if x is not None)
        lines.append(f"{i:4d} {OPNAMES[op]:<10} {args}")
    return "\n".join(lines)
