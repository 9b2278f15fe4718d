"""Lexer, parser and AST for the subject mini-language.

The language is a small C-like dialect: integer globals and constants,
functions over integers, local byte buffers, structured ``while`` loops
and the ``input(i)`` intrinsic, which yields the i-th input byte (0 past
the end of the input).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional


class MiniSyntaxError(Exception):
    def __init__(self, msg, line=0, col=0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.line = line
        self.col = col


class UnresolvedName(MiniSyntaxError):
    pass


class UnstructuredControlFlow(MiniSyntaxError):
    pass


# ---------------------------------------------------------------- AST

@dataclass
class Node:
    line: int = field(default=0, kw_only=True, compare=False)
    col: int = field(default=0, kw_only=True, compare=False)


@dataclass
class Num(Node):
    value: int


@dataclass
class Name(Node):
    ident: str


@dataclass
class Input(Node):
    index: "Expr"


@dataclass
class Index(Node):
    buf: str
    index: "Expr"


@dataclass
class Call(Node):
    func: str
    args: list
    site: int = -1


@dataclass
class Unary(Node):
    op: str
    operand: "Expr"


@dataclass
class Binary(Node):
    op: str
    left: "Expr"
    right: "Expr"


Expr = Num | Name | Input | Index | Call | Unary | Binary


@dataclass
class VarDecl(Node):
    name: str
    init: Optional[Expr]
    sid: int = -1


@dataclass
class BufDecl(Node):
    name: str
    size: int
    sid: int = -1


@dataclass
class Assign(Node):
    target: str
    value: Expr
    sid: int = -1


@dataclass
class Store(Node):
    buf: str
    index: Expr
    value: Expr
    sid: int = -1


@dataclass
class If(Node):
    cond: Expr
    then: list
    orelse: list
    sid: int = -1


@dataclass
class While(Node):
    cond: Expr
    body: list
    sid: int = -1
    loop_id: int = -1


@dataclass
class Return(Node):
    value: Optional[Expr]
    sid: int = -1


@dataclass
class Break(Node):
    sid: int = -1


@dataclass
class Continue(Node):
    sid: int = -1


@dataclass
class ExprStmt(Node):
    expr: Expr
    sid: int = -1


@dataclass
class LoopInfo:
    loop_id: int
    header_sid: int
    depth: int


@dataclass
class FunctionDef:
    name: str
    params: list
    body: list
    loops: list = field(default_factory=list)
    n_statements: int = 0
    n_sites: int = 0
    line: int = 0


@dataclass
class SubjectProgram:
    functions: dict
    globals: dict
    consts: dict
    enums: dict
    entry: str = "main"
    tokenizer: Optional[str] = None
    source: str = ""

    def loops(self):
        return [(f.name, lp.loop_id, lp.header_sid)
                for f in self.functions.values() for lp in f.loops]


# ---------------------------------------------------------------- lexer

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<num>0[xX][0-9a-fA-F]+|\d+)
  | (?P<char>'(?:\\x[0-9a-fA-F]{2}|\\.|[^\\'])')
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>&&|\|\||==|!=|<=|>=|[-+*/%<>=!(){}\[\];,])
""", re.VERBOSE | re.DOTALL)

KEYWORDS = {"fn", "var", "buf", "global", "const", "enum", "if", "else",
            "while", "return", "break", "continue", "input"}

_ESCAPES = {"n": 10, "t": 9, "r": 13, "0": 0, "\\": 92, "'": 39, '"': 34}


def _char_value(text, line, col):
    body = text[1:-1]
    if body.startswith("\\x"):
        return int(body[2:], 16)
    if body.startswith("\\"):
        if body[1] not in _ESCAPES:
            raise MiniSyntaxError(f"unknown escape {body!r}", line, col)
        return _ESCAPES[body[1]]
    return ord(body)


def tokenize(source):
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise MiniSyntaxError(f"unexpected character {source[pos]!r}",
                                  line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "num":
            toks.append(("num", int(text, 0), line, col))
        elif kind == "char":
            toks.append(("num", _char_value(text, line, col), line, col))
        elif kind == "ident":
            toks.append(("kw" if text in KEYWORDS else "ident", text, line, col))
        elif kind == "op":
            toks.append(("op", text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            line_start = pos + text.rfind("\n") + 1
        pos = m.end()
    toks.append(("eof", None, line, pos - line_start + 1))
    return toks


# ---------------------------------------------------------------- parser

_BINARY_LEVELS = [
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
]


class _Parser:
    def __init__(self, source):
        self.toks = tokenize(source)
        self.i = 0

    # token helpers
    def peek(self, k=0):
        return self.toks[self.i + k]

    def at(self, kind, value=None, k=0):
        t = self.peek(k)
        return t[0] == kind and (value is None or t[1] == value)

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind, value=None):
        t = self.peek()
        if not self.at(kind, value):
            want = value if value is not None else kind
            got = t[1] if t[1] is not None else t[0]
            raise MiniSyntaxError(f"expected {want!r}, got {got!r}", t[2], t[3])
        return self.next()

    def error(self, msg):
        t = self.peek()
        raise MiniSyntaxError(msg, t[2], t[3])

    # top level
    def program(self):
        functions, globs, consts, enums = {}, {}, {}, {}
        while not self.at("eof"):
            if self.at("kw", "fn"):
                f = self.function(consts)
                if f.name in functions:
                    raise MiniSyntaxError(f"duplicate function {f.name!r}", f.line)
                functions[f.name] = f
            elif self.at("kw", "global"):
                self.next()
                name = self.expect("ident")[1]
                value = 0
                if self.at("op", "="):
                    self.next()
                    value = self.const_expr(consts)
                self.expect("op", ";")
                globs[name] = value
            elif self.at("kw", "const"):
                self.next()
                name = self.expect("ident")[1]
                self.expect("op", "=")
                consts[name] = self.const_expr(consts)
                self.expect("op", ";")
            elif self.at("kw", "enum"):
                self.next()
                ename = self.expect("ident")[1]
                self.expect("op", "{")
                members = []
                while not self.at("op", "}"):
                    members.append(self.expect("ident")[1])
                    if not self.at("op", "}"):
                        self.expect("op", ",")
                self.expect("op", "}")
                if self.at("op", ";"):
                    self.next()
                for value, member in enumerate(members):
                    consts[member] = value
                enums[ename] = members
            else:
                self.error("expected 'fn', 'global', 'const' or 'enum'")
        return functions, globs, consts, enums

    def const_expr(self, consts):
        neg = False
        if self.at("op", "-"):
            self.next()
            neg = True
        t = self.next()
        if t[0] == "num":
            v = t[1]
        elif t[0] == "ident" and t[1] in consts:
            v = consts[t[1]]
        else:
            raise MiniSyntaxError("expected constant", t[2], t[3])
        return -v if neg else v

    def function(self, consts):
        kw = self.expect("kw", "fn")
        name = self.expect("ident")[1]
        self.expect("op", "(")
        params = []
        while not self.at("op", ")"):
            params.append(self.expect("ident")[1])
            if not self.at("op", ")"):
                self.expect("op", ",")
        self.expect("op", ")")
        body = self.block()
        return FunctionDef(name, params, body, line=kw[2])

    def block(self):
        self.expect("op", "{")
        stmts = []
        while not self.at("op", "}"):
            stmts.append(self.statement())
        self.expect("op", "}")
        return stmts

    def body(self):
        if self.at("op", "{"):
            return self.block()
        return [self.statement()]

    def statement(self):
        t = self.peek()
        pos = dict(line=t[2], col=t[3])
        if self.at("kw", "var"):
            self.next()
            name = self.expect("ident")[1]
            init = None
            if self.at("op", "="):
                self.next()
                init = self.expr()
            self.expect("op", ";")
            return VarDecl(name, init, **pos)
        if self.at("kw", "buf"):
            self.next()
            name = self.expect("ident")[1]
            self.expect("op", "[")
            size = self.expect("num")[1]
            self.expect("op", "]")
            self.expect("op", ";")
            return BufDecl(name, size, **pos)
        if self.at("kw", "if"):
            self.next()
            self.expect("op", "(")
            cond = self.expr()
            self.expect("op", ")")
            then = self.body()
            orelse = []
            if self.at("kw", "else"):
                self.next()
                orelse = self.body()
            return If(cond, then, orelse, **pos)
        if self.at("kw", "while"):
            self.next()
            self.expect("op", "(")
            cond = self.expr()
            self.expect("op", ")")
            return While(cond, self.body(), **pos)
        if self.at("kw", "return"):
            self.next()
            value = None if self.at("op", ";") else self.expr()
            self.expect("op", ";")
            return Return(value, **pos)
        if self.at("kw", "break"):
            self.next()
            self.expect("op", ";")
            return Break(**pos)
        if self.at("kw", "continue"):
            self.next()
            self.expect("op", ";")
            return Continue(**pos)
        if self.at("ident") and self.at("op", "=", 1):
            name = self.next()[1]
            self.next()
            value = self.expr()
            self.expect("op", ";")
            return Assign(name, value, **pos)
        if self.at("ident") and self.at("op", "[", 1):
            # either a store `b[i] = e;` or an expression statement
            save = self.i
            name = self.next()[1]
            self.next()
            index = self.expr()
            self.expect("op", "]")
            if self.at("op", "="):
                self.next()
                value = self.expr()
                self.expect("op", ";")
                return Store(name, index, value, **pos)
            self.i = save
        e = self.expr()
        self.expect("op", ";")
        return ExprStmt(e, **pos)

    def expr(self, level=0):
        if level == len(_BINARY_LEVELS):
            return self.unary()
        left = self.expr(level + 1)
        while self.peek()[0] == "op" and self.peek()[1] in _BINARY_LEVELS[level]:
            t = self.next()
            right = self.expr(level + 1)
            left = Binary(t[1], left, right, line=t[2], col=t[3])
        return left

    def unary(self):
        t = self.peek()
        if self.at("op", "-") or self.at("op", "!"):
            self.next()
            return Unary(t[1], self.unary(), line=t[2], col=t[3])
        return self.primary()

    def primary(self):
        t = self.next()
        pos = dict(line=t[2], col=t[3])
        if t[0] == "num":
            return Num(t[1], **pos)
        if t[0] == "kw" and t[1] == "input":
            self.expect("op", "(")
            index = self.expr()
            self.expect("op", ")")
            return Input(index, **pos)
        if t[0] == "ident":
            if self.at("op", "("):
                self.next()
                args = []
                while not self.at("op", ")"):
                    args.append(self.expr())
                    if not self.at("op", ")"):
                        self.expect("op", ",")
                self.expect("op", ")")
                return Call(t[1], args, **pos)
            if self.at("op", "["):
                self.next()
                index = self.expr()
                self.expect("op", "]")
                return Index(t[1], index, **pos)
            return Name(t[1], **pos)
        if t[0] == "op" and t[1] == "(":
            e = self.expr()
            self.expect("op", ")")
            return e
        got = t[1] if t[1] is not None else "end of file"
        raise MiniSyntaxError(f"unexpected {got!r}", t[2], t[3])


# ---------------------------------------------------------------- resolution

class _Numberer:
    """Assigns statement ids, call-site ids and loop ids in textual order."""

    def __init__(self, program, next_loop):
        self.program = program
        self.next_loop = next_loop

    def function(self, f):
        self.f = f
        self.sid = 0
        self.site = 0
        self.scope = set(f.params)
        self.bufs = set()
        self.stmts(f.body, loop_depth=0)
        f.n_statements = self.sid
        f.n_sites = self.site

    def stmts(self, stmts, loop_depth):
        for s in stmts:
            self.stmt(s, loop_depth)

    def stmt(self, s, loop_depth):
        s.sid = self.sid
        self.sid += 1
        if isinstance(s, VarDecl):
            if s.init is not None:
                self.expr(s.init)
            self.scope.add(s.name)
        elif isinstance(s, BufDecl):
            self.bufs.add(s.name)
        elif isinstance(s, Assign):
            self.expr(s.value)
            if s.target not in self.scope and s.target not in self.program.globals:
                raise UnresolvedName(f"assignment to undeclared {s.target!r}",
                                     s.line, s.col)
        elif isinstance(s, Store):
            self.expr(s.index)
            self.expr(s.value)
            if s.buf not in self.bufs:
                raise UnresolvedName(f"unknown buffer {s.buf!r}", s.line, s.col)
        elif isinstance(s, If):
            self.expr(s.cond)
            self.stmts(s.then, loop_depth)
            self.stmts(s.orelse, loop_depth)
        elif isinstance(s, While):
            s.loop_id = self.next_loop
            self.next_loop += 1
            self.f.loops.append(LoopInfo(s.loop_id, s.sid, loop_depth))
            self.expr(s.cond)
            self.stmts(s.body, loop_depth + 1)
        elif isinstance(s, (Break, Continue)):
            if loop_depth == 0:
                kw = "break" if isinstance(s, Break) else "continue"
                raise UnstructuredControlFlow(f"{kw!r} outside of a loop",
                                              s.line, s.col)
        elif isinstance(s, Return):
            if s.value is not None:
                self.expr(s.value)
        elif isinstance(s, ExprStmt):
            self.expr(s.expr)

    def expr(self, e):
        if isinstance(e, Call):
            for a in e.args:
                self.expr(a)
            e.site = self.site
            self.site += 1
            callee = self.program.functions.get(e.func)
            if callee is None:
                raise UnresolvedName(f"call to undefined function {e.func!r}",
                                     e.line, e.col)
            if len(callee.params) != len(e.args):
                raise MiniSyntaxError(
                    f"{e.func!r} expects {len(callee.params)} arguments",
                    e.line, e.col)
        elif isinstance(e, Name):
            if (e.ident not in self.scope and e.ident not in self.program.globals
                    and e.ident not in self.program.consts):
                raise UnresolvedName(f"unknown name {e.ident!r}", e.line, e.col)
        elif isinstance(e, Index):
            if e.buf not in self.bufs:
                raise UnresolvedName(f"unknown buffer {e.buf!r}", e.line, e.col)
            self.expr(e.index)
        elif isinstance(e, Input):
            self.expr(e.index)
        elif isinstance(e, Unary):
            self.expr(e.operand)
        elif isinstance(e, Binary):
            self.expr(e.left)
            self.expr(e.right)


def parse_subject(source, entry="main", tokenizer=None):
    """Parse mini-language text into a resolved :class:`SubjectProgram`."""
    functions, globs, consts, enums = _Parser(source).program()
    prog = SubjectProgram(functions, globs, consts, enums, entry, tokenizer, source)
    if entry not in functions:
        raise UnresolvedName(f"entry function {entry!r} is not defined")
    if tokenizer is not None and tokenizer not in functions:
        raise UnresolvedName(f"tokenizer function {tokenizer!r} is not defined")
    numberer = _Numberer(prog, next_loop=1)
    for f in functions.values():
        numberer.function(f)
    return prog


def list_loops(program):
    """Rows of (function, loop id, header statement id) in textual order."""
    return program.loops()
