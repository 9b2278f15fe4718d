"""Symbolic values and the per-position domain engine.

Every input byte (and, in composite mode, every token identifier) is an
independent variable with a finite domain kept as an integer bit mask.
A branch condition may mention at most one variable; its truth set is
computed exactly by evaluating the condition over the variable's domain.
"""
from __future__ import annotations

from . import charset
from .subjectlang.bytecode import BINOPS


class UnsupportedConstraint(Exception):
    """A condition relates several variables or transforms one non-affinely."""


class NotInTrace(KeyError):
    pass


class Read:
    """The symbolic identity of input byte ``pos``."""
    __slots__ = ("pos",)
    kind = "input"

    def __init__(self, pos):
        self.pos = pos

    def __eq__(self, other):
        return type(other) is Read and other.pos == self.pos

    def __hash__(self):
        return hash(("Read", self.pos))

    def __repr__(self):
        return f"Read({self.pos})"


class TokenRead:
    """The symbolic token identifier returned for the ``pos``-th token."""
    __slots__ = ("pos",)
    kind = "token"

    def __init__(self, pos):
        self.pos = pos

    def __eq__(self, other):
        return type(other) is TokenRead and other.pos == self.pos

    def __hash__(self):
        return hash(("TokenRead", self.pos))

    def __repr__(self):
        return f"TokenRead({self.pos})"


class Op:
    __slots__ = ("op", "args", "_vars")

    def __init__(self, op, args):
        self.op = op
        self.args = args
        vs = None
        for a in args:
            av = variables(a)
            if av:
                vs = av if vs is None else vs | av
        self._vars = vs or frozenset()

    def __eq__(self, other):
        return type(other) is Op and other.op == self.op and other.args == self.args

    def __hash__(self):
        return hash((self.op, self.args))

    def __repr__(self):
        if len(self.args) == 1:
            return f"({self.op}{self.args[0]!r})"
        return f"({self.args[0]!r} {self.op} {self.args[1]!r})"


Concrete = int
VARIABLE_TYPES = (Read, TokenRead)


def is_symbolic(v):
    return type(v) is not int


def variables(e):
    t = type(e)
    if t is int:
        return frozenset()
    if t is Op:
        return e._vars
    return frozenset((e,))


def binop(op, a, b):
    if type(a) is int and type(b) is int:
        return BINOPS[op](a, b)
    return Op(op, (a, b))


def neg(a):
    return -a if type(a) is int else Op("neg", (a,))


def lnot(a):
    return int(not a) if type(a) is int else Op("!", (a,))


_AFFINE_OK = {"+", "-", "neg", "!", "==", "!=", "<", "<=", ">", ">="}


def _check_shape(e):
    if type(e) is not Op:
        return
    if e.op == "*":
        a, b = e.args
        if variables(a) and variables(b):
            raise UnsupportedConstraint(f"product of symbolic values: {e!r}")
    elif e.op not in _AFFINE_OK:
        raise UnsupportedConstraint(f"non-affine transform {e.op!r}: {e!r}")
    for a in e.args:
        _check_shape(a)


def single_variable(e):
    """The unique variable of a supported condition ``e``."""
    vs = variables(e)
    if len(vs) != 1:
        raise UnsupportedConstraint(f"condition over {len(vs)} variables: {e!r}")
    _check_shape(e)
    return next(iter(vs))


def evaluate(e, var, value):
    t = type(e)
    if t is int:
        return e
    if t is Op:
        if len(e.args) == 1:
            x = evaluate(e.args[0], var, value)
            return -x if e.op == "neg" else int(not x)
        return BINOPS[e.op](evaluate(e.args[0], var, value),
                            evaluate(e.args[1], var, value))
    return value


_FLIP = {"==": "==", "!=": "!=", "<": ">", "<=": ">=", ">": "<", ">=": "<="}


def _cmp_mask(op, c, domain):
    # truth set of (var op c) within 0..255 bytes / small token ids
    if op == "==":
        return (1 << c) & domain if c >= 0 else 0
    if op == "!=":
        return domain & ~(1 << c) if c >= 0 else domain
    if op == "<":
        return domain & charset.mask_range(0, c - 1) if c > 0 else 0
    if op == "<=":
        return domain & charset.mask_range(0, c) if c >= 0 else 0
    if op == ">":
        return domain & ~charset.mask_range(0, c) if c >= 0 else domain
    if op == ">=":
        return domain & ~charset.mask_range(0, c - 1) if c > 0 else domain
    raise AssertionError(op)


def truth_mask(e, var, domain):
    """Subset of ``domain`` for which condition ``e`` evaluates non-zero."""
    if e is var:
        return domain & ~1
    if type(e) is Op and len(e.args) == 2 and e.op in _FLIP:
        a, b = e.args
        if a == var and type(b) is int:
            return _cmp_mask(e.op, b, domain)
        if b == var and type(a) is int:
            return _cmp_mask(_FLIP[e.op], a, domain)
    if e == var:
        return domain & ~1
    out = 0
    m = domain
    v = 0
    while m:
        if m & 1 and evaluate(e, var, v):
            out |= 1 << v
        m >>= 1
        v += 1
    return out


class Domains:
    """Value-semantic store of per-variable domains."""
    __slots__ = ("inputs", "tokens", "token_universe")

    def __init__(self, inputs=None, tokens=None, token_universe=0):
        self.inputs = inputs if inputs is not None else {}
        self.tokens = tokens if tokens is not None else {}
        self.token_universe = token_universe

    def copy(self):
        return Domains(dict(self.inputs), dict(self.tokens), self.token_universe)

    def domain(self, var):
        if type(var) is Read:
            return self.inputs.get(var.pos, charset.FULL)
        return self.tokens.get(var.pos, self.token_universe)

    def set(self, var, mask):
        if type(var) is Read:
            self.inputs[var.pos] = mask
        else:
            self.tokens[var.pos] = mask

    def feasible(self):
        return all(self.inputs.values()) and all(self.tokens.values())


def split(domains, cond):
    """Masks of the variable for the true and false outcomes of ``cond``.

    Returns ``(var, true_mask, false_mask)``.
    """
    var = single_variable(cond)
    dom = domains.domain(var)
    t = truth_mask(cond, var, dom)
    return var, t, dom & ~t


def assert_constraint(domains, expr, truth=True):
    """Restrict ``expr`` to ``truth``; returns ``(feasible, new_domains)``."""
    if type(expr) is int:
        return bool(expr) == truth, domains.copy()
    var, t, f = split(domains, expr)
    out = domains.copy()
    out.set(var, t if truth else f)
    return bool(t if truth else f), out


def solutions(domains, pos):
    """Feasible non-sentinel bytes of input position ``pos``."""
    if pos not in domains.inputs:
        raise NotInTrace(pos)
    return domains.inputs[pos] & charset.NON_NUL
