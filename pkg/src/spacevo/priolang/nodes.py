"""Syntax tree for the priority-function language.

Nodes are frozen dataclasses so trees compare by value; that is what the
round-trip and substitution invariants are checked against.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

Literal = Union[int, float, str]


# -- expressions -------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: Literal


@dataclass(frozen=True)
class Name:
    id: str


@dataclass(frozen=True)
class ListExpr:
    elts: tuple


@dataclass(frozen=True)
class TupleExpr:
    elts: tuple


@dataclass(frozen=True)
class Subscript:
    value: object
    index: object


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / // % ** & |
    left: object
    right: object


@dataclass(frozen=True)
class UnaryOp:
    op: str  # '-' or 'not'
    operand: object


@dataclass(frozen=True)
class Compare:
    left: object
    ops: tuple  # of '==', '!=', '<', '>', '<=', '>='
    comparators: tuple


@dataclass(frozen=True)
class BoolOp:
    op: str  # 'and' / 'or'
    values: tuple


@dataclass(frozen=True)
class IfExp:
    test: object
    body: object
    orelse: object


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


@dataclass(frozen=True)
class Comprehension:
    """``elt for target in iter if c1 if c2 ...``; ``kind`` is 'gen' or 'list'."""

    kind: str
    elt: object
    target: object  # Name or TupleExpr of Names
    iter: object
    conds: tuple


@dataclass(frozen=True)
class SiteRef:
    """Placeholder left where a ``tunable([...])`` call was."""

    site_id: int


# -- statements --------------------------------------------------------------

@dataclass(frozen=True)
class Assign:
    target: object  # Name, TupleExpr of Names, or Subscript
    value: object


@dataclass(frozen=True)
class AugAssign:
    target: object  # Name or Subscript
    op: str
    value: object


@dataclass(frozen=True)
class For:
    target: object
    iter: object
    body: tuple


@dataclass(frozen=True)
class If:
    test: object
    body: tuple
    orelse: tuple


@dataclass(frozen=True)
class Return:
    value: object


@dataclass(frozen=True)
class FunctionDef:
    name: str
    params: tuple  # of str
    body: tuple


Expr = Union[Const, Name, ListExpr, TupleExpr, Subscript, BinOp, UnaryOp,
             Compare, BoolOp, IfExp, Call, Comprehension, SiteRef]
Stmt = Union[Assign, AugAssign, For, If, Return]


def walk(node):
    """Yield ``node`` and every node below it, depth first."""
    yield node
    if isinstance(node, (ListExpr, TupleExpr)):
        for e in node.elts:
            yield from walk(e)
    elif isinstance(node, Subscript):
        yield from walk(node.value)
        yield from walk(node.index)
    elif isinstance(node, BinOp):
        yield from walk(node.left)
        yield from walk(node.right)
    elif isinstance(node, UnaryOp):
        yield from walk(node.operand)
    elif isinstance(node, Compare):
        yield from walk(node.left)
        for c in node.comparators:
            yield from walk(c)
    elif isinstance(node, BoolOp):
        for v in node.values:
            yield from walk(v)
    elif isinstance(node, IfExp):
        yield from walk(node.test)
        yield from walk(node.body)
        yield from walk(node.orelse)
    elif isinstance(node, Call):
        for a in node.args:
            yield from walk(a)
    elif isinstance(node, Comprehension):
        yield from walk(node.elt)
        yield from walk(node.target)
        yield from walk(node.iter)
        for c in node.conds:
            yield from walk(c)
    elif isinstance(node, (Assign, AugAssign)):
        yield from walk(node.target)
        yield from walk(node.value)
    elif isinstance(node, For):
        yield from walk(node.target)
        yield from walk(node.iter)
        for s in node.body:
            yield from walk(s)
    elif isinstance(node, If):
        yield from walk(node.test)
        for s in node.body + node.orelse:
            yield from walk(s)
    elif isinstance(node, Return):
        yield from walk(node.value)
    elif isinstance(node, FunctionDef):
        for s in node.body:
            yield from walk(s)


def transform(node, fn):
    """Rebuild ``node`` bottom-up, replacing each sub-node ``x`` by ``fn(x)``."""
    def t(x):
        return transform(x, fn)

    if isinstance(node, (ListExpr, TupleExpr)):
        node = type(node)(tuple(t(e) for e in node.elts))
    elif isinstance(node, Subscript):
        node = Subscript(t(node.value), t(node.index))
    elif isinstance(node, BinOp):
        node = BinOp(node.op, t(node.left), t(node.right))
    elif isinstance(node, UnaryOp):
        node = UnaryOp(node.op, t(node.operand))
    elif isinstance(node, Compare):
        node = Compare(t(node.left), node.ops, tuple(t(c) for c in node.comparators))
    elif isinstance(node, BoolOp):
        node = BoolOp(node.op, tuple(t(v) for v in node.values))
    elif isinstance(node, IfExp):
        node = IfExp(t(node.test), t(node.body), t(node.orelse))
    elif isinstance(node, Call):
        node = Call(node.func, tuple(t(a) for a in node.args))
    elif isinstance(node, Comprehension):
        node = Comprehension(node.kind, t(node.elt), t(node.target), t(node.iter),
                             tuple(t(c) for c in node.conds))
    elif isinstance(node, Assign):
        node = Assign(t(node.target), t(node.value))
    elif isinstance(node, AugAssign):
        node = AugAssign(t(node.target), node.op, t(node.value))
    elif isinstance(node, For):
        node = For(t(node.target), t(node.iter), tuple(t(s) for s in node.body))
    elif isinstance(node, If):
        node = If(t(node.test), tuple(t(s) for s in node.body),
                  tuple(t(s) for s in node.orelse))
    elif isinstance(node, Return):
        node = Return(t(node.value))
    elif isinstance(node, FunctionDef):
        node = FunctionDef(node.name, node.params, tuple(t(s) for s in node.body))
    return fn(node)
