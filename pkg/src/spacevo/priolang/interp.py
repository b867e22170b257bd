"""Closure-compiling interpreter for lowered priority functions.

Every number is a Python float.  Comparisons and logical operators yield
1.0 / 0.0.  A step is one executed statement or one loop/comprehension
iteration; the budget is per call.
"""
from __future__ import annotations

import math
from typing import Callable

from . import nodes as N
from .errors import EvalError, StepLimitExceeded

DEFAULT_STEP_BUDGET = 10_000_000
INDEX_TOLERANCE = 1e-9

_STEPS = "\0steps"  # reserved env key; never a valid identifier
_MISSING = object()


def to_value(x):
    """Convert a host Python/numpy value into an interpreter Value."""
    if isinstance(x, str):
        return x
    if isinstance(x, float):
        return x
    if isinstance(x, (bool, int)):
        return float(x)
    if isinstance(x, tuple):
        return tuple(to_value(v) for v in x)
    if isinstance(x, list):
        return [to_value(v) for v in x]
    if hasattr(x, "tolist"):  # numpy scalars and arrays
        v = x.tolist()
        return to_value(tuple(v) if isinstance(v, list) else v)
    raise TypeError(f"cannot pass {type(x).__name__} into a priority function")


def _truth(v) -> bool:
    if type(v) is float:
        return v != 0.0
    return len(v) > 0


def _num(v, what: str) -> float:
    if type(v) is not float:
        raise EvalError(f"{what}: expected a number, got {_kind(v)}")
    return v


def _kind(v) -> str:
    return {float: "number", str: "string", tuple: "sequence", list: "list"}.get(type(v), "value")


def _index(i, n: int) -> int:
    if type(i) is not float:
        raise EvalError(f"index must be a number, got {_kind(i)}")
    k = round(i)
    if abs(i - k) > INDEX_TOLERANCE:
        raise EvalError(f"index {i!r} is not integral")
    if k < -n or k >= n:
        raise EvalError(f"index {k} out of range for length {n}")
    return k


def _tick(env, n: int = 1):
    budget = env[_STEPS]
    budget[0] -= n
    if budget[0] < 0:
        raise StepLimitExceeded("step budget exceeded")


# -- arithmetic --------------------------------------------------------------

def _add(a, b):
    if type(a) is float and type(b) is float:
        return a + b
    raise EvalError(f"+ on {_kind(a)} and {_kind(b)}")


def _sub(a, b):
    if type(a) is float and type(b) is float:
        return a - b
    raise EvalError(f"- on {_kind(a)} and {_kind(b)}")


def _mul(a, b):
    if type(a) is float and type(b) is float:
        return a * b
    raise EvalError(f"* on {_kind(a)} and {_kind(b)}")


def _div(a, b):
    _num(a, "/"), _num(b, "/")
    if b == 0.0:
        raise EvalError("division by zero")
    return a / b


def _floordiv(a, b):
    _num(a, "//"), _num(b, "//")
    if b == 0.0:
        raise EvalError("integer division by zero")
    return a // b


def _mod(a, b):
    _num(a, "%"), _num(b, "%")
    if b == 0.0:
        raise EvalError("modulo by zero")
    return a % b


def _pow(a, b):
    _num(a, "**"), _num(b, "**")
    try:
        r = a ** b
    except (OverflowError, ZeroDivisionError) as exc:
        raise EvalError(f"** failed: {exc}") from None
    if type(r) is not float:  # complex from a negative base
        raise EvalError("** produced a complex result")
    return r


def _and(a, b):
    return 1.0 if _num(a, "&") != 0.0 and _num(b, "&") != 0.0 else 0.0


def _or(a, b):
    return 1.0 if _num(a, "|") != 0.0 or _num(b, "|") != 0.0 else 0.0


_BINFN = {"+": _add, "-": _sub, "*": _mul, "/": _div, "//": _floordiv,
          "%": _mod, "**": _pow, "&": _and, "|": _or}


def _ordered(a, b, op):
    if (type(a) is float and type(b) is float) or (type(a) is str and type(b) is str):
        return op(a, b)
    raise EvalError(f"cannot order {_kind(a)} and {_kind(b)}")


_CMPFN = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: _ordered(a, b, lambda x, y: x < y),
    ">": lambda a, b: _ordered(a, b, lambda x, y: x > y),
    "<=": lambda a, b: _ordered(a, b, lambda x, y: x <= y),
    ">=": lambda a, b: _ordered(a, b, lambda x, y: x >= y),
}


# -- builtins ----------------------------------------------------------------

def _iterable(v, what):
    if isinstance(v, (tuple, list, str)):
        return v
    raise EvalError(f"{what}: expected a sequence, got {_kind(v)}")


def _minmax(fn, name):
    def call(env, args):
        if len(args) == 1:
            items = _iterable(args[0], name)
        else:
            items = args
        if not items:
            raise EvalError(f"{name}() of an empty sequence")
        first = items[0]
        for x in items[1:]:
            _ordered(first, x, lambda a, b: None)
        return fn(items)
    return call


def _sum(env, args):
    if len(args) != 1:
        raise EvalError("sum() takes one argument")
    total = 0.0
    for x in _iterable(args[0], "sum"):
        total += _num(x, "sum")
    return total


def _len(env, args):
    if len(args) != 1:
        raise EvalError("len() takes one argument")
    return float(len(_iterable(args[0], "len")))


def _abs(env, args):
    if len(args) != 1:
        raise EvalError("abs() takes one argument")
    return abs(_num(args[0], "abs"))


def _range(env, args):
    if not 1 <= len(args) <= 3:
        raise EvalError("range() takes 1 to 3 arguments")
    ints = []
    for a in args:
        a = _num(a, "range")
        k = round(a)
        if abs(a - k) > INDEX_TOLERANCE:
            raise EvalError(f"range() argument {a!r} is not integral")
        ints.append(k)
    if len(ints) == 3 and ints[2] == 0:
        raise EvalError("range() step must not be zero")
    r = range(*ints)
    if len(r) > env[_STEPS][0]:
        raise StepLimitExceeded("range larger than the remaining step budget")
    return tuple(float(i) for i in r)


def _enumerate(env, args):
    if len(args) != 1:
        raise EvalError("enumerate() takes one argument")
    return tuple((float(i), v) for i, v in enumerate(_iterable(args[0], "enumerate")))


def _math1(fn, name):
    def call(env, args):
        if len(args) != 1:
            raise EvalError(f"{name}() takes one argument")
        try:
            return float(fn(_num(args[0], name)))
        except (ValueError, OverflowError) as exc:
            raise EvalError(f"{name}() failed: {exc}") from None
    return call


def _log(env, args):
    if len(args) not in (1, 2):
        raise EvalError("log() takes one or two arguments")
    xs = [_num(a, "log") for a in args]
    try:
        return math.log(*xs)
    except (ValueError, ZeroDivisionError) as exc:
        raise EvalError(f"log() failed: {exc}") from None


BUILTIN_IMPLS: dict[str, Callable] = {
    "abs": _abs, "min": _minmax(min, "min"), "max": _minmax(max, "max"),
    "sum": _sum, "len": _len, "range": _range, "enumerate": _enumerate,
    "log": _log, "log1p": _math1(math.log1p, "log1p"), "exp": _math1(math.exp, "exp"),
    "tanh": _math1(math.tanh, "tanh"), "sqrt": _math1(math.sqrt, "sqrt"),
}


# -- compiler ----------------------------------------------------------------

def _bind(target):
    """Return ``assign(env, value)`` for a Name or tuple-of-Names target."""
    if isinstance(target, N.Name):
        name = target.id

        def assign(env, v):
            env[name] = v
        return assign
    names = [t.id for t in target.elts]
    k = len(names)

    def assign_many(env, v):
        if not isinstance(v, (tuple, list)) or len(v) != k:
            raise EvalError(f"cannot unpack into {k} names")
        for name, x in zip(names, v):
            env[name] = x
    return assign_many


def _target_names(target) -> list[str]:
    if isinstance(target, N.Name):
        return [target.id]
    return [t.id for t in target.elts]


def compile_expr(e):
    if isinstance(e, N.Const):
        v = e.value if isinstance(e.value, str) else float(e.value)
        return lambda env: v
    if isinstance(e, N.Name):
        name = e.id

        def load(env):
            try:
                return env[name]
            except KeyError:
                raise EvalError(f"undefined name {name!r}") from None
        return load
    if isinstance(e, N.SiteRef):
        raise EvalError("program still contains a tunable site")
    if isinstance(e, N.ListExpr):
        parts = [compile_expr(x) for x in e.elts]
        return lambda env: [p(env) for p in parts]
    if isinstance(e, N.TupleExpr):
        parts = [compile_expr(x) for x in e.elts]
        return lambda env: tuple(p(env) for p in parts)
    if isinstance(e, N.Subscript):
        seq, idx = compile_expr(e.value), compile_expr(e.index)

        def subscript(env):
            s = seq(env)
            if not isinstance(s, (tuple, list, str)):
                raise EvalError(f"cannot index a {_kind(s)}")
            return s[_index(idx(env), len(s))]
        return subscript
    if isinstance(e, N.BinOp):
        fn, left, right = _BINFN[e.op], compile_expr(e.left), compile_expr(e.right)
        return lambda env: fn(left(env), right(env))
    if isinstance(e, N.UnaryOp):
        operand = compile_expr(e.operand)
        if e.op == "not":
            return lambda env: 0.0 if _truth(operand(env)) else 1.0
        return lambda env: -_num(operand(env), "unary -")
    if isinstance(e, N.Compare):
        left = compile_expr(e.left)
        chain = [(_CMPFN[op], compile_expr(c)) for op, c in zip(e.ops, e.comparators)]
        if len(chain) == 1:
            (fn, right), = chain
            return lambda env: 1.0 if fn(left(env), right(env)) else 0.0

        def compare(env):
            a = left(env)
            for fn, right in chain:
                b = right(env)
                if not fn(a, b):
                    return 0.0
                a = b
            return 1.0
        return compare
    if isinstance(e, N.BoolOp):
        parts = [compile_expr(v) for v in e.values]
        if e.op == "and":
            return lambda env: 1.0 if all(_truth(p(env)) for p in parts) else 0.0
        return lambda env: 1.0 if any(_truth(p(env)) for p in parts) else 0.0
    if isinstance(e, N.IfExp):
        test, body, orelse = compile_expr(e.test), compile_expr(e.body), compile_expr(e.orelse)
        return lambda env: body(env) if _truth(test(env)) else orelse(env)
    if isinstance(e, N.Call):
        if e.func == "tunable":
            raise EvalError("program still contains a tunable call")
        impl = BUILTIN_IMPLS[e.func]
        args = [compile_expr(a) for a in e.args]
        return lambda env: impl(env, [a(env) for a in args])
    if isinstance(e, N.Comprehension):
        return _compile_comprehension(e)
    raise TypeError(f"cannot compile {type(e).__name__}")


def _compile_comprehension(c: N.Comprehension):
    elt, it = compile_expr(c.elt), compile_expr(c.iter)
    conds = [compile_expr(x) for x in c.conds]
    assign = _bind(c.target)
    names = _target_names(c.target)

    def comprehension(env):
        seq = _iterable(it(env), "comprehension")
        saved = [(n, env.get(n, _MISSING)) for n in names]
        out = []
        try:
            for v in tuple(seq):
                _tick(env)
                assign(env, v)
                if all(_truth(cond(env)) for cond in conds):
                    out.append(elt(env))
        finally:
            for n, old in saved:
                if old is _MISSING:
                    env.pop(n, None)
                else:
                    env[n] = old
        return out if c.kind == "list" else tuple(out)
    return comprehension


def _compile_store(target):
    if isinstance(target, N.Subscript):
        seq, idx = compile_expr(target.value), compile_expr(target.index)

        def store(env, v):
            s = seq(env)
            if not isinstance(s, list):
                raise EvalError(f"cannot assign into a {_kind(s)}")
            s[_index(idx(env), len(s))] = v
        return store
    return _bind(target)


def compile_stmt(s):
    if isinstance(s, N.Assign):
        store, value = _compile_store(s.target), compile_expr(s.value)

        def assign(env):
            _tick(env)
            store(env, value(env))
        return assign
    if isinstance(s, N.AugAssign):
        load, store = compile_expr(s.target), _compile_store(s.target)
        fn, value = _BINFN[s.op], compile_expr(s.value)

        def augassign(env):
            _tick(env)
            store(env, fn(load(env), value(env)))
        return augassign
    if isinstance(s, N.Return):
        value = compile_expr(s.value)

        def ret(env):
            _tick(env)
            return value(env)
        return ret
    if isinstance(s, N.If):
        test, body, orelse = compile_expr(s.test), compile_block(s.body), compile_block(s.orelse)

        def if_(env):
            _tick(env)
            return body(env) if _truth(test(env)) else orelse(env)
        return if_
    if isinstance(s, N.For):
        it, assign, body = compile_expr(s.iter), _bind(s.target), compile_block(s.body)

        def for_(env):
            _tick(env)
            for v in tuple(_iterable(it(env), "for")):
                _tick(env)
                assign(env, v)
                r = body(env)
                if r is not None:
                    return r
            return None
        return for_
    raise TypeError(f"cannot compile statement {type(s).__name__}")


def compile_block(stmts):
    parts = [compile_stmt(s) for s in stmts]
    if len(parts) == 1:
        return parts[0]

    def block(env):
        for p in parts:
            r = p(env)
            if r is not None:
                return r
        return None
    return block


def compile_function(fn: N.FunctionDef, step_budget: int = DEFAULT_STEP_BUDGET):
    """Compile to a host callable ``f(*values) -> float`` (values already converted)."""
    body = compile_block(fn.body)
    params = fn.params
    arity = len(params)

    def call(*args):
        if len(args) != arity:
            raise EvalError(f"{fn.name}() takes {arity} arguments, got {len(args)}")
        env = dict(zip(params, args))
        env[_STEPS] = [step_budget]
        r = body(env)
        if r is None:
            raise EvalError(f"{fn.name}() finished without returning")
        if type(r) is not float:
            raise EvalError(f"{fn.name}() returned a {_kind(r)}, expected a number")
        if not math.isfinite(r):
            raise EvalError(f"{fn.name}() returned a non-finite value")
        return r
    return call
