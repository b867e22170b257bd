"""Front end: Python's own tokenizer/parser, then a whitelist lowering.

Only the subset below survives lowering; anything else raises ParseError
with the offending line/column.  ``tunable([...])`` calls become SiteRef
nodes and are returned alongside the tree in source order.
"""
from __future__ import annotations

import ast
from dataclasses import dataclass

from . import nodes as N
from .errors import ParseError, TunableError

BUILTINS = frozenset({
    "abs", "min", "max", "sum", "len", "range", "enumerate",
    "log", "log1p", "exp", "tanh", "sqrt", "tunable",
})
# builtins that may take a bare generator expression as their only argument
COMPREHENSION_SINKS = frozenset({"sum", "min", "max", "len"})

_BINOPS = {
    ast.Add: "+", ast.Sub: "-", ast.Mult: "*", ast.Div: "/", ast.FloorDiv: "//",
    ast.Mod: "%", ast.Pow: "**", ast.BitAnd: "&", ast.BitOr: "|",
}
_AUGOPS = {ast.Add: "+", ast.Sub: "-", ast.Mult: "*", ast.Div: "/", ast.Mod: "%"}
_CMPOPS = {
    ast.Eq: "==", ast.NotEq: "!=", ast.Lt: "<", ast.Gt: ">",
    ast.LtE: "<=", ast.GtE: ">=",
}


@dataclass(frozen=True)
class RawSite:
    options: tuple
    span: tuple  # (start, end) UTF-8 byte offsets into the source text


def _fail(node: ast.AST, msg: str, cls=ParseError):
    raise cls(msg, getattr(node, "lineno", None), getattr(node, "col_offset", None))


class _Lowering:
    def __init__(self, line_starts: list[int]):
        self.line_starts = line_starts
        self.sites: list[RawSite] = []

    def _offset(self, lineno: int, col: int) -> int:
        return self.line_starts[lineno - 1] + col

    # -- statements ----------------------------------------------------------

    def function(self, fn: ast.FunctionDef) -> N.FunctionDef:
        a = fn.args
        if a.vararg or a.kwarg or a.kwonlyargs or a.posonlyargs or a.defaults:
            _fail(fn, "only plain positional parameters are accepted")
        if fn.decorator_list:
            _fail(fn, "decorators are not accepted")
        params = tuple(p.arg for p in a.args)
        body = list(fn.body)
        if (body and isinstance(body[0], ast.Expr) and isinstance(body[0].value, ast.Constant)
                and isinstance(body[0].value.value, str)):
            body = body[1:]  # docstring
        if not body:
            _fail(fn, "function body is empty")
        return N.FunctionDef(fn.name, params, self.block(body))

    def block(self, stmts) -> tuple:
        return tuple(self.stmt(s) for s in stmts)

    def stmt(self, s: ast.stmt):
        if isinstance(s, ast.Assign):
            if len(s.targets) != 1:
                _fail(s, "chained assignment is not accepted")
            return N.Assign(self.target(s.targets[0], allow_subscript=True), self.expr(s.value))
        if isinstance(s, ast.AugAssign):
            op = _AUGOPS.get(type(s.op))
            if op is None:
                _fail(s, "unsupported augmented assignment operator")
            target = s.target
            if not isinstance(target, (ast.Name, ast.Subscript)):
                _fail(s, "augmented assignment needs a name or subscript target")
            return N.AugAssign(self.target(target, allow_subscript=True), op, self.expr(s.value))
        if isinstance(s, ast.For):
            if s.orelse:
                _fail(s, "for/else is not accepted")
            return N.For(self.target(s.target), self.expr(s.iter), self.block(s.body))
        if isinstance(s, ast.If):
            return N.If(self.expr(s.test), self.block(s.body), self.block(s.orelse))
        if isinstance(s, ast.Return):
            if s.value is None:
                _fail(s, "return needs a value")
            return N.Return(self.expr(s.value))
        _fail(s, f"statement {type(s).__name__} is not accepted")

    def target(self, t: ast.expr, allow_subscript: bool = False):
        if isinstance(t, ast.Name):
            return N.Name(t.id)
        if isinstance(t, ast.Tuple) and all(isinstance(e, ast.Name) for e in t.elts):
            return N.TupleExpr(tuple(N.Name(e.id) for e in t.elts))
        if allow_subscript and isinstance(t, ast.Subscript):
            return self.expr(t)
        _fail(t, "unsupported assignment target")

    # -- expressions ---------------------------------------------------------

    def expr(self, e: ast.expr):
        if isinstance(e, ast.Constant):
            v = e.value
            if isinstance(v, bool) or not isinstance(v, (int, float, str)):
                _fail(e, f"literal {v!r} is not accepted")
            return N.Const(v)
        if isinstance(e, ast.Name):
            return N.Name(e.id)
        if isinstance(e, ast.List):
            return N.ListExpr(tuple(self.expr(x) for x in e.elts))
        if isinstance(e, ast.Tuple):
            return N.TupleExpr(tuple(self.expr(x) for x in e.elts))
        if isinstance(e, ast.Subscript):
            if isinstance(e.slice, ast.Slice):
                _fail(e, "slices are not accepted")
            return N.Subscript(self.expr(e.value), self.expr(e.slice))
        if isinstance(e, ast.BinOp):
            op = _BINOPS.get(type(e.op))
            if op is None:
                _fail(e, f"operator {type(e.op).__name__} is not accepted")
            return N.BinOp(op, self.expr(e.left), self.expr(e.right))
        if isinstance(e, ast.UnaryOp):
            if isinstance(e.op, ast.USub):
                inner = self.expr(e.operand)
                if isinstance(inner, N.Const) and not isinstance(inner.value, str):
                    return N.Const(-inner.value)
                return N.UnaryOp("-", inner)
            if isinstance(e.op, ast.Not):
                return N.UnaryOp("not", self.expr(e.operand))
            _fail(e, f"unary operator {type(e.op).__name__} is not accepted")
        if isinstance(e, ast.Compare):
            ops = []
            for o in e.ops:
                sym = _CMPOPS.get(type(o))
                if sym is None:
                    _fail(e, f"comparison {type(o).__name__} is not accepted")
                ops.append(sym)
            return N.Compare(self.expr(e.left), tuple(ops),
                             tuple(self.expr(c) for c in e.comparators))
        if isinstance(e, ast.BoolOp):
            op = "and" if isinstance(e.op, ast.And) else "or"
            return N.BoolOp(op, tuple(self.expr(v) for v in e.values))
        if isinstance(e, ast.IfExp):
            return N.IfExp(self.expr(e.test), self.expr(e.body), self.expr(e.orelse))
        if isinstance(e, ast.Call):
            return self.call(e)
        if isinstance(e, ast.ListComp):
            return self.comprehension(e, "list")
        if isinstance(e, ast.GeneratorExp):
            _fail(e, "generator expressions are only accepted as the sole argument of "
                     "sum/min/max/len")
        _fail(e, f"expression {type(e).__name__} is not accepted")

    def comprehension(self, e, kind: str) -> N.Comprehension:
        if len(e.generators) != 1:
            _fail(e, "nested comprehensions are not accepted")
        g = e.generators[0]
        if g.is_async:
            _fail(e, "async comprehensions are not accepted")
        return N.Comprehension(kind, self.expr(e.elt), self.target(g.target), self.expr(g.iter),
                               tuple(self.expr(c) for c in g.ifs))

    def call(self, e: ast.Call):
        if not isinstance(e.func, ast.Name) or e.func.id not in BUILTINS:
            _fail(e, "only calls to the fixed builtin set are accepted")
        if e.keywords:
            _fail(e, "keyword arguments are not accepted")
        name = e.func.id
        if name == "tunable":
            return self.tunable(e)
        if len(e.args) == 1 and isinstance(e.args[0], ast.GeneratorExp):
            if name not in COMPREHENSION_SINKS:
                _fail(e, f"{name}() does not take a generator expression")
            return N.Call(name, (self.comprehension(e.args[0], "gen"),))
        if any(isinstance(a, ast.Starred) for a in e.args):
            _fail(e, "starred arguments are not accepted")
        return N.Call(name, tuple(self.expr(a) for a in e.args))

    def tunable(self, e: ast.Call):
        if len(e.args) != 1 or not isinstance(e.args[0], ast.List):
            _fail(e, "tunable() takes exactly one literal list", TunableError)
        options = []
        for item in e.args[0].elts:
            options.append(_literal(item))
        if not options:
            _fail(e, "tunable() option list is empty", TunableError)
        start = self._offset(e.lineno, e.col_offset)
        end = self._offset(e.end_lineno, e.end_col_offset)
        self.sites.append(RawSite(tuple(options), (start, end)))
        return N.SiteRef(len(self.sites) - 1)


def _literal(item: ast.expr):
    if isinstance(item, ast.Constant) and not isinstance(item.value, bool) \
            and isinstance(item.value, (int, float, str)):
        return item.value
    if (isinstance(item, ast.UnaryOp) and isinstance(item.op, ast.USub)
            and isinstance(item.operand, ast.Constant)
            and isinstance(item.operand.value, (int, float))
            and not isinstance(item.operand.value, bool)):
        return -item.operand.value
    _fail(item, "tunable() options must be number or string literals", TunableError)


def _line_starts(text: str) -> list[int]:
    starts, pos = [], 0
    for line in text.encode("utf-8").splitlines(keepends=True):
        starts.append(pos)
        pos += len(line)
    starts.append(pos)
    return starts


def parse_source(text: str) -> tuple[N.FunctionDef, list[RawSite]]:
    """Parse ``text`` and lower its last function definition.

    Earlier definitions (e.g. restated references) are ignored entirely.
    """
    if not text or not text.strip():
        raise ParseError("empty source")
    try:
        module = ast.parse(text)
    except SyntaxError as exc:
        raise ParseError(f"syntax error: {exc.msg}", exc.lineno, exc.offset) from None
    funcs = []
    for node in module.body:
        if isinstance(node, ast.FunctionDef):
            funcs.append(node)
        elif isinstance(node, ast.Expr) and isinstance(node.value, ast.Constant) \
                and isinstance(node.value.value, str):
            continue  # module docstring
        else:
            _fail(node, f"only function definitions are accepted at top level, "
                        f"got {type(node).__name__}")
    if not funcs:
        raise ParseError("no function definition found")
    low = _Lowering(_line_starts(text))
    tree = low.function(funcs[-1])
    # lowering visits e.g. an IfExp test before its body; renumber by position
    order = sorted(range(len(low.sites)), key=lambda i: low.sites[i].span[0])
    if order != list(range(len(order))):
        new_id = {old: new for new, old in enumerate(order)}
        tree = N.transform(tree, lambda n: N.SiteRef(new_id[n.site_id])
                           if isinstance(n, N.SiteRef) else n)
    return tree, [low.sites[i] for i in order]
