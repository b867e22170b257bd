"""Canonical source rendering: 4-space indent, one statement per line,
parentheses only where precedence requires them."""
from __future__ import annotations

from . import nodes as N

_PREC_BIN = {"|": 6, "&": 8, "+": 10, "-": 10, "*": 11, "/": 11, "//": 11, "%": 11, "**": 13}
_ATOM = 14


def format_literal(v) -> str:
    if isinstance(v, str):
        return repr(v)
    if isinstance(v, bool):
        raise TypeError("booleans are not literals of the language")
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def _prec(e) -> int:
    if isinstance(e, N.IfExp):
        return 1
    if isinstance(e, N.BoolOp):
        return 2 if e.op == "or" else 3
    if isinstance(e, N.UnaryOp):
        return 4 if e.op == "not" else 12
    if isinstance(e, N.Compare):
        return 5
    if isinstance(e, N.BinOp):
        return _PREC_BIN[e.op]
    if isinstance(e, N.Const) and not isinstance(e.value, str) and (
            e.value < 0 or (e.value == 0 and str(e.value).startswith("-"))):
        return 12
    return _ATOM


class Renderer:
    def __init__(self, sites=None):
        self.sites = sites

    def expr(self, e, need: int = 0) -> str:
        s = self._expr(e)
        return f"({s})" if _prec(e) < need else s

    def _expr(self, e) -> str:
        if isinstance(e, N.Const):
            return format_literal(e.value)
        if isinstance(e, N.Name):
            return e.id
        if isinstance(e, N.SiteRef):
            if self.sites is None:
                raise ValueError("rendering a site reference needs the site table")
            opts = ", ".join(format_literal(o) for o in self.sites[e.site_id].options)
            return f"tunable([{opts}])"
        if isinstance(e, N.ListExpr):
            return "[" + ", ".join(self.expr(x, 1) for x in e.elts) + "]"
        if isinstance(e, N.TupleExpr):
            if len(e.elts) == 1:
                return f"({self.expr(e.elts[0], 1)},)"
            return "(" + ", ".join(self.expr(x, 1) for x in e.elts) + ")"
        if isinstance(e, N.Subscript):
            return f"{self.expr(e.value, _ATOM)}[{self.expr(e.index, 0)}]"
        if isinstance(e, N.BinOp):
            p = _PREC_BIN[e.op]
            if e.op == "**":
                return f"{self.expr(e.left, _ATOM)} ** {self.expr(e.right, 12)}"
            return f"{self.expr(e.left, p)} {e.op} {self.expr(e.right, p + 1)}"
        if isinstance(e, N.UnaryOp):
            if e.op == "not":
                return f"not {self.expr(e.operand, 4)}"
            return f"-{self.expr(e.operand, 12)}"
        if isinstance(e, N.Compare):
            parts = [self.expr(e.left, 6)]
            for op, c in zip(e.ops, e.comparators):
                parts.append(f"{op} {self.expr(c, 6)}")
            return " ".join(parts)
        if isinstance(e, N.BoolOp):
            p = 2 if e.op == "or" else 3
            return f" {e.op} ".join(self.expr(v, p + 1) for v in e.values)
        if isinstance(e, N.IfExp):
            return f"{self.expr(e.body, 2)} if {self.expr(e.test, 2)} else {self.expr(e.orelse, 1)}"
        if isinstance(e, N.Call):
            if len(e.args) == 1 and isinstance(e.args[0], N.Comprehension) \
                    and e.args[0].kind == "gen":
                return f"{e.func}({self._comp_body(e.args[0])})"
            return f"{e.func}(" + ", ".join(self.expr(a, 1) for a in e.args) + ")"
        if isinstance(e, N.Comprehension):
            body = self._comp_body(e)
            return f"[{body}]" if e.kind == "list" else f"({body})"
        raise TypeError(f"cannot render {type(e).__name__}")

    def _comp_body(self, c: N.Comprehension) -> str:
        s = f"{self.expr(c.elt, 1)} for {self._target(c.target)} in {self.expr(c.iter, 2)}"
        for cond in c.conds:
            s += f" if {self.expr(cond, 2)}"
        return s

    def _target(self, t) -> str:
        if isinstance(t, N.TupleExpr):
            return ", ".join(self.expr(x, _ATOM) for x in t.elts)
        return self.expr(t, _ATOM)

    def block(self, stmts, depth: int) -> list[str]:
        out = []
        for s in stmts:
            out.extend(self.stmt(s, depth))
        return out

    def stmt(self, s, depth: int) -> list[str]:
        pad = "    " * depth
        if isinstance(s, N.Assign):
            return [f"{pad}{self._target(s.target)} = {self.expr(s.value, 0)}"]
        if isinstance(s, N.AugAssign):
            return [f"{pad}{self._target(s.target)} {s.op}= {self.expr(s.value, 0)}"]
        if isinstance(s, N.Return):
            return [f"{pad}return {self.expr(s.value, 0)}"]
        if isinstance(s, N.For):
            head = f"{pad}for {self._target(s.target)} in {self.expr(s.iter, 0)}:"
            return [head] + self.block(s.body, depth + 1)
        if isinstance(s, N.If):
            lines = [f"{pad}if {self.expr(s.test, 0)}:"] + self.block(s.body, depth + 1)
            orelse = s.orelse
            while len(orelse) == 1 and isinstance(orelse[0], N.If):
                inner = orelse[0]
                lines.append(f"{pad}elif {self.expr(inner.test, 0)}:")
                lines.extend(self.block(inner.body, depth + 1))
                orelse = inner.orelse
            if orelse:
                lines.append(f"{pad}else:")
                lines.extend(self.block(orelse, depth + 1))
            return lines
        raise TypeError(f"cannot render statement {type(s).__name__}")


def render_function(fn: N.FunctionDef, sites=None) -> str:
    r = Renderer(sites)
    head = f"def {fn.name}({', '.join(fn.params)}):"
    return "\n".join([head] + r.block(fn.body, 1)) + "\n"


def render_expr(e, sites=None) -> str:
    return Renderer(sites).expr(e)
