"""Tunable programs: extraction, substitution, compaction, evaluation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from . import nodes as N
from .errors import EvalError
from .interp import DEFAULT_STEP_BUDGET, compile_function, to_value
from .parser import parse_source
from .render import format_literal, render_function

ORIGINS = ("llm", "seed", "compacted", "user")


@dataclass(frozen=True)
class SourceProgram:
    text: str
    origin: str = "user"

    def __post_init__(self):
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown origin {self.origin!r}")


@dataclass(frozen=True)
class TunableSite:
    site_id: int
    options: tuple
    span: tuple  # (start, end) UTF-8 byte offsets of the tunable(...) call


@dataclass(frozen=True)
class TunableProgram:
    source: SourceProgram
    function_name: str
    params: tuple
    sites: tuple
    tree: N.FunctionDef = field(repr=False)

    @property
    def size(self) -> int:
        return solution_space_size(self)

    def render(self) -> str:
        """Canonical text, tunable sites rendered as ``tunable([...])``."""
        return render_function(self.tree, self.sites)


@dataclass(frozen=True)
class ConcreteProgram:
    text: str
    tree: N.FunctionDef = field(repr=False)
    parent: TunableProgram | None = field(default=None, repr=False, compare=False)
    decisions: tuple = ()
    step_budget: int = DEFAULT_STEP_BUDGET

    @cached_property
    def function(self):
        return compile_function(self.tree, self.step_budget)

    @property
    def params(self) -> tuple:
        return self.tree.params

    def __call__(self, *args) -> float:
        return self.function(*(to_value(a) for a in args))

    def canonical(self) -> str:
        return render_function(self.tree)


def parse(source: SourceProgram | str) -> TunableProgram:
    if isinstance(source, str):
        source = SourceProgram(source)
    tree, raw = parse_source(source.text)
    sites = tuple(TunableSite(i, s.options, s.span) for i, s in enumerate(raw))
    return TunableProgram(source, tree.name, tree.params, sites, tree)


def solution_space_size(tp: TunableProgram) -> int:
    return math.prod(len(s.options) for s in tp.sites)


def check_decisions(tp: TunableProgram, dv: Sequence[int]) -> tuple:
    dv = tuple(int(i) for i in dv)
    if len(dv) != len(tp.sites):
        raise IndexError(f"decision vector has {len(dv)} entries, program has "
                         f"{len(tp.sites)} sites")
    for site, i in zip(tp.sites, dv):
        if not 0 <= i < len(site.options):
            raise IndexError(f"index {i} out of range for site {site.site_id} "
                             f"with {len(site.options)} options")
    return dv


def _splice_literal(v) -> str:
    s = format_literal(v)
    return f"({s})" if s.startswith("-") else s


def _splice(text: str, edits: Iterable[tuple[tuple, str]]) -> str:
    data = text.encode("utf-8")
    for (start, end), repl in sorted(edits, key=lambda e: e[0][0], reverse=True):
        data = data[:start] + repl.encode("utf-8") + data[end:]
    return data.decode("utf-8")


def _fill(tree, chosen: dict[int, object]):
    def fn(node):
        if isinstance(node, N.SiteRef) and node.site_id in chosen:
            return N.Const(chosen[node.site_id])
        return node
    return N.transform(tree, fn)


def substitute(tp: TunableProgram, dv: Sequence[int],
               step_budget: int = DEFAULT_STEP_BUDGET) -> ConcreteProgram:
    dv = check_decisions(tp, dv)
    chosen = {s.site_id: s.options[i] for s, i in zip(tp.sites, dv)}
    text = _splice(tp.source.text,
                   [(s.span, _splice_literal(chosen[s.site_id])) for s in tp.sites])
    return ConcreteProgram(text, _fill(tp.tree, chosen), tp, dv, step_budget)


def compact(tp: TunableProgram, kept: Iterable[Sequence[int]]) -> SourceProgram:
    """Keep only options chosen by some vector in ``kept``, in original order.

    Sites left with one option lose the ``tunable`` wrapper.
    """
    kept = [check_decisions(tp, dv) for dv in kept]
    if not kept:
        raise ValueError("compact() needs at least one decision vector")
    edits = []
    for site in tp.sites:
        used = sorted({dv[site.site_id] for dv in kept})
        opts = [site.options[i] for i in used]
        if len(opts) == 1:
            edits.append((site.span, _splice_literal(opts[0])))
        else:
            edits.append((site.span, "tunable([" + ", ".join(format_literal(o) for o in opts)
                          + "])"))
    return SourceProgram(_splice(tp.source.text, edits), "compacted")


def concrete(source: SourceProgram | str, step_budget: int = DEFAULT_STEP_BUDGET) -> ConcreteProgram:
    """Parse a program that must not contain tunable sites."""
    tp = parse(source)
    if tp.sites:
        raise EvalError(f"program has {len(tp.sites)} unresolved tunable sites")
    return substitute(tp, (), step_budget)


def eval_priority(cp: ConcreteProgram, args: Sequence) -> float:
    return cp(*args)


def canonical_source(text: str) -> str:
    """Canonical rendering of the priority function in ``text`` (tunables kept)."""
    tp = parse(text)
    return tp.render()
