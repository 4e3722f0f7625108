"""Program AST: distribution expressions, basic statements, structured
bodies, and accuracy specifications."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .terms import (
    And, ArrayLen, Cmp, Lit, Sort, Term, TRUE, Var, conj, sort_of, to_text,
)


@dataclass(frozen=True)
class DistExpr:
    """One of bern(e) | unif(S) | lap(mean, scale) | exp(shift, scale).

    For unif, `support` is the concrete finite support: a tuple of ints or of
    int pairs. Parameter typing follows the distribution table: bern takes a
    [0,1]-valued expression, lap/exp an integer location and positive real
    scale.
    """

    kind: str  # "bern" | "unif" | "lap" | "exp"
    args: tuple = ()
    support: tuple = ()

    def __post_init__(self):
        assert self.kind in ("bern", "unif", "lap", "exp")

    @property
    def value_sort(self) -> Sort:
        if self.kind == "bern":
            return Sort.BOOL
        if self.kind == "unif":
            return Sort.PAIR if self.support and isinstance(self.support[0], tuple) else Sort.INT
        return Sort.INT

    def __str__(self) -> str:
        if self.kind == "unif":
            return f"unif({support_text(self.support)})"
        return f"{self.kind}({', '.join(to_text(a) for a in self.args)})"


def support_text(support: tuple) -> str:
    if support and isinstance(support[0], tuple):
        squares = {(a, b) for a in (0, 1) for b in (0, 1)}
        if set(support) == squares:
            return "{0,1}^2"
        return "{" + ", ".join(f"({a}, {b})" for a, b in support) + "}"
    return "{" + ", ".join(str(v) for v in support) + "}"


@dataclass(frozen=True)
class Target:
    """Assignment/sampling destination: a variable or an array element."""

    name: str
    index: Term | None = None

    def __str__(self) -> str:
        if self.index is None:
            return self.name
        return f"{self.name}[{to_text(self.index)}]"


class Stmt:
    __slots__ = ()


@dataclass(frozen=True)
class Assign(Stmt):
    target: Target
    expr: Term

    def __str__(self) -> str:
        return f"{self.target} <- {to_text(self.expr)}"


@dataclass(frozen=True)
class Sample(Stmt):
    target: Target
    dist: DistExpr

    def __str__(self) -> str:
        return f"{self.target} ~ {self.dist}"


@dataclass(frozen=True)
class Assume(Stmt):
    cond: Term

    def __str__(self) -> str:
        return f"assume({to_text(self.cond)})"


# structured body


class Block:
    __slots__ = ()


@dataclass(frozen=True)
class Basic(Block):
    stmt: Stmt


@dataclass(frozen=True)
class Seq(Block):
    blocks: tuple


@dataclass(frozen=True)
class If(Block):
    cond: Term
    then: Block
    els: Block  # Seq(()) when absent


@dataclass(frozen=True)
class While(Block):
    cond: Term
    body: Block


@dataclass(frozen=True)
class AccuracySpec:
    pre: Term
    post: Term
    beta: Term


@dataclass(frozen=True)
class Program:
    name: str
    inputs: tuple  # ((name, surface_type), ...) in declaration order
    locals: tuple  # ((name, surface_type), ...) discovered in body order
    body: Block
    spec: AccuracySpec
    returns: str | None = None

    @property
    def input_names(self) -> tuple:
        return tuple(n for n, _ in self.inputs)

    @property
    def var_names(self) -> tuple:
        return self.input_names + tuple(n for n, _ in self.locals)

    def decl_type(self, name: str) -> str:
        for n, ty in self.inputs + self.locals:
            if n == name:
                return ty
        raise KeyError(name)

    def var(self, name: str) -> Var:
        return Var(name, SURFACE_SORTS[self.decl_type(name)])


SURFACE_SORTS = {
    "int": Sort.INT,
    "real": Sort.REAL,
    "prob": Sort.REAL,
    "bool": Sort.BOOL,
    "intarray": Sort.ARRAY,
    "pair": Sort.PAIR,
}


def typing_facts(p: Program) -> Term:
    """Ambient hypotheses contributed by input declarations: prob inputs lie
    in (0,1], array lengths are nonnegative."""
    facts = []
    for name, ty in p.inputs:
        if ty == "prob":
            v = Var(name, Sort.REAL)
            facts.append(Cmp("<", Lit(Fraction(0)), v))
            facts.append(Cmp("<=", v, Lit(Fraction(1))))
        elif ty == "intarray":
            facts.append(Cmp(">=", ArrayLen(name), Lit(0)))
    return conj(facts)


def block_stmts(b: Block):
    """All basic statements, in syntactic order."""
    match b:
        case Basic(st):
            yield st
        case Seq(blocks):
            for x in blocks:
                yield from block_stmts(x)
        case If(_, t, e):
            yield from block_stmts(t)
            yield from block_stmts(e)
        case While(_, body):
            yield from block_stmts(body)


def stmt_text(st: Stmt) -> str:
    return str(st)
