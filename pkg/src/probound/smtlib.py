"""SMT-LIB v2 emission.

Two modes: `abstract_nonlinear=True` (the validity-checking mode) renders
products of non-constant factors, divisions, and log through the
uninterpreted symbols umul/udiv/ulog, so the solver works in a decidable
UF+linear-arithmetic fragment strengthened by theorem instances.
Concrete mode keeps native (* ...) and (/ ...) for satisfiability probes.

Bounded quantifiers become integer foralls with instantiation patterns on
the array selects of the body."""

from __future__ import annotations

from fractions import Fraction

from .terms import (
    Abs, Add, And, ArrayAlloc, ArrayLen, BoundedForall, Cmp, Div, Fst,
    Implies, Ite, Lit, Log, Max, Min, Mul, Neg, Not, Or, PairLit, Select,
    Snd, Sort, Store, Sub, Term, UFApp, Var, children, sort_of, subterms,
)

_SORT_SEXPR = {
    Sort.INT: "Int",
    Sort.REAL: "Real",
    Sort.BOOL: "Bool",
    Sort.ARRAY: "(Array Int Int)",
}


def mangle(name: str) -> str:
    return name.replace("(", ".").replace(")", "")


class Emitter:
    def __init__(self, abstract_nonlinear: bool = True):
        self.abstract = abstract_nonlinear
        self.decls: dict[str, str] = {}
        self._bound: list[str] = []

    # --- declarations

    def _declare(self, name: str, sort: Sort):
        if name in self._bound:
            return
        sexpr = f"(declare-const {name} {_SORT_SEXPR[sort]})"
        old = self.decls.get(name)
        if old is not None and old != sexpr:
            raise ValueError(f"conflicting declarations for {name}")
        self.decls[name] = sexpr

    def _declare_fun(self, name: str, arg_sorts: tuple, ret: Sort):
        args = " ".join(_SORT_SEXPR[s] for s in arg_sorts)
        self.decls[name] = f"(declare-fun {name} ({args}) {_SORT_SEXPR[ret]})"

    def declarations(self) -> list[str]:
        return [self.decls[k] for k in sorted(self.decls)]

    # --- emission

    def emit(self, t: Term, want: Sort | None = None) -> str:
        s, sort = self._emit(t)
        if want == Sort.REAL and sort == Sort.INT:
            return f"(to_real {s})"
        return s

    def _numeric_pair(self, a: Term, b: Term) -> tuple[str, str]:
        sa, sb = sort_of(a), sort_of(b)
        if Sort.REAL in (sa, sb):
            return self.emit(a, Sort.REAL), self.emit(b, Sort.REAL)
        return self.emit(a), self.emit(b)

    def _emit(self, t: Term) -> tuple[str, Sort]:
        match t:
            case Lit(True):
                return "true", Sort.BOOL
            case Lit(False):
                return "false", Sort.BOOL
            case Lit(int() as v):
                return (str(v) if v >= 0 else f"(- {-v})"), Sort.INT
            case Lit(Fraction() as v):
                return _real_lit(v), Sort.REAL
            case Var(name, Sort.PAIR):
                raise ValueError(f"pair variable {name} outside fst/snd/=")
            case Var(name, sort):
                m = mangle(name)
                self._declare(m, sort)
                return m, sort
            case ArrayLen(arr):
                m = f"len.{mangle(arr)}"
                self._declare(m, Sort.INT)
                return m, Sort.INT
            case Fst(Var(name, Sort.PAIR)):
                m = f"{mangle(name)}.fst"
                self._declare(m, Sort.INT)
                return m, Sort.INT
            case Snd(Var(name, Sort.PAIR)):
                m = f"{mangle(name)}.snd"
                self._declare(m, Sort.INT)
                return m, Sort.INT
            case Fst(p) | Snd(p):
                raise ValueError(f"projection of non-variable pair {p!r}")
            case Select(a, i):
                return f"(select {self.emit(a)} {self.emit(i)})", Sort.INT
            case Store(a, i, v):
                return (
                    f"(store {self.emit(a)} {self.emit(i)} {self.emit(v)})",
                    Sort.ARRAY,
                )
            case ArrayAlloc():
                return "((as const (Array Int Int)) 0)", Sort.ARRAY
            case Add(args):
                sort = sort_of(t)
                parts = " ".join(self.emit(a, sort) for a in args)
                return f"(+ {parts})", sort
            case Mul(args):
                return self._emit_mul(t, args)
            case Sub(a, b):
                sort = sort_of(t)
                return f"(- {self.emit(a, sort)} {self.emit(b, sort)})", sort
            case Neg(a):
                sort = sort_of(t)
                return f"(- {self.emit(a, sort)})", sort
            case Div(a, b):
                if self.abstract:
                    self._declare_fun("udiv", (Sort.REAL, Sort.REAL), Sort.REAL)
                    return (
                        f"(udiv {self.emit(a, Sort.REAL)} {self.emit(b, Sort.REAL)})",
                        Sort.REAL,
                    )
                return (
                    f"(/ {self.emit(a, Sort.REAL)} {self.emit(b, Sort.REAL)})",
                    Sort.REAL,
                )
            case Log(a):
                self._declare_fun("ulog", (Sort.REAL,), Sort.REAL)
                return f"(ulog {self.emit(a, Sort.REAL)})", Sort.REAL
            case Abs(a):
                sort = sort_of(t)
                x = self.emit(a, sort)
                zero = "0" if sort == Sort.INT else "0.0"
                return f"(ite (>= {x} {zero}) {x} (- {x}))", sort
            case Min(a, b):
                sort = sort_of(t)
                x, y = self.emit(a, sort), self.emit(b, sort)
                return f"(ite (<= {x} {y}) {x} {y})", sort
            case Max(a, b):
                sort = sort_of(t)
                x, y = self.emit(a, sort), self.emit(b, sort)
                return f"(ite (>= {x} {y}) {x} {y})", sort
            case Ite(c, a, b):
                sort = sort_of(t)
                if sort in (Sort.INT, Sort.REAL):
                    xa, xb = self.emit(a, sort), self.emit(b, sort)
                else:
                    xa, xb = self.emit(a), self.emit(b)
                return f"(ite {self.emit(c)} {xa} {xb})", sort
            case Cmp(op, a, b):
                return self._emit_cmp(op, a, b), Sort.BOOL
            case Not(a):
                return f"(not {self.emit(a)})", Sort.BOOL
            case And(args):
                return f"(and {' '.join(self.emit(a) for a in args)})", Sort.BOOL
            case Or(args):
                return f"(or {' '.join(self.emit(a) for a in args)})", Sort.BOOL
            case Implies(h, c):
                return f"(=> {self.emit(h)} {self.emit(c)})", Sort.BOOL
            case BoundedForall(v, lo, hi, body):
                return self._emit_forall(v, lo, hi, body), Sort.BOOL
            case UFApp(name, args, sort):
                if not args:
                    self._declare(mangle(name), sort)
                    return mangle(name), sort
                self._declare_fun(
                    mangle(name), tuple(sort_of(a) for a in args), sort
                )
                parts = " ".join(self.emit(a) for a in args)
                return f"({mangle(name)} {parts})", sort
        raise TypeError(f"emit: {t!r}")

    def _emit_mul(self, t: Term, args: tuple) -> tuple[str, Sort]:
        sort = sort_of(t)
        if not self.abstract:
            parts = " ".join(self.emit(a, sort) for a in args)
            return f"(* {parts})", sort
        consts = [a for a in args if isinstance(a, Lit)]
        rest = [a for a in args if not isinstance(a, Lit)]
        if len(rest) <= 1:
            parts = " ".join(self.emit(a, sort) for a in args)
            return (f"(* {parts})" if len(args) > 1 else self.emit(args[0], sort)), sort
        self._declare_fun("umul", (Sort.REAL, Sort.REAL), Sort.REAL)
        acc = self.emit(rest[0], Sort.REAL)
        for a in rest[1:]:
            acc = f"(umul {acc} {self.emit(a, Sort.REAL)})"
        if consts:
            cs = " ".join(self.emit(c, Sort.REAL) for c in consts)
            acc = f"(* {cs} {acc})"
        return acc, Sort.REAL

    def _emit_cmp(self, op: str, a: Term, b: Term) -> str:
        sa = sort_of(a)
        if sa == Sort.PAIR or sort_of(b) == Sort.PAIR:
            eq = f"(and {self._pair_eq(a, b)})"
            return eq if op == "=" else f"(not {eq})"
        if sa == Sort.BOOL or sa == Sort.ARRAY:
            x, y = self.emit(a), self.emit(b)
        else:
            x, y = self._numeric_pair(a, b)
        if op == "=":
            return f"(= {x} {y})"
        if op == "!=":
            return f"(not (= {x} {y}))"
        return f"({op} {x} {y})"

    def _pair_eq(self, a: Term, b: Term) -> str:
        fa, sa_ = self.emit(Fst(a) if not isinstance(a, PairLit) else a.fst), None
        fb = self.emit(Fst(b) if not isinstance(b, PairLit) else b.fst)
        ga = self.emit(Snd(a) if not isinstance(a, PairLit) else a.snd)
        gb = self.emit(Snd(b) if not isinstance(b, PairLit) else b.snd)
        return f"(= {fa} {fb}) (= {ga} {gb})"

    def _emit_forall(self, v: str, lo: Term, hi: Term, body: Term) -> str:
        mv = mangle(v)
        self._bound.append(mv)
        try:
            range_s = f"(and (<= {self.emit(lo)} {mv}) (< {mv} {self.emit(hi)}))"
            body_s = self.emit(body)
            patterns = []
            for sub in subterms(body):
                if isinstance(sub, Select):
                    from .terms import base_vars

                    if v in base_vars(sub.index):
                        patterns.append(self.emit(sub))
        finally:
            self._bound.pop()
        inner = f"(=> {range_s} {body_s})"
        if patterns:
            pats = " ".join(dict.fromkeys(patterns))
            inner = f"(! {inner} :pattern ({pats}))"
        return f"(forall (({mv} Int)) {inner})"


def _real_lit(v: Fraction) -> str:
    def pos(x: Fraction) -> str:
        if x.denominator == 1:
            return f"{x.numerator}.0"
        return f"(/ {x.numerator}.0 {x.denominator}.0)"

    return pos(v) if v >= 0 else f"(- {pos(-v)})"
