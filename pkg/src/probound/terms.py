"""First-order term and formula IR.

One IR serves both program expressions and logic formulas: sorts int, real,
bool, int-array, int-pair; arithmetic with log/abs/min/max, array select and
store, pair projections, comparisons, boolean connectives, bounded integer
quantifiers, and uninterpreted function applications.

`normalize` puts arithmetic into a sum-of-monomials canonical form over
opaque atoms (variables, selects, log/div applications, ...) with exact
rational coefficients. Divisions are lifted so that e.g. 1/(p/3) and 3/p or
x*(p/n) and (x*p)/n meet syntactically; these rewrites are ring identities
except at zero denominators, which every corpus context guards against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction


class Sort(Enum):
    INT = "int"
    REAL = "real"
    BOOL = "bool"
    ARRAY = "intarray"
    PAIR = "pair"

    def __repr__(self):
        return self.value


class Term:
    """Base class; all nodes are frozen dataclasses and hashable."""

    __slots__ = ()


@dataclass(frozen=True)
class Var(Term):
    name: str
    sort: Sort


@dataclass(frozen=True)
class Lit(Term):
    value: object  # bool | int | Fraction

    def __post_init__(self):
        v = self.value
        if not isinstance(v, (bool, int, Fraction)):
            raise TypeError(f"bad literal {v!r}")


@dataclass(frozen=True)
class ArrayLen(Term):
    """Length symbol of a declared array; behaves as an int input variable."""

    array: str


@dataclass(frozen=True)
class Select(Term):
    array: Term
    index: Term


@dataclass(frozen=True)
class Store(Term):
    array: Term
    index: Term
    value: Term


@dataclass(frozen=True)
class ArrayAlloc(Term):
    """Fresh all-zero array of the given length (allocation expression)."""

    length: Term


@dataclass(frozen=True)
class Fst(Term):
    pair: Term


@dataclass(frozen=True)
class Snd(Term):
    pair: Term


@dataclass(frozen=True)
class PairLit(Term):
    fst: Term
    snd: Term


@dataclass(frozen=True)
class Add(Term):
    args: tuple


@dataclass(frozen=True)
class Mul(Term):
    args: tuple


@dataclass(frozen=True)
class Sub(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Neg(Term):
    arg: Term


@dataclass(frozen=True)
class Div(Term):
    num: Term
    den: Term


@dataclass(frozen=True)
class Log(Term):
    arg: Term


@dataclass(frozen=True)
class Abs(Term):
    arg: Term


@dataclass(frozen=True)
class Min(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Max(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Ite(Term):
    cond: Term
    then: Term
    els: Term


CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Cmp(Term):
    op: str
    left: Term
    right: Term

    def __post_init__(self):
        if self.op not in CMP_OPS:
            raise ValueError(f"bad comparison op {self.op}")


@dataclass(frozen=True)
class Not(Term):
    arg: Term


@dataclass(frozen=True)
class And(Term):
    args: tuple


@dataclass(frozen=True)
class Or(Term):
    args: tuple


@dataclass(frozen=True)
class Implies(Term):
    hyp: Term
    concl: Term


@dataclass(frozen=True)
class BoundedForall(Term):
    """forall var in [lo, hi) . body   (var ranges over the integers)."""

    var: str
    lo: Term
    hi: Term
    body: Term


@dataclass(frozen=True)
class UFApp(Term):
    """Uninterpreted function application (or constant when args is empty)."""

    name: str
    args: tuple
    sort: Sort


TRUE = Lit(True)
FALSE = Lit(False)


def lit(v) -> Lit:
    if isinstance(v, float):
        return Lit(Fraction(str(v)))
    return Lit(v)


def conj(args) -> Term:
    args = [a for a in args if a != TRUE]
    if any(a == FALSE for a in args):
        return FALSE
    if not args:
        return TRUE
    if len(args) == 1:
        return args[0]
    return And(tuple(args))


def disj(args) -> Term:
    args = [a for a in args if a != FALSE]
    if any(a == TRUE for a in args):
        return TRUE
    if not args:
        return FALSE
    if len(args) == 1:
        return args[0]
    return Or(tuple(args))


# ---------------------------------------------------------------------------
# sorts


def sort_of(t: Term) -> Sort:
    match t:
        case Var(_, sort) | UFApp(_, _, sort):
            return sort
        case Lit(value=bool()):
            return Sort.BOOL
        case Lit(value=int()):
            return Sort.INT
        case Lit():
            return Sort.REAL
        case ArrayLen():
            return Sort.INT
        case Select():
            return Sort.INT
        case Store() | ArrayAlloc():
            return Sort.ARRAY
        case Fst() | Snd():
            return Sort.INT
        case PairLit():
            return Sort.PAIR
        case Add(args) | Mul(args):
            return _join(*(sort_of(a) for a in args))
        case Sub(a, b) | Min(a, b) | Max(a, b):
            return _join(sort_of(a), sort_of(b))
        case Neg(a) | Abs(a):
            return sort_of(a)
        case Div():
            return Sort.REAL
        case Log():
            return Sort.REAL
        case Ite(_, a, b):
            return _join(sort_of(a), sort_of(b))
        case Cmp() | Not() | And() | Or() | Implies() | BoundedForall():
            return Sort.BOOL
    raise TypeError(f"sort_of: {t!r}")


def _join(*sorts: Sort) -> Sort:
    out = Sort.INT
    for s in sorts:
        if s == Sort.REAL:
            out = Sort.REAL
        elif s != Sort.INT:
            raise TypeError(f"non-numeric sort {s} in arithmetic")
    return out


def is_numeric(t: Term) -> bool:
    return sort_of(t) in (Sort.INT, Sort.REAL)


# ---------------------------------------------------------------------------
# traversal helpers


def children(t: Term) -> tuple:
    match t:
        case Var() | Lit() | ArrayLen():
            return ()
        case Select(a, i):
            return (a, i)
        case Store(a, i, v):
            return (a, i, v)
        case ArrayAlloc(n):
            return (n,)
        case Fst(p) | Snd(p):
            return (p,)
        case PairLit(a, b):
            return (a, b)
        case Add(args) | Mul(args) | And(args) | Or(args):
            return tuple(args)
        case Sub(a, b) | Min(a, b) | Max(a, b) | Div(a, b) | Implies(a, b):
            return (a, b)
        case Neg(a) | Log(a) | Abs(a) | Not(a):
            return (a,)
        case Ite(c, a, b):
            return (c, a, b)
        case Cmp(_, a, b):
            return (a, b)
        case BoundedForall(_, lo, hi, body):
            return (lo, hi, body)
        case UFApp(_, args, _):
            return tuple(args)
    raise TypeError(f"children: {t!r}")


def subterms(t: Term):
    yield t
    for c in children(t):
        yield from subterms(c)


def free_vars(t: Term) -> frozenset[str]:
    """Free variable names, counting array-length symbols as len(<array>)."""

    out: set[str] = set()

    def go(u: Term, bound: frozenset[str]):
        match u:
            case Var(name, _):
                if name not in bound:
                    out.add(name)
            case ArrayLen(arr):
                out.add(f"len({arr})")
            case BoundedForall(v, lo, hi, body):
                go(lo, bound)
                go(hi, bound)
                go(body, bound | {v})
            case _:
                for c in children(u):
                    go(c, bound)

    go(t, frozenset())
    return frozenset(out)


def base_vars(t: Term) -> frozenset[str]:
    """Free variables with len() symbols resolved to their array's name."""
    out = set()
    for v in free_vars(t):
        out.add(v[4:-1] if v.startswith("len(") else v)
    return frozenset(out)


def subst(t: Term, mapping: dict[str, Term]) -> Term:
    """Capture-avoiding parallel substitution of variables by terms."""
    if not mapping:
        return t
    match t:
        case Var(name, _):
            return mapping.get(name, t)
        case Lit() | ArrayLen():
            return t
        case BoundedForall(v, lo, hi, body):
            inner = {k: u for k, u in mapping.items() if k != v}
            # bound variables are engine-fresh; assert rather than rename
            for u in inner.values():
                if v in base_vars(u):
                    raise ValueError(f"substitution would capture {v}")
            return BoundedForall(v, subst(lo, mapping), subst(hi, mapping), subst(body, inner))
        case _:
            cs = tuple(subst(c, mapping) for c in children(t))
            return rebuild(t, cs)


def rebuild(t: Term, cs: tuple) -> Term:
    match t:
        case Select():
            return Select(*cs)
        case Store():
            return Store(*cs)
        case ArrayAlloc():
            return ArrayAlloc(*cs)
        case Fst():
            return Fst(*cs)
        case Snd():
            return Snd(*cs)
        case PairLit():
            return PairLit(*cs)
        case Add():
            return Add(cs)
        case Mul():
            return Mul(cs)
        case And():
            return And(cs)
        case Or():
            return Or(cs)
        case Sub():
            return Sub(*cs)
        case Min():
            return Min(*cs)
        case Max():
            return Max(*cs)
        case Div():
            return Div(*cs)
        case Implies():
            return Implies(*cs)
        case Neg():
            return Neg(*cs)
        case Log():
            return Log(*cs)
        case Abs():
            return Abs(*cs)
        case Not():
            return Not(*cs)
        case Ite():
            return Ite(*cs)
        case Cmp(op, _, _):
            return Cmp(op, *cs)
        case UFApp(name, _, sort):
            return UFApp(name, cs, sort)
    raise TypeError(f"rebuild: {t!r}")


# ---------------------------------------------------------------------------
# total structural order (for canonical sorting)

_RANK = {
    Lit: 0, Var: 1, ArrayLen: 2, Select: 3, Fst: 4, Snd: 5, Div: 6, Log: 7,
    Abs: 8, Min: 9, Max: 10, Ite: 11, UFApp: 12, Add: 13, Mul: 14, Sub: 15,
    Neg: 16, Cmp: 17, Not: 18, And: 19, Or: 20, Implies: 21,
    BoundedForall: 22, Store: 23, ArrayAlloc: 24, PairLit: 25,
}


def term_key(t: Term):
    match t:
        case Lit(v):
            if isinstance(v, bool):
                return (0, 0, int(v))
            return (0, 1, float(v), str(v))
        case Var(name, _):
            return (1, name)
        case ArrayLen(a):
            return (2, a)
        case Cmp(op, a, b):
            return (17, op, term_key(a), term_key(b))
        case UFApp(name, args, _):
            return (12, name, tuple(term_key(a) for a in args))
        case BoundedForall(v, lo, hi, body):
            return (22, v, term_key(lo), term_key(hi), term_key(body))
        case _:
            return (_RANK[type(t)],) + tuple(term_key(c) for c in children(t))


# ---------------------------------------------------------------------------
# normalization: polynomials over opaque atoms

_Monomial = tuple  # sorted tuple of atom Terms
_Poly = dict  # _Monomial -> Fraction


def _poly_const(c: Fraction) -> _Poly:
    return {(): c} if c != 0 else {}

def _poly_atom(a: Term) -> _Poly:
    return {(a,): Fraction(1)}

def _poly_add(p: _Poly, q: _Poly) -> _Poly:
    out = dict(p)
    for m, c in q.items():
        nc = out.get(m, Fraction(0)) + c
        if nc == 0:
            out.pop(m, None)
        else:
            out[m] = nc
    return out

def _poly_scale(p: _Poly, c: Fraction) -> _Poly:
    if c == 0:
        return {}
    return {m: v * c for m, v in p.items()}

def _poly_mul(p: _Poly, q: _Poly) -> _Poly:
    out: _Poly = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = tuple(sorted(m1 + m2, key=term_key))
            out = _poly_add(out, _mono_fix(m, c1 * c2))
    return out


def _mono_fix(m: _Monomial, c: Fraction) -> _Poly:
    """Keep at most one quotient per monomial: x * (a/b) * (c/d) becomes
    (x*a*c)/(b*d) as a single canonical Div atom."""
    divs = [a for a in m if isinstance(a, Div)]
    if len(divs) <= (1 if len(m) == 1 else 0):
        return {m: c}
    rest = tuple(a for a in m if not isinstance(a, Div))
    num = _norm_arith(Mul(rest + tuple(d.num for d in divs))) if rest or divs else Lit(1)
    den = _norm_arith(Mul(tuple(d.den for d in divs)))
    return _poly_scale(_as_poly(_norm_div(num, den)), c)


def _poly_to_term(p: _Poly) -> Term:
    if not p:
        return Lit(0)
    monos = sorted(p.items(), key=lambda mc: tuple(term_key(a) for a in mc[0]))
    parts = []
    int_sorted = all(
        c.denominator == 1 and all(sort_of(a) == Sort.INT for a in m)
        for m, c in monos
    )

    def mklit(c: Fraction) -> Lit:
        return Lit(int(c)) if int_sorted else Lit(c)

    for m, c in monos:
        if not m:
            parts.append(mklit(c))
        elif c == 1 and len(m) == 1:
            parts.append(m[0])
        elif c == 1:
            parts.append(Mul(tuple(m)))
        else:
            parts.append(Mul((mklit(c),) + tuple(m)))
    return parts[0] if len(parts) == 1 else Add(tuple(parts))


def _as_poly(t: Term) -> _Poly:
    """t must already be normalized; decompose into a polynomial."""
    match t:
        case Lit(v) if not isinstance(v, bool):
            return _poly_const(Fraction(v))
        case Add(args):
            out: _Poly = {}
            for a in args:
                out = _poly_add(out, _as_poly(a))
            return out
        case Mul(args):
            out = _poly_const(Fraction(1))
            for a in args:
                out = _poly_mul(out, _as_poly(a))
            return out
        case _:
            return _poly_atom(t)


def _as_ratio(t: Term) -> tuple[Term, Term]:
    """Decompose a normalized numeric term as P/Q with P, Q free of
    top-level quotients (Q is 1 when none occur). Sums of fractions take a
    syntactic common denominator."""
    poly = _as_poly(t)
    parts = []  # (coeff, non-div atoms, den factor tuple)
    for m, c in poly.items():
        divs = [a for a in m if isinstance(a, Div)]
        rest = tuple(a for a in m if not isinstance(a, Div))
        nums, dens = [], []
        for d in divs:
            nums.append(d.num)
            dens.append(d.den)
        parts.append((c, rest + tuple(nums), tuple(dens)))
    all_dens: list[Term] = []
    for _, _, dens in parts:
        for d in dens:
            if d not in all_dens:
                all_dens.append(d)
    if not all_dens:
        return t, Lit(1)
    q_term = _norm_arith(Mul(tuple(all_dens))) if len(all_dens) > 1 else all_dens[0]
    acc: _Poly = {}
    for c, atoms, dens in parts:
        remaining = list(all_dens)
        for d in dens:
            remaining.remove(d) if d in remaining else None
        factors = atoms + tuple(x for x in all_dens if x not in dens)
        mono = _as_poly(_norm_arith(Mul(factors))) if factors else _poly_const(Fraction(1))
        acc = _poly_add(acc, _poly_scale(mono, c))
    return _poly_to_term(acc), q_term


def _norm_div(num: Term, den: Term) -> Term:
    """num, den normalized. Lift nested quotients, fold constant divisors,
    and distribute sums so Div atoms have monic single-monomial numerators
    and quotient-free denominators."""
    nn, nd = _as_ratio(num)
    dn, dd = _as_ratio(den)
    n_term = nn if dd == Lit(1) else _norm_arith(Mul((nn, dd)))
    d_term = dn if nd == Lit(1) else _norm_arith(Mul((nd, dn)))
    if isinstance(d_term, Lit) and not isinstance(d_term.value, bool):
        if d_term.value == 0:
            return Div(n_term, d_term)  # leave ill-formed division alone
        return _norm_arith(Mul((Lit(Fraction(1) / Fraction(d_term.value)), n_term)))
    # pull a numeric coefficient out of a single-monomial denominator
    dpoly = _as_poly(d_term)
    if len(dpoly) == 1:
        (dm, dc), = dpoly.items()
        if dc != 1 and dm:
            n_term = _norm_arith(Mul((Lit(Fraction(1) / dc), n_term)))
            d_term = _poly_to_term({dm: Fraction(1)})
    npoly = _as_poly(n_term)
    if not npoly:
        return Lit(0)
    # distribute the numerator sum; keep each quotient atom monic
    parts: _Poly = {}
    for m, c in npoly.items():
        atom = Div(_poly_to_term({m: Fraction(1)}), d_term)
        parts = _poly_add(parts, {(atom,): c})
    return _poly_to_term(parts)


def _norm_arith(t: Term) -> Term:
    return _poly_to_term(_as_poly(t))


_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "=", "!=": "!="}
_NEGATE = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "=": "!=", "!=": "="}


def normalize(t: Term) -> Term:
    """Canonical form: arithmetic flattened to sorted sums of monomials,
    constant folding, division lifting, boolean flattening and ordering,
    negation pushed through comparisons and connectives."""
    match t:
        case Var() | Lit() | ArrayLen():
            return t
        case Neg(a):
            return _norm_arith(Mul((Lit(-1), normalize(a))))
        case Sub(a, b):
            return _norm_arith(Add((normalize(a), Mul((Lit(-1), normalize(b))))))
        case Add(args):
            return _norm_arith(Add(tuple(normalize(a) for a in args)))
        case Mul(args):
            return _norm_arith(Mul(tuple(normalize(a) for a in args)))
        case Div(a, b):
            return _norm_div(normalize(a), normalize(b))
        case Log(a):
            return Log(normalize(a))
        case Abs(a):
            na = normalize(a)
            if isinstance(na, Lit) and not isinstance(na.value, bool):
                return Lit(abs(na.value))
            # canonicalize |x-y| vs |y-x|
            neg = _norm_arith(Mul((Lit(-1), na)))
            return Abs(min(na, neg, key=term_key))
        case Min(a, b):
            na, nb = sorted((normalize(a), normalize(b)), key=term_key)
            return na if na == nb else Min(na, nb)
        case Max(a, b):
            na, nb = sorted((normalize(a), normalize(b)), key=term_key)
            return na if na == nb else Max(na, nb)
        case Ite(c, a, b):
            nc = normalize(c)
            if nc == TRUE:
                return normalize(a)
            if nc == FALSE:
                return normalize(b)
            return Ite(nc, normalize(a), normalize(b))
        case Cmp(op, a, b):
            na, nb = normalize(a), normalize(b)
            if isinstance(na, Lit) and isinstance(nb, Lit):
                return Lit(_cmp_eval(op, na.value, nb.value))
            if op in (">", ">="):
                op, na, nb = _FLIP[op], nb, na
            elif op in ("=", "!=") and term_key(nb) < term_key(na):
                na, nb = nb, na
            return Cmp(op, na, nb)
        case Not(a):
            na = normalize(a)
            match na:
                case Lit(v):
                    return Lit(not v)
                case Not(b):
                    return b
                case Cmp(op, x, y) if sort_of(x) != Sort.ARRAY:
                    return normalize(Cmp(_NEGATE[op], x, y))
                case And(args):
                    return normalize(Or(tuple(Not(x) for x in args)))
                case Or(args):
                    return normalize(And(tuple(Not(x) for x in args)))
                case Implies(h, c):
                    return normalize(And((h, Not(c))))
            return Not(na)
        case And(args):
            flat = []
            for a in args:
                na = normalize(a)
                if isinstance(na, And):
                    flat.extend(na.args)
                else:
                    flat.append(na)
            seen, out = set(), []
            for a in flat:
                if a == FALSE:
                    return FALSE
                if a != TRUE and a not in seen:
                    seen.add(a)
                    out.append(a)
            out.sort(key=term_key)
            return conj(out)
        case Or(args):
            flat = []
            for a in args:
                na = normalize(a)
                if isinstance(na, Or):
                    flat.extend(na.args)
                else:
                    flat.append(na)
            seen, out = set(), []
            for a in flat:
                if a == TRUE:
                    return TRUE
                if a != FALSE and a not in seen:
                    seen.add(a)
                    out.append(a)
            out.sort(key=term_key)
            return disj(out)
        case Implies(h, c):
            nh, nc = normalize(h), normalize(c)
            if nh == TRUE:
                return nc
            if nh == FALSE or nc == TRUE:
                return TRUE
            return Implies(nh, nc)
        case BoundedForall(v, lo, hi, body):
            return BoundedForall(v, normalize(lo), normalize(hi), normalize(body))
        case Select(a, i):
            return Select(normalize(a), normalize(i))
        case Store(a, i, x):
            return Store(normalize(a), normalize(i), normalize(x))
        case ArrayAlloc(n):
            return ArrayAlloc(normalize(n))
        case Fst(p):
            np = normalize(p)
            return np.fst if isinstance(np, PairLit) else Fst(np)
        case Snd(p):
            np = normalize(p)
            return np.snd if isinstance(np, PairLit) else Snd(np)
        case PairLit(a, b):
            return PairLit(normalize(a), normalize(b))
        case UFApp(name, args, sort):
            return UFApp(name, tuple(normalize(a) for a in args), sort)
    raise TypeError(f"normalize: {t!r}")


def _cmp_eval(op: str, a, b) -> bool:
    return {
        "=": a == b, "!=": a != b, "<": a < b,
        "<=": a <= b, ">": a > b, ">=": a >= b,
    }[op]


# ---------------------------------------------------------------------------
# printing (surface syntax; see parser.parse_expr for the inverse)

_PREC = {
    "or": 1, "and": 2, "not": 3, "cmp": 4, "add": 5, "mul": 6, "neg": 7,
    "atom": 9,
}


def to_text(t: Term) -> str:
    return _pp(t, 0)


def _frac_text(v: Fraction) -> str:
    if v.denominator == 1:
        return f"{v.numerator}.0"  # keep the real sort through a reparse
    f = float(v)
    if Fraction(str(f)) == v and len(str(f)) <= 18:
        return str(f)
    return f"{v.numerator}/{v.denominator}"


def _pp(t: Term, ctx: int) -> str:
    def wrap(s: str, prec: int) -> str:
        return f"({s})" if prec < ctx else s

    match t:
        case Lit(v):
            if isinstance(v, bool):
                return "true" if v else "false"
            if isinstance(v, int):
                return str(v) if v >= 0 else wrap(str(v), _PREC["neg"])
            s = _frac_text(v)
            if "/" in s:
                return wrap(s, _PREC["mul"])
            return s if v >= 0 else wrap(s, _PREC["neg"])
        case Var(name, _):
            return name
        case ArrayLen(a):
            return f"len({a})"
        case Select(a, i):
            return f"{_pp(a, _PREC['atom'])}[{_pp(i, 0)}]"
        case Store(a, i, v):
            return f"store({_pp(a, 0)}, {_pp(i, 0)}, {_pp(v, 0)})"
        case ArrayAlloc(n):
            return f"array({_pp(n, 0)})"
        case Fst(p):
            return f"fst({_pp(p, 0)})"
        case Snd(p):
            return f"snd({_pp(p, 0)})"
        case PairLit(a, b):
            return f"({_pp(a, 0)}, {_pp(b, 0)})"
        case Add(args):
            parts = [_pp(args[0], _PREC["add"])]
            for a in args[1:]:
                neg = _negated_view(a)
                if neg is not None:
                    parts.append(f" - {_pp(neg, _PREC['add'] + 1)}")
                else:
                    parts.append(f" + {_pp(a, _PREC['add'] + 1)}")
            return wrap("".join(parts), _PREC["add"])
        case Mul(args):
            return wrap(" * ".join(_pp(a, _PREC["mul"] + (i > 0)) for i, a in enumerate(args)), _PREC["mul"])
        case Sub(a, b):
            return wrap(f"{_pp(a, _PREC['add'])} - {_pp(b, _PREC['add'] + 1)}", _PREC["add"])
        case Neg(a):
            return wrap(f"-{_pp(a, _PREC['neg'])}", _PREC["neg"])
        case Div(a, b):
            return wrap(f"{_pp(a, _PREC['mul'])} / {_pp(b, _PREC['mul'] + 1)}", _PREC["mul"])
        case Log(a):
            return f"log({_pp(a, 0)})"
        case Abs(a):
            return f"abs({_pp(a, 0)})"
        case Min(a, b):
            return f"min({_pp(a, 0)}, {_pp(b, 0)})"
        case Max(a, b):
            return f"max({_pp(a, 0)}, {_pp(b, 0)})"
        case Ite(c, a, b):
            return f"ite({_pp(c, 0)}, {_pp(a, 0)}, {_pp(b, 0)})"
        case Cmp(op, a, b):
            return wrap(f"{_pp(a, _PREC['cmp'] + 1)} {op} {_pp(b, _PREC['cmp'] + 1)}", _PREC["cmp"])
        case Not(a):
            return wrap(f"not {_pp(a, _PREC['not'])}", _PREC["not"])
        case And(args):
            return wrap(" and ".join(_pp(a, _PREC["and"] + 1) for a in args), _PREC["and"])
        case Or(args):
            return wrap(" or ".join(_pp(a, _PREC["or"] + 1) for a in args), _PREC["or"])
        case Implies(h, c):
            return wrap(f"{_pp(h, _PREC['or'] + 1)} -> {_pp(c, _PREC['or'])}", _PREC["or"])
        case BoundedForall(v, lo, hi, body):
            return wrap(
                f"forall {v} in [{_pp(lo, 0)}, {_pp(hi, 0)}) . {_pp(body, _PREC['or'])}",
                _PREC["or"],
            )
        case UFApp(name, args, _):
            if not args:
                return f"?{name}"
            return f"?{name}({', '.join(_pp(a, 0) for a in args)})"
    raise TypeError(f"to_text: {t!r}")


def _negated_view(t: Term):
    """If t prints more naturally as a subtraction operand, return |t|."""
    match t:
        case Lit(v) if not isinstance(v, bool) and v < 0:
            return Lit(-v)
        case Mul((Lit(v), *rest)) if not isinstance(v, bool) and v < 0:
            if v == -1 and len(rest) == 1:
                return rest[0]
            return Mul((Lit(-v),) + tuple(rest)) if v != -1 else Mul(tuple(rest))
    return None


# ---------------------------------------------------------------------------
# concrete evaluation


class EvalError(Exception):
    pass


def eval_term(t: Term, env: dict):
    """Evaluate under a map from variable names to Python values
    (bool/int/float/list/tuple). Arrays are lists; pairs are 2-tuples."""
    match t:
        case Lit(v):
            return float(v) if isinstance(v, Fraction) else v
        case Var(name, _):
            if name not in env:
                raise EvalError(f"unbound variable {name}")
            return env[name]
        case ArrayLen(a):
            return len(env[a])
        case Select(arr, idx):
            xs = eval_term(arr, env)
            i = eval_term(idx, env)
            if not isinstance(i, int) or not 0 <= i < len(xs):
                raise EvalError(f"array index {i} out of bounds [0, {len(xs)})")
            return xs[i]
        case Store(arr, idx, val):
            xs = list(eval_term(arr, env))
            i = eval_term(idx, env)
            if not 0 <= i < len(xs):
                raise EvalError(f"array index {i} out of bounds [0, {len(xs)})")
            xs[i] = eval_term(val, env)
            return xs
        case ArrayAlloc(n):
            ln = eval_term(n, env)
            if ln < 0:
                raise EvalError(f"negative array length {ln}")
            return [0] * ln
        case Fst(p):
            return eval_term(p, env)[0]
        case Snd(p):
            return eval_term(p, env)[1]
        case PairLit(a, b):
            return (eval_term(a, env), eval_term(b, env))
        case Add(args):
            return sum(eval_term(a, env) for a in args)
        case Mul(args):
            out = 1
            for a in args:
                out *= eval_term(a, env)
            return out
        case Sub(a, b):
            return eval_term(a, env) - eval_term(b, env)
        case Neg(a):
            return -eval_term(a, env)
        case Div(a, b):
            d = eval_term(b, env)
            if d == 0:
                raise EvalError("division by zero")
            return eval_term(a, env) / d
        case Log(a):
            x = eval_term(a, env)
            if x <= 0:
                raise EvalError(f"log of non-positive value {x}")
            return math.log(x)
        case Abs(a):
            return abs(eval_term(a, env))
        case Min(a, b):
            return min(eval_term(a, env), eval_term(b, env))
        case Max(a, b):
            return max(eval_term(a, env), eval_term(b, env))
        case Ite(c, a, b):
            return eval_term(a, env) if eval_term(c, env) else eval_term(b, env)
        case Cmp(op, a, b):
            return _cmp_eval(op, eval_term(a, env), eval_term(b, env))
        case Not(a):
            return not eval_term(a, env)
        case And(args):
            return all(eval_term(a, env) for a in args)
        case Or(args):
            return any(eval_term(a, env) for a in args)
        case Implies(h, c):
            return (not eval_term(h, env)) or eval_term(c, env)
        case BoundedForall(v, lo, hi, body):
            lo_v, hi_v = eval_term(lo, env), eval_term(hi, env)
            inner = dict(env)
            for j in range(int(lo_v), int(hi_v)):
                inner[v] = j
                if not eval_term(body, inner):
                    return False
            return True
        case UFApp(name, _, _):
            raise EvalError(f"cannot evaluate uninterpreted symbol {name}")
    raise TypeError(f"eval_term: {t!r}")


_FRESH_COUNTER = [0]


def fresh_name(base: str) -> str:
    _FRESH_COUNTER[0] += 1
    return f"{base}!{_FRESH_COUNTER[0]}"
