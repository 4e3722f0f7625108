"""Eager theorem instantiation for the nonlinear fragment.

Validity checking treats products of variables, division, and log as
uninterpreted; formulas are strengthened by instantiating a fixed set of
guarded facts about those operations. Instantiation terms count as size 1
when they are variables, literal constants, or nonlinear applications
already occurring in the query, and each schema slot is matched against the
occurrences its operation shape can actually touch (products are split into
factor/complement pairs, quotients matched on shared denominators, log laws
range over the query's log arguments). That keeps instance counts in the
hundreds while still closing the arithmetic the proofs need.

The division-splitting fact (x*y)/z + x/z = (x*(y+1))/z is carried in the
shipped set but contributes no instances: the term normalizer already puts
both sides into an identical sum-of-quotients form."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .terms import (
    Add, And, ArrayLen, Cmp, Div, Implies, Lit, Log, Mul, Select, Sort, Term,
    Var, conj, normalize, sort_of, subst, subterms,
)

_X = Var("theorem.x", Sort.REAL)
_Y = Var("theorem.y", Sort.REAL)
_Z = Var("theorem.z", Sort.REAL)
_XI = Var("theorem.x", Sort.INT)
_YI = Var("theorem.y", Sort.INT)


@dataclass(frozen=True)
class TheoremSchema:
    name: str
    vars: tuple  # metavariable Vars, bound in body
    body: Term  # implicitly universally quantified
    mode: str  # instantiation strategy key


def _pos(t):
    return Cmp(">", t, Lit(Fraction(0)))


def _nonneg(t):
    return Cmp(">=", t, Lit(Fraction(0)))


def shipped_schemas() -> tuple[TheoremSchema, ...]:
    x, y, z = _X, _Y, _Z
    one = Lit(Fraction(1))
    return (
        TheoremSchema(
            "mul-div-cancel", (x, y),
            Implies(_pos(y), Cmp("=", Div(Mul((x, y)), y), x)), "cancel"),
        TheoremSchema(
            "div-split", (x, y, z),
            Implies(_pos(z), Cmp("=", Add((Div(Mul((x, y)), z), Div(x, z))),
                                 Div(Mul((x, Add((y, one)))), z))), "div-pairs"),
        TheoremSchema(
            "mul-nonneg", (x, y),
            Implies(And((_nonneg(x), _nonneg(y))), _nonneg(Mul((x, y)))), "mul-split"),
        TheoremSchema(
            "div-nonneg", (x, y),
            Implies(And((_nonneg(x), _pos(y))), _nonneg(Div(x, y))), "div-atoms"),
        TheoremSchema(
            "div-pos", (x, y),
            Implies(And((_pos(x), _pos(y))), _pos(Div(x, y))), "div-atoms"),
        TheoremSchema(
            "div-le-one", (x, y),
            Implies(And((_nonneg(x), Cmp("<=", x, y), _pos(y))),
                    Cmp("<=", Div(x, y), one)), "div-atoms"),
        TheoremSchema(
            "mul-mono", (x, y, z),
            Implies(And((Cmp(">=", x, y), _nonneg(z))),
                    Cmp(">=", Mul((x, z)), Mul((y, z)))), "mono"),
        TheoremSchema(
            "mul-mono-int", (_XI, _YI, z),
            Implies(And((Cmp(">", _XI, _YI), _nonneg(z))),
                    Cmp(">=", Mul((_XI, z)), Add((Mul((_YI, z)), z)))), "mono-int"),
        TheoremSchema(
            "div-mono", (x, y, z),
            Implies(And((Cmp(">=", x, y), _pos(z))),
                    Cmp(">=", Div(x, z), Div(y, z))), "div-pairs"),
        TheoremSchema(
            "log-sum", (x, y),
            Implies(And((_pos(x), _pos(y))),
                    Cmp("=", Add((Log(x), Log(y))), Log(Mul((x, y))))), "log-pairs"),
        TheoremSchema(
            "log-mono", (x, y),
            Implies(And((Cmp(">=", x, y), _pos(y))),
                    Cmp(">=", Log(x), Log(y))), "log-pairs"),
        TheoremSchema("log-one", (), Cmp("=", Log(one), Lit(Fraction(0))), "const"),
        TheoremSchema(
            "log-double", (x,),
            Implies(_pos(x), Cmp("=", Mul((Lit(Fraction(2)), Log(x))),
                                 Log(Mul((x, x))))), "log-args"),
    )


def _numeric(t: Term) -> bool:
    return sort_of(t) in (Sort.INT, Sort.REAL)


def _reserved(name: str) -> bool:
    parts = name.split(".")
    return "w" in parts or "h" in parts


@dataclass
class Pool:
    scalars: list  # vars, literals, lens, selects, sums occurring in phi
    products: list  # Mul atoms (tuples of non-literal factors)
    quotients: list  # Div atoms (num, den)
    logargs: list  # arguments of Log


def gather_pool(phi: Term) -> Pool:
    scalars: list[Term] = []
    products: list[tuple] = []
    quotients: list[tuple] = []
    logargs: list[Term] = []

    def add(xs, t):
        if t not in xs:
            xs.append(t)

    for sub in subterms(phi):
        match sub:
            case Var(name, _) if _numeric(sub) and not _reserved(name):
                add(scalars, sub)
            case Lit(v) if not isinstance(v, bool):
                add(scalars, sub)
            case ArrayLen() | Select():
                add(scalars, sub)
            case Add(args):
                if all(not _reserved(n) for n in _term_names(sub)):
                    add(scalars, sub)
            case Div(num, den):
                add(quotients, (num, den))
            case Log(arg):
                add(logargs, arg)
            case Mul(args):
                rest = tuple(a for a in args if not isinstance(a, Lit))
                if len(rest) >= 2:
                    add(products, rest)
    return Pool(scalars, products, quotients, logargs)


def _term_names(t: Term):
    from .terms import free_vars

    return free_vars(t)


def _mono_product(factors: tuple) -> Term:
    return factors[0] if len(factors) == 1 else Mul(factors)


def _splits(factors: tuple):
    """(complement-product, factor) pairs for every factor position."""
    for i, f in enumerate(factors):
        rest = factors[:i] + factors[i + 1 :]
        if rest:
            yield _mono_product(rest), f


def _tuples_for(schema: TheoremSchema, pool: Pool, extra_scalars: list):
    scalars = pool.scalars + extra_scalars
    ints = [t for t in scalars if sort_of(t) == Sort.INT]
    mode = schema.mode
    if mode == "const":
        yield ()
    elif mode == "cancel":
        for num, den in pool.quotients:
            fs = num.args if isinstance(num, Mul) else (num,)
            fs = tuple(f for f in fs if not isinstance(f, Lit))
            for i, f in enumerate(fs):
                if f == den and len(fs) > 1:
                    yield (_mono_product(fs[:i] + fs[i + 1 :]), den)
    elif mode == "mul-split":
        for fs in pool.products:
            for rest, f in _splits(fs):
                yield (rest, f)
    elif mode == "div-atoms":
        for num, den in pool.quotients:
            yield (num, den)
    elif mode in ("mono", "mono-int"):
        want_int = mode == "mono-int"
        per_factor: dict[Term, list[Term]] = {}
        for fs in pool.products:
            for rest, f in _splits(fs):
                per_factor.setdefault(f, []).append(rest)
        for f, complements in per_factor.items():
            side_pool = ints if want_int else scalars
            cands = complements + [s for s in side_pool if s not in complements]
            for xa in complements:
                if want_int and sort_of(xa) != Sort.INT:
                    continue
                for yb in cands:
                    if xa != yb and (not want_int or sort_of(yb) == Sort.INT):
                        yield (xa, yb, f)
                        yield (yb, xa, f)
    elif mode == "div-pairs":
        by_den: dict[Term, list[Term]] = {}
        for num, den in pool.quotients:
            by_den.setdefault(den, []).append(num)
        for den, nums in by_den.items():
            for i, a in enumerate(nums):
                for b in nums:
                    if a != b:
                        yield (a, b, den)
                for s in pool.scalars:
                    if s not in nums:
                        yield (a, s, den)
                        yield (s, a, den)
    elif mode == "log-pairs":
        for a in pool.logargs:
            for b in pool.logargs:
                if len(schema.vars) == 2:
                    yield (a, b)
    elif mode == "log-args":
        for a in pool.logargs:
            yield (a,)


def instantiate_theorems(
    phi: Term,
    max_term_size: int = 1,
    schemas: tuple[TheoremSchema, ...] | None = None,
) -> tuple[Term, int]:
    """Shape-matched instantiations of the schema set over phi's occurrence
    pool; returns (conjunction, distinct instance count). Sizes beyond 1 add
    pairwise sums and products of the query's simple scalars to the
    monotonicity slots."""
    if max_term_size < 1:
        raise ValueError("max_term_size must be >= 1")
    if schemas is None:
        schemas = shipped_schemas()
    pool = gather_pool(normalize(phi))
    extra: list[Term] = []
    if max_term_size >= 2:
        small = [t for t in pool.scalars if isinstance(t, (Var, Lit, ArrayLen))]
        for i, a in enumerate(small):
            for b in small[i:]:
                extra.append(normalize(Add((a, b))))
                extra.append(normalize(Mul((a, b))))
    instances: list[Term] = []
    seen: set[Term] = set()
    for schema in schemas:
        names = [v.name for v in schema.vars]
        for combo in _tuples_for(schema, pool, extra):
            if len(combo) != len(names):
                continue
            if any(
                sort_of(v) == Sort.INT and sort_of(c) != Sort.INT
                for v, c in zip(schema.vars, combo)
            ):
                continue
            inst = normalize(subst(schema.body, dict(zip(names, combo))))
            if isinstance(inst, Lit):
                continue
            if inst not in seen:
                seen.add(inst)
                instances.append(inst)
    return conj(instances), len(instances)
