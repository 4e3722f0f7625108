"""Distribution axiom families and their candidate parameter spaces.

A family for statement v ~ d supplies, for each admissible parameter, a bad
event phi_ax over the sampled value with Pr[phi_ax] <= e_ub; encoders assume
the negation at failure cost e_ub.

The Laplace and exponential families use the b*log(2/f) radius, which is
sound for the exact discrete pmfs (the tail of the discrete Laplace at
radius b*log(1/f) genuinely exceeds f, so the textbook continuous form is
not available here):

    lap(m, b):  Pr[|v - m| > b log(2/f)] <= f/(1+e^{-1/b}) <= f
    exp(s, b):  Pr[v < s or v - s > b log(2/f)] <= f/2 <= f

Bernoulli cases follow the worked overview encoding: 1 assumes the draw is
true (cost 1-e), 2 assumes false (cost e), 3 assumes nothing (cost 0).
Uniform parameters are predicate-defined subsets of the support; their mass
is resolved to a constant K/|support| by a validity sweep when possible."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import prog
from .terms import (
    Abs, Add, And, ArrayLen, Cmp, Div, Fst, Ite, Lit, Log, Mul, Not, Or,
    PairLit, Snd, Sort, Sub, Term, TRUE, FALSE, Var, children, disj,
    normalize, subst, to_text,
)

# reserved placeholder for the sampled value inside uniform subset predicates
U_INT = Var("@u", Sort.INT)
U_PAIR = Var("@u", Sort.PAIR)


@dataclass(frozen=True)
class AxiomInstance:
    """A chosen axiom for one sampling statement: the parameter plus the
    materialized (phi_ax, e_ub) maker. `param` is a Term over inputs for
    lap/exp, a case index 1..3 for bern, or a subset predicate Term over the
    @u placeholder for unif."""

    stmt_id: int
    kind: str
    param: object
    e_ub: Term
    side_condition: Term

    def phi_ax(self, dist_args: tuple, value: Term) -> Term:
        return _phi_ax(self.kind, self.param, dist_args, value)

    def param_text(self) -> str:
        if isinstance(self.param, int):
            return str(self.param)
        return to_text(self.param)


class KindMismatch(Exception):
    pass


def _phi_ax(kind: str, param, dist_args: tuple, value: Term) -> Term:
    if kind == "bern":
        if isinstance(param, Term):  # symbolic case index (synthesis form)
            return Not(Or((
                And((Cmp("=", param, Lit(1)), value)),
                And((Cmp("=", param, Lit(2)), Not(value))),
                Cmp("=", param, Lit(3)),
            )))
        if param == 1:
            return Not(value)
        if param == 2:
            return value
        return FALSE
    if kind == "lap":
        m, b = dist_args
        radius = Mul((b, Log(Div(Lit(2), param))))
        return Cmp(">", Abs(Sub(value, m)), radius)
    if kind == "exp":
        s, b = dist_args
        radius = Mul((b, Log(Div(Lit(2), param))))
        return Or((Cmp("<", value, s), Cmp(">", Sub(value, s), radius)))
    if kind == "unif":
        return subst_u(param, value)
    raise KindMismatch(kind)


def subst_u(pred: Term, value: Term) -> Term:
    return subst(pred, {"@u": value})


def bern_e_ub(e: Term, case: int) -> Term:
    if case == 1:
        return normalize(Sub(Lit(Fraction(1)), e))
    if case == 2:
        return normalize(e)
    return Lit(Fraction(0))


def support_fact(d: prog.DistExpr, value: Term) -> Term:
    """The probability-1 fact that a uniform draw lands in its support."""
    if d.kind != "unif":
        return TRUE
    eqs = []
    for c in d.support:
        if isinstance(c, tuple):
            eqs.append(Cmp("=", value, PairLit(Lit(c[0]), Lit(c[1]))))
        else:
            eqs.append(Cmp("=", value, Lit(c)))
    return disj(eqs)


def instantiate(
    stmt_id: int,
    d: prog.DistExpr,
    param,
    logic=None,
    pre: Term = TRUE,
) -> AxiomInstance:
    """Materialize one axiom choice. For uniform subsets, `logic` (plus the
    ambient precondition) resolves the subset mass to a constant when the
    count is input-independent."""
    zero, one = Lit(Fraction(0)), Lit(Fraction(1))
    if d.kind == "bern":
        if param not in (1, 2, 3):
            raise KindMismatch(f"bern case {param!r}")
        return AxiomInstance(stmt_id, "bern", param, bern_e_ub(d.args[0], param), TRUE)
    if d.kind in ("lap", "exp"):
        if not isinstance(param, Term):
            raise KindMismatch(f"{d.kind} parameter {param!r}")
        side = And((Cmp("<", zero, param), Cmp("<=", param, one)))
        return AxiomInstance(stmt_id, d.kind, param, normalize(param), side)
    if d.kind == "unif":
        n = len(d.support)
        counts = [subst_u(param, _support_value(c)) for c in d.support]
        count_term = Add(tuple(Ite(c, Lit(1), Lit(0)) for c in counts))
        e_ub = None
        if logic is not None:
            for k in range(n + 1):
                r = logic.check_validity(Cmp("=", count_term, Lit(k)), hyps=(pre,))
                if r.is_valid:
                    e_ub = Lit(Fraction(k, n))
                    break
        if e_ub is None:
            e_ub = normalize(Div(count_term, Lit(n)))
        return AxiomInstance(stmt_id, "unif", param, e_ub, TRUE)
    raise KindMismatch(d.kind)


def _support_value(c) -> Term:
    if isinstance(c, tuple):
        return PairLit(Lit(c[0]), Lit(c[1]))
    return Lit(c)


def check_side_condition(inst: AxiomInstance, pre: Term, logic) -> bool:
    """True iff pre entails the family's parameter condition; Unknown and
    Timeout verdicts count as failure."""
    if inst.side_condition == TRUE:
        return True
    return logic.check_validity(inst.side_condition, hyps=(pre,)).is_valid


# ---------------------------------------------------------------------------
# candidate enumeration


@dataclass(frozen=True)
class Candidate:
    param: object
    size: int


def term_size(t: Term) -> int:
    match t:
        case Var() | Lit() | ArrayLen():
            return 1
        case _:
            return sum(term_size(c) for c in children(t))


def enumerate_candidates(
    stmt_id: int, d: prog.DistExpr, inputs: tuple, size_cap: int
) -> list[Candidate]:
    """The ordered, duplicate-free parameter stream for one sampling
    statement, up to the given term size.

    Arithmetic parameters range over scalar inputs, array-length symbols and
    the literals 1..4, closed under /, *, + in increasing size. Uniform
    parameters are subset predicates built from (dis)equalities between the
    drawn value's components, support constants, and integer inputs."""
    if size_cap < 1:
        raise ValueError("size_cap must be >= 1")
    if d.kind == "bern":
        return [Candidate(c, 1) for c in (1, 2, 3)]
    if d.kind == "unif":
        return _uniform_candidates(d, inputs, size_cap)
    return _arith_candidates(inputs, size_cap)


def _arith_candidates(inputs: tuple, size_cap: int) -> list[Candidate]:
    atoms: list[Term] = []
    for name, ty in inputs:
        sort = prog.SURFACE_SORTS[ty]
        if sort in (Sort.INT, Sort.REAL):
            atoms.append(Var(name, sort))
        elif sort == Sort.ARRAY:
            atoms.append(ArrayLen(name))
    atoms.extend(Lit(k) for k in (1, 2, 3, 4))

    by_size: dict[int, list[Term]] = {1: atoms}
    seen = {normalize(a) for a in atoms}
    out = [Candidate(a, 1) for a in atoms]
    for size in range(2, size_cap + 1):
        layer: list[Term] = []
        for lsize in range(1, size):
            for a in by_size.get(lsize, ()):
                for b in by_size.get(size - lsize, ()):
                    for t in (Div(a, b), Mul((a, b)), Add((a, b))):
                        key = normalize(t)
                        if isinstance(key, Lit) or key in seen:
                            continue
                        seen.add(key)
                        layer.append(t)
                        out.append(Candidate(t, size))
        by_size[size] = layer
    return out


def _uniform_candidates(d: prog.DistExpr, inputs: tuple, size_cap: int) -> list[Candidate]:
    pair = bool(d.support) and isinstance(d.support[0], tuple)
    comps = [Fst(U_PAIR), Snd(U_PAIR)] if pair else [U_INT]
    consts: list[int] = sorted(
        {x for c in d.support for x in (c if isinstance(c, tuple) else (c,))}
    )
    scalars = [
        Var(name, Sort.INT) for name, ty in inputs if prog.SURFACE_SORTS[ty] == Sort.INT
    ]
    atoms: list[Term] = []
    for comp in comps:
        for k in consts:
            atoms.append(Cmp("=", comp, Lit(k)))
        for v in scalars:
            atoms.append(Cmp("=", comp, v))
            atoms.append(Cmp("!=", comp, v))
    out = [Candidate(a, 1) for a in atoms]
    if size_cap >= 2:
        seen = {normalize(a) for a in atoms}
        for i, a in enumerate(atoms):
            for b in atoms[i + 1 :]:
                t = And((a, b))
                key = normalize(t)
                if isinstance(key, Lit) or key in seen:
                    continue
                seen.add(key)
                out.append(Candidate(t, 2))
    return out
