"""SSA conversion and the logical verification-condition encodings.

The general encoding threads a blocked flag h_i alongside the failure
accumulator w_i, so infeasible traces stay encodable; the simplified
encoding asserts guards and assumed axiom negations directly and is used
when a feasibility probe succeeds and all guards are deterministic."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import prog
from .axioms import AxiomInstance, support_fact
from .terms import (
    Add, And, ArrayAlloc, Cmp, Implies, Lit, Not, Or, Sort, Store, Term,
    TRUE, FALSE, Var, base_vars, conj, free_vars, normalize, subst,
)


class EncodingError(Exception):
    pass


@dataclass(frozen=True)
class SsaTrace:
    stmts: tuple  # original statements (base variable names)
    locations: tuple  # CFA node per position, length n+1
    prefix: str  # namespace for versioned symbols (trace id)
    var_sorts: dict  # base name -> Sort
    versions: tuple  # per position 0..n: dict base name -> version
    sample_values: dict  # position -> value Term for the draw at that position

    @property
    def n(self) -> int:
        return len(self.stmts)

    def name_at(self, base: str, pos: int) -> str:
        k = self.versions[pos].get(base, 0)
        return ssa_name(self.prefix, base, k)

    def var_at(self, base: str, pos: int) -> Term:
        return Var(self.name_at(base, pos), self.var_sorts[base])

    def rename(self, t: Term, pos: int) -> Term:
        """Instantiate a base-variable formula at a trace position."""
        mapping = {}
        for b in base_vars(t):
            if b in self.var_sorts and self.versions[pos].get(b, 0) > 0:
                mapping[b] = self.var_at(b, pos)
        return subst(t, mapping) if mapping else t


def ssa_name(prefix: str, base: str, version: int) -> str:
    if version == 0:
        return base
    return f"{prefix}{base}.{version}"


def to_ssa(
    stmts, locations=None, prefix: str = "", var_sorts: dict | None = None
) -> SsaTrace:
    """Single-assignment renaming; array writes become store chains (handled
    at encoding time; here each write just bumps the array's version)."""
    if locations is None:
        locations = tuple(range(len(stmts) + 1))
    if var_sorts is None:
        var_sorts = {}
        for st in stmts:
            for t in _stmt_terms(st):
                for b in base_vars(t):
                    var_sorts.setdefault(b, Sort.INT)
    vers: dict[str, int] = {}
    per_pos = [dict(vers)]
    sample_values: dict[int, Term] = {}
    for i, st in enumerate(stmts, start=1):
        match st:
            case prog.Assign(target, _) | prog.Sample(target, _):
                vers = dict(vers)
                vers[target.name] = vers.get(target.name, 0) + 1
            case prog.Assume(_):
                pass
        per_pos.append(vers)
    ssa = SsaTrace(
        stmts=tuple(stmts), locations=tuple(locations), prefix=prefix,
        var_sorts=dict(var_sorts), versions=tuple(per_pos),
        sample_values=sample_values,
    )
    for i, st in enumerate(ssa.stmts, start=1):
        if isinstance(st, prog.Sample):
            if st.target.index is None:
                sample_values[i] = ssa.var_at(st.target.name, i)
            else:
                sample_values[i] = Var(
                    f"{prefix}{st.target.name}.val.{i}", st.dist.value_sort
                )
    return ssa


def program_var_sorts(p: prog.Program) -> dict:
    return {n: prog.SURFACE_SORTS[p.decl_type(n)] for n in p.var_names}


def trace_ssa(p: prog.Program, stmts, locations=None, prefix: str = "") -> SsaTrace:
    return to_ssa(stmts, locations, prefix, program_var_sorts(p))


def spec_context(p: prog.Program) -> SpecContext:
    from .prog import typing_facts

    return SpecContext(
        pre=p.spec.pre, post=p.spec.post, beta=p.spec.beta,
        typing=typing_facts(p),
    )


def _stmt_terms(st: prog.Stmt):
    match st:
        case prog.Assign(target, e):
            if target.index is not None:
                yield target.index
            yield e
        case prog.Sample(target, d):
            if target.index is not None:
                yield target.index
            yield from d.args
        case prog.Assume(c):
            yield c


@dataclass(frozen=True)
class SpecContext:
    pre: Term
    post: Term
    beta: Term
    typing: Term = TRUE


@dataclass
class TraceVC:
    ssa: SsaTrace
    kind: str  # "general" | "simplified"
    blocks: tuple  # F_0 .. F_n
    neg_goal: Term
    goal: Term
    axioms: dict  # position -> AxiomInstance
    spec: SpecContext

    @property
    def formula(self) -> Term:
        """The validity claim: hypothesis blocks imply the goal."""
        return Implies(conj(list(self.blocks)), self.goal)

    def omega(self, i: int) -> Term:
        return Var(f"{self.ssa.prefix}w.{i}", Sort.REAL)

    def hflag(self, i: int) -> Term:
        return Var(f"{self.ssa.prefix}h.{i}", Sort.BOOL)

    def shared_vocabulary(self, i: int) -> frozenset:
        """Base names whose current version at cut i occurs on both sides of
        the cut, plus the always-shared inputs; the cut's w/h symbols ride
        along separately."""
        left: set[str] = set()
        for f in self.blocks[: i + 1]:
            left |= free_vars(f)
        right: set[str] = set(free_vars(self.neg_goal))
        for f in self.blocks[i + 1 :]:
            right |= free_vars(f)
        shared = left & right
        out = set()
        for b in self.ssa.var_sorts:
            if self.ssa.name_at(b, i) in shared or self.ssa.versions[i].get(b, 0) == 0:
                out.add(b)
        return frozenset(out)


def _enc_statement(
    ssa: SsaTrace, i: int, st: prog.Stmt, ax: AxiomInstance | None,
    general: bool, w, h,
) -> Term:
    parts = []
    prev = i - 1

    def keep_omega():
        parts.append(Cmp("=", w(i), w(prev)))

    match st:
        case prog.Assign(target, e):
            re = ssa.rename(e, prev)
            if target.index is None:
                parts.append(Cmp("=", ssa.var_at(target.name, i), re))
            else:
                idx = ssa.rename(target.index, prev)
                parts.append(
                    Cmp(
                        "=", ssa.var_at(target.name, i),
                        Store(ssa.var_at(target.name, prev), idx, re),
                    )
                )
            keep_omega()
            if general:
                parts.append(Cmp("=", h(i), h(prev)))
        case prog.Assume(c):
            rc = ssa.rename(c, prev)
            keep_omega()
            if general:
                parts.append(Cmp("=", h(i), Or((h(prev), Not(rc)))))
            else:
                parts.append(rc)
        case prog.Sample(target, d):
            if ax is None:
                raise EncodingError(f"no axiom for sampling statement at {i}")
            value = ssa.sample_values[i]
            dist_args = tuple(ssa.rename(a, prev) for a in d.args)
            phi_ax = ax.phi_ax(dist_args, value)
            e_ub = ssa.rename(ax.e_ub, prev)
            if target.index is not None:
                idx = ssa.rename(target.index, prev)
                parts.append(
                    Cmp(
                        "=", ssa.var_at(target.name, i),
                        Store(ssa.var_at(target.name, prev), idx, value),
                    )
                )
            fact = support_fact(d, value)
            if fact != TRUE:
                parts.append(fact)
            parts.append(Cmp("=", w(i), Add((w(prev), e_ub))))
            if general:
                parts.append(Cmp("=", h(i), Or((h(prev), phi_ax))))
            else:
                parts.append(normalize(Not(phi_ax)))
    return conj(parts)


def _build(ssa: SsaTrace, spec: SpecContext, axioms: dict, general: bool) -> TraceVC:
    vc_kind = "general" if general else "simplified"
    w = lambda i: Var(f"{ssa.prefix}w.{i}", Sort.REAL)
    h = lambda i: Var(f"{ssa.prefix}h.{i}", Sort.BOOL)
    f0 = [spec.typing, spec.pre, Cmp("=", w(0), Lit(Fraction(0)))]
    if general:
        f0.append(Cmp("=", h(0), FALSE))
    blocks = [conj(f0)]
    for i, st in enumerate(ssa.stmts, start=1):
        blocks.append(_enc_statement(ssa, i, st, axioms.get(i), general, w, h))
    n = ssa.n
    post = ssa.rename(spec.post, n)
    bound = Cmp("<=", w(n), spec.beta)
    goal = And((bound, Implies(Not(h(n)), post)) if general else (bound, post))
    return TraceVC(
        ssa=ssa, kind=vc_kind, blocks=tuple(blocks),
        neg_goal=normalize(Not(goal)), goal=goal, axioms=dict(axioms), spec=spec,
    )


def encode_general(ssa: SsaTrace, spec: SpecContext, axioms: dict) -> TraceVC:
    return _build(ssa, spec, axioms, general=True)


def encode_simplified(ssa: SsaTrace, spec: SpecContext, axioms: dict) -> TraceVC:
    return _build(ssa, spec, axioms, general=False)


def is_feasible(ssa: SsaTrace, spec: SpecContext, axioms: dict, logic) -> bool:
    """Simplified-encoding probe: the guards plus assumed axiom negations
    are satisfiable for some input."""
    vc = encode_simplified(ssa, spec, axioms)
    probe = conj(list(vc.blocks))
    return logic.get_model(probe).is_sat


def det_guards_only(stmts, vdet: frozenset) -> bool:
    for st in stmts:
        if isinstance(st, prog.Assume) and not base_vars(st.cond) <= vdet:
            return False
    return True


def vc_with_free_params(
    ssa: SsaTrace, spec: SpecContext, general: bool = True,
    shared_symbols: dict | None = None,
) -> TraceVC:
    """Encoding with each sampling parameter left as an opaque symbol over
    the inputs (f.<statement id>), ready for the synthesis loop. Bernoulli
    cases become integer-valued symbols with ite-shaped failure costs;
    uniform subsets become uninterpreted membership predicates."""
    from . import axioms as ax_mod
    from .terms import Ite, Sub, UFApp

    axioms: dict[int, AxiomInstance] = {}
    shared = shared_symbols if shared_symbols is not None else {}
    for i, st in enumerate(ssa.stmts, start=1):
        if not isinstance(st, prog.Sample):
            continue
        sid = shared.get(id(st), f"f.{ssa.prefix}{i}")
        d = st.dist
        if d.kind == "bern":
            sym = UFApp(sid, (), Sort.INT)
            e = d.args[0]
            e_ub = Ite(
                Cmp("=", sym, Lit(1)), Sub(Lit(Fraction(1)), e),
                Ite(Cmp("=", sym, Lit(2)), e, Lit(Fraction(0))),
            )
            axioms[i] = AxiomInstance(i, "bern", sym, e_ub, TRUE)
        elif d.kind in ("lap", "exp"):
            sym = UFApp(sid, (), Sort.REAL)
            axioms[i] = AxiomInstance(i, d.kind, sym, sym, TRUE)
        else:
            u = ax_mod.U_PAIR if d.value_sort == Sort.PAIR else ax_mod.U_INT
            member = UFApp(sid, (u,), Sort.BOOL)
            ub = UFApp(sid + ".ub", (), Sort.REAL)
            axioms[i] = AxiomInstance(i, "unif", member, ub, TRUE)
    return _build(ssa, spec, axioms, general)
