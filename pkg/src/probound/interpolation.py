"""Template-guided sequence interpolation and label extraction.

Templates are harvested from every predicate of the program, the
specification, and the chosen axioms: verbatim facts, comparison shapes with
placeholders at variable/read/coefficient positions, bounded-forall
skeletons with a placeholdered range, guarded variants, and the dedicated
failure-accumulator template  w_i <= sum_s c_s * e_ub_s  over the program's
sampling statements.

Labeling runs jointly over a trace batch, greatest-fixpoint style: every
control location starts with all well-scoped template instances, and an
instance survives only if it is implied at every occurrence of its location
along every trace (with the previous cut's survivors as hypothesis). The
surviving conjunctions are exactly sequence interpolants; cuts at the same
control location receive identical formulas by construction, which is what
lets merge and generalize fire afterwards."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from . import prog
from .encoding import TraceVC
from .logic import Logic, emit_asserts
from .smtlib import Emitter
from .terms import (
    Add, And, ArrayLen, BoundedForall, Cmp, Implies, Lit, Log, Mul, Not, Or,
    Select, Sort, Sub, Term, TRUE, Var, base_vars, children, conj, disj,
    free_vars, normalize, rebuild, sort_of, subst, subterms, term_key,
    to_text,
)
from .theorems import instantiate_theorems


class InterpolationFailure(Exception):
    pass


BOUND_VAR = "j"  # quantified-template index; reserved, not a program name


@dataclass
class Harvest:
    verbatims: list  # closed facts worth carrying (pre/typing/post pieces)
    atoms: list  # comparison atoms for shapes and quantified bodies
    guards: list  # boolean guard atoms for implication wrapping
    quants: list  # (guard list, BoundedForall) sources
    extra_terms: list  # harvested numeric subterms for fills
    cmp_ops: set
    eubs: dict  # static sample id -> e_ub Term (deterministic vars)


def _flatten_post(post: Term):
    """Top-level post conjuncts, splitting implications of conjunctions."""
    parts = post.args if isinstance(post, And) else (post,)
    out = []
    for c in parts:
        if isinstance(c, Implies) and isinstance(c.concl, And):
            out.extend(Implies(c.hyp, x) for x in c.concl.args)
        else:
            out.append(c)
    return out


def _collect_atoms(t: Term, atoms: list, quants: list, guard_ctx: tuple = ()):
    match t:
        case Cmp():
            if t not in atoms:
                atoms.append(t)
        case Not(a):
            _collect_atoms(a, atoms, quants, guard_ctx)
        case And(args) | Or(args):
            for a in args:
                _collect_atoms(a, atoms, quants, guard_ctx)
        case Implies(h, c):
            _collect_atoms(h, atoms, quants, guard_ctx)
            _collect_atoms(c, atoms, quants, guard_ctx + (h,))
        case BoundedForall(v, lo, hi, body):
            renamed = subst(body, {v: Var(BOUND_VAR, Sort.INT)})
            quants.append((guard_ctx, BoundedForall(BOUND_VAR, lo, hi, renamed)))
            _collect_atoms(renamed, atoms, quants, guard_ctx)
        case _:
            pass


def _guard_atoms_of(block: prog.Block, out: list):
    match block:
        case prog.If(c, t, e):
            _bool_atoms(c, out)
            _guard_atoms_of(t, out)
            _guard_atoms_of(e, out)
        case prog.While(c, body):
            _bool_atoms(c, out)
            _guard_atoms_of(body, out)
        case prog.Seq(blocks):
            for b in blocks:
                _guard_atoms_of(b, out)
        case _:
            pass


def _bool_atoms(c: Term, out: list):
    match c:
        case Cmp() | Var(_, Sort.BOOL):
            if c not in out:
                out.append(c)
        case Not(a):
            _bool_atoms(a, out)
        case And(args) | Or(args):
            for a in args:
                _bool_atoms(a, out)
        case _:
            pass


def harvest_templates(
    program: prog.Program, spec, axiom_instances: dict, sample_targets: dict,
) -> Harvest:
    """Collect template sources. `sample_targets` maps static sample ids to
    (value expression over base variables, DistExpr)."""
    verbatims: list[Term] = []
    atoms: list[Term] = []
    quants: list = []
    guards: list[Term] = []

    for source in (spec.typing, spec.pre):
        for c in (source.args if isinstance(source, And) else (source,)):
            if c != TRUE and c not in verbatims:
                verbatims.append(c)
            _collect_atoms(c, atoms, quants)
    for c in _flatten_post(spec.post):
        if c not in verbatims:
            verbatims.append(c)
        _collect_atoms(c, atoms, quants)
    _guard_atoms_of(program.body, guards)
    for g in guards:
        _collect_atoms(g, atoms, quants)
    for sid, inst in axiom_instances.items():
        value, dist = sample_targets[sid]
        if isinstance(value, Term):
            fact = normalize(Not(inst.phi_ax(dist.args, value)))
            if fact not in verbatims:
                verbatims.append(fact)
            _collect_atoms(fact, atoms, quants)

    extra_terms: list[Term] = []
    for src in [g for g in guards if isinstance(g, Cmp)] + [spec.beta]:
        for sub in subterms(src):
            if isinstance(sub, (Add, Mul)) and sort_of(sub) in (Sort.INT, Sort.REAL):
                ns = normalize(sub)
                if not isinstance(ns, Lit) and ns not in extra_terms:
                    extra_terms.append(ns)

    cmp_ops = {a.op for a in atoms} | {"=", "<="}
    eubs = {sid: inst.e_ub for sid, inst in axiom_instances.items()}
    return Harvest(verbatims, atoms, guards, quants, extra_terms, cmp_ops, eubs)


# ---------------------------------------------------------------------------
# candidate generation


@dataclass
class FillPool:
    ints: list
    reals: list
    bools: list
    arrays: list

    def numeric(self):
        return self.ints + self.reals


def _fill_pool(vocab: frozenset, var_sorts: dict, harvest: Harvest, level: int) -> FillPool:
    ints, reals, bools, arrays = [], [], [], []
    for v in sorted(vocab):
        sort = var_sorts.get(v)
        if sort == Sort.INT:
            ints.append(Var(v, Sort.INT))
        elif sort == Sort.REAL:
            reals.append(Var(v, Sort.REAL))
        elif sort == Sort.BOOL:
            bools.append(Var(v, Sort.BOOL))
        elif sort == Sort.ARRAY:
            arrays.append(v)
            ints.append(ArrayLen(v))
    lits = [Lit(k) for k in range(0, 5)]
    ints.extend(lits)
    for t in harvest.extra_terms:
        if base_vars(t) <= vocab and t not in ints and t not in reals:
            (ints if sort_of(t) == Sort.INT else reals).append(t)
    if level >= 2:
        base = [t for t in ints если False else ints if True else []]
        simple = [t for t in ints if isinstance(t, (Var, ArrayLen))]
        extra = []
        for a in simple:
            for b in lits[1:3]:
                extra.append(normalize(Add((a, b))))
        if level >= 3:
            for a, b in itertools.combinations(simple, 2):
                extra.append(normalize(Add((a, b))))
                extra.append(normalize(Mul((a, b))))
        ints.extend(t for t in extra if t not in ints)
    reads = []
    for arr in arrays:
        for idx in ints:
            if isinstance(idx, (Var, ArrayLen)) or isinstance(idx, Lit):
                reads.append(Select(Var(arr, Sort.ARRAY), idx))
    ints.extend(reads[:40])
    return FillPool(ints, reals, bools, arrays)
