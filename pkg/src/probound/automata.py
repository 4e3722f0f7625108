"""Failure automata: well-labeledness checking, merge, generalize, trace
inclusion, and the final correctness conditions.

Every node carries a state predicate (lambda) and a failure-bound expression
(kappa) over deterministic variables; every edge's Hoare-style obligation is
discharged as an SMT validity query with failure budget
wp_f(kappa(dst), stmt) - kappa(src). Sample edges carry their axiom instance
so certificates re-check without any synthesis."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

from . import prog
from .axioms import AxiomInstance, support_fact
from .terms import (
    Add, And, Cmp, Implies, Lit, Max, Not, Sort, Store, Sub, Term, TRUE, Var,
    base_vars, disj, normalize, subst, to_text,
)


@dataclass(frozen=True)
class FANode:
    id: int
    location: int  # control-location tag for merge/generalize alignment
    lam: Term
    kappa: Term


@dataclass(frozen=True)
class FAEdge:
    src: int
    stmt: prog.Stmt
    dst: int
    axiom: AxiomInstance | None = None


@dataclass
class FailureAutomaton:
    nodes: dict[int, FANode]
    edges: list[FAEdge]
    entry: int
    exit: int
    vdet: frozenset
    inputs: frozenset

    def out_edges(self, n: int) -> list[FAEdge]:
        return [e for e in self.edges if e.src == n]

    def node(self, n: int) -> FANode:
        return self.nodes[n]

    def structure_violations(self) -> list[str]:
        out = []
        succ = {n: [] for n in self.nodes}
        for e in self.edges:
            succ[e.src].append(e)
        if succ[self.exit]:
            out.append("exit node has outgoing edges")
        rev = {n: [] for n in self.nodes}
        for e in self.edges:
            rev[e.dst].append(e.src)
        seen, stack = {self.exit}, [self.exit]
        while stack:
            for m in rev[stack.pop()]:
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        for n in self.nodes:
            if n not in seen:
                out.append(f"node {n} cannot reach the exit")
        for n, es in succ.items():
            if len(es) > 2:
                out.append(f"node {n} has {len(es)} outgoing edges")
            elif len(es) == 2:
                x, y = es
                if not (isinstance(x.stmt, prog.Assume) and isinstance(y.stmt, prog.Assume)):
                    out.append(f"node {n} branches on non-assume statements")
                elif normalize(Not(x.stmt.cond)) != normalize(y.stmt.cond):
                    out.append(f"node {n} guards are not complementary")
        return out

    def renumbered(self, start: int = 0) -> "FailureAutomaton":
        order = sorted(self.nodes)
        remap = {old: start + i for i, old in enumerate(order)}
        return FailureAutomaton(
            nodes={remap[n.id]: replace(n, id=remap[n.id]) for n in self.nodes.values()},
            edges=[replace(e, src=remap[e.src], dst=remap[e.dst]) for e in self.edges],
            entry=remap[self.entry], exit=remap[self.exit],
            vdet=self.vdet, inputs=self.inputs,
        )


@dataclass(frozen=True)
class CheckItem:
    subject: str  # "edge 3->4" / "node 2" / "exit"
    condition: str
    verdict: str  # valid | failed | unknown
    detail: str = ""


@dataclass
class CheckReport:
    items: list[CheckItem] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(i.verdict == "valid" for i in self.items)

    def failures(self) -> list[CheckItem]:
        return [i for i in self.items if i.verdict != "valid"]

    def add(self, subject: str, condition: str, verdict: str, detail: str = ""):
        self.items.append(CheckItem(subject, condition, verdict, detail))


# ---------------------------------------------------------------------------
# wp over failure expressions


def wp_f(e: Term, st: prog.Stmt) -> Term:
    """Failure-probability weakest precondition: substitution on
    assignments, identity on assume and sampling statements."""
    match st:
        case prog.Assign(target, rhs):
            if target.index is None:
                return subst(e, {target.name: rhs})
            arr = Var(target.name, Sort.ARRAY)
            return subst(e, {target.name: Store(arr, target.index, rhs)})
        case _:
            return e


# ---------------------------------------------------------------------------
# well-labeledness


def _fresh_value(st: prog.Sample, taken) -> Term:
    base = f"{st.target.name}.smp"
    k = 0
    while f"{base}{k}" in taken:
        k += 1
    return Var(f"{base}{k}", st.dist.value_sort)


def edge_obligations(
    lam_i: Term, kappa_i: Term, e: FAEdge, lam_j: Term, kappa_j: Term,
    typing: Term = TRUE,
) -> list[tuple[str, Term]]:
    """The validity obligations for one transition, named. Declared-type
    facts are ambient (states are typed by the declaration environment)."""
    st = e.stmt
    lam_i = And((typing, lam_i)) if typing != TRUE else lam_i
    out: list[tuple[str, Term]] = []
    diff = normalize(Sub(wp_f(kappa_j, st), kappa_i))
    zero = Lit(Fraction(0))
    match st:
        case prog.Assign(target, rhs):
            if target.index is None:
                post = subst(lam_j, {target.name: rhs})
            else:
                arr = Var(target.name, Sort.ARRAY)
                post = subst(lam_j, {target.name: Store(arr, target.index, rhs)})
            out.append(("state", Implies(lam_i, post)))
            out.append(("budget", Implies(lam_i, Cmp(">=", diff, zero))))
        case prog.Assume(b):
            out.append(("state", Implies(And((lam_i, b)), lam_j)))
            out.append(("budget", Implies(lam_i, Cmp(">=", diff, zero))))
        case prog.Sample(target, d):
            if e.axiom is None:
                raise ValueError(f"sample edge {e.src}->{e.dst} lacks an axiom")
            taken = base_vars(lam_i) | base_vars(lam_j)
            v = _fresh_value(st, taken)
            phi_ax = e.axiom.phi_ax(d.args, v)
            fact = support_fact(d, v)
            hyp = And((lam_i, normalize(Not(phi_ax)), fact))
            if target.index is None:
                post = subst(lam_j, {target.name: v})
            else:
                arr = Var(target.name, Sort.ARRAY)
                post = subst(lam_j, {target.name: Store(arr, target.index, v)})
            out.append(("state", Implies(hyp, post)))
            out.append(
                ("budget", Implies(lam_i, Cmp(">=", diff, e.axiom.e_ub)))
            )
            if e.axiom.side_condition != TRUE:
                out.append(("axiom-side", Implies(lam_i, e.axiom.side_condition)))
    out.append(("budget-range", Implies(lam_i, Cmp("<=", diff, Lit(Fraction(1))))))
    return out


def check_well_labeled(
    a: FailureAutomaton, logic, typing: Term = TRUE
) -> CheckReport:
    """Per-edge triple discharge plus the node-level kappa conditions."""
    rep = CheckReport()
    for v in a.structure_violations():
        rep.add("structure", "well-formed", "failed", v)
    entry_kappa = normalize(a.node(a.entry).kappa)
    rep.add(
        "entry", "kappa-zero",
        "valid" if entry_kappa == Lit(Fraction(0)) or entry_kappa == Lit(0) else "failed",
        to_text(entry_kappa),
    )
    exit_fv = base_vars(a.node(a.exit).kappa)
    rep.add(
        "exit", "kappa-inputs-only",
        "valid" if exit_fv <= a.inputs else "failed",
        f"free: {sorted(exit_fv - a.inputs)}",
    )
    for n in a.nodes.values():
        fv = base_vars(n.kappa)
        if not fv <= a.vdet:
            rep.add(f"node {n.id}", "kappa-deterministic", "failed",
                    f"free: {sorted(fv - a.vdet)}")
        rng = Implies(And((typing, n.lam)), And((
            Cmp("<=", Lit(Fraction(0)), n.kappa),
            Cmp("<=", n.kappa, Lit(Fraction(1))),
        )))
        r = logic.check_validity(rng, name=f"kappa-range-{n.id}")
        rep.add(f"node {n.id}", "kappa-range",
                "valid" if r.is_valid else r.verdict, to_text(n.kappa))
    for e in a.edges:
        ni, nj = a.node(e.src), a.node(e.dst)
        try:
            obligations = edge_obligations(ni.lam, ni.kappa, e, nj.lam, nj.kappa, typing)
        except ValueError as err:
            rep.add(f"edge {e.src}->{e.dst}", "axiom", "failed", str(err))
            continue
        for cond, phi in obligations:
            r = logic.check_validity(phi, name=f"edge-{e.src}-{e.dst}-{cond}")
            rep.add(
                f"edge {e.src}->{e.dst} [{e.stmt}]", cond,
                "valid" if r.is_valid else r.verdict,
            )
    return rep


# ---------------------------------------------------------------------------
# merge


class MergeError(Exception):
    def __init__(self, condition: int, message: str):
        super().__init__(f"merge condition ({condition}): {message}")
        self.condition = condition


def stmt_norm_key(st: prog.Stmt):
    match st:
        case prog.Assume(c):
            return ("assume", normalize(c))
        case prog.Assign(t, e):
            idx = normalize(t.index) if t.index is not None else None
            return ("assign", t.name, idx, normalize(e))
        case prog.Sample(t, d):
            idx = normalize(t.index) if t.index is not None else None
            return ("sample", t.name, idx, d.kind,
                    tuple(normalize(x) for x in d.args), d.support)


def _labels_equivalent(n1: FANode, n2: FANode, logic, typing: Term = TRUE) -> bool:
    lam_eq = normalize(n1.lam) == normalize(n2.lam) or logic.check_validity(
        Implies(typing, And((Implies(n1.lam, n2.lam), Implies(n2.lam, n1.lam))))
    ).is_valid
    if not lam_eq:
        return False
    return normalize(n1.kappa) == normalize(n2.kappa) or logic.check_validity(
        Implies(typing, Cmp("=", n1.kappa, n2.kappa))
    ).is_valid


def merge(
    a1: FailureAutomaton, a2: FailureAutomaton, logic, typing: Term = TRUE
) -> FailureAutomaton:
    """Fuse two automata sharing a labeled linear prefix that ends in
    complementary assume edges; the exit keeps the disjoined state label and
    the max of the two failure bounds."""
    p1, p2 = a1.entry, a2.entry
    prefix_pairs = [(p1, p2)]
    while True:
        es1, es2 = a1.out_edges(p1), a2.out_edges(p2)
        if len(es1) != 1 or len(es2) != 1:
            raise MergeError(1, f"prefix nodes must be linear, got fan-out "
                                f"{len(es1)}/{len(es2)}")
        s1, s2 = es1[0], es2[0]
        if stmt_norm_key(s1.stmt) == stmt_norm_key(s2.stmt):
            p1, p2 = s1.dst, s2.dst
            prefix_pairs.append((p1, p2))
            if p1 == a1.exit or p2 == a2.exit:
                raise MergeError(1, "no branching assume pair before an exit")
            continue
        if not (isinstance(s1.stmt, prog.Assume) and isinstance(s2.stmt, prog.Assume)):
            raise MergeError(2, "diverging statements are not assumes")
        if normalize(Not(s1.stmt.cond)) != normalize(s2.stmt.cond):
            raise MergeError(2, "diverging assumes are not complementary")
        break
    for q1, q2 in prefix_pairs:
        if not _labels_equivalent(a1.node(q1), a2.node(q2), logic, typing):
            raise MergeError(
                3, f"the automata disagree on the label of node {q1}/{q2}"
            )

    # splice: prefix and suffix of a1 stay; a2 contributes everything outside
    # its prefix, with its exit fused into a1's
    prefix2 = {q2 for _, q2 in prefix_pairs}
    offset = max(a1.nodes) + 1
    remap2: dict[int, int] = {}
    for (q1, q2) in prefix_pairs:
        remap2[q2] = q1
    remap2[a2.exit] = a1.exit
    for n in a2.nodes:
        if n not in remap2:
            remap2[n] = offset
            offset += 1
    nodes = dict(a1.nodes)
    for n in a2.nodes.values():
        if n.id in prefix2 or n.id == a2.exit:
            continue
        nid = remap2[n.id]
        nodes[nid] = replace(n, id=nid)
    e1, e2 = a1.node(a1.exit), a2.node(a2.exit)
    lam = normalize(disj([e1.lam, e2.lam]))
    kappa = e1.kappa if normalize(e1.kappa) == normalize(e2.kappa) else Max(e1.kappa, e2.kappa)
    nodes[a1.exit] = replace(e1, lam=lam, kappa=normalize(kappa))
    edges = list(a1.edges)
    seen_keys = {(e.src, stmt_norm_key(e.stmt), e.dst) for e in edges}
    for e in a2.edges:
        if e.src in prefix2 and e.dst in prefix2:
            continue  # shared prefix edge
        ne = replace(e, src=remap2[e.src], dst=remap2[e.dst])
        key = (ne.src, stmt_norm_key(ne.stmt), ne.dst)
        if key not in seen_keys:
            seen_keys.add(key)
            edges.append(ne)
    return FailureAutomaton(
        nodes=nodes, edges=edges, entry=a1.entry, exit=a1.exit,
        vdet=a1.vdet & a2.vdet, inputs=a1.inputs,
    ).renumbered()


# ---------------------------------------------------------------------------
# generalize


class GeneralizeError(Exception):
    pass


def generalize(
    a: FailureAutomaton, q_i: int, q_j: int, st: prog.Stmt, logic,
    axiom: AxiomInstance | None = None, typing: Term = TRUE,
) -> FailureAutomaton:
    """Add an edge q_i --st--> q_j when its triple is valid; the language
    grows and well-labeledness is preserved."""
    ni, nj = a.node(q_i), a.node(q_j)
    edge = FAEdge(q_i, st, q_j, axiom)
    for cond, phi in edge_obligations(ni.lam, ni.kappa, edge, nj.lam, nj.kappa, typing):
        r = logic.check_validity(phi, name=f"generalize-{cond}")
        if not r.is_valid:
            raise GeneralizeError(f"side condition {cond} not valid ({r.verdict})")
    return FailureAutomaton(
        nodes=dict(a.nodes), edges=list(a.edges) + [edge],
        entry=a.entry, exit=a.exit, vdet=a.vdet, inputs=a.inputs,
    )


# ---------------------------------------------------------------------------
# language operations


def enumerate_words(a: FailureAutomaton, max_len: int) -> set[tuple]:
    """All accepted statement words of length <= max_len (normalized keys)."""
    out: set[tuple] = set()

    def dfs(n: int, word: tuple):
        if n == a.exit:
            out.add(word)
        if len(word) >= max_len:
            return
        for e in a.out_edges(n):
            dfs(e.dst, word + (stmt_norm_key(e.stmt),))

    dfs(a.entry, ())
    return out


def includes(cfa, automata: list[FailureAutomaton]) -> tuple[bool, list | None]:
    """Decide L(P) subseteq union L(A_i) by the product of P with the
    determinized union; returns a shortest missing trace on failure."""
    # NFA over normalized statement keys
    nfa_edges: dict[int, list[tuple]] = {}
    accepts: set[int] = set()
    starts: frozenset[int] = frozenset()
    base = 0
    start_set = set()
    for a in automata:
        remap = {n: base + i for i, n in enumerate(sorted(a.nodes))}
        for e in a.edges:
            nfa_edges.setdefault(remap[e.src], []).append(
                (stmt_norm_key(e.stmt), remap[e.dst])
            )
        accepts.add(remap[a.exit])
        start_set.add(remap[a.entry])
        base += len(a.nodes)
    starts = frozenset(start_set)

    from collections import deque

    init = (cfa.entry, starts)
    seen = {init}
    queue = deque([(init, [])])
    while queue:
        (pnode, aset), path = queue.popleft()
        if pnode == cfa.exit and not (aset & accepts):
            return False, path
        for e in cfa.out_edges(pnode):
            key = stmt_norm_key(e.stmt)
            nxt = frozenset(
                d for s in aset for (k, d) in nfa_edges.get(s, ()) if k == key
            )
            state = (e.dst, nxt)
            if state not in seen:
                seen.add(state)
                queue.append((state, path + [e.stmt]))
    return True, None


# ---------------------------------------------------------------------------
# the final proof-rule conditions


def check_correct(
    cfa, spec_ctx, automata: list[FailureAutomaton], logic,
) -> CheckReport:
    rep = CheckReport()
    ok, missing = includes(cfa, automata)
    rep.add(
        "program", "trace-inclusion", "valid" if ok else "failed",
        "" if ok else "missing: " + "; ".join(str(s) for s in missing),
    )
    ambient = And((spec_ctx.typing, spec_ctx.pre))
    for idx, a in enumerate(automata):
        r = logic.check_validity(Implies(ambient, a.node(a.entry).lam))
        rep.add(f"automaton {idx}", "precondition-inclusion",
                "valid" if r.is_valid else r.verdict)
        r = logic.check_validity(
            Implies(And((spec_ctx.typing, a.node(a.exit).lam)), spec_ctx.post)
        )
        rep.add(f"automaton {idx}", "postcondition-inclusion",
                "valid" if r.is_valid else r.verdict)
    if automata:
        total = normalize(Add(tuple(a.node(a.exit).kappa for a in automata)))
        r = logic.check_validity(Implies(ambient, Cmp("<=", total, spec_ctx.beta)))
        rep.add(
            "program", "failure-probability-bound",
            "valid" if r.is_valid else r.verdict,
            f"{to_text(total)} <= {to_text(spec_ctx.beta)}",
        )
    else:
        rep.add("program", "failure-probability-bound", "failed", "no automata")
    return rep
