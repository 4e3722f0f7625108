"""Propose-and-check search for axiom parameters.

Candidate tuples are tried in increasing maximal term size (lexicographic
within a layer); each proposal is first screened by the family side
condition and a concrete-valuation budget refutation (the trace's summed
failure mass must not exceed beta anywhere), then the conjunction of all
trace VCs with the parameters substituted goes to the validity checker.
Unknown and timeout verdicts count as candidate failure."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from . import axioms as ax_mod
from . import prog
from .encoding import SpecContext, SsaTrace, encode_general, encode_simplified
from .terms import And, Term, TRUE, conj, eval_term, normalize


class SynthesisExhausted(Exception):
    pass


class SynthesisBudgetExceeded(Exception):
    pass


@dataclass
class TraceJob:
    ssa: SsaTrace
    kind: str  # "general" | "simplified"
    samples: dict  # position -> static statement id
    dists: dict  # position -> DistExpr


@dataclass
class SynthesisProblem:
    spec: SpecContext
    traces: list[TraceJob]
    spaces: dict  # static id -> list[axioms.Candidate], stream order
    inputs: tuple  # program input declarations
    proposals_cap: int = 5000
    check_timeout_ms: int | None = None


@dataclass
class SynthesisResult:
    assignment: dict  # static id -> chosen parameter
    instances: dict  # static id -> AxiomInstance (statement-shaped)
    proposed: int  # PA: well-typed proposals that reached checking
    rejected_side_condition: int
    theorem_instances: int  # TI: largest instantiation among the checks
    wall_time: float


def tuple_order(spaces: list[list]) -> "iterator":
    """Index tuples ordered by the maximum component size, then
    lexicographically by per-space index."""
    if not spaces:
        yield ()
        return
    sizes = [[c.size for c in sp] for sp in spaces]
    max_size = max((max(s) for s in sizes if s), default=1)
    for layer in range(1, max_size + 1):
        def rec(k: int, cur: tuple, cur_max: int):
            if k == len(spaces):
                if cur_max == layer:
                    yield cur
                return
            for idx, c in enumerate(spaces[k]):
                if c.size <= layer:
                    yield from rec(k + 1, cur + (idx,), max(cur_max, c.size))
        yield from rec(0, (), 0)


def _sample_valuations(problem: SynthesisProblem, logic) -> list[dict]:
    """Concrete input environments satisfying the ambient assumptions, used
    for the cheap budget refutation."""
    from .terms import ArrayLen, Cmp, Lit, Sort, Var

    ambient = And((problem.spec.typing, problem.spec.pre))
    outs = []
    for size in (2, 3):
        constraints = [ambient]
        symbols = []
        for name, ty in problem.inputs:
            sort = prog.SURFACE_SORTS[ty]
            if sort == Sort.ARRAY:
                constraints.append(Cmp("=", ArrayLen(name), Lit(size)))
            elif sort in (Sort.INT, Sort.REAL):
                symbols.append(Var(name, sort))
        v = logic.get_model(conj(constraints), tuple(symbols), name="synth-valuation")
        if not v.is_sat:
            continue
        env = {}
        for name, ty in problem.inputs:
            sort = prog.SURFACE_SORTS[ty]
            if sort == Sort.ARRAY:
                env[name] = [0] * size
            elif name in (v.model or {}):
                val = v.model[name]
                env[name] = float(val) if sort == Sort.REAL else int(val)
            elif sort == Sort.REAL:
                env[name] = 0.5
            elif sort == Sort.INT:
                env[name] = 1
            else:
                env[name] = False
        outs.append(env)
    return outs


def _budget_refuted(problem, jobs_eubs, beta, env) -> bool:
    try:
        bound = eval_term(beta, env)
    except Exception:
        return False
    for eubs in jobs_eubs:
        total = 0.0
        try:
            for e in eubs:
                total += eval_term(e, env)
        except Exception:
            return False
        if total > bound + 1e-9:
            return True
    return False


def solve(problem: SynthesisProblem, logic) -> SynthesisResult:
    t0 = time.monotonic()
    sids = sorted(problem.spaces)
    spaces = [problem.spaces[s] for s in sids]
    if any(not sp for sp in spaces):
        raise SynthesisExhausted("a sampling statement has no candidates")
    valuations = _sample_valuations(problem, logic)
    ti_before = logic.max_ti

    side_cache: dict = {}
    inst_cache: dict = {}
    ambient_pre = And((problem.spec.typing, problem.spec.pre))

    def instance_for(sid: str, cand) -> ax_mod.AxiomInstance | None:
        key = (sid, cand.param if isinstance(cand.param, int) else normalize(cand.param))
        if key in inst_cache:
            return inst_cache[key]
        d = _dist_of(problem, sid)
        inst = ax_mod.instantiate(sid, d, cand.param, logic=logic, pre=ambient_pre)
        ok = True
        if inst.side_condition != TRUE:
            ok = logic.check_validity(
                inst.side_condition, hyps=(ambient_pre,), name="side-condition"
            ).is_valid
        inst_cache[key] = inst if ok else None
        return inst_cache[key]

    proposed = 0
    rejected_side = 0
    for combo in tuple_order(spaces):
        instances = {}
        ok = True
        for sid, idx in zip(sids, combo):
            inst = instance_for(sid, problem.spaces[sid][idx])
            if inst is None:
                ok = False
                break
            instances[sid] = inst
        if not ok:
            rejected_side += 1
            continue
        if proposed >= problem.proposals_cap:
            raise SynthesisBudgetExceeded(
                f"proposal cap {problem.proposals_cap} reached (PA={proposed})"
            )
        proposed += 1
        # cheap refutation: summed failure mass must stay under beta
        jobs_eubs = [
            [instances[job.samples[pos]].e_ub for pos in sorted(job.samples)]
            for job in problem.traces
        ]
        if any(
            _budget_refuted(problem, jobs_eubs, problem.spec.beta, env)
            for env in valuations
        ):
            continue
        vcs = []
        for job in problem.traces:
            per_pos = {pos: instances[sid] for pos, sid in job.samples.items()}
            enc = encode_general if job.kind == "general" else encode_simplified
            vcs.append(enc(job.ssa, problem.spec, per_pos))
        joint = conj([vc.formula for vc in vcs])
        r = logic.check_validity(
            joint, timeout_ms=problem.check_timeout_ms, name="synthesis"
        )
        if r.is_valid:
            assignment = {
                sid: problem.spaces[sid][idx].param for sid, idx in zip(sids, combo)
            }
            return SynthesisResult(
                assignment=assignment, instances=instances, proposed=proposed,
                rejected_side_condition=rejected_side,
                theorem_instances=logic.max_ti,
                wall_time=time.monotonic() - t0,
            )
    raise SynthesisExhausted(
        f"no parameter tuple validates all trace VCs (PA={proposed})"
    )


def _dist_of(problem: SynthesisProblem, sid: str) -> prog.DistExpr:
    for job in problem.traces:
        for pos, s in job.samples.items():
            if s == sid:
                return job.dists[pos]
    raise KeyError(sid)
