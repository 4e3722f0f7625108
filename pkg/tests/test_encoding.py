import random

import pytest

from probound import prog
from probound.axioms import instantiate
from probound.cfa import compile_cfa, enumerate_paths
from probound.encoding import (
    SpecContext, encode_general, encode_simplified, is_feasible, spec_context,
    to_ssa, trace_ssa, vc_with_free_params,
)
from probound.interp import BLOCKED, initial_state, run_trace
from probound.logic import Logic
from probound.parser import parse_formula, parse_program
from probound.solver import SolverConfig, SolverManager
from probound.terms import (
    Add, Cmp, FALSE, Lit, Sort, Store, TRUE, UFApp, Var, conj, normalize,
    subterms, to_text,
)

from conftest import corpus_source


@pytest.fixture(scope="module")
def logic():
    lg = Logic(SolverManager(SolverConfig(timeout_ms=20000)))
    yield lg
    lg.manager.close()


def paths_of(name):
    p = parse_program(corpus_source(name))
    auto = compile_cfa(p)
    return p, enumerate_paths(auto, 1)


def ex1_traces():
    p, paths = paths_of("ex1")
    then_trace = next(
        (stmts, locs) for stmts, locs in paths if "not" not in str(stmts[1])
    )
    else_trace = next(
        (stmts, locs) for stmts, locs in paths if "not" in str(stmts[1])
    )
    return p, then_trace, else_trace


def ex1_axioms(p, stmts, fx, fy):
    return {
        1: instantiate("sx", stmts[0].dist, fx),
        3: instantiate("sy", stmts[2].dist, fy),
    }


def test_to_ssa_double_assignment():
    env = {"x": Sort.INT}
    st1 = prog.Assign(prog.Target("x"), Lit(1))
    st2 = prog.Assign(prog.Target("x"), parse_formula("x + 1", env))
    ssa = to_ssa([st1, st2], var_sorts=env)
    assert ssa.name_at("x", 0) == "x"
    assert ssa.name_at("x", 1) == "x.1"
    assert ssa.name_at("x", 2) == "x.2"


def test_to_ssa_assume_only_is_identity():
    env = {"x": Sort.BOOL}
    ssa = to_ssa([prog.Assume(Var("x", Sort.BOOL))], var_sorts=env)
    assert ssa.versions[-1] == {}


def test_ex2_one_iteration_store_chain():
    p = parse_program(corpus_source("ex2"))
    auto = compile_cfa(p)
    stmts, locs = next(
        (s, l) for s, l in enumerate_paths(auto, 1) if len(s) == 6
    )
    ssa = trace_ssa(p, stmts, locs)
    ax = {4: instantiate("sa", stmts[3].dist, parse_formula("p", {"p": Sort.REAL}))}
    vc = encode_simplified(ssa, spec_context(p), ax)
    stores = [t for b in vc.blocks for t in subterms(b) if isinstance(t, Store)]
    assert stores, "array sample should become a store chain"
    # i <- 0 then i <- i + 1: two versions by the end of the iteration
    assert ssa.name_at("i", 5) == "i.2"


def test_encode_general_ex1_then_trace_valid(logic):
    p, then, _ = ex1_traces()
    stmts, locs = then
    ssa = trace_ssa(p, stmts, locs)
    ax = ex1_axioms(p, stmts, 3, 2)
    vc = encode_general(ssa, spec_context(p), ax)
    assert logic.check_validity(vc.formula).is_valid
    # omega telescopes to the sum of the used budgets
    total = conj(list(vc.blocks))
    telescoped = Cmp("=", vc.omega(len(stmts)), Var("p", Sort.REAL))
    assert logic.check_validity(telescoped, hyps=(total,)).is_valid


def test_encode_general_wrong_axiom_invalid(logic):
    p, then, _ = ex1_traces()
    stmts, locs = then
    ssa = trace_ssa(p, stmts, locs)
    vc = encode_general(ssa, spec_context(p), ex1_axioms(p, stmts, 3, 1))
    assert not logic.check_validity(vc.formula).is_valid


def test_empty_trace_blocks():
    p, _, _ = ex1_traces()
    ssa = trace_ssa(p, [])
    vc = encode_general(ssa, spec_context(p), {})
    assert len(vc.blocks) == 1
    assert "w.0" in to_text(vc.blocks[0])
    assert "h.0" in to_text(vc.blocks[0])


def test_single_assume_false_is_vacuously_valid(logic):
    p, _, _ = ex1_traces()
    ssa = trace_ssa(p, [prog.Assume(FALSE)])
    vc = encode_general(ssa, spec_context(p), {})
    assert logic.check_validity(vc.formula).is_valid


def test_simplified_matches_overview_formula(logic):
    p, then, _ = ex1_traces()
    stmts, locs = then
    ssa = trace_ssa(p, stmts, locs)
    ax = ex1_axioms(p, stmts, 3, 2)
    assert is_feasible(ssa, spec_context(p), ax, logic)
    vc = encode_simplified(ssa, spec_context(p), ax)
    assert logic.check_validity(vc.formula).is_valid
    # hypothesis pins omega_3 = p and the branch fact on the sampled x
    total = conj(list(vc.blocks))
    assert logic.check_validity(ssa.var_at("x", 3), hyps=(total,)).is_valid
    assert logic.check_validity(
        Cmp("=", vc.omega(3), Var("p", Sort.REAL)), hyps=(total,)
    ).is_valid


def test_infeasible_trace_signals_fallback(logic):
    p, _, _ = ex1_traces()
    x = Var("x", Sort.BOOL)
    from probound.terms import Not

    ssa = trace_ssa(p, [prog.Assume(x), prog.Assume(Not(x))])
    assert not is_feasible(ssa, spec_context(p), {}, logic)


def test_ex2_one_iteration_omega_increment(logic):
    p = parse_program(corpus_source("ex2"))
    auto = compile_cfa(p)
    stmts, locs = next((s, l) for s, l in enumerate_paths(auto, 1) if len(s) == 6)
    ssa = trace_ssa(p, stmts, locs)
    ax = {4: instantiate("sa", stmts[3].dist, Var("p", Sort.REAL))}
    vc = encode_simplified(ssa, spec_context(p), ax)
    # the sampling step contributes w4 = w3 + p
    inc = Cmp("=", vc.omega(4), Add((vc.omega(3), Var("p", Sort.REAL))))
    assert logic.check_validity(inc, hyps=(conj(list(vc.blocks)),)).is_valid


def test_general_and_simplified_agree_on_feasible(logic):
    p, then, _ = ex1_traces()
    stmts, locs = then
    ssa = trace_ssa(p, stmts, locs)
    for fx, fy, want in ((3, 2, True), (1, 2, False), (3, 3, False)):
        ax = ex1_axioms(p, stmts, fx, fy)
        g = logic.check_validity(encode_general(ssa, spec_context(p), ax).formula)
        s = logic.check_validity(encode_simplified(ssa, spec_context(p), ax).formula)
        assert g.is_valid == s.is_valid == want


def test_free_parameter_vc_exposes_symbols(logic):
    p, then, _ = ex1_traces()
    stmts, locs = then
    ssa = trace_ssa(p, stmts, locs)
    vc = vc_with_free_params(ssa, spec_context(p))
    syms = {t.name for b in vc.blocks for t in subterms(b) if isinstance(t, UFApp)}
    assert len(syms) == 2
    # no sampling -> no parameters, decided in one call
    ssa2 = trace_ssa(p, [prog.Assign(prog.Target("y"), FALSE)])
    vc2 = vc_with_free_params(ssa2, spec_context(p))
    assert not [t for b in vc2.blocks for t in subterms(b) if isinstance(t, UFApp)]
    assert logic.check_validity(vc2.formula).is_valid


def test_trace_monte_carlo_respects_omega(logic):
    """Desk-scale encoding soundness: per-trace failure mass is below the
    model value of omega_n."""
    p, then, els = ex1_traces()
    for stmts, locs in (then, els):
        ssa = trace_ssa(p, stmts, locs)
        ax = ex1_axioms(p, stmts, 3, 2)
        vc = encode_simplified(ssa, spec_context(p), ax)
        assert logic.check_validity(vc.formula).is_valid
        pval = 0.4
        rng = random.Random(17)
        n = 60_000
        fails = 0
        for _ in range(n):
            out = run_trace(stmts, initial_state(p, {"p": pval}), rng)
            if out is not BLOCKED and out["y"]:
                fails += 1
        omega_exact = pval if (stmts, locs) == then else 0.5 * pval
        stderr = (omega_exact * (1 - omega_exact) / n) ** 0.5
        assert fails / n <= omega_exact + 3 * stderr


def test_shared_vocabulary_tracks_liveness():
    p, then, _ = ex1_traces()
    stmts, locs = then
    ssa = trace_ssa(p, stmts, locs)
    vc = encode_general(ssa, spec_context(p), ex1_axioms(p, stmts, 3, 2))
    assert "y" in vc.shared_vocabulary(3)
    assert "p" in vc.shared_vocabulary(1)
