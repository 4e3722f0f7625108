import math
import random

import pytest

from probound import prog
from probound.interp import (
    BLOCKED, McEstimate, estimate_failure, exp_pmf, initial_state, lap_pmf,
    run_program, run_trace, sample_dist,
)
from probound.parser import parse_program
from probound.terms import Lit, TRUE, lit

from conftest import corpus_source


def dist(kind, *args, support=()):
    return prog.DistExpr(kind, args=tuple(lit(a) for a in args), support=support)


def test_bern_zero_is_always_false():
    rng = random.Random(1)
    assert not any(sample_dist(dist("bern", 0), {}, rng) for _ in range(1000))


def test_lap_center_mass_matches_analytic():
    # P(v=0 | m=0, b=1) = (1-q)/(1+q), q = e^{-1}
    rng = random.Random(7)
    n = 1_000_000
    hits = sum(sample_dist(dist("lap", 0, 1), {}, rng) == 0 for _ in range(n))
    p0 = (1 - math.exp(-1)) / (1 + math.exp(-1))
    assert p0 == pytest.approx(0.4621171572600098)
    stderr = math.sqrt(p0 * (1 - p0) / n)
    assert abs(hits / n - p0) <= 3 * stderr


def test_unif_pairs_uniform():
    rng = random.Random(3)
    support = tuple((a, b) for a in (0, 1) for b in (0, 1))
    n = 200_000
    counts = {}
    for _ in range(n):
        v = sample_dist(dist("unif", support=support), {}, rng)
        counts[v] = counts.get(v, 0) + 1
    stderr = math.sqrt(0.25 * 0.75 / n)
    for c in support:
        assert abs(counts.get(c, 0) / n - 0.25) <= 3 * stderr


@pytest.mark.parametrize(
    "kind,args,pmf",
    [
        ("lap", (3, 1.0), lambda c: lap_pmf(c, 3, 1.0)),
        ("lap", (0, 2.5), lambda c: lap_pmf(c, 0, 2.5)),
        ("exp", (-2, 1.5), lambda c: exp_pmf(c, -2, 1.5)),
    ],
)
def test_sampler_exactness_window(kind, args, pmf):
    """Empirical pmf on a 41-integer window matches the normalized analytic
    pmf within 4 standard errors per bucket, 10^6 draws."""
    rng = random.Random(11)
    n = 1_000_000
    center = args[0]
    counts = {c: 0 for c in range(center - 20, center + 21)}
    for _ in range(n):
        v = sample_dist(dist(kind, *args), {}, rng)
        if v in counts:
            counts[v] += 1
    for c, k in counts.items():
        q = pmf(c)
        stderr = math.sqrt(max(q * (1 - q), 1e-12) / n)
        assert abs(k / n - q) <= 4 * stderr, f"bucket {c}"


def test_run_trace_blocked_and_arith():
    assert run_trace([prog.Assume(Lit(False))], {}, random.Random(0)) is BLOCKED
    x = prog.Target("x")
    from probound.parser import parse_formula
    from probound.terms import Sort

    st1 = prog.Assign(x, Lit(1))
    st2 = prog.Assign(x, parse_formula("x + 1", {"x": Sort.INT}))
    out = run_trace([st1, st2], {}, random.Random(0))
    assert out["x"] == 2


def test_run_trace_ex1_then_branch():
    p = parse_program(corpus_source("ex1"))
    from probound.cfa import compile_cfa, enumerate_paths

    auto = compile_cfa(p)
    then_trace = next(
        stmts for stmts, _ in enumerate_paths(auto, 0)
        if "not" not in str(stmts[1])
    )
    # find a seed that drives x := true then y := false
    for seed in range(100):
        out = run_trace(then_trace, initial_state(p, {"p": 0.4}), random.Random(seed))
        if out is not BLOCKED and out["y"] is False:
            assert out["x"] is True
            break
    else:
        pytest.fail("no driving seed found")


def test_ex2_zero_iterations_leaves_array_untouched():
    p = parse_program(corpus_source("ex2"))
    s0 = initial_state(p, {"q": [5, 6], "n": 0, "eps": 1.0, "p": 0.5})
    out = run_program(p, s0, random.Random(0))
    assert out["a"] == []
    assert out["i"] == 0


def test_randresp_bias_three_quarters():
    p = parse_program(corpus_source("randresp"))
    s0 = initial_state(p, {"priv": 1})
    est = estimate_failure(p, s0, 100_000, seed=5)
    assert abs(est.rate - 0.25) <= 0.01
    assert est.blocked == 0


def test_seed_determinism():
    p = parse_program(corpus_source("ex1"))
    s0 = initial_state(p, {"p": 0.7})
    a = run_program(p, s0, random.Random(42))
    b = run_program(p, s0, random.Random(42))
    assert a == b
    e1 = estimate_failure(p, s0, 2000, seed=9)
    e2 = estimate_failure(p, s0, 2000, seed=9)
    assert e1 == e2


def test_ex1_failure_rate():
    # exact failure probability is 0.5p + 0.25p = 0.75p
    p = parse_program(corpus_source("ex1"))
    s0 = initial_state(p, {"p": 0.4})
    est = estimate_failure(p, s0, 100_000, seed=1)
    assert abs(est.rate - 0.30) <= 0.01


def test_trivial_postcondition_never_fails():
    p = parse_program(corpus_source("ex1"))
    p2 = prog.Program(
        p.name, p.inputs, p.locals, p.body,
        prog.AccuracySpec(p.spec.pre, TRUE, p.spec.beta), p.returns,
    )
    est = estimate_failure(p2, initial_state(p2, {"p": 0.9}), 5000, seed=2)
    assert est.failures == 0
    assert est.failures + est.blocked <= est.samples
    assert 0.0 <= est.rate <= 1.0


def test_step_budget_guards_runaway_loops():
    src = "@fail: 0\nfun f()\n  x <- 0\n  while x >= 0 do\n    x <- x + 1\n  end\nend\n"
    p = parse_program(src)
    from probound.interp import StepBudgetExceeded

    with pytest.raises(StepBudgetExceeded):
        run_program(p, initial_state(p, {}), random.Random(0), step_budget=1000)
