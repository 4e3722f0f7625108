import math
import random

import pytest

from probound import prog
from probound.axioms import (
    Candidate, check_side_condition, enumerate_candidates, instantiate,
    support_fact, term_size,
)
from probound.logic import Logic
from probound.parser import parse_formula, parse_program
from probound.solver import SolverConfig, SolverManager
from probound.terms import (
    Div, Lit, Sort, Var, eval_term, normalize, to_text,
)
from fractions import Fraction

from conftest import corpus_source


@pytest.fixture(scope="module")
def logic():
    lg = Logic(SolverManager(SolverConfig(timeout_ms=15000)))
    yield lg
    lg.manager.close()


ENV = {"p": Sort.REAL, "eps": Sort.REAL, "q": Sort.ARRAY, "i": Sort.INT,
       "priv": Sort.INT, "v": Sort.INT}


def lap_stmt():
    return prog.DistExpr("lap", args=(parse_formula("q[i]", ENV), parse_formula("1 / eps", ENV)))


def test_instantiate_laplace_shape():
    inst = instantiate("s1", lap_stmt(), parse_formula("p", ENV))
    v = Var("v", Sort.INT)
    phi = inst.phi_ax(lap_stmt().args, v)
    # bad event: |v - q[i]| > (1/eps) * log(2/p), carrying failure mass p
    want = parse_formula("abs(v - q[i]) > 1 / eps * log(2 / p)", ENV)
    assert normalize(phi) == normalize(want)
    assert normalize(inst.e_ub) == Var("p", Sort.REAL)
    assert to_text(inst.side_condition) == "0.0 < p and p <= 1.0"


def test_bern_case3_is_free():
    d = prog.DistExpr("bern", args=(Lit(Fraction(1, 2)),))
    inst = instantiate("s1", d, 3)
    from probound.terms import FALSE

    assert inst.phi_ax(d.args, Var("v", Sort.BOOL)) == FALSE
    assert inst.e_ub == Lit(Fraction(0))


def test_uniform_subset_quarter(logic):
    support = tuple((a, b) for a in (0, 1) for b in (0, 1))
    d = prog.DistExpr("unif", support=support)
    pred = parse_formula("fst(u) = 0 and snd(u) != priv", dict(ENV, u=Sort.PAIR))
    from probound.terms import subst

    pred = subst(pred, {"u": Var("@u", Sort.PAIR)})
    pre = parse_formula("0 <= priv and priv <= 1", ENV)
    inst = instantiate("s1", d, pred, logic=logic, pre=pre)
    assert inst.e_ub == Lit(Fraction(1, 4))


def test_enumerate_bern_cases():
    d = prog.DistExpr("bern", args=(Lit(Fraction(1, 2)),))
    cs = enumerate_candidates("s", d, (), 3)
    assert [c.param for c in cs] == [1, 2, 3]


def test_enumerate_arithmetic_stream():
    d = prog.DistExpr("lap", args=(Lit(0), Lit(Fraction(1))))
    cs = enumerate_candidates("s", d, (("p", "prob"), ("n", "int")), 2)
    texts = [to_text(c.param) if not isinstance(c.param, int) else c.param for c in cs]
    assert texts[:6] == ["p", "n", "1", "2", "3", "4"]
    assert "p / n" in texts and "p * n" in texts and "p + n" in texts


@pytest.mark.parametrize("inputs", [(("p", "prob"),), (("p", "prob"), ("q", "intarray"))])
def test_streams_duplicate_free_and_size_monotone(inputs):
    d = prog.DistExpr("lap", args=(Lit(0), Lit(Fraction(1))))
    cs = enumerate_candidates("s", d, inputs, 4)
    sizes = [c.size for c in cs]
    assert sizes == sorted(sizes)
    normed = [normalize(c.param) for c in cs]
    assert len(set(normed)) == len(normed)
    assert all(term_size(c.param) == c.size for c in cs)


def test_winner_p_over_len_is_reachable():
    d = prog.DistExpr("lap", args=(Lit(0), Lit(Fraction(1))))
    cs = enumerate_candidates("s", d, (("q", "intarray"), ("p", "prob")), 2)
    texts = [to_text(c.param) for c in cs]
    assert "p / len(q)" in texts


def test_side_conditions(logic):
    p_prob = parse_formula("0 < p and p <= 1", ENV)
    d = lap_stmt()
    ok = instantiate("s", d, parse_formula("p", ENV))
    assert check_side_condition(ok, p_prob, logic)
    over = instantiate("s", d, Lit(Fraction(2)))
    assert not check_side_condition(over, p_prob, logic)
    scaled = instantiate("s", d, parse_formula("p / len(q)", ENV))
    pre = parse_formula("0 < p and p <= 1 and len(q) >= 1", ENV)
    assert check_side_condition(scaled, pre, logic)


def test_instantiate_is_referentially_transparent():
    a = instantiate("s", lap_stmt(), parse_formula("p", ENV))
    b = instantiate("s", lap_stmt(), parse_formula("p", ENV))
    assert a == b


def _phi_holds_lap(v, m, radius):
    return abs(v - m) > radius


@pytest.mark.parametrize("kind", ["bern", "unif", "lap", "exp"])
def test_empirical_axiom_soundness_smoke(kind):
    """Light version of the acceptance-gate property: random valid
    parameterizations never exceed their failure budget empirically."""
    _empirical_axiom_check(kind, params=8, draws=20_000, seed=13)


def _empirical_axiom_check(kind, params, draws, seed):
    from probound.interp import sample_dist

    rng = random.Random(seed)
    for trial in range(params):
        if kind == "bern":
            e = rng.random()
            case = rng.choice([1, 2, 3])
            d = prog.DistExpr("bern", args=(Lit(Fraction(str(round(e, 6)))),))
            inst = instantiate("s", d, case)
            e_ub = float(eval_term(inst.e_ub, {}))
            hit = 0
            for _ in range(draws):
                v = sample_dist(d, {}, rng)
                if case == 1:
                    hit += not v
                elif case == 2:
                    hit += v
            _assert_within(hit, draws, e_ub, f"bern case {case} e={e}")
        elif kind == "unif":
            support = tuple(range(rng.randrange(2, 9)))
            k = rng.randrange(0, len(support) + 1)
            subset = set(rng.sample(support, k))
            d = prog.DistExpr("unif", support=support)
            e_ub = len(subset) / len(support)
            hit = sum(sample_dist(d, {}, rng) in subset for _ in range(draws))
            _assert_within(hit, draws, e_ub, f"unif |S|={k}/{len(support)}")
        else:
            m = rng.randrange(-50, 50)
            b = rng.uniform(0.5, 5.0)
            f = rng.uniform(0.02, 1.0)
            radius = b * math.log(2.0 / f)
            d = prog.DistExpr(kind, args=(Lit(m), Lit(Fraction(str(round(b, 6))))))
            hit = 0
            for _ in range(draws):
                v = sample_dist(d, {}, rng)
                if kind == "lap":
                    hit += abs(v - m) > radius
                else:
                    hit += v < m or v - m > radius
            _assert_within(hit, draws, f, f"{kind} b={b:.3f} f={f:.3f}")


def _assert_within(hit, draws, e_ub, what):
    rate = hit / draws
    stderr = math.sqrt(max(rate * (1 - rate), 1e-12) / draws)
    assert rate <= e_ub + 3 * stderr, f"{what}: {rate} > {e_ub} + 3se"


def test_support_fact_enumerates_pairs():
    d = prog.DistExpr("unif", support=((0, 0), (0, 1), (1, 0), (1, 1)))
    fact = support_fact(d, Var("r", Sort.PAIR))
    assert to_text(fact).count("or") == 3
