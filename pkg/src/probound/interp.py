"""Concrete executable semantics and the Monte Carlo failure estimator.

Samplers realize the distribution table exactly: the discrete Laplace is the
difference of two i.i.d. geometric(1 - e^{-1/b}) draws shifted by the mean,
the discrete (shifted) exponential a single geometric; both match the
analytic pmfs mu(c) ∝ e^{-|c-m|/b} and mu(c) ∝ e^{-(c-s)/b}."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from . import prog
from .terms import EvalError, eval_term


class InvalidParameter(Exception):
    pass


class StepBudgetExceeded(Exception):
    pass


BLOCKED = object()  # run ended on a failing assume

DEFAULT_STEP_BUDGET = 10_000_000


@dataclass(frozen=True)
class McEstimate:
    samples: int
    failures: int
    blocked: int
    rate: float
    stderr: float

    @staticmethod
    def of(samples: int, failures: int, blocked: int) -> "McEstimate":
        rate = failures / samples
        return McEstimate(
            samples, failures, blocked, rate,
            math.sqrt(rate * (1.0 - rate) / samples),
        )


def _geometric(rng: random.Random, scale: float) -> int:
    """Geometric on {0,1,2,...} with P(k) = (1-q) q^k for q = e^{-1/scale}."""
    u = 1.0 - rng.random()  # (0, 1]
    return int(math.floor(-scale * math.log(u)))


def sample_dist(d: prog.DistExpr, env: dict, rng: random.Random):
    if d.kind == "bern":
        p = eval_term(d.args[0], env)
        if not 0.0 <= p <= 1.0:
            raise InvalidParameter(f"bern parameter {p} outside [0,1]")
        return rng.random() < p
    if d.kind == "unif":
        if not d.support:
            raise InvalidParameter("unif over an empty set")
        return d.support[rng.randrange(len(d.support))]
    if d.kind == "lap":
        m = eval_term(d.args[0], env)
        b = eval_term(d.args[1], env)
        if b <= 0:
            raise InvalidParameter(f"lap scale {b} not positive")
        return int(m) + _geometric(rng, b) - _geometric(rng, b)
    if d.kind == "exp":
        s = eval_term(d.args[0], env)
        b = eval_term(d.args[1], env)
        if b <= 0:
            raise InvalidParameter(f"exp scale {b} not positive")
        return int(s) + _geometric(rng, b)
    raise TypeError(d.kind)


def lap_pmf(c: int, mean: int, scale: float) -> float:
    """Analytic discrete-Laplace pmf (normalized)."""
    q = math.exp(-1.0 / scale)
    return (1.0 - q) / (1.0 + q) * q ** abs(c - mean)


def exp_pmf(c: int, shift: int, scale: float) -> float:
    if c < shift:
        return 0.0
    q = math.exp(-1.0 / scale)
    return (1.0 - q) * q ** (c - shift)


def _write(env: dict, target: prog.Target, value):
    if target.index is None:
        env[target.name] = value
        return
    idx = eval_term(target.index, env)
    arr = env[target.name]
    if not isinstance(idx, int) or not 0 <= idx < len(arr):
        raise EvalError(
            f"array index {idx} out of bounds [0, {len(arr)}) writing {target.name}"
        )
    arr = list(arr)
    arr[idx] = value
    env[target.name] = arr


def exec_stmt(st: prog.Stmt, env: dict, rng: random.Random) -> bool:
    """Execute one basic statement in place; False means a failed assume."""
    match st:
        case prog.Assign(target, e):
            _write(env, target, eval_term(e, env))
        case prog.Sample(target, d):
            v = sample_dist(d, env, rng)
            if isinstance(v, bool) or not isinstance(v, tuple):
                _write(env, target, v)
            else:
                _write(env, target, v)
        case prog.Assume(cond):
            return bool(eval_term(cond, env))
    return True


def run_trace(stmts, s0: dict, rng: random.Random):
    """Execute a statement list; returns the final state dict or BLOCKED at
    the first failing assume. Deterministic for a fixed rng seed."""
    env = dict(s0)
    for st in stmts:
        if not exec_stmt(st, env, rng):
            return BLOCKED
    return env


def run_program(
    p: prog.Program, s0: dict, rng: random.Random,
    step_budget: int = DEFAULT_STEP_BUDGET,
):
    """Execute the structured body directly, branching on evaluated guards.
    A step budget converts runaway loops into a diagnosable error."""
    env = dict(s0)
    steps = 0

    def bump():
        nonlocal steps
        steps += 1
        if steps > step_budget:
            raise StepBudgetExceeded(f"exceeded {step_budget} statements")

    def go(b: prog.Block):
        match b:
            case prog.Basic(st):
                bump()
                exec_stmt(st, env, rng)
            case prog.Seq(blocks):
                for x in blocks:
                    go(x)
            case prog.If(cond, then, els):
                bump()
                go(then if eval_term(cond, env) else els)
            case prog.While(cond, body):
                while True:
                    bump()
                    if not eval_term(cond, env):
                        break
                    go(body)

    go(p.body)
    return env


def initial_state(p: prog.Program, inputs: dict) -> dict:
    """Build a full state from input values; locals get zero defaults."""
    env = {}
    for name, ty in p.inputs:
        if name not in inputs:
            raise EvalError(f"missing input {name!r}")
        v = inputs[name]
        if ty == "intarray" and not isinstance(v, list):
            raise EvalError(f"input {name!r} must be a list")
        if ty in ("real", "prob") and isinstance(v, int):
            v = float(v)
        env[name] = v
    defaults = {"int": 0, "real": 0.0, "prob": 0.0, "bool": False,
                "intarray": [], "pair": (0, 0)}
    for name, ty in p.locals:
        env[name] = defaults[ty]
    return env


def estimate_failure(
    p: prog.Program, s0: dict, n: int, seed: int,
    step_budget: int = DEFAULT_STEP_BUDGET,
) -> McEstimate:
    """Run the program n times; a run fails iff it terminates in a state
    violating the postcondition. Blocked runs are excluded from failures,
    matching the sub-distribution semantics."""
    if n < 1:
        raise ValueError("need at least one sample")
    rng = random.Random(seed)
    failures = blocked = 0
    for _ in range(n):
        out = run_program(p, s0, rng, step_budget)
        if out is BLOCKED:
            blocked += 1
        elif not eval_term(p.spec.post, out):
            failures += 1
    return McEstimate.of(n, failures, blocked)
