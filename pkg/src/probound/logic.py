"""Validity and satisfiability checking on top of the solver sessions.

Validity: negate, abstract nonlinear operations, strengthen with theorem
instances, and ask for unsat. Unknown and timeout are distinct non-valid
verdicts and never promoted to valid. Results are memoized on the
normalized formula, so repeated obligations (Houdini passes, certificate
re-checks) cost one solver call."""

from __future__ import annotations

from dataclasses import dataclass

from .smtlib import Emitter, mangle
from .solver import SolverConfig, SolverManager, SolverVerdict
from .terms import Implies, Not, Sort, Term, TRUE, conj, normalize
from .theorems import TheoremSchema, instantiate_theorems, shipped_schemas

VALID = "valid"
INVALID = "invalid"
UNKNOWN = "unknown"
TIMEOUT = "timeout"


@dataclass(frozen=True)
class ValidityResult:
    verdict: str
    ti: int = 0  # theorem instances shipped with the query

    @property
    def is_valid(self) -> bool:
        return self.verdict == VALID


class Logic:
    def __init__(
        self,
        manager: SolverManager | None = None,
        theorem_size: int = 1,
        schemas: tuple[TheoremSchema, ...] | None = None,
    ):
        self.manager = manager or SolverManager(SolverConfig())
        self.theorem_size = theorem_size
        self.schemas = schemas if schemas is not None else shipped_schemas()
        self._validity_cache: dict = {}
        self.queries = 0
        self.max_ti = 0

    # --- validity

    def check_validity(
        self, phi: Term, hyps: tuple = (), timeout_ms: int | None = None,
        name: str = "validity",
    ) -> ValidityResult:
        goal = normalize(Implies(conj(list(hyps)), phi) if hyps else phi)
        key = (goal, self.theorem_size)
        hit = self._validity_cache.get(key)
        if hit is not None:
            return hit
        if goal == TRUE:
            res = ValidityResult(VALID, 0)
            self._validity_cache[key] = res
            return res
        theorems, ti = instantiate_theorems(goal, self.theorem_size, self.schemas)
        self.max_ti = max(self.max_ti, ti)
        self.queries += 1
        em = Emitter(abstract_nonlinear=True)
        neg = em.emit(normalize(Not(goal)))
        thy_asserts = emit_asserts(em, theorems)
        sess = self.manager.session(name)
        try:
            sess.add(*em.declarations())
            if thy_asserts:
                sess.add(thy_asserts)
            sess.add(f"(assert {neg})")
            v = sess.check(timeout_ms)
        finally:
            sess.close()
        if v.kind == "unknown" and "missing verdict" in v.reason:
            v = SolverVerdict("timeout", reason=v.reason)
        verdict = {
            "unsat": VALID, "sat": INVALID, "unknown": UNKNOWN, "timeout": TIMEOUT,
        }[v.kind]
        res = ValidityResult(verdict, ti)
        if verdict in (VALID, INVALID):
            self._validity_cache[key] = res
        return res

    # --- satisfiability / models

    def get_model(
        self, phi: Term, symbols: tuple = (), timeout_ms: int | None = None,
        name: str = "model",
    ) -> SolverVerdict:
        """Concrete-theory satisfiability; on sat, a model for the requested
        symbols (terms of scalar sort)."""
        self.queries += 1
        em = Emitter(abstract_nonlinear=False)
        body = em.emit(normalize(phi))
        wanted = [em.emit(s) for s in symbols]
        sess = self.manager.session(name)
        try:
            sess.add(*em.declarations())
            sess.add(f"(assert {body})")
            v, values = sess.check_with_values(wanted, timeout_ms)
            if v.kind != "sat":
                return v
        finally:
            sess.close()
        model = {}
        for s, key in zip(symbols, wanted):
            if key in values:
                model[_model_key(s)] = values[key]
        return SolverVerdict("sat", model=model)


def emit_asserts(em: Emitter, phi: Term) -> str:
    """Emit a formula as one assert per top-level conjunct (long sessions
    stream better through the solver pipe that way)."""
    from .terms import And

    if phi == TRUE:
        return ""
    parts = phi.args if isinstance(phi, And) else (phi,)
    return " ".join(f"(assert {em.emit(p)})" for p in parts)


def _model_key(s: Term):
    from .terms import ArrayLen, Var

    match s:
        case Var(name, _):
            return name
        case ArrayLen(arr):
            return f"len({arr})"
    return mangle(str(s))
