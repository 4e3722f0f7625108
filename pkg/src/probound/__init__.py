"""probound: accuracy proofs for probabilistic imperative programs.

Builds failure automata over program traces, discharges their obligations
through an SMT solver after synthesizing distribution axioms, and
cross-checks every proof against a seeded Monte Carlo oracle.
"""

__version__ = "0.1.0"
