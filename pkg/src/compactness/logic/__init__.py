"""Propositional logic substrate: formulas, CNF conversion and a CDCL solver."""

from .cnf import Aux, ClauseSet, Registry, clause_set, is_aux, to_cnf
from .dimacs import from_dimacs, label_str, model_to_json, to_dimacs
from .formula import (
    And,
    Atom,
    Formula,
    Iff,
    Implies,
    Not,
    Or,
    UnassignedAtom,
    at_most_one,
    evaluate,
    implies_any,
)
from .solver import Model, Solver, count_models, enumerate_models, solve


def solve_formulas(formulas, registry: Registry | None = None) -> Model | None:
    """Convert and solve; returns the model restricted to source variables, or None."""
    m = solve(to_cnf(formulas, registry))
    return None if m is None else m.source()


__all__ = [
    "And", "Atom", "Aux", "ClauseSet", "Formula", "Iff", "Implies", "Model", "Not", "Or",
    "Registry", "Solver", "UnassignedAtom", "at_most_one", "clause_set", "count_models",
    "enumerate_models", "evaluate", "from_dimacs", "implies_any", "is_aux", "label_str",
    "model_to_json", "solve", "solve_formulas", "to_cnf", "to_dimacs",
]
