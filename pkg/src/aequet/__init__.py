"""aequet: abductive equivalential translation of logical forms.

The package takes a linguistic domain theory, rewrites source logical forms
into effectively evaluable target formulas under explicit assumptions,
evaluates them against in-memory relations, and can synthesize SQL text.
"""

from .terms import (  # noqa: F401
    And, Atom, Compound, Const, Count, Def, Eq, Equiv, Exists, FALSE, Forall,
    Form, Gen, Impl, Kw, Mismatch, Not, Or, Order, Sum, TRUE, Term, Typed,
    Unique, Var, alpha_equal, conjuncts, free_vars, mkand, mklist,
    replace_bound, subst, unify, unify_atoms,
)
from .syntax import parse_form, parse_term, print_form, print_term  # noqa: F401

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
