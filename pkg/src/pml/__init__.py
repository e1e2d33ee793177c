"""Many-sorted first-order logic for formalizing statutes over concrete fact bases."""

from .kernel import Signature, Theory, build_signature, check_formula, free_variables, substitute
from .parser import load_theory, parse_facts, parse_spec, render
from .semantics import build_interpretation, check_theory, evaluate
from .modelfinder import Bounds, find_model, count_models
from .blending import Morphism, pushout, translate
from .statutes import builtin_scenarios, run_scenario, sent_theory

__all__ = [
    "Bounds",
    "Morphism",
    "Signature",
    "Theory",
    "build_interpretation",
    "build_signature",
    "builtin_scenarios",
    "check_formula",
    "check_theory",
    "count_models",
    "evaluate",
    "find_model",
    "free_variables",
    "load_theory",
    "parse_facts",
    "parse_spec",
    "pushout",
    "render",
    "run_scenario",
    "sent_theory",
    "substitute",
    "translate",
]
