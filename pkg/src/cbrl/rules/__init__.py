"""Decision trees, rule sets and MLP-to-rules distillation."""

from cbrl.rules.extract import DEFAULT_SUBSTITUTION_CAP, ExtractionReport, extract_rules, fidelity, simplify
from cbrl.rules.ruleset import Rule, RuleSet, fmt_number, rule_inference, sort_rules
from cbrl.rules.tree import DEFAULT_MU, DecisionTree, Node, induce_tree

__all__ = [
    "DEFAULT_MU",
    "DEFAULT_SUBSTITUTION_CAP",
    "DecisionTree",
    "ExtractionReport",
    "Node",
    "Rule",
    "RuleSet",
    "extract_rules",
    "fidelity",
    "fmt_number",
    "induce_tree",
    "rule_inference",
    "simplify",
    "sort_rules",
]
