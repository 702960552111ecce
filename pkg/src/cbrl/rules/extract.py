"""Distil an MLP policy into an input-level rule set.

Trees are induced from each hidden layer's activations and from the raw
inputs to the teacher's greedy labels. Hidden-layer rules are rewritten in
terms of input features: every hidden term ``a[h, j] > v`` is replaced by the
input-level clauses of a tree trained to predict that term's truth value, and
the clause choices are multiplied out over the premise.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from cbrl.policy.mlp import MLP, greedy_actions, hidden_activations
from cbrl.rules.ruleset import Rule, RuleSet, Term
from cbrl.rules.tree import DEFAULT_MU, induce_tree

log = logging.getLogger(__name__)

DEFAULT_SUBSTITUTION_CAP = 512


def simplify(terms: Sequence[Term]) -> tuple[Term, ...] | None:
    """Tightest bounds per feature, sorted; None if the conjunction is unsatisfiable."""
    lower: dict[int, float] = {}
    upper: dict[int, float] = {}
    for f, op, v in terms:
        if op == ">":
            lower[f] = max(lower.get(f, -np.inf), v)
        else:
            upper[f] = min(upper.get(f, np.inf), v)
    for f in lower.keys() & upper.keys():
        if lower[f] >= upper[f]:
            return None
    out = [(f, ">", v) for f, v in lower.items()] + [(f, "<=", v) for f, v in upper.items()]
    return tuple(sorted(out))


@dataclass
class ExtractionReport:
    layer_rules: list[int] = field(default_factory=list)  # rules per source (input tree first)
    term_trees: int = 0
    dropped_for_cap: int = 0
    substitution_depth: int = 0
    pooled: int = 0


def _tree_rules(X: np.ndarray, y: np.ndarray, mu: int, n_classes: int) -> list[tuple[tuple[Term, ...], int]]:
    tree = induce_tree(X, y, mu, n_classes)
    out = []
    for terms, leaf in tree.paths():
        premise = simplify(terms)
        if premise:
            out.append((premise, leaf.label))
    return out


def extract_rules(
    net: MLP,
    X: np.ndarray,
    mu: int = DEFAULT_MU,
    feature_names: Sequence[str] | None = None,
    action_names: Sequence[str] | None = None,
    schema_digest: str = "",
    cap: int = DEFAULT_SUBSTITUTION_CAP,
    report: ExtractionReport | None = None,
) -> RuleSet:
    X = np.asarray(X, dtype=np.float64)
    report = report if report is not None else ExtractionReport()
    n_actions = net.n_actions
    teacher = greedy_actions(net, X)
    acts = hidden_activations(net, X)

    candidates: list[tuple[tuple[Term, ...], int]] = _tree_rules(X, teacher, mu, n_actions)
    report.layer_rules.append(len(candidates))

    # input-level clauses for each hidden term, keyed by (layer, unit, threshold)
    term_cache: dict[tuple[int, int, float], tuple[list, list]] = {}

    def clauses_for(layer: int, unit: int, thr: float, positive: bool) -> list[tuple[Term, ...]]:
        key = (layer, unit, thr)
        if key not in term_cache:
            truth = (acts[layer][:, unit] > thr).astype(np.int64)
            pos, neg = [], []
            if truth.min() == truth.max():
                # constant on X: the term is either always or never satisfied
                (pos if truth[0] else neg).append(())
            else:
                for premise, label in _tree_rules(X, truth, mu, 2):
                    (pos if label == 1 else neg).append(premise)
            term_cache[key] = (pos, neg)
            report.term_trees += 1
        pos, neg = term_cache[key]
        return pos if positive else neg

    # hidden terms are rewritten straight into input terms, one level deep
    report.substitution_depth = 1 if net.hidden_layers else 0
    for layer in range(net.hidden_layers):
        layer_rules = _tree_rules(acts[layer], teacher, mu, n_actions)
        report.layer_rules.append(len(layer_rules))
        for premise, label in layer_rules:
            # stop building replacement clauses as soon as the cross product passes the cap
            options, size = [], 1
            for f, op, v in premise:
                opts = clauses_for(layer, f, v, op == ">")
                options.append(opts)
                size *= len(opts)
                if size == 0 or size > cap:
                    break
            if size == 0:
                continue
            if size > cap:
                report.dropped_for_cap += 1
                log.warning("dropping layer-%d rule: substituted clauses exceed cap %d", layer, cap)
                continue
            for combo in itertools.product(*options):
                merged = simplify([t for clause in combo for t in clause])
                if merged:
                    candidates.append((merged, label))

    # confidence on X; identical premises keep their most confident conclusion
    best: dict[tuple[Term, ...], Rule] = {}
    for premise, label in candidates:
        key = premise
        mask = np.ones(len(X), dtype=bool)
        for f, op, v in premise:
            mask &= X[:, f] > v if op == ">" else X[:, f] <= v
        covered = int(mask.sum())
        if covered == 0:
            continue
        agree = int((teacher[mask] == label).sum())
        if agree == 0:
            # never right on X: it could only override a better default
            continue
        conf = agree / covered
        rule = Rule(premise, int(label), conf, covered)
        old = best.get(key)
        if old is None or (rule.confidence, -rule.conclusion) > (old.confidence, -old.conclusion):
            best[key] = rule
    report.pooled = len(best)

    default = int(np.bincount(teacher, minlength=n_actions).argmax())
    feature_names = tuple(feature_names) if feature_names is not None else tuple(f"x{i}" for i in range(X.shape[1]))
    action_names = tuple(action_names) if action_names is not None else tuple(str(a) for a in range(n_actions))
    return RuleSet(tuple(best.values()), default, feature_names, action_names, schema_digest)


def fidelity(rs: RuleSet, net: MLP, X: np.ndarray) -> float:
    X = np.asarray(X, dtype=np.float64)
    if len(X) == 0:
        raise ValueError("fidelity needs at least one state")
    return float((rs.predict(X) == greedy_actions(net, X)).mean())
