"""IF-THEN rule sets: representation, inference and the text format.

Text format, one rule per line after the ``#`` header lines::

    # rules v1
    # schema 9d5cf038da827a0f
    # actions NOOP,UP,DOWN
    # features POSITION_X(player1);POSITION_Y(player1);...
    # default NOOP
    IF (DISTANCE(player1,ball1) > 0.5200) AND (SPEED(ball1) <= 0.0110) THEN UP [conf=0.9312]

Numbers print with four decimals whenever that is exact, otherwise with the
shortest representation that round-trips.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

Term = tuple[int, str, float]  # (feature index, ">" or "<=", threshold)


def fmt_number(v: float) -> str:
    short = f"{v:.4f}"
    return short if float(short) == v else repr(float(v))


@dataclass(frozen=True)
class Rule:
    premise: tuple[Term, ...]
    conclusion: int
    confidence: float
    coverage: int = field(default=0, compare=False)  # rows of the distillation set satisfying the premise

    def holds(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        mask = np.ones(len(X), dtype=bool)
        for f, op, v in self.premise:
            mask &= X[:, f] > v if op == ">" else X[:, f] <= v
        return mask


def sort_rules(rules: Sequence[Rule]) -> list[Rule]:
    return sorted(rules, key=lambda r: (-r.confidence, r.premise, r.conclusion))


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...]
    default_action: int
    feature_names: tuple[str, ...]
    action_names: tuple[str, ...]
    schema_digest: str = ""

    def __post_init__(self):
        for r in self.rules:
            if not 0 <= r.conclusion < len(self.action_names):
                raise ValueError(f"rule conclusion {r.conclusion} outside the action set")
            if any(not 0 <= f < len(self.feature_names) for f, _, _ in r.premise):
                raise ValueError("rule references a feature outside the schema")
        if list(self.rules) != sort_rules(self.rules):
            object.__setattr__(self, "rules", tuple(sort_rules(self.rules)))

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Conclusion of the most confident satisfied rule per row; default otherwise."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.full(len(X), self.default_action, dtype=np.int64)
        open_rows = np.ones(len(X), dtype=bool)
        for r in self.rules:
            if not open_rows.any():
                break
            hit = open_rows & r.holds(X)
            out[hit] = r.conclusion
            open_rows &= ~hit
        return out

    def format_rule(self, r: Rule) -> str:
        terms = " AND ".join(f"({self.feature_names[f]} {op} {fmt_number(v)})" for f, op, v in r.premise)
        return f"IF {terms} THEN {self.action_names[r.conclusion]} [conf={fmt_number(r.confidence)}]"

    def to_text(self) -> str:
        lines = [
            "# rules v1",
            f"# schema {self.schema_digest}",
            f"# actions {','.join(self.action_names)}",
            f"# features {';'.join(self.feature_names)}",
            f"# default {self.action_names[self.default_action]}",
        ]
        lines += [self.format_rule(r) for r in self.rules]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RuleSet":
        header: dict[str, str] = {}
        body = []
        for line in text.splitlines():
            if line.startswith("# "):
                key, _, value = line[2:].partition(" ")
                header[key] = value
            elif line.strip():
                body.append(line)
        try:
            actions = tuple(header["actions"].split(","))
            features = tuple(header["features"].split(";")) if header["features"] else ()
            default = actions.index(header["default"])
        except (KeyError, ValueError) as exc:
            raise ValueError(f"malformed rule file header: {exc}") from None
        feat_index = {name: i for i, name in enumerate(features)}
        rules = [_parse_rule(line, feat_index, actions) for line in body]
        return cls(tuple(rules), default, features, actions, header.get("schema", ""))


_RULE_RE = re.compile(r"^IF (?P<terms>.*) THEN (?P<action>\S+) \[conf=(?P<conf>[^\]]+)\]$")
_TERM_RE = re.compile(r"^\((?P<name>.+) (?P<op>>|<=) (?P<value>\S+)\)$")


def _parse_rule(line: str, feat_index: dict[str, int], actions: tuple[str, ...]) -> Rule:
    m = _RULE_RE.match(line.strip())
    if not m:
        raise ValueError(f"malformed rule line {line!r}")
    terms = []
    for part in m.group("terms").split(" AND "):
        t = _TERM_RE.match(part)
        if not t or t.group("name") not in feat_index:
            raise ValueError(f"malformed term {part!r} in {line!r}")
        terms.append((feat_index[t.group("name")], t.group("op"), float(t.group("value"))))
    return Rule(tuple(terms), actions.index(m.group("action")), float(m.group("conf")))


def rule_inference(rs: RuleSet, x: np.ndarray) -> int:
    return int(rs.predict(np.asarray(x)[None, :])[0])
