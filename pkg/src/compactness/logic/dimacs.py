"""DIMACS CNF and JSON model serialization."""

from __future__ import annotations

import json
from collections.abc import Hashable, Mapping

from .cnf import ClauseSet, clause_set


def label_str(label: Hashable) -> str:
    """Stable textual form of a variable label, e.g. ``matched(m1,w2)``."""
    if isinstance(label, tuple) and label and isinstance(label[0], str):
        return f"{label[0]}({','.join(label_str(x) for x in label[1:])})"
    if isinstance(label, tuple):
        return "(" + ",".join(label_str(x) for x in label) + ")"
    return str(label)


def to_dimacs(cs: ClauseSet) -> str:
    lines = [f"c {i} {label_str(lab)}" for i, lab in enumerate(cs.labels, 1)]
    lines.append(f"p cnf {cs.num_vars} {len(cs.clauses)}")
    lines.extend(" ".join(map(str, c)) + " 0" for c in cs.clauses)
    return "\n".join(lines) + "\n"


def from_dimacs(text: str) -> ClauseSet:
    """Parse DIMACS text; comment lines of the form ``c <index> <label>`` restore labels."""
    names: dict[int, str] = {}
    nvars = None
    clauses: list[list[int]] = []
    cur: list[int] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c"):
            parts = line.split(maxsplit=2)
            if len(parts) == 3 and parts[1].isdigit():
                names[int(parts[1])] = parts[2]
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"bad header: {line!r}")
            nvars = int(parts[2])
            continue
        for tok in line.split():
            l = int(tok)
            if l == 0:
                clauses.append(cur)
                cur = []
            else:
                cur.append(l)
    if cur:
        clauses.append(cur)
    if nvars is None:
        raise ValueError("missing 'p cnf' header")
    labels = [names.get(i, i) for i in range(1, nvars + 1)]
    return clause_set(clauses, labels)


def model_to_json(model: Mapping, indent: int | None = 2) -> str:
    return json.dumps({label_str(k): bool(v) for k, v in model.items()}, indent=indent, sort_keys=False)
