"""Collects per-clause acceptance results and folds them into one line per criterion."""
from collections import OrderedDict

TITLES = {
    1: "Bell generation",
    2: "charge entanglement after split",
    3: "polarization pulse phases",
    4: "CNOT truth table and unitary",
    5: "isometry and split/merge round trip",
    6: "Born statistics",
    7: "noise consistency",
    8: "DSL round trip",
}

_results: "OrderedDict[int, list[tuple[str, bool, str]]]" = OrderedDict()


def record(criterion, clause, ok, detail):
    _results.setdefault(criterion, []).append((clause, bool(ok), detail))
    return ok


def summary_lines():
    out = []
    for criterion in sorted(_results):
        clauses = _results[criterion]
        ok = all(c[1] for c in clauses)
        detail = "; ".join(f"{name}: {'ok' if good else 'FAILED'} ({info})" for name, good, info in clauses)
        out.append(f"{'PASS' if ok else 'FAIL'} criterion {criterion} {TITLES[criterion]}: {detail}")
    return out
