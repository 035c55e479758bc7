"""Brute-force reference solver: enumerate the box, filter, minimize.

Slow by design. It exists so that everything the search engine reports can
be cross-checked on small instances, including the theory part: a point
counts as feasible only if the linear rows hold and some interpretation of
the declared functions agrees with every interface atom.
"""
from __future__ import annotations

from dataclasses import dataclass

from .euf import functional_consistency
from .model import ImtError, ImtInstance, Var

DEFAULT_POINT_LIMIT = 2_000_000


class BoxTooLarge(ImtError):
    """Enumeration would be unbounded or past the point limit."""


@dataclass(frozen=True)
class OracleResult:
    status: str  # "optimal" | "infeasible"
    value: int | None
    assignment: dict[Var, int] | None
    feasible_count: int


def brute_force_solve(
    instance: ImtInstance, point_limit: int = DEFAULT_POINT_LIMIT
) -> OracleResult:
    """Scan every integer point of the box; smallest objective wins, then
    the lexicographically smallest assignment over sorted variable names."""
    names = sorted(instance.vars)
    volume = instance.bounds.volume(names)
    if volume is None:
        raise BoxTooLarge("some variable has no finite box to enumerate")
    if volume > point_limit:
        raise BoxTooLarge(f"box holds {volume} points, limit is {point_limit}")

    # precompile rows to (coeff vector over names, relation, rhs) for speed
    index = {v: i for i, v in enumerate(names)}
    compiled = []
    for c in instance.constraints:
        vec = [0] * len(names)
        for v, k in c.lhs.terms:
            vec[index[v]] = k
        compiled.append((vec, c.rel, c.rhs))
    obj_vec = [0] * len(names)
    for v, k in instance.objective.terms:
        obj_vec[index[v]] = k

    atoms = tuple(instance.atoms)
    best_value: int | None = None
    best_point: tuple[int, ...] | None = None
    feasible = 0
    for point in instance.bounds.iter_box(names):
        vals = tuple(point[v] for v in names)
        ok = True
        for vec, rel, rhs in compiled:
            s = sum(a * b for a, b in zip(vec, vals))
            if rel.value == "<=":
                ok = s <= rhs
            elif rel.value == ">=":
                ok = s >= rhs
            elif rel.value == "=":
                ok = s == rhs
            elif rel.value == "<":
                ok = s < rhs
            else:
                ok = s > rhs
            if not ok:
                break
        if not ok:
            continue
        if atoms and not functional_consistency(atoms, point):
            continue
        feasible += 1
        value = sum(a * b for a, b in zip(obj_vec, vals))
        if best_value is None or value < best_value or (value == best_value and vals < best_point):
            best_value, best_point = value, vals

    if best_point is None:
        return OracleResult("infeasible", None, None, 0)
    return OracleResult("optimal", best_value, dict(zip(names, best_point)), feasible)
