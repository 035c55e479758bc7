import random
from fractions import Fraction

import pytest

from imtsolver.certificates import check_bound_fix, check_cg, check_farkas, check_lb_dual
from imtsolver.kernel import rows_of
from imtsolver.lp import (
    LpInfeasible,
    LpOptimal,
    LpUnbounded,
    NoFractionalRow,
    assemble_rows,
    derive_gomory_cuts,
    lower_bound,
    lp_solve,
    propagate_bounds,
)
from imtsolver.model import (
    Bounds,
    LinConstraint,
    LinExpr,
    ObjValue,
    Relation,
    SimpleEquality,
    Subproblem,
    satisfies,
    satisfies_all,
)

from gen import random_lp_instance
from lp_oracle import vertex_optimum


def lp_parts(instance):
    return Subproblem.root(instance.constraints), instance.objective, instance.bounds


def feasible_points(instance, sub):
    for point in instance.bounds.iter_box(instance.vars):
        if satisfies_all(sub.all_rows(), point):
            yield point


def test_lp_matches_vertex_enumeration_on_random_instances():
    rng = random.Random(4001)
    optimal = infeasible = 0
    for _ in range(120):
        instance = random_lp_instance(rng)
        sub, obj, bounds = lp_parts(instance)
        have = frozenset(assemble_rows(sub, bounds, obj))
        status, value = vertex_optimum(sub, obj, bounds)
        out = lp_solve(sub, obj, bounds)
        if status == "infeasible":
            infeasible += 1
            assert isinstance(out, LpInfeasible)
            check_farkas(out.farkas, have)
        else:
            optimal += 1
            assert isinstance(out, LpOptimal)
            assert out.value == value
            assert satisfies_all(have, out.x_star)
            bound, dual = lower_bound(sub, obj, bounds)
            assert bound == ObjValue.finite(-(-value.numerator // value.denominator))
            check_lb_dual(dual, have, obj)
    # the generator must exercise both outcomes
    assert optimal > 30 and infeasible > 10


def test_lp_unbounded_reports_a_certified_ray():
    sub = Subproblem.root([LinConstraint(LinExpr.var("x"), Relation.LE, 5)])
    out = lp_solve(sub, LinExpr.var("x"), Bounds({}))
    assert isinstance(out, LpUnbounded)
    assert satisfies_all(sub.all_rows(), out.point)
    drift = sum(c * out.ray.get(v, Fraction(0)) for v, c in LinExpr.var("x").terms)
    assert drift < 0
    for row in sub.all_rows():
        along = sum(c * out.ray.get(v, Fraction(0)) for v, c in row.lhs.terms)
        if row.rel is Relation.LE:
            assert along <= 0
        elif row.rel is Relation.GE:
            assert along >= 0
        else:
            assert along == 0


def test_lp_handles_equality_only_feasible_set():
    sub = Subproblem.root(
        [LinConstraint(LinExpr.of([("x", 1), ("y", 1)]), Relation.EQ, 4)]
    )
    out = lp_solve(sub, LinExpr.var("x"), Bounds({"x": (0, 9), "y": (0, 3)}))
    assert isinstance(out, LpOptimal)
    assert out.value == 1  # y maxes at 3


def test_gomory_cut_on_known_fractional_vertices():
    cases = [
        # rows, objective, expected cut among the derived ones
        (
            [LinConstraint(LinExpr.of([("x", 2), ("y", 2)]), Relation.LE, 7)],
            LinExpr.of([("x", -1), ("y", -1)]),
            LinConstraint(LinExpr.of([("x", -1), ("y", -1)]), Relation.GE, -3),
        ),
        (
            [LinConstraint(LinExpr.of([("x", 2)]), Relation.LE, 3)],
            LinExpr.of([("x", -1)]),
            LinConstraint(LinExpr.of([("x", -1)]), Relation.GE, -1),
        ),
        (
            [LinConstraint(LinExpr.of([("x", 3), ("y", 3)]), Relation.GE, 5)],
            LinExpr.of([("x", 1), ("y", 1)]),
            LinConstraint(LinExpr.of([("x", 1), ("y", 1)]), Relation.GE, 2),
        ),
    ]
    bounds = Bounds({"x": (0, 5), "y": (0, 5)})
    for rows, obj, expected in cases:
        sub = Subproblem.root(rows)
        out = lp_solve(sub, obj, bounds)
        assert isinstance(out, LpOptimal)
        cuts = derive_gomory_cuts(out.tableau)
        assert expected in {cut for cut, _ in cuts}
        for cut, cert in cuts:
            check_cg(cert, frozenset(out.tableau.rows), cut)


def test_gomory_cuts_are_certified_and_preserve_integer_points():
    rng = random.Random(4002)
    seen = 0
    for _ in range(400):
        instance = random_lp_instance(rng)
        sub, obj, bounds = lp_parts(instance)
        out = lp_solve(sub, obj, bounds)
        if not isinstance(out, LpOptimal):
            continue
        if all(q.denominator == 1 for q in out.x_star.values()):
            with pytest.raises(NoFractionalRow):
                derive_gomory_cuts(out.tableau)
            continue
        cuts = derive_gomory_cuts(out.tableau)
        have = frozenset(out.tableau.rows)
        for cut, cert in cuts:
            seen += 1
            check_cg(cert, have, cut)
            # strictly violated at the fractional vertex
            at_star = sum(
                Fraction(c) * out.x_star.get(v, Fraction(0)) for v, c in cut.lhs.terms
            )
            assert at_star < cut.rhs
            for point in feasible_points(instance, sub):
                assert satisfies(cut, point)
    assert seen >= 15


def test_propagation_is_sound_and_certified():
    rng = random.Random(4003)
    checked = 0
    for _ in range(150):
        instance = random_lp_instance(rng, max_vars=3)
        sub, _, bounds = lp_parts(instance)
        res = propagate_bounds(sub, bounds)
        have = set(rows_of(instance, sub))
        for cut, cert in res.derived:
            check_cg(cert, frozenset(have), cut)
            have.add(cut)
        for d, fix in res.fixes:
            check_bound_fix(fix, frozenset(have), d)
        if res.farkas is not None:
            check_farkas(res.farkas, frozenset(have))
        points = list(feasible_points(instance, sub))
        if res.farkas is not None:
            assert not points
            continue
        checked += 1
        for point in points:
            for v in instance.vars:
                lo, hi = res.bounds.interval(v)
                assert lo is None or point[v] >= lo
                assert hi is None or point[v] <= hi
            for cut, _ in res.derived:
                assert satisfies(cut, point)
            for d, _ in res.fixes:
                assert satisfies(d.as_constraint(), point)
    assert checked > 50


def test_propagation_detects_emptiness_between_fractional_bounds():
    # 2x <= 1 and 2x >= 1 leave no integer x
    rows = [
        LinConstraint(LinExpr.of([("x", 2)]), Relation.LE, 1),
        LinConstraint(LinExpr.of([("x", 2)]), Relation.GE, 1),
    ]
    sub = Subproblem.root(rows)
    res = propagate_bounds(sub, Bounds({"x": (0, 3)}))
    assert res.infeasible
    # reported box is the original one, not an empty interval
    assert res.bounds.interval("x") == (0, 3)


def test_propagation_fixes_pinned_variables_and_differences():
    rows = [
        LinConstraint(LinExpr.var("x"), Relation.GE, 2),
        LinConstraint(LinExpr.var("x"), Relation.LE, 2),
        LinConstraint(LinExpr.of([("y", 1), ("z", -1)]), Relation.LE, 3),
        LinConstraint(LinExpr.of([("y", 1), ("z", -1)]), Relation.GE, 3),
    ]
    sub = Subproblem.root(rows)
    res = propagate_bounds(sub, Bounds({"x": (0, 9), "y": (0, 9), "z": (0, 9)}))
    fixed = {d for d, _ in res.fixes}
    assert SimpleEquality.fix("x", 2) in fixed
    assert SimpleEquality.diff("y", "z", 3) in fixed
