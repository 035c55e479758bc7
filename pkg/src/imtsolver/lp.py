"""Exact rational relaxation: simplex, dual certificates, rounding cuts, propagation.

The solver is a two-phase primal simplex with Bland's rule over exact
rationals, so it terminates on every input and its answers are never
approximate. Box bounds participate as explicit rows; lower-bound rows of
the form v >= lo are folded into column nonnegativity by shifting, and the
matching dual multiplier is read off the column's reduced cost.

Every outcome carries a certificate in the shared combination format:
infeasibility yields Farkas multipliers, optimality yields dual multipliers
reproducing the objective, and unboundedness yields a feasible point plus an
improving ray.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .certificates import (
    BoundFix,
    CGCut,
    ComboEntry,
    FarkasProof,
    LbDual,
    check_cg,
    check_farkas,
    check_lb_dual,
    identity_cut,
)
from .model import (
    Bounds,
    ImtError,
    LinConstraint,
    LinExpr,
    ObjValue,
    Relation,
    SimpleEquality,
    Subproblem,
    Var,
    frac_ceil,
    frac_floor,
    normalize,
)

try:  # fast exact rationals when available; Fraction is the reference type
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover - exercised only without gmpy2
    _Q = Fraction

_ZERO = _Q(0)
_ONE = _Q(1)


def _to_frac(q) -> Fraction:
    if isinstance(q, Fraction):
        return q
    return Fraction(int(q.numerator), int(q.denominator))


def _q_floor(q) -> int:
    return int(q.numerator) // int(q.denominator)


class NoFractionalRow(ImtError):
    """Cut derivation was asked for on an integral optimum."""


@dataclass(frozen=True)
class Tableau:
    """Snapshot of an optimal relaxation, sufficient to derive rounding cuts."""

    rows: tuple[LinConstraint, ...]
    x_star: dict[Var, Fraction]
    objective: LinExpr
    value: Fraction


@dataclass(frozen=True)
class LpOptimal:
    x_star: dict[Var, Fraction]
    value: Fraction
    dual: tuple[ComboEntry, ...]
    tableau: Tableau


@dataclass(frozen=True)
class LpInfeasible:
    farkas: FarkasProof


@dataclass(frozen=True)
class LpUnbounded:
    point: dict[Var, Fraction]
    ray: dict[Var, Fraction]


LpOutcome = LpOptimal | LpInfeasible | LpUnbounded


def assemble_rows(sub: Subproblem, bounds: Bounds, objective: LinExpr = LinExpr()) -> list[LinConstraint]:
    """All rows visible to the relaxation: C, D rendered, finite bound ends."""
    rows: set[LinConstraint] = set()
    relevant: set[Var] = set(objective.vars())
    for c in sub.cons:
        rows.add(normalize(c))
        relevant.update(c.lhs.vars())
    for d in sub.eqs:
        rows.add(d.as_constraint())
        relevant.update(d.as_constraint().lhs.vars())
    for v in relevant:
        lo, hi = bounds.interval(v)
        if lo is not None:
            rows.add(bounds.row_lo(v))
        if hi is not None:
            rows.add(bounds.row_hi(v))
    return sorted(rows, key=lambda r: r.render())


class _Simplex:
    """Dense exact tableau with Bland pivoting; columns are built by the caller."""

    def __init__(self, ncols: int):
        self.ncols = ncols
        self.T: list[list] = []
        self.rhs: list = []
        self.basis: list[int] = []
        self.alive: list[bool] = []
        self.cost: list = [_ZERO] * ncols
        self.costval = _ZERO

    def add_row(self, coeffs: dict[int, int | object], rhs) -> int:
        row = [_ZERO] * self.ncols
        for j, a in coeffs.items():
            row[j] = _Q(a)
        self.T.append(row)
        self.rhs.append(_Q(rhs))
        self.basis.append(-1)
        self.alive.append(True)
        return len(self.T) - 1

    def price(self, costs: list) -> None:
        """Rebuild the reduced-cost row for the given column costs."""
        self.cost = list(costs)
        self.costval = _ZERO
        for r, alive in enumerate(self.alive):
            if not alive:
                continue
            cb = costs[self.basis[r]]
            if cb != 0:
                trow = self.T[r]
                for j in range(self.ncols):
                    if trow[j] != 0:
                        self.cost[j] -= cb * trow[j]
                self.costval -= cb * self.rhs[r]

    def pivot(self, r: int, j: int) -> None:
        piv = self.T[r][j]
        inv = _ONE / piv
        trow = self.T[r]
        if piv != 1:
            for k in range(self.ncols):
                if trow[k] != 0:
                    trow[k] *= inv
            self.rhs[r] *= inv
        for i, other in enumerate(self.T):
            if i == r or not self.alive[i]:
                continue
            f = other[j]
            if f != 0:
                for k in range(self.ncols):
                    if trow[k] != 0:
                        other[k] -= f * trow[k]
                self.rhs[i] -= f * self.rhs[r]
        f = self.cost[j]
        if f != 0:
            for k in range(self.ncols):
                if trow[k] != 0:
                    self.cost[k] -= f * trow[k]
            self.costval -= f * self.rhs[r]
        self.basis[r] = j

    def run(self, enterable: list[bool]) -> tuple[str, int]:
        """Bland iteration to optimality; returns ("optimal", -1) or ("unbounded", col)."""
        guard = 0
        while True:
            guard += 1
            if guard > 200000:
                raise ImtError("pivot limit exceeded")
            enter = -1
            for j in range(self.ncols):
                if enterable[j] and self.cost[j] < 0:
                    enter = j
                    break
            if enter < 0:
                return ("optimal", -1)
            leave = -1
            best = None
            for r in range(len(self.T)):
                if not self.alive[r]:
                    continue
                a = self.T[r][enter]
                if a > 0:
                    ratio = self.rhs[r] / a
                    if best is None or ratio < best or (ratio == best and self.basis[r] < self.basis[leave]):
                        best = ratio
                        leave = r
            if leave < 0:
                return ("unbounded", enter)
            self.pivot(leave, enter)

    def column_value(self, j: int):
        for r in range(len(self.T)):
            if self.alive[r] and self.basis[r] == j:
                return self.rhs[r]
        return _ZERO


def lp_solve(sub: Subproblem, objective: LinExpr, bounds: Bounds) -> LpOutcome:
    """Solve the rational relaxation of the subproblem inside its box."""
    rows = assemble_rows(sub, bounds, objective)

    relevant: set[Var] = set(objective.vars())
    for row in rows:
        relevant.update(row.lhs.vars())
    names = sorted(relevant)

    shifts: dict[Var, int] = {}
    for v in names:
        lo = bounds.lo(v)
        if lo is not None:
            shifts[v] = lo

    # constant rows decide themselves; v >= lo rows fold into the shift
    kept: list[LinConstraint] = []
    lo_row_of: dict[Var, LinConstraint] = {}
    for row in rows:
        if not row.lhs.terms:
            ok = (
                (row.rel is Relation.GE and 0 >= row.rhs)
                or (row.rel is Relation.LE and 0 <= row.rhs)
                or (row.rel is Relation.EQ and row.rhs == 0)
            )
            if ok:
                continue
            direction = "ge" if (row.rel is Relation.GE or (row.rel is Relation.EQ and row.rhs > 0)) else "le"
            proof = FarkasProof(((row, direction, Fraction(1)),))
            check_farkas(proof, frozenset(rows))
            return LpInfeasible(proof)
        terms = row.lhs.terms
        if (
            len(terms) == 1
            and terms[0][1] == 1
            and row.rel is Relation.GE
            and terms[0][0] in shifts
            and row.rhs == shifts[terms[0][0]]
            and terms[0][0] not in lo_row_of
        ):
            lo_row_of[terms[0][0]] = row
            continue
        kept.append(row)

    # column layout: shifted vars get one nonnegative column, free vars a split pair
    col_meta: list[tuple[str, Var | int]] = []
    pos_col: dict[Var, int] = {}
    neg_col: dict[Var, int] = {}
    for v in names:
        pos_col[v] = len(col_meta)
        col_meta.append(("pos", v))
        if v not in shifts:
            neg_col[v] = len(col_meta)
            col_meta.append(("neg", v))
    n_struct = len(col_meta)

    # one pass to plan slack and artificial columns
    specs = []
    for row in kept:
        coeffs: dict[Var, int] = dict(row.lhs.terms)
        rhs = row.rhs - sum(a * shifts.get(v, 0) for v, a in coeffs.items())
        sigma = 1
        sense = row.rel
        if sense is Relation.GE:
            coeffs = {v: -a for v, a in coeffs.items()}
            rhs = -rhs
            sigma = -1
            sense = Relation.LE
        slack_sign = 1 if sense is Relation.LE else 0
        if rhs < 0:
            coeffs = {v: -a for v, a in coeffs.items()}
            rhs = -rhs
            sigma = -sigma
            slack_sign = -slack_sign
        specs.append([row, coeffs, rhs, sigma, slack_sign])

    slack_col: dict[int, int] = {}
    art_col: dict[int, int] = {}
    next_col = n_struct
    for i, (_, _, _, _, slack_sign) in enumerate(specs):
        if slack_sign != 0:
            slack_col[i] = next_col
            col_meta.append(("slack", i))
            next_col += 1
    for i, (_, _, _, _, slack_sign) in enumerate(specs):
        if slack_sign != 1:
            art_col[i] = next_col
            col_meta.append(("art", i))
            next_col += 1

    sx = _Simplex(next_col)
    ref_col: list[int] = []
    for i, (row, coeffs, rhs, sigma, slack_sign) in enumerate(specs):
        dense: dict[int, object] = {}
        for v, a in coeffs.items():
            dense[pos_col[v]] = dense.get(pos_col[v], 0) + a
            if v in neg_col:
                dense[neg_col[v]] = dense.get(neg_col[v], 0) - a
        if slack_sign != 0:
            dense[slack_col[i]] = slack_sign
        if i in art_col:
            dense[art_col[i]] = 1
        r = sx.add_row(dense, rhs)
        if i in art_col:
            sx.basis[r] = art_col[i]
            ref_col.append(art_col[i])
        else:
            sx.basis[r] = slack_col[i]
            ref_col.append(slack_col[i])

    is_art = [meta[0] == "art" for meta in col_meta]
    enterable_p1 = [not a for a in is_art]
    enterable_p2 = [not a for a in is_art]

    # phase 1: minimize the artificial total
    phase1_costs = [_ONE if a else _ZERO for a in is_art]
    sx.price(phase1_costs)
    status, _ = sx.run(enterable_p1)
    assert status == "optimal"
    p1_value = -sx.costval

    available = frozenset(rows)

    def dual_entries(costs: list) -> list[ComboEntry]:
        entries: list[ComboEntry] = []
        for i, (row, _, _, sigma, _) in enumerate(specs):
            ref = ref_col[i]
            y = costs[ref] - sx.cost[ref]
            mu = sigma * y
            if mu == 0:
                continue
            if row.rel is Relation.GE:
                assert mu > 0, "dual sign clash on a >= row"
                entries.append((row, "ge", _to_frac(mu)))
            elif row.rel is Relation.LE:
                assert mu < 0, "dual sign clash on a <= row"
                entries.append((row, "le", _to_frac(-mu)))
            else:
                entries.append((row, "ge" if mu > 0 else "le", _to_frac(abs(mu))))
        for v, row in lo_row_of.items():
            rc = sx.cost[pos_col[v]]
            if rc != 0:
                assert rc > 0, "reduced cost of a shifted column went negative"
                entries.append((row, "ge", _to_frac(rc)))
        return entries

    if p1_value > 0:
        proof = FarkasProof(tuple(dual_entries(phase1_costs)))
        check_farkas(proof, available)
        return LpInfeasible(proof)

    # drive leftover artificials out of the basis; dependent rows are retired
    for r in range(len(sx.T)):
        if not sx.alive[r] or not is_art[sx.basis[r]]:
            continue
        pivoted = False
        for j in range(n_struct + len(slack_col)):
            if not is_art[j] and sx.T[r][j] != 0:
                sx.pivot(r, j)
                pivoted = True
                break
        if not pivoted:
            sx.alive[r] = False

    # phase 2: the real objective over structural columns
    phase2_costs = [_ZERO] * sx.ncols
    for v, c in objective.terms:
        phase2_costs[pos_col[v]] += _Q(c)
        if v in neg_col:
            phase2_costs[neg_col[v]] -= _Q(c)
    sx.price(phase2_costs)
    status, enter = sx.run(enterable_p2)

    def current_point() -> dict[Var, Fraction]:
        point = {}
        for v in names:
            val = sx.column_value(pos_col[v])
            if v in neg_col:
                val = val - sx.column_value(neg_col[v])
            point[v] = _to_frac(val + shifts.get(v, 0))
        return point

    if status == "unbounded":
        dz = {enter: _ONE}
        for r in range(len(sx.T)):
            if sx.alive[r] and sx.T[r][enter] != 0:
                dz[sx.basis[r]] = -sx.T[r][enter]
        ray = {}
        for v in names:
            d = dz.get(pos_col[v], _ZERO)
            if v in neg_col:
                d = d - dz.get(neg_col[v], _ZERO)
            if d != 0:
                ray[v] = _to_frac(d)
        return LpUnbounded(current_point(), ray)

    x_star = current_point()
    value = Fraction(0)
    for v, c in objective.terms:
        value += c * x_star[v]
    dual = tuple(dual_entries(phase2_costs))
    bound = ObjValue.finite(frac_ceil(value))
    check_lb_dual(LbDual(bound, dual), available, objective)
    tableau = Tableau(tuple(rows), x_star, objective, value)
    return LpOptimal(x_star, value, dual, tableau)


def lower_bound(sub: Subproblem, objective: LinExpr, bounds: Bounds) -> tuple[ObjValue, LbDual]:
    """Certified objective lower bound over the subproblem's integer points."""
    out = lp_solve(sub, objective, bounds)
    if isinstance(out, LpInfeasible):
        bound = ObjValue.pos_inf()
        return bound, LbDual(bound, out.farkas.entries)
    if isinstance(out, LpUnbounded):
        bound = ObjValue.neg_inf()
        return bound, LbDual(bound, ())
    bound = ObjValue.finite(frac_ceil(out.value))
    return bound, LbDual(bound, out.dual)


def _solve_combination(rows: list[tuple[dict[Var, int], int, int]], target: Var) -> list[Fraction] | None:
    """Find multipliers expressing the unit vector of ``target`` over row vectors.

    Rows are (coefficients, rhs, tag); only coefficients matter here. Gaussian
    elimination over exact rationals; returns None when the unit vector is
    outside the row space.
    """
    vars_all = sorted({v for coeffs, _, _ in rows for v in coeffs} | {target})
    n = len(vars_all)
    m = len(rows)
    # columns of the system are the row multipliers; one equation per variable
    mat = [[Fraction(rows[j][0].get(v, 0)) for j in range(m)] for v in vars_all]
    rhs = [Fraction(1) if v == target else Fraction(0) for v in vars_all]
    piv_of_col: list[int | None] = [None] * m
    r = 0
    for j in range(m):
        p = next((i for i in range(r, n) if mat[i][j] != 0), None)
        if p is None:
            continue
        mat[r], mat[p] = mat[p], mat[r]
        rhs[r], rhs[p] = rhs[p], rhs[r]
        inv = 1 / mat[r][j]
        mat[r] = [x * inv for x in mat[r]]
        rhs[r] *= inv
        for i in range(n):
            if i != r and mat[i][j] != 0:
                f = mat[i][j]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
                rhs[i] -= f * rhs[r]
        piv_of_col[j] = r
        r += 1
        if r == n:
            break
    # consistency: all-zero rows must carry zero right sides
    for i in range(n):
        if rhs[i] != 0 and all(x == 0 for x in mat[i]):
            return None
    sol = [Fraction(0)] * m
    for j in range(m):
        if piv_of_col[j] is not None:
            sol[j] = rhs[piv_of_col[j]]
    # verify: guards against rank deficiencies interacting with free columns
    for idx, v in enumerate(vars_all):
        total = sum(sol[j] * rows[j][0].get(v, 0) for j in range(m))
        want = 1 if v == target else 0
        if total != want:
            return None
    return sol


def derive_gomory_cuts(t: Tableau) -> list[tuple[LinConstraint, CGCut]]:
    """Rounding cuts for the fractional coordinates of an optimal vertex.

    Each cut is produced with the nonnegative-combination certificate that
    the kernel checks: take the multipliers expressing the fractional
    coordinate over the tight rows, keep the fractional parts on inequality
    rows, and round the aggregated right side up.
    """
    fractional = sorted(v for v, q in t.x_star.items() if q.denominator != 1)
    if not fractional:
        raise NoFractionalRow("optimum is integral")

    tight: list[tuple[dict[Var, int], int, LinConstraint, str]] = []
    for row in t.rows:
        if not row.lhs.terms:
            continue
        val = sum(Fraction(c) * t.x_star.get(v, Fraction(0)) for v, c in row.lhs.terms)
        if val != row.rhs:
            continue
        if row.rel is Relation.LE:
            tight.append(({v: -c for v, c in row.lhs.terms}, -row.rhs, row, "le"))
        else:
            tight.append((dict(row.lhs.terms), row.rhs, row, "eq" if row.rel is Relation.EQ else "ge"))

    existing = set(t.rows)
    out: list[tuple[LinConstraint, CGCut, Fraction]] = []
    for v in fractional:
        lam = _solve_combination([(coeffs, rhs, 0) for coeffs, rhs, _, _ in tight], v)
        if lam is None:
            continue
        agg: dict[Var, Fraction] = {}
        rhs_total = Fraction(0)
        entries: list[ComboEntry] = []
        for mult, (coeffs, rhs, row, sense) in zip(lam, tight):
            use = mult if sense == "eq" else mult - frac_floor(mult)
            if use == 0:
                continue
            for name, c in coeffs.items():
                agg[name] = agg.get(name, Fraction(0)) + use * c
            rhs_total += use * rhs
            if sense == "eq":
                entries.append((row, "ge" if use > 0 else "le", abs(use)))
            else:
                entries.append((row, sense, use))
        agg = {name: c for name, c in agg.items() if c != 0}
        if any(c.denominator != 1 for c in agg.values()):
            continue
        coeff_ints = {name: int(c) for name, c in agg.items()}
        if not coeff_ints:
            if frac_ceil(rhs_total) <= 0:
                continue
            cut = LinConstraint(LinExpr.zero(), Relation.GE, frac_ceil(rhs_total))
        else:
            g = 0
            for c in coeff_ints.values():
                g = math.gcd(g, abs(c))
            if g > 1:
                coeff_ints = {name: c // g for name, c in coeff_ints.items()}
                entries = [(row, d, m / g) for row, d, m in entries]
                rhs_total = rhs_total / g
            cut = LinConstraint(LinExpr.of(coeff_ints), Relation.GE, frac_ceil(rhs_total))
        if cut in existing:
            continue
        cut_at_star = sum(Fraction(c) * t.x_star.get(name, Fraction(0)) for name, c in cut.lhs.terms)
        violation = cut.rhs - cut_at_star
        if violation <= 0:
            continue
        cert = CGCut(tuple(entries))
        check_cg(cert, frozenset(t.rows), cut)
        out.append((cut, cert, violation))
        existing.add(cut)
    out.sort(key=lambda item: (-item[2], item[0].render()))
    return [(cut, cert) for cut, cert, _ in out]


@dataclass
class PropagationResult:
    """Fixed-point interval propagation outcome.

    ``derived`` lists newly certified single-variable bound rows in derivation
    order; once those rows are admitted, ``fixes`` and ``farkas`` check against
    the augmented row set. ``farkas`` set means the subproblem is empty.
    """

    bounds: Bounds
    fixes: list[tuple[SimpleEquality, BoundFix]]
    derived: list[tuple[LinConstraint, CGCut]]
    farkas: FarkasProof | None = None

    @property
    def infeasible(self) -> bool:
        return self.farkas is not None


def propagate_bounds(sub: Subproblem, bounds: Bounds, max_rounds: int = 64) -> PropagationResult:
    """Tighten per-variable intervals; detect fixed variables, differences, emptiness."""
    base_rows: list[LinConstraint] = []
    for c in sub.cons:
        base_rows.append(normalize(c))
    for d in sub.eqs:
        base_rows.append(d.as_constraint())
    base_rows.sort(key=lambda r: r.render())

    relevant: set[Var] = set()
    for row in base_rows:
        relevant.update(row.lhs.vars())

    work: dict[Var, list[int | None]] = {v: [bounds.lo(v), bounds.hi(v)] for v in relevant}
    available: set[LinConstraint] = set(base_rows)
    for v in relevant:
        lo, hi = bounds.interval(v)
        if lo is not None:
            available.add(bounds.row_lo(v))
        if hi is not None:
            available.add(bounds.row_hi(v))

    derived: list[tuple[LinConstraint, CGCut]] = []

    def lo_row(v: Var) -> LinConstraint:
        return LinConstraint(LinExpr.var(v), Relation.GE, work[v][0])

    def hi_row(v: Var) -> LinConstraint:
        return LinConstraint(LinExpr.var(v), Relation.LE, work[v][1])

    def record(cut: LinConstraint, entries: list[ComboEntry]) -> None:
        if cut in available:
            return
        cert = CGCut(tuple(entries))
        check_cg(cert, frozenset(available), cut)
        derived.append((cut, cert))
        available.add(cut)

    oriented: list[tuple[dict[Var, int], int, LinConstraint, str]] = []
    for row in base_rows:
        if not row.lhs.terms:
            if (row.rel is Relation.GE and row.rhs > 0) or (row.rel is Relation.LE and row.rhs < 0) or (
                row.rel is Relation.EQ and row.rhs != 0
            ):
                direction = "le" if (row.rel is Relation.LE or (row.rel is Relation.EQ and row.rhs < 0)) else "ge"
                proof = FarkasProof(((row, direction, Fraction(1)),))
                check_farkas(proof, frozenset(available))
                return PropagationResult(bounds, [], derived, proof)
            continue
        if row.rel in (Relation.GE, Relation.EQ):
            oriented.append((dict(row.lhs.terms), row.rhs, row, "ge"))
        if row.rel in (Relation.LE, Relation.EQ):
            oriented.append(({v: -a for v, a in row.lhs.terms}, -row.rhs, row, "le"))

    def result_bounds() -> Bounds:
        table = {v: (iv[0], iv[1]) for v, iv in work.items() if (iv[0], iv[1]) != (None, None)}
        merged = dict(bounds.items())
        merged.update(table)
        return Bounds(merged)

    for _ in range(max_rounds):
        improved = False
        for coeffs, rhs, row, direction in oriented:
            for v, a_v in coeffs.items():
                rest = Fraction(0)
                feasible = True
                entries: list[ComboEntry] = [(row, direction, Fraction(1, abs(a_v)))]
                for u, a_u in coeffs.items():
                    if u == v:
                        continue
                    if a_u > 0:
                        if work[u][1] is None:
                            feasible = False
                            break
                        rest += a_u * work[u][1]
                        entries.append((hi_row(u), "le", Fraction(a_u, abs(a_v))))
                    else:
                        if work[u][0] is None:
                            feasible = False
                            break
                        rest += a_u * work[u][0]
                        entries.append((lo_row(u), "ge", Fraction(-a_u, abs(a_v))))
                if not feasible:
                    continue
                limit = Fraction(rhs) - rest
                if a_v > 0:
                    cand = frac_ceil(limit / a_v)
                    if work[v][0] is None or cand > work[v][0]:
                        work[v][0] = cand
                        record(LinConstraint(LinExpr.var(v), Relation.GE, cand), entries)
                        improved = True
                else:
                    cand = frac_floor(limit / a_v)
                    if work[v][1] is None or cand < work[v][1]:
                        work[v][1] = cand
                        record(LinConstraint(LinExpr.var(v), Relation.LE, cand), entries)
                        improved = True
                lo, hi = work[v]
                if lo is not None and hi is not None and lo > hi:
                    proof = FarkasProof(((lo_row(v), "ge", Fraction(1)), (hi_row(v), "le", Fraction(1))))
                    check_farkas(proof, frozenset(available))
                    # the tightened box is empty; report the original one
                    return PropagationResult(bounds, [], derived, proof)
        if not improved:
            break

    fixes: list[tuple[SimpleEquality, BoundFix]] = []
    for v in sorted(relevant):
        lo, hi = work[v]
        if lo is not None and lo == hi:
            d = SimpleEquality.fix(v, lo)
            if d in sub.eqs:
                continue
            fixes.append((d, BoundFix(identity_cut(lo_row(v), "ge"), identity_cut(hi_row(v), "le"))))

    # opposing difference bounds force x - y = c
    diff_lo: dict[tuple[Var, Var], tuple[Fraction, LinConstraint, str, Fraction]] = {}
    diff_hi: dict[tuple[Var, Var], tuple[Fraction, LinConstraint, str, Fraction]] = {}
    for coeffs, rhs, row, direction in oriented:
        if len(coeffs) != 2:
            continue
        (u1, a1), (u2, a2) = sorted(coeffs.items())
        if a1 != -a2:
            continue
        if a1 > 0:
            pair, scale = (u1, u2), Fraction(1, a1)
        else:
            pair, scale = (u2, u1), Fraction(1, -a1)
        ordered = (min(pair), max(pair))
        sign = 1 if pair == ordered else -1
        # bound on ordered difference: sign * (pair diff) >= rhs * scale
        val = Fraction(rhs) * scale
        if sign == 1:
            cur = diff_lo.get(ordered)
            if cur is None or val > cur[0]:
                diff_lo[ordered] = (val, row, direction, scale)
        else:
            cur = diff_hi.get(ordered)
            if cur is None or -val < cur[0]:
                diff_hi[ordered] = (-val, row, direction, scale)
    for pair in sorted(set(diff_lo) & set(diff_hi)):
        lo_val, lo_src, lo_dir, lo_scale = diff_lo[pair]
        hi_val, hi_src, hi_dir, hi_scale = diff_hi[pair]
        if lo_val != hi_val or lo_val.denominator != 1:
            continue
        x, y = pair
        d = SimpleEquality.diff(x, y, int(lo_val))
        if d in sub.eqs or d.is_fix:
            continue
        fixes.append(
            (
                d,
                BoundFix(
                    CGCut(((lo_src, lo_dir, lo_scale),)),
                    CGCut(((hi_src, hi_dir, hi_scale),)),
                ),
            )
        )

    return PropagationResult(result_bounds(), fixes, derived, None)
