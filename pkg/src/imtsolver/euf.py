"""Equality-with-functions background theory over integer offsets.

The session decides conjunctions of offset literals (x = y + c, x != y + c)
and atom sign literals against the instance's interface atoms. Internally it
is a congruence closure whose union-find stores an integer offset per edge,
so a class tracks exact value differences, not just equality.

The closure is rebuilt from the literal trail on every ``check``; push/pop
are trail marks. At our problem sizes rebuilding is cheaper than maintaining
a proof forest, and it keeps conflict-core extraction trivial: delete one
literal at a time and re-check.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .certificates import TheoryLiteral, TheoryToken
from .model import ImtError, ImtInstance, InterfaceAtom, MissingVariable, Var


@dataclass(frozen=True)
class TheorySat:
    token: TheoryToken


@dataclass(frozen=True)
class TheoryConflict:
    core: tuple[TheoryLiteral, ...]
    token: TheoryToken


class _Closure:
    """Union-find with offsets plus congruence over function applications."""

    def __init__(self) -> None:
        self.parent: list[int] = []
        self.delta: list[int] = []  # value(n) = value(parent[n]) + delta[n]
        self.rank: list[int] = []
        self.var_node: dict[Var, int] = {}
        self.app_node: dict[tuple[str, tuple[int, ...]], int] = {}
        self.apps: list[tuple[str, tuple[int, ...], int]] = []
        self.diseqs: list[tuple[int, int, int]] = []  # value(a) != value(b) + c
        self.ok = True

    def _new_node(self) -> int:
        n = len(self.parent)
        self.parent.append(n)
        self.delta.append(0)
        self.rank.append(0)
        return n

    def var(self, v: Var) -> int:
        n = self.var_node.get(v)
        if n is None:
            n = self._new_node()
            self.var_node[v] = n
        return n

    def app(self, fun: str, args: tuple[int, ...]) -> int:
        key = (fun, args)
        n = self.app_node.get(key)
        if n is None:
            n = self._new_node()
            self.app_node[key] = n
            self.apps.append((fun, args, n))
        return n

    def find(self, n: int) -> tuple[int, int]:
        path = []
        while self.parent[n] != n:
            path.append(n)
            n = self.parent[n]
        off = 0
        for m in reversed(path):
            off += self.delta[m]
            self.parent[m] = n
            self.delta[m] = off
        return (n, off)

    def union(self, a: int, b: int, c: int) -> bool:
        """Impose value(a) = value(b) + c; False on an offset clash."""
        ra, da = self.find(a)
        rb, db = self.find(b)
        if ra == rb:
            if da != db + c:
                self.ok = False
                return False
            return True
        shift = db + c - da  # value(ra) = value(rb) + shift
        if self.rank[ra] > self.rank[rb]:
            self.parent[rb] = ra
            self.delta[rb] = -shift
        else:
            self.parent[ra] = rb
            self.delta[ra] = shift
            if self.rank[ra] == self.rank[rb]:
                self.rank[rb] += 1
        return True

    def diseq(self, a: int, b: int, c: int) -> None:
        self.diseqs.append((a, b, c))

    def run(self) -> bool:
        """Congruence fixpoint, then disequality scan."""
        if not self.ok:
            return False
        changed = True
        while changed:
            changed = False
            sig: dict[tuple[str, tuple[tuple[int, int], ...]], int] = {}
            for fun, args, node in self.apps:
                key = (fun, tuple(self.find(a) for a in args))
                other = sig.get(key)
                if other is None:
                    sig[key] = node
                    continue
                ra, da = self.find(node)
                rb, db = self.find(other)
                if ra == rb:
                    if da != db:
                        self.ok = False
                        return False
                    continue
                if not self.union(node, other, 0):
                    return False
                changed = True
        for a, b, c in self.diseqs:
            ra, da = self.find(a)
            rb, db = self.find(b)
            if ra == rb and da == db + c:
                self.ok = False
                return False
        return True


def _build_closure(atoms: tuple[InterfaceAtom, ...], literals: Iterable[TheoryLiteral]) -> bool:
    """Consistency of the literal conjunction against the interface atoms."""
    activation: dict[Var, bool] = {}
    eqs: list[tuple[Var, Var, int]] = []
    diseqs: list[tuple[Var, Var, int]] = []
    for lit in literals:
        if lit.kind == "atom_true":
            if activation.get(lit.var) is False:
                return False
            activation[lit.var] = True
        elif lit.kind == "atom_false":
            if activation.get(lit.var) is True:
                return False
            activation[lit.var] = False
        elif lit.kind == "eq":
            eqs.append((lit.x, lit.y, lit.offset))
        elif lit.kind == "diseq":
            diseqs.append((lit.x, lit.y, lit.offset))
        else:
            raise ImtError(f"unknown theory literal kind {lit.kind!r}")

    cl = _Closure()
    for atom in atoms:
        if atom.annotation is None:
            active: bool | None = True
        else:
            active = activation.get(atom.annotation)
        if active is None:
            continue
        if atom.kind == "fun":
            rn = cl.var(atom.result)
            an = cl.app(atom.fun, tuple(cl.var(a) for a in atom.args))
            if active:
                if not cl.union(rn, an, 0):
                    return False
            else:
                cl.diseq(rn, an, 0)
        else:
            xn, yn = cl.var(atom.x), cl.var(atom.y)
            if active:
                if not cl.union(xn, yn, 0):
                    return False
            else:
                cl.diseq(xn, yn, 0)
    for x, y, c in eqs:
        if not cl.union(cl.var(x), cl.var(y), c):
            return False
    for x, y, c in diseqs:
        cl.diseq(cl.var(x), cl.var(y), c)
    return cl.run()


class EufSession:
    """Incremental literal trail with restart-based checking."""

    def __init__(self, atoms: Iterable[InterfaceAtom]):
        self.atoms = tuple(sorted(atoms, key=lambda a: a.render()))
        self.trail: list[TheoryLiteral] = []
        self._marks: list[int] = []

    def push(self) -> None:
        self._marks.append(len(self.trail))

    def pop(self) -> None:
        if not self._marks:
            raise ImtError("pop without matching push")
        del self.trail[self._marks.pop():]

    def assert_literal(self, lit: TheoryLiteral) -> None:
        self.trail.append(lit)

    def consistent(self, literals: Iterable[TheoryLiteral] | None = None) -> bool:
        return _build_closure(self.atoms, self.trail if literals is None else literals)

    def check(self) -> TheorySat | TheoryConflict:
        """Decide the trail; an inconsistent trail yields a deletion-minimal core."""
        if self.consistent():
            return TheorySat(TheoryToken("model", tuple(self.trail)))
        core = list(self.trail)
        i = 0
        while i < len(core):
            cand = core[:i] + core[i + 1 :]
            if not self.consistent(cand):
                core = cand
            else:
                i += 1
        return TheoryConflict(tuple(core), TheoryToken("conflict", tuple(core)))

    def implied_equalities(self) -> list[TheoryLiteral]:
        """Variable equalities the closure entails beyond the asserted ones."""
        if not self.consistent():
            return []
        activation: dict[Var, bool] = {}
        for lit in self.trail:
            if lit.kind == "atom_true":
                activation[lit.var] = True
            elif lit.kind == "atom_false":
                activation[lit.var] = False
        cl = _Closure()
        for atom in self.atoms:
            active = True if atom.annotation is None else activation.get(atom.annotation)
            if active is not True:
                continue
            if atom.kind == "fun":
                cl.union(cl.var(atom.result), cl.app(atom.fun, tuple(cl.var(a) for a in atom.args)), 0)
            else:
                cl.union(cl.var(atom.x), cl.var(atom.y), 0)
        for lit in self.trail:
            if lit.kind == "eq":
                cl.union(cl.var(lit.x), cl.var(lit.y), lit.offset)
        cl.run()
        asserted = {(lit.x, lit.y, lit.offset) for lit in self.trail if lit.kind == "eq"}
        out = []
        names = sorted(cl.var_node)
        for i, u in enumerate(names):
            ru, du = cl.find(cl.var_node[u])
            for w in names[i + 1 :]:
                rw, dw = cl.find(cl.var_node[w])
                if ru == rw:
                    off = du - dw  # value(u) = value(w) + off
                    if (u, w, off) not in asserted:
                        out.append(TheoryLiteral.var_eq(u, w, off))
        return out


def functional_consistency(atoms: Iterable[InterfaceAtom], assignment: Mapping[Var, int]) -> bool:
    """Existence of an interpretation making every atom's truth match the assignment.

    A total integer assignment fixes each annotation (positive means the atom
    holds) and each core variable. True definitions must describe a function;
    false ones must be avoidable, which only fails when a true definition pins
    the same argument tuple to the rejected result.
    """

    def val(v: Var) -> int:
        if v not in assignment:
            raise MissingVariable(v)
        return assignment[v]

    tables: dict[str, dict[tuple[int, ...], int]] = {}
    rejected: list[tuple[str, tuple[int, ...], int]] = []
    for atom in sorted(atoms, key=lambda a: a.render()):
        active = True if atom.annotation is None else val(atom.annotation) > 0
        if atom.kind == "eq":
            if (val(atom.x) == val(atom.y)) != active:
                return False
            continue
        argvals = tuple(val(a) for a in atom.args)
        rval = val(atom.result)
        if active:
            table = tables.setdefault(atom.fun, {})
            if table.setdefault(argvals, rval) != rval:
                return False
        else:
            rejected.append((atom.fun, argvals, rval))
    for fun, argvals, rval in rejected:
        if tables.get(fun, {}).get(argvals) == rval:
            return False
    return True


@dataclass(frozen=True)
class EufAdapter:
    """Replay callbacks the kernel uses to re-validate theory tokens."""

    atoms: tuple[InterfaceAtom, ...]

    @staticmethod
    def for_instance(instance: ImtInstance) -> EufAdapter:
        return EufAdapter(tuple(sorted(instance.atoms, key=lambda a: a.render())))

    def replay_conflict(self, literals: Iterable[TheoryLiteral]) -> bool:
        """True when the literal conjunction really is inconsistent."""
        return not _build_closure(self.atoms, literals)

    def replay_model(self, assignment: Mapping[Var, int]) -> bool:
        """True when the total assignment is consistent with the atoms."""
        return functional_consistency(self.atoms, assignment)
