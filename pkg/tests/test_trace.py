import json
from fractions import Fraction

import pytest

from imtsolver.certificates import (
    BoundFix,
    BranchConflictSplit,
    BranchDichotomy,
    BranchTrichotomy,
    CGCut,
    FarkasProof,
    LbDual,
    RetireEvidence,
    SideCut,
    SubsumeSyntactic,
    TheoryLiteral,
    TheoryToken,
    TLemma,
    UnboundedEvidence,
)
from imtsolver.engine import solve
from imtsolver.kernel import ReplayError, Step, replay_trace
from imtsolver.model import (
    Bounds,
    ImtInstance,
    LinConstraint,
    LinExpr,
    ObjValue,
    Relation,
    SimpleEquality,
    sentinel_contradiction,
)
from imtsolver.trace import (
    DigestMismatch,
    TraceError,
    read_trace,
    step_from_json,
    step_to_json,
    write_trace,
)


def row(terms, rel, rhs):
    return LinConstraint(LinExpr.of(terms), rel, rhs)


R1 = row([("x", 1), ("y", -2)], Relation.GE, -3)
R2 = row([("x", 1)], Relation.LE, 4)
CUT = CGCut(((R1, "ge", Fraction(1, 2)), (R2, "le", Fraction(3, 2))))
LIT_EQ = TheoryLiteral.var_eq("x", "y", 2)
LIT_DQ = TheoryLiteral.var_diseq("x", "y", -1)
LIT_AT = TheoryLiteral.atom_true("a")

STEPS = [
    Step("branch", target=0, cert=BranchDichotomy("x", 3)),
    Step("branch", target=1, cert=BranchTrichotomy("x", "y", -2)),
    Step("branch", target=2, cert=BranchConflictSplit((LIT_EQ, LIT_DQ, LIT_AT))),
    Step("learn", target=3, row=R2, cert=CUT),
    Step("forget", target=4, row=R2, cert=CUT),
    Step("propagate", target=5, eq=SimpleEquality.diff("x", "y", 7), cert=BoundFix(CUT, CUT)),
    Step("propagate", target=5, eq=SimpleEquality.fix("x", -1), cert=BoundFix(CUT, CUT)),
    Step(
        "tlearn",
        target=6,
        row=sentinel_contradiction(),
        cert=TLemma(
            (LIT_EQ, LIT_DQ, LIT_AT, TheoryLiteral.atom_false("b")),
            sentinel_contradiction(),
            (BoundFix(CUT, CUT), SideCut("le", CUT), CUT, CUT),
            TheoryToken("conflict", (LIT_EQ,)),
        ),
    ),
    Step("drop", target=7, cert=FarkasProof(((R1, "ge", Fraction(2)),))),
    Step("prune", target=8, cert=LbDual(ObjValue.finite(-3), ((R1, "ge", Fraction(1)),))),
    Step("prune", target=8, cert=LbDual(ObjValue.pos_inf(), ((R1, "ge", Fraction(1)),))),
    Step("prune", target=8, cert=LbDual(ObjValue.neg_inf())),
    Step(
        "retire",
        target=9,
        cert=RetireEvidence((("x", 1), ("y", -2)), LbDual(ObjValue.finite(1)), TheoryToken("model", (LIT_AT,))),
    ),
    Step(
        "unbounded",
        target=10,
        cert=UnboundedEvidence((("x", 0),), (("x", -1), ("y", 2)), TheoryToken("model")),
    ),
    Step("subsume", target=11, other=12, cert=SubsumeSyntactic()),
]


@pytest.mark.parametrize("step", STEPS, ids=lambda s: s.rule)
def test_step_json_round_trip(step):
    wire = json.dumps(step_to_json(step))
    assert step_from_json(json.loads(wire)) == step


def small_instance():
    return ImtInstance(
        ["x", "y"],
        Bounds({"x": (0, 6), "y": (0, 6)}),
        [row([("x", 2), ("y", 3)], Relation.GE, 12)],
        objective=LinExpr.of([("x", 1), ("y", 1)]),
    )


def test_trace_file_round_trip(tmp_path):
    inst = small_instance()
    result = solve(inst)
    path = tmp_path / "run.trace"
    write_trace(path, inst, result.steps)
    digest, steps = read_trace(path, inst)
    assert digest == inst.digest()
    assert tuple(steps) == result.steps
    rep = replay_trace(inst, steps)
    assert rep.final


def test_read_trace_rejects_wrong_instance(tmp_path):
    inst = small_instance()
    other = ImtInstance(["x"], Bounds({"x": (0, 1)}), [], objective=LinExpr.var("x"))
    result = solve(inst)
    path = tmp_path / "run.trace"
    write_trace(path, inst, result.steps)
    with pytest.raises(DigestMismatch):
        read_trace(path, other)


def test_read_trace_rejects_garbage(tmp_path):
    path = tmp_path / "bad.trace"
    path.write_text("")
    with pytest.raises(TraceError):
        read_trace(path)
    path.write_text('{"format": "something-else", "version": 1}\n')
    with pytest.raises(TraceError):
        read_trace(path)
    path.write_text('{"format": "bct-trace", "version": 99}\n')
    with pytest.raises(TraceError):
        read_trace(path)


def test_replay_rejects_a_tampered_step(tmp_path):
    from imtsolver.engine import Config

    inst = ImtInstance(
        ["x", "y"],
        Bounds({"x": (0, 6), "y": (0, 6)}),
        [row([("x", 2), ("y", 2)], Relation.GE, 7)],
        objective=LinExpr.of([("x", 1), ("y", 1)]),
    )
    result = solve(inst, Config(max_cut_rounds=0))  # force a dichotomy
    steps = list(result.steps)
    # flip the first learn/branch payload found
    for i, step in enumerate(steps):
        if step.rule == "branch" and isinstance(step.cert, BranchDichotomy):
            steps[i] = Step("branch", target=step.target, cert=BranchDichotomy("zzz", step.cert.k))
            break
        if step.rule == "learn":
            steps[i] = Step("learn", target=step.target, row=step.row, cert=CGCut(()))
            break
    else:
        pytest.skip("trace had no branch or learn step to tamper with")
    with pytest.raises(ReplayError) as err:
        replay_trace(inst, steps)
    assert err.value.index == i
