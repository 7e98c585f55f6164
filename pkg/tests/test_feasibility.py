import pytest
from pydantic import ValidationError
from sympy import factorint

from src.feasibility import (
    EXTERNAL_NOTE,
    RULES,
    apply_rules,
    assignment_from_scheme,
    check_assignment,
    enumerate_profiles,
    four_solution_count,
    solve_csp,
    table_report,
)
from src.schemas import DegreeProfile, FilterStatus
from tests.conftest import BATTERY


def profile(m, r, d_x, d_xy=()):
    return DegreeProfile(m=m, r=r, d_X=d_x, d_XY=d_xy)


def pairs(profiles):
    return [(p.d_X, p.d_XY) for p in profiles]


def test_enumerate_six_three():
    assert pairs(enumerate_profiles(6, 3)) == [((1, 1, 4), (2, 2, 2)), ((1, 2, 3), (2, 2, 2))]


def test_enumerate_eight_four_contains_fixture_profile():
    assert ((1, 1, 2, 4), (2, 2, 2, 2)) in pairs(enumerate_profiles(8, 4))


@pytest.mark.parametrize("m, r", [(4, 5), (0, 2), (3, 0)])
def test_enumerate_empty(m, r):
    assert enumerate_profiles(m, r) == []


@pytest.mark.parametrize("m, r, homes", [
    (5, 3, [(1, 1, 3), (1, 2, 2)]),
    (1, 1, [(1,)]),
    (7, 4, [(1, 1, 1, 4), (1, 1, 2, 3), (1, 2, 2, 2)]),
])
def test_enumerate_without_cross_multiset(m, r, homes):
    profiles = enumerate_profiles(m, r)
    assert pairs(profiles) == [(home, ()) for home in homes]
    assert all(apply_rules(p).rule == "m<2r" for p in profiles)


def test_enumerate_with_catalog():
    catalog = {6: [[1, 1, 4]]}
    assert pairs(enumerate_profiles(6, 3, catalog)) == [((1, 1, 4), (2, 2, 2))]


@pytest.mark.parametrize("kwargs", [
    dict(m=6, r=3, d_X=(2, 2, 2), d_XY=(2, 2, 2)),
    dict(m=6, r=3, d_X=(1, 1, 4), d_XY=(1, 1, 4)),
    dict(m=6, r=3, d_X=(1, 1, 3), d_XY=(2, 2, 2)),
    dict(m=6, r=2, d_X=(1, 1, 4), d_XY=(2, 4)),
])
def test_invalid_profiles(kwargs):
    with pytest.raises(ValidationError):
        DegreeProfile(**kwargs)


def test_profile_sorts_and_labels():
    p = profile(6, 3, (4, 1, 1), (2, 2, 2))
    assert p.d_X == (1, 1, 4)
    assert p.label() == "d_X={1,1,4} d_XY={2,2,2}"


@pytest.mark.parametrize("p, rule", [
    (profile(5, 3, (1, 1, 3)), "m<2r"),
    (profile(9, 3, (1, 2, 6), (2, 2, 5)), "coprime-transfer"),
    (profile(7, 3, (1, 1, 5), (2, 2, 3)), "prime-m"),
    (profile(7, 3, (1, 2, 4), (2, 2, 3)), "prime-m"),
    (profile(7, 3, (1, 3, 3), (2, 2, 3)), "p-valenced"),
    (profile(8, 2, (1, 7), (4, 4)), "p-valenced"),
    (profile(5, 2, (1, 4), (2, 3)), "p-valenced"),
    (profile(6, 3, (1, 1, 4), (2, 2, 2)), "csp"),
    (profile(6, 3, (1, 2, 3), (2, 2, 2)), "m=2r-structure"),
    (profile(10, 3, (1, 3, 6), (3, 3, 4)), "csp"),
    (profile(9, 3, (1, 2, 6), (3, 3, 3)), "csp"),
    (profile(8, 3, (1, 1, 6), (2, 2, 4)), "csp"),
])
def test_eliminations(p, rule):
    verdict = apply_rules(p)
    assert verdict.status == FilterStatus.ELIMINATED
    assert verdict.rule == rule


def test_symmetric_odd_rule():
    verdict = apply_rules(profile(7, 3, (1, 3, 3), (2, 2, 3)), rules=["symmetric-odd"])
    assert verdict.rule == "symmetric-odd"


def test_design_divisibility_rule():
    verdict = apply_rules(profile(13, 2, (1, 12), (3, 10)), rules=["design-divisibility"])
    assert verdict.rule == "design-divisibility"
    assert "admissible d: {1,4,9,12}" in verdict.trace[-1]
    assert "exactly 4 solutions" in verdict.trace[-1]
    assert apply_rules(profile(13, 2, (1, 12), (4, 9)), rules=["design-divisibility"]).status == FilterStatus.SURVIVES


def test_half_size_structure_rule():
    rules = ["m=2r-structure"]
    assert apply_rules(profile(8, 4, (1, 1, 2, 4), (2, 2, 2, 2)), rules=rules).status == FilterStatus.SURVIVES
    assert apply_rules(profile(8, 4, (1, 1, 1, 5), (2, 2, 2, 2)), rules=rules).rule == "m=2r-structure"


def test_catalog_rule():
    verdict = apply_rules(profile(10, 5, (1, 1, 2, 2, 4), (2, 2, 2, 2, 2)), catalog={10: [[1, 1, 4, 4]]})
    assert verdict.rule == "catalog"
    assert EXTERNAL_NOTE in verdict.trace[-1]


def test_unknown_rule():
    with pytest.raises(ValueError):
        apply_rules(profile(7, 2, (1, 6), (3, 4)), rules=["no-such-rule"])


@pytest.mark.parametrize("p", [
    profile(7, 2, (1, 6), (3, 4)),
    profile(8, 4, (1, 1, 2, 4), (2, 2, 2, 2)),
    profile(11, 2, (1, 10), (5, 6)),
])
def test_realizable_profiles_survive(p):
    assert apply_rules(p).status == FilterStatus.SURVIVES


@pytest.mark.parametrize("m, survivors", [
    (5, []),
    (7, [((1, 6), (3, 4))]),
    (8, []),
    (11, [((1, 10), (5, 6))]),
])
def test_r2_survivors(m, survivors):
    verdicts = [apply_rules(p) for p in enumerate_profiles(m, 2)]
    assert [(v.profile.d_X, v.profile.d_XY) for v in verdicts if v.status == FilterStatus.SURVIVES] == survivors


@pytest.mark.parametrize("r", [4, 5])
def test_prime_eleven(r):
    verdicts = [apply_rules(p) for p in enumerate_profiles(11, r)]
    assert verdicts
    assert all(v.rule == "prime-m" for v in verdicts)


@pytest.mark.parametrize("m, r", [(6, 3), (7, 3), (8, 3), (9, 3), (8, 4)])
def test_disabling_csp_keeps_earlier_eliminations(m, r):
    without_csp = [rule for rule in RULES if rule != "csp"]
    for p in enumerate_profiles(m, r):
        full = apply_rules(p, node_limit=20_000)
        partial = apply_rules(p, rules=without_csp)
        if full.status == FilterStatus.ELIMINATED and full.rule != "csp":
            assert partial.rule == full.rule


def test_csp_parity_obstruction():
    for side in [(), ("left-stabilizer-divides", "common-square-witness")]:
        result = solve_csp(profile(9, 3, (1, 2, 6), (3, 3, 3)), side_constraints=side)
        assert not result.feasible
        assert not result.exhausted


def test_csp_divisibility_obstruction():
    result = solve_csp(profile(8, 3, (1, 1, 6), (2, 2, 4)), side_constraints=())
    assert not result.feasible
    assert any("no solution" in line for line in result.trace)


def test_csp_trivial_profile():
    result = solve_csp(profile(1, 1, (1,)))
    assert result.feasible
    assert result.assignment == {}


def test_coupling_eliminates_six_three():
    p = profile(6, 3, (1, 1, 4), (2, 2, 2))
    assert solve_csp(p, side_constraints=()).feasible
    assert solve_csp(p, side_constraints=("left-stabilizer-divides",)).feasible
    assert not solve_csp(p).feasible


def test_left_stabilizer_is_needed_for_ten_three():
    p = profile(10, 3, (1, 3, 6), (3, 3, 4))
    assert solve_csp(p, side_constraints=()).feasible
    assert not solve_csp(p, side_constraints=("left-stabilizer-divides",)).feasible


def test_csp_witness_for_fano_profile():
    result = solve_csp(profile(7, 2, (1, 6), (3, 4)))
    assert result.feasible
    assert result.assignment["X:0,0|1"] == 1
    assert result.assignment["X:1,1|1"] == 2
    assert result.assignment["X:0,1|1"] == 2
    assert result.d_Y == (1, 6)


def test_unknown_side_constraint():
    with pytest.raises(ValueError):
        solve_csp(profile(7, 2, (1, 6), (3, 4)), side_constraints=["no-such-constraint"])


@pytest.mark.parametrize("name, expected", [
    ("fano", profile(7, 2, (1, 6), (3, 4))),
    ("fission", profile(8, 4, (1, 1, 2, 4), (2, 2, 2, 2))),
])
def test_realized_assignments(name, expected):
    p, realized = assignment_from_scheme(BATTERY[name], 0, 1)
    assert p == expected
    assert check_assignment(p, realized)
    assert solve_csp(p, hint=realized).assignment == realized.assignment


def test_realized_diagonal_and_row_sum(fission):
    p, realized = assignment_from_scheme(fission, 0, 1)
    assert realized.assignment["X:0,0|0"] == 2
    assert sum(realized.assignment[f"X:0,{j}|3"] for j in range(4)) == 2


def test_tampered_assignment_is_rejected(fission):
    p, realized = assignment_from_scheme(fission, 0, 1)
    tampered = dict(realized.assignment)
    tampered["X:0,0|0"] = 1
    assert not check_assignment(p, realized.model_copy(update={"assignment": tampered}))


def test_assignment_needs_reduced_pair():
    with pytest.raises(ValueError):
        assignment_from_scheme(BATTERY["fano-x-t2"], 0, 1)


def test_four_solution_count():
    checked = 0
    for m in range(3, 201):
        factors = factorint(m - 1)
        odd = {p: e for p, e in factors.items() if p != 2}
        if 2 in factors and len(odd) == 1 and list(odd.values()) == [1]:
            assert four_solution_count(m) == 4
            checked += 1
    assert checked > 20


def test_four_solution_count_for_prime_power():
    assert four_solution_count(8) == 2
    assert four_solution_count(7) == 4


def test_table_report():
    report = table_report(8, node_limit=20_000)
    entries = {(e.r, e.m): e for e in report.entries}
    assert not report.catalog_used
    assert entries[(2, 8)].status == FilterStatus.ELIMINATED
    assert entries[(2, 7)].status == FilterStatus.SURVIVES
    assert [p.d_XY for p in entries[(2, 7)].survivors] == [(3, 4)]
    assert any("(m−1) | γ(γ−1)" in note for note in entries[(2, 7)].notes)
    assert "unverified d_X" in entries[(2, 7)].notes
    assert entries[(5, 8)].rule == "m<2r"
    assert entries[(3, 6)].status == FilterStatus.ELIMINATED


def test_table_report_with_catalog():
    report = table_report(10, catalog={10: [[1, 1, 4, 4]]}, node_limit=2_000)
    entry = next(e for e in report.entries if (e.r, e.m) == (5, 10))
    assert entry.status == FilterStatus.ELIMINATED
    assert entry.rule == "catalog"
    assert f"d_X={{1,1,2,2,4}}: {EXTERNAL_NOTE}" in entry.notes


def test_table_guard():
    with pytest.raises(ValueError):
        table_report(17)
