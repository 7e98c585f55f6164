import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src import algebra
from src.algebra import (
    center_basis,
    central_primitive_idempotents,
    decomposition_residuals,
    dim_A_XY,
    principal_matrix,
    restrict_idempotent,
    restriction_degrees,
    summarize,
)
from src.analysis import profile
from src.constructors import restriction
from tests.conftest import BATTERY

TOL = 1e-6

EXPECTED_COUNTS = {
    "t1": 1,
    "t3": 1,
    "fano": 2,
    "fano-x-t2": 2,
    "fano-dsum-t1": 2,
    "fano-dsum-t3": 2,
    "fission": 4,
    "cyclic7": 7,
    "symmetric3": 2,
    "klein": 3,
}


@pytest.mark.parametrize("name", sorted(BATTERY))
def test_dimension_identities(name, decompose):
    s = BATTERY[name]
    dec = decompose(name)
    assert sum(n * n for n in dec.degrees) == s.relation_count
    assert sum(m * n for m, n in zip(dec.multiplicities, dec.degrees)) == s.point_count


@pytest.mark.parametrize("name", sorted(BATTERY))
def test_residuals_are_small(name, decompose):
    residuals = decomposition_residuals(BATTERY[name], decompose(name))
    assert residuals.idempotency < TOL
    assert residuals.orthogonality < TOL
    assert residuals.centrality < TOL
    assert residuals.completeness < TOL
    assert residuals.trace_integrality < TOL


@pytest.mark.parametrize("name, count", sorted(EXPECTED_COUNTS.items()))
def test_idempotent_counts(name, count, decompose):
    assert len(decompose(name)) == count


@pytest.mark.parametrize("name", sorted(BATTERY))
def test_principal_idempotent(name, decompose):
    s = BATTERY[name]
    dec = decompose(name)
    assert dec.principal_index == 0
    assert np.allclose(dec.principal, principal_matrix(s), atol=TOL)
    assert dec.degrees[0] == s.fiber_count
    assert dec.supports[0] == frozenset(range(s.fiber_count))


def test_trivial_scheme_has_one_idempotent(decompose):
    dec = decompose("t3")
    assert (dec.degrees, dec.multiplicities) == ((3,), (1,))
    assert np.allclose(dec.idempotents[0], np.eye(3))


def test_fano_invariants(decompose):
    dec = decompose("fano")
    assert dec.degrees == (2, 2)
    assert dec.multiplicities == (1, 6)
    assert dec.supports[1] == frozenset({0, 1})


def test_fission_invariants(decompose):
    dec = decompose("fission")
    assert dec.degrees == (2, 2, 2, 2)
    assert sum(dec.multiplicities) == 8


def test_cyclic_group_scheme_has_complex_idempotents(decompose):
    dec = decompose("cyclic7")
    assert dec.degrees == (1,) * 7
    assert dec.multiplicities == (1,) * 7
    assert any(np.iscomplexobj(p) for p in dec.idempotents)


def test_direct_sum_supports(decompose):
    dec = decompose("fano-dsum-t1")
    assert dec.supports == (frozenset({0, 1, 2}), frozenset({0, 1}))
    assert dec.degrees == (3, 2)


def test_restriction_degrees_on_fano(fano, decompose):
    dec = decompose("fano")
    assert restriction_degrees(fano, dec, 0) == {0: (1, 1), 1: (6, 1)}
    assert restriction_degrees(fano, dec, 1) == {0: (1, 1), 1: (6, 1)}


@pytest.mark.parametrize("name", ["fano", "fission", "fano-x-t2"])
def test_dim_of_cross_block(name, decompose):
    s = BATTERY[name]
    dec = decompose(name)
    assert dim_A_XY(s, dec, 0, 1) == len(s.relations_between(0, 1))


@pytest.mark.parametrize("name", ["fano", "fission", "klein", "symmetric3"])
def test_center_dimension(name, decompose):
    s = BATTERY[name]
    numeric = center_basis(s)
    exact = center_basis(s, exact=True)
    assert numeric.shape[1] == exact.shape[1] == len(decompose(name))


def test_restriction_to_every_fiber_is_the_idempotent(fission, decompose):
    dec = decompose("fission")
    for index in range(len(dec)):
        assert np.allclose(restrict_idempotent(fission, dec, index, range(2)), dec.idempotents[index])


def test_summary_rows(decompose):
    rows = summarize(decompose("fano"))
    assert [(row.index, row.m, row.n, row.support, row.principal) for row in rows] == [
        (0, 1, 2, [0, 1], True),
        (1, 6, 2, [0, 1], False),
    ]


@settings(max_examples=5, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 31))
def test_invariants_do_not_depend_on_the_seed(seed):
    dec = central_primitive_idempotents(BATTERY["fission"], seed=seed)
    assert sorted(zip(dec.degrees, dec.multiplicities)) == sorted(
        zip(central_primitive_idempotents(BATTERY["fission"]).degrees,
            central_primitive_idempotents(BATTERY["fission"]).multiplicities))


def test_collapsed_tolerance_raises():
    with pytest.raises(algebra.AlgebraError):
        central_primitive_idempotents(BATTERY["fano"], eigen_tol=10.0, retries=2)


def _fiber_block(s, dec, index, x):
    fiber = list(s.fibers[x])
    return restrict_idempotent(s, dec, index, [x])[np.ix_(fiber, fiber)]


@pytest.mark.parametrize("name", sorted(BATTERY))
def test_fiber_restrictions_are_primitive_in_the_fiber_algebra(name, decompose):
    s = BATTERY[name]
    dec = decompose(name)
    for x, fiber in enumerate(s.fibers):
        local = central_primitive_idempotents(restriction(s, [x])).idempotents
        present = [p for p in range(len(dec)) if x in dec.supports[p]]
        assert len(present) == len(local)
        matched = set()
        for p in present:
            hits = [i for i, q in enumerate(local) if np.allclose(_fiber_block(s, dec, p, x), q, atol=TOL)]
            assert len(hits) == 1
            matched.add(hits[0])
        assert len(matched) == len(local)
        outside = [v for v in range(s.point_count) if v not in set(fiber)]
        for p in range(len(dec)):
            restricted = restrict_idempotent(s, dec, p, [x])
            assert np.allclose(restricted[outside], 0, atol=TOL)
            if p not in present:
                assert np.allclose(restricted, 0, atol=TOL)


@pytest.mark.parametrize("name", sorted(BATTERY))
def test_degree_is_the_sum_over_the_support(name, decompose):
    s = BATTERY[name]
    dec = decompose(name)
    local = {x: restriction_degrees(s, dec, x) for x in range(s.fiber_count)}
    for p in range(len(dec)):
        assert dec.degrees[p] == sum(local[x][p][1] for x in dec.supports[p])


@pytest.mark.parametrize("name", sorted(BATTERY))
def test_principal_restricts_to_the_averaging_matrix(name, decompose):
    s = BATTERY[name]
    dec = decompose(name)
    for x, fiber in enumerate(s.fibers):
        expected = np.zeros((s.point_count, s.point_count))
        expected[np.ix_(fiber, fiber)] = 1 / len(fiber)
        assert np.allclose(restrict_idempotent(s, dec, dec.principal_index, [x]), expected, atol=TOL)


@pytest.mark.parametrize("name", [name for name in sorted(BATTERY) if profile(BATTERY[name]).is_balanced])
def test_balanced_fibers_share_restriction_degrees(name, decompose):
    s = BATTERY[name]
    dec = decompose(name)
    per_fiber = [sorted(n for _, n in restriction_degrees(s, dec, x).values()) for x in range(s.fiber_count)]
    assert all(degrees == per_fiber[0] for degrees in per_fiber)


@pytest.mark.parametrize("name", sorted(BATTERY))
def test_small_homogeneous_schemes_are_commutative(name):
    s = BATTERY[name]
    for x in range(s.fiber_count):
        local = restriction(s, [x])
        if local.relation_count <= 5:
            assert set(central_primitive_idempotents(local).degrees) == {1}


def test_cyclic_seven_is_not_covered_by_the_small_case():
    assert restriction(BATTERY["cyclic7"], [0]).relation_count == 7
    assert set(central_primitive_idempotents(BATTERY["cyclic7"]).degrees) == {1}
