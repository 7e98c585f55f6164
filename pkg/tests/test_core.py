import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.core import (
    DiagonalNotFiberUnion,
    EmptyMatrix,
    IncompatibleRelations,
    IntersectionNumberNotConstant,
    NonContiguousColors,
    NonSquare,
    TransposeNotClosed,
    adjacency_matrix,
    brute_force_tensor,
    canonical_relabel,
    check_adjacency_products,
    check_structure_constants,
    complex_product,
    degree_multiset,
    intersection_number,
    relation,
    verify_scheme,
)
from tests.conftest import BATTERY, SMALL

# Fano colors: 0 diagonal of points, 2 distinct points, 4 incidence, 5 its transpose
FANO_INCIDENCE = 4
FANO_INCIDENCE_T = 5


def test_single_point_scheme():
    s = verify_scheme([[0]])
    assert s.fiber_count == 1
    assert s.relation_count == 1
    assert s.tensor[(0, 0, 0)] == 1


def test_fano_shape(fano):
    assert fano.point_count == 14
    assert fano.relation_count == 8
    assert fano.fibers == (tuple(range(7)), tuple(range(7, 14)))
    assert degree_multiset(fano, 0, 0) == [1, 6]
    assert degree_multiset(fano, 0, 1) == [3, 4]


def test_fission_shape(fission):
    assert fission.relation_count == 16
    assert [len(f) for f in fission.fibers] == [8, 8]
    assert degree_multiset(fission, 0, 1) == [2, 2, 2, 2]
    assert degree_multiset(fission, 0, 0) == [1, 1, 2, 4]


@pytest.mark.parametrize("name", sorted(BATTERY))
def test_every_block_contains_the_diagonal(name):
    s = BATTERY[name]
    for x in range(s.fiber_count):
        assert 1 in degree_multiset(s, x, x)


@pytest.mark.parametrize("name", sorted(BATTERY))
def test_row_regularity(name):
    s = BATTERY[name]
    for color, meta in enumerate(s.relation_meta):
        a = adjacency_matrix(s, relation(s, color))
        source = list(s.fibers[meta.source_fiber])
        target = list(s.fibers[meta.target_fiber])
        assert np.all(a[source].sum(axis=1) == meta.degree)
        assert np.all(a[:, target].sum(axis=0) == meta.codegree)
        assert len(source) * meta.degree == meta.size == len(target) * meta.codegree


@pytest.mark.parametrize("name", sorted(BATTERY))
def test_transpose_pairing(name):
    s = BATTERY[name]
    pairing = np.asarray(s.transpose_pairing)
    assert np.array_equal(s.color_matrix.T, pairing[s.color_matrix])


@pytest.mark.parametrize("name", sorted(BATTERY))
def test_structure_constant_identities(name):
    assert check_structure_constants(BATTERY[name]) == []


@pytest.mark.parametrize("name", sorted(BATTERY))
def test_adjacency_products(name):
    assert check_adjacency_products(BATTERY[name]) == []


@pytest.mark.parametrize("name", SMALL)
def test_brute_force_agrees(name):
    s = BATTERY[name]
    assert brute_force_tensor(s).constants == s.tensor.constants


def test_fano_incidence_times_transpose(fano):
    incidence = relation(fano, FANO_INCIDENCE)
    transpose = relation(fano, FANO_INCIDENCE_T)
    assert intersection_number(fano, incidence, transpose, relation(fano, 0)) == 3
    assert intersection_number(fano, incidence, transpose, relation(fano, 2)) == 1
    assert {h.index for h in complex_product(fano, incidence, transpose)} == {0, 2}


def test_diagonal_is_identity_of_product(fano):
    for color in fano.relations_between(0, 1):
        product = complex_product(fano, relation(fano, 0), relation(fano, color))
        assert {h.index for h in product} == {color}


def test_thin_relations_have_singleton_products(fission):
    thin = [c for c, meta in enumerate(fission.relation_meta) if meta.degree == 1]
    for t in thin:
        handle = relation(fission, t)
        for s in fission.relations_between(handle.target_fiber, 0) + fission.relations_between(handle.target_fiber, 1):
            assert len(complex_product(fission, handle, relation(fission, s))) == 1


def test_incompatible_product(fano):
    with pytest.raises(IncompatibleRelations):
        complex_product(fano, relation(fano, FANO_INCIDENCE), relation(fano, FANO_INCIDENCE))


def test_relation_out_of_range(fano):
    with pytest.raises(IndexError):
        relation(fano, 8)


def test_sum_over_second_factor_is_degree(fission):
    c = fission.tensor
    for r in fission.relations_between(0, 1):
        for t in fission.relations_between(0, 0):
            assert sum(c[(r, s, t)] for s in fission.relations_between(1, 0)) == fission.degree(r)


@pytest.mark.parametrize("matrix, error", [
    (np.zeros((0, 0), dtype=int), EmptyMatrix),
    ([[0, 1]], NonSquare),
    ([[0, 1], [1]], NonSquare),
    ([[0, 2], [2, 0]], NonContiguousColors),
    ([[0, 2 ** 40], [2 ** 40, 1]], NonContiguousColors),
    ([[0, -1], [-1, 0]], NonContiguousColors),
    ([[0.5, 1], [1, 0]], NonContiguousColors),
    ([[0, 0], [0, 0]], DiagonalNotFiberUnion),
    ([[0, 1, 1], [2, 0, 1], [1, 2, 0]], TransposeNotClosed),
    ([[0, 1, 2, 2], [1, 0, 1, 2], [2, 1, 0, 1], [2, 2, 1, 0]], IntersectionNumberNotConstant),
    ([[0, 2], [2, 1]], IntersectionNumberNotConstant),
])
def test_verification_failures(matrix, error):
    with pytest.raises(error):
        verify_scheme(matrix)


def test_c4_witness_is_concrete():
    path = [[0, 1, 2, 2], [1, 0, 1, 2], [2, 1, 0, 1], [2, 2, 1, 0]]
    with pytest.raises(IntersectionNumberNotConstant) as info:
        verify_scheme(path)
    witness = info.value.witness
    assert witness.first_count != witness.second_count
    matrix = np.asarray(path)
    t = witness.relations[2]
    assert matrix[witness.first_pair] == t
    assert matrix[witness.second_pair] == t


def test_verified_matrix_is_read_only(fano):
    with pytest.raises(ValueError):
        fano.color_matrix[0, 0] = 1


def test_canonical_relabel_is_stable(fission):
    once = canonical_relabel(fission)
    twice = canonical_relabel(once)
    assert once.relation_count == fission.relation_count
    assert np.array_equal(once.color_matrix, twice.color_matrix)
    for color in range(once.relation_count - 1):
        assert (once.relation_meta[color].source_fiber, once.relation_meta[color].target_fiber) <= \
            (once.relation_meta[color + 1].source_fiber, once.relation_meta[color + 1].target_fiber)


@settings(max_examples=25, deadline=None)
@given(st.permutations(list(range(14))))
def test_point_relabelling_preserves_the_scheme(perm):
    fano = BATTERY["fano"]
    permuted = verify_scheme(fano.color_matrix[np.ix_(perm, perm)])
    assert permuted.relation_count == fano.relation_count
    assert sorted(len(f) for f in permuted.fibers) == [7, 7]
    degrees = sorted(degree_multiset(permuted, x, y) for x in range(2) for y in range(2))
    assert degrees == sorted(degree_multiset(fano, x, y) for x in range(2) for y in range(2))


def test_missing_color_witness_is_the_first_gap():
    with pytest.raises(NonContiguousColors) as info:
        verify_scheme([[0, 3], [3, 1]])
    assert info.value.witness == [2]


def test_brute_force_checks_every_pair():
    square = verify_scheme([[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]])
    path = np.array([[0, 1, 2, 2], [1, 0, 1, 2], [2, 1, 0, 1], [2, 2, 1, 0]])
    tampered = dataclasses.replace(square, color_matrix=path)
    with pytest.raises(IntersectionNumberNotConstant):
        brute_force_tensor(tampered)
