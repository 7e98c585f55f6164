"""
Classification and theorem checks on concrete schemes: balance,
half-homogeneity, p-valence, the thin-relation equivalence E_C,
reducedness, direct-sum detection and the transversal embedding.
"""

import logging
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from sympy import factorint, nextprime

from config import settings
from src.algebra import (
    IdempotentDecomposition,
    NonIntegralInvariant,
    central_primitive_idempotents,
    restriction_degrees,
)
from src.constructors import restriction, tensor_product, trivial_scheme
from src.core import Scheme, degree_multiset, relation
from src.schemas import (
    DirectSumSplit,
    EmbeddingReport,
    FiberRestriction,
    RelationRef,
    SchemeProfile,
    Theorem1Verdict,
    Theorem2Verdict,
    Theorem3Verdict,
    VerdictStatus,
)

logger = logging.getLogger(__name__)


class NotBalanced(ValueError):
    """The operation needs an r-balanced scheme."""


def block_counts(s: Scheme) -> np.ndarray:
    """|R_{X,Y}| for every ordered fiber pair."""
    counts = np.zeros((s.fiber_count, s.fiber_count), dtype=np.int64)
    for (x, y), colors in s.blocks.items():
        counts[x, y] = len(colors)
    return counts


def is_thin(s: Scheme, index: int) -> bool:
    meta = s.relation_meta[index]
    return meta.degree == 1 and meta.codegree == 1


def thin_cross_relations(s: Scheme) -> List[int]:
    return [
        c for c in range(s.relation_count)
        if is_thin(s, c) and s.relation_meta[c].source_fiber != s.relation_meta[c].target_fiber
    ]


def _components(size: int, edges: Iterable[Tuple[int, int]]) -> List[List[int]]:
    edges = list(edges)
    rows = [x for x, _ in edges]
    cols = [y for _, y in edges]
    graph = coo_matrix((np.ones(len(edges), dtype=np.int8), (rows, cols)), shape=(size, size))
    _, labels = connected_components(graph, directed=False)
    groups: Dict[int, List[int]] = {}
    for node, label in enumerate(labels):
        groups.setdefault(int(label), []).append(node)
    return sorted(groups.values(), key=lambda group: group[0])


def e_c_classes(s: Scheme) -> List[List[int]]:
    """Fiber classes joined by thin relations, each sorted, ordered by least fiber."""
    edges = [(s.relation_meta[c].source_fiber, s.relation_meta[c].target_fiber)
             for c in thin_cross_relations(s)]
    return _components(s.fiber_count, edges)


def e_c_is_equivalence(s: Scheme) -> bool:
    """Direct check that 'some thin relation in R_{X,Y}' is reflexive, symmetric and transitive."""
    joined = np.zeros((s.fiber_count, s.fiber_count), dtype=bool)
    for (x, y), colors in s.blocks.items():
        joined[x, y] = any(is_thin(s, c) for c in colors)
    if not joined.diagonal().all() or not np.array_equal(joined, joined.T):
        return False
    closure = (joined.astype(np.int64) @ joined.astype(np.int64)) > 0
    return bool(np.array_equal(closure, joined))


def _power_of(value: int, prime: int) -> bool:
    return value == 1 or set(factorint(value)) == {prime}


def p_valenced_primes(s: Scheme) -> List[int]:
    """Primes p such that every degree inside every fiber is a power of p."""
    degrees = {s.relation_meta[c].degree for x in range(s.fiber_count) for c in s.relations_between(x, x)}
    candidates = sorted({p for d in degrees for p in factorint(d)})
    return [p for p in candidates if all(_power_of(d, p) for d in degrees)]


def profile(s: Scheme) -> SchemeProfile:
    """Combinatorial profile of a scheme; no adjacency algebra involved."""
    logger.info(f"Profiling {s.point_count}-point scheme with {s.fiber_count} fibers")
    counts = block_counts(s)
    is_balanced = bool(np.all(counts == counts[0, 0]))
    sizes = [len(f) for f in s.fibers]
    half_homogeneous = len(set(sizes)) == 1
    classes = e_c_classes(s)

    thin = [relation(s, c) for c in thin_cross_relations(s)]
    return SchemeProfile(
        point_count=s.point_count,
        relation_count=s.relation_count,
        n=s.fiber_count,
        fiber_sizes=sizes,
        is_balanced=is_balanced,
        r=int(counts[0, 0]) if is_balanced else None,
        is_half_homogeneous=half_homogeneous,
        m=sizes[0] if half_homogeneous else None,
        is_reduced=all(len(c) == 1 for c in classes),
        p_valenced_primes=p_valenced_primes(s) if half_homogeneous else [],
        e_c_classes=classes,
        thin_relations=[RelationRef(index=h.index, source_fiber=h.source_fiber, target_fiber=h.target_fiber)
                        for h in thin],
        homogeneous_degrees=degree_multiset(s, 0, 0) if half_homogeneous else None,
        cross_degrees=degree_multiset(s, 0, 1) if half_homogeneous and s.fiber_count > 1 else None,
    )


def fiber_idempotents(s: Scheme, x: int, seed: int = settings.DEFAULT_SEED) -> List[np.ndarray]:
    """Central primitive idempotents of the homogeneous scheme on fiber X, computed on their own."""
    return list(central_primitive_idempotents(restriction(s, [x]), seed=seed).idempotents)


def _matches_fiber_idempotents(blocks: List[np.ndarray], local: List[np.ndarray], tol: float) -> bool:
    """Distinct blocks P_X, each equal to a different idempotent of the fiber algebra."""
    if len(blocks) != len(local):
        return False
    matched: Set[int] = set()
    for block in blocks:
        hits = [i for i, q in enumerate(local) if i not in matched and np.max(np.abs(block - q)) <= tol]
        if len(hits) != 1:
            return False
        matched.add(hits[0])
    return True


def check_theorem1(s: Scheme, dec: IdempotentDecomposition,
                   tol: float = settings.MATCH_TOL) -> Theorem1Verdict:
    """
    Check that restriction P -> P_X is a bijection onto the idempotents of
    every fiber with n_P = n * n_{P_X}, and that this happens exactly for
    balanced schemes.
    """
    n = s.fiber_count
    rows = []
    for x, fiber in enumerate(s.fibers):
        vanishing = [p for p in range(len(dec)) if x not in dec.supports[p]]
        present = [p for p in range(len(dec)) if x in dec.supports[p]]
        blocks = [dec.idempotents[p][np.ix_(fiber, fiber)] for p in present]
        injective = _matches_fiber_idempotents(blocks, fiber_idempotents(s, x, seed=dec.seed), tol)
        try:
            local = restriction_degrees(s, dec, x)
            degree_law = all(dec.degrees[p] == n * local[p][1] for p in present)
        except NonIntegralInvariant as e:
            logger.info(f"Fiber {x}: restriction is not primitive ({e})")
            degree_law = False
        rows.append(FiberRestriction(fiber=x, vanishing=vanishing, injective=injective, degree_law=degree_law))

    holds = all(not row.vanishing and row.injective and row.degree_law for row in rows)
    is_balanced = profile(s).is_balanced
    if holds != is_balanced:
        logger.error(f"Restriction bijectivity is {holds} but the scheme balance is {is_balanced}")
    return Theorem1Verdict(
        status=VerdictStatus.HOLDS if holds else VerdictStatus.FAILS,
        is_balanced=is_balanced,
        consistent=(holds == is_balanced),
        fibers=rows,
    )


def _is_trivial(counts: np.ndarray, s: Scheme) -> bool:
    return bool(np.all(counts == 1)) and all(len(f) == 1 for f in s.fibers)


def _two_part_shape(s: Scheme, counts: np.ndarray, trivial_part: List[int], rest: List[int]) -> bool:
    """C = C_U (+) C_U' with C_U 1-balanced (possibly empty) and C_U' 2-balanced."""
    if not rest:
        return False
    if any(len(s.fibers[x]) != 1 for x in trivial_part):
        return False
    if not all(counts[x, y] == 2 for x in rest for y in rest):
        return False
    return all(counts[x, y] == 1 and counts[y, x] == 1 for x in trivial_part for y in rest)


def check_theorem2(s: Scheme, dec: IdempotentDecomposition) -> Theorem2Verdict:
    """
    One central idempotent exactly for trivial schemes; two exactly for a
    trivial part plus a 2-balanced part joined by an internal direct sum.
    """
    counts = block_counts(s)
    count = len(dec)
    trivial = _is_trivial(counts, s)
    singletons = [x for x, f in enumerate(s.fibers) if len(f) == 1]
    others = [x for x, f in enumerate(s.fibers) if len(f) > 1]
    shaped = _two_part_shape(s, counts, singletons, others)

    if count == 1:
        return Theorem2Verdict(
            status=VerdictStatus.HOLDS if trivial else VerdictStatus.FAILS,
            idempotent_count=1,
            consistent=trivial,
            message="trivial scheme" if trivial else "single idempotent on a non-trivial scheme",
        )

    if count == 2:
        other = 1 - dec.principal_index
        rest = sorted(dec.supports[other])
        trivial_part = [x for x in range(s.fiber_count) if x not in dec.supports[other]]
        holds = _two_part_shape(s, counts, trivial_part, rest)
        return Theorem2Verdict(
            status=VerdictStatus.HOLDS if holds else VerdictStatus.FAILS,
            idempotent_count=2,
            consistent=holds,
            bipartition=(trivial_part, rest),
            message="1-balanced part (+) 2-balanced part" if holds else "no matching direct sum shape",
        )

    consistent = not trivial and not shaped
    if not consistent:
        logger.error(f"Scheme has the shape of a 1- or 2-idempotent scheme but {count} idempotents")
    return Theorem2Verdict(
        status=VerdictStatus.NOT_APPLICABLE,
        idempotent_count=count,
        consistent=consistent,
        bipartition=(singletons, others) if shaped else None,
        message=f"{count} central primitive idempotents",
    )


def check_theorem3(s: Scheme) -> Theorem3Verdict:
    """
    For reduced (m,n,r)-schemes: n must be 1 when m < 2r, or when some
    prime p not dividing m makes every fiber p-valenced.
    """
    prof = profile(s)
    if not (prof.is_balanced and prof.is_reduced and prof.is_half_homogeneous):
        return Theorem3Verdict(status=VerdictStatus.NOT_APPLICABLE, consistent=True,
                               n=prof.n, message="not a reduced (m,n,r)-scheme")

    m, n, r = prof.m, prof.n, prof.r
    small_m = m < 2 * r
    homogeneous = {s.relation_meta[c].degree for x in range(n) for c in s.relations_between(x, x)}
    if homogeneous == {1}:
        # thin fibers are p-valenced for every prime
        prime = 2
        while m % prime == 0:
            prime = int(nextprime(prime))
        coprime = [prime]
    else:
        coprime = [p for p in prof.p_valenced_primes if m % p]

    if small_m or coprime:
        holds = n == 1
        return Theorem3Verdict(
            status=VerdictStatus.HOLDS if holds else VerdictStatus.FAILS,
            consistent=holds, m=m, n=n, r=r,
            clause_small_m=small_m, clause_coprime_valenced=coprime,
            message="n = 1 as required" if holds else f"n = {n} although a hypothesis holds",
        )
    return Theorem3Verdict(status=VerdictStatus.HYPOTHESES_NOT_MET, consistent=True, m=m, n=n, r=r,
                           message="m >= 2r and no p-valence with p not dividing m")


def _thin_between(s: Scheme, x: int, y: int) -> Optional[int]:
    if x == y:
        return s.diagonal_relation(x)
    thin = [c for c in s.relations_between(x, y) if is_thin(s, c)]
    return thin[0] if thin else None


def _embeds(s: Scheme, target: Scheme, point_map: List[int]) -> bool:
    """psi is injective on points and induces an injective, well-defined map on colors."""
    if len(set(point_map)) != len(point_map):
        return False
    images = np.asarray(point_map)
    mapped = target.color_matrix[np.ix_(images, images)]
    color_map: Dict[int, int] = {}
    for source, image in zip(s.color_matrix.ravel().tolist(), mapped.ravel().tolist()):
        if color_map.setdefault(source, image) != image:
            return False
    return len(set(color_map.values())) == len(color_map)


def decompose_by_transversal(s: Scheme) -> EmbeddingReport:
    """
    Embed a balanced scheme into C_U tensor T_k, where U is the union of a
    transversal of E_C and k is the largest class size.

    Each fiber X in the class of the representative X0 is reached through
    the least-index thin relation R in R_{X0,X}; a point u of X maps to
    (u0, position of X in its class) where (u0, u) is in R.
    """
    prof = profile(s)
    if not prof.is_balanced:
        raise NotBalanced("decompose_by_transversal needs a balanced scheme")

    classes = prof.e_c_classes
    transversal = [c[0] for c in classes]
    width = max(len(c) for c in classes)
    logger.info(f"Embedding via transversal {transversal} into a tensor with T_{width}")

    u_points = sorted(p for x in transversal for p in s.fibers[x])
    position = {p: i for i, p in enumerate(u_points)}
    target = tensor_product(restriction(s, transversal), trivial_scheme(width))

    choices: Dict[int, int] = {}
    point_map = [-1] * s.point_count
    verified = True
    for members in classes:
        root = members[0]
        for slot, x in enumerate(members):
            thin = _thin_between(s, root, x)
            if thin is None:
                verified = False
                continue
            choices[x] = thin
            for u in s.fibers[x]:
                preimage = [u0 for u0 in s.fibers[root] if s.color_matrix[u0, u] == thin]
                point_map[u] = position[preimage[0]] * width + slot

    if verified and -1 not in point_map:
        verified = _embeds(s, target, point_map)
    else:
        verified = False

    class_isomorphic = []
    for members in classes:
        local = restriction(s, members).relation_count
        base = restriction(s, [members[0]]).relation_count
        class_isomorphic.append(verified and local == base * len(members) ** 2)

    return EmbeddingReport(
        transversal=transversal,
        e_c_classes=classes,
        thin_choices=choices,
        point_map=point_map,
        target_fiber_count=target.fiber_count,
        embedding_verified=verified,
        trivial_e_c=(len(classes) == 1),
        class_isomorphic=class_isomorphic,
    )


def is_direct_sum(s: Scheme, fibers: Iterable[int]) -> bool:
    """|R_{X,Y}| = 1 for every X in U and Y outside U (U a proper nonempty fiber subset)."""
    inside = set(fibers)
    outside = set(range(s.fiber_count)) - inside
    if not inside or not outside:
        return False
    counts = block_counts(s)
    return all(counts[x, y] == 1 for x in inside for y in outside)


def idempotent_direct_sum_criterion(s: Scheme, dec: IdempotentDecomposition, fibers: Iterable[int]) -> bool:
    """The idempotents meeting U and those meeting its complement share only P_0."""
    inside = set(fibers)
    outside = set(range(s.fiber_count)) - inside
    if not inside or not outside:
        return False
    meets_u: Set[int] = {p for p in range(len(dec)) if dec.supports[p] & inside}
    meets_rest: Set[int] = {p for p in range(len(dec)) if dec.supports[p] & outside}
    return meets_u & meets_rest == {dec.principal_index}


def find_direct_sum_split(s: Scheme, dec: Optional[IdempotentDecomposition] = None) -> Optional[DirectSumSplit]:
    """
    Finest decomposition into internal direct summands: connected components
    of the fiber graph with an edge wherever |R_{X,Y}| >= 2.
    """
    counts = block_counts(s)
    edges = [(x, y) for x in range(s.fiber_count) for y in range(s.fiber_count) if x != y and counts[x, y] >= 2]
    components = _components(s.fiber_count, edges)
    if len(components) == 1:
        return None

    criterion = None
    if dec is not None:
        criterion = all(idempotent_direct_sum_criterion(s, dec, c) for c in components)
        if not criterion:
            logger.error("Direct sum split disagrees with the idempotent support criterion")
    logger.info(f"Found direct sum split into {len(components)} summands")
    return DirectSumSplit(components=components, idempotent_criterion=criterion)


def fiber_subsets(s: Scheme) -> Iterable[FrozenSet[int]]:
    """Proper nonempty fiber subsets containing fiber 0 (each bipartition once)."""
    rest = list(range(1, s.fiber_count))
    for mask in range(2 ** len(rest)):
        chosen = frozenset([0] + [x for i, x in enumerate(rest) if mask >> i & 1])
        if len(chosen) < s.fiber_count:
            yield chosen
