"""
Scheme representation, axiom verification, fibers, degrees and the
intersection tensor.

A scheme is given by its color matrix: entry (u, v) is the index of the
basis relation containing the pair (u, v). Colors are 0-based and
contiguous. Verification checks the four coherence axioms and, on
success, returns an immutable :class:`Scheme` carrying the full tensor
of intersection numbers.
"""

import logging
from collections import Counter
from dataclasses import dataclass
from math import gcd, lcm
from typing import Dict, FrozenSet, Iterator, List, NamedTuple, Tuple

import numpy as np

logger = logging.getLogger(__name__)

Triple = Tuple[int, int, int]


class VerificationFailure(Exception):
    """A color matrix violates one of the scheme axioms."""
    axiom = "scheme"

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class EmptyMatrix(VerificationFailure):
    axiom = "C1"


class NonSquare(VerificationFailure):
    axiom = "shape"


class NonContiguousColors(VerificationFailure):
    axiom = "C1"


class DiagonalNotFiberUnion(VerificationFailure):
    axiom = "C2"


class TransposeNotClosed(VerificationFailure):
    axiom = "C3"


class IntersectionNumberNotConstant(VerificationFailure):
    axiom = "C4"


class IncompatibleRelations(ValueError):
    """Two relations cannot be multiplied: target(R) differs from source(S)."""


class C4Witness(NamedTuple):
    """Two pairs of the same relation T with different path counts through (R, S)."""
    relations: Triple
    first_pair: Tuple[int, int]
    second_pair: Tuple[int, int]
    first_count: int
    second_count: int


@dataclass(frozen=True)
class RelationMeta:
    source_fiber: int
    target_fiber: int
    degree: int
    codegree: int
    size: int


@dataclass(frozen=True)
class RelationHandle:
    index: int
    source_fiber: int
    target_fiber: int


@dataclass(frozen=True)
class IntersectionTensor:
    """Intersection numbers c_RS^T keyed by compatible (R, S, T) triples, zeros included."""
    constants: Dict[Triple, int]

    def __getitem__(self, triple: Triple) -> int:
        return self.constants.get(triple, 0)

    def __len__(self) -> int:
        return len(self.constants)

    def __iter__(self) -> Iterator[Triple]:
        return iter(self.constants)

    def items(self):
        return self.constants.items()


@dataclass(frozen=True, eq=False)
class Scheme:
    color_matrix: np.ndarray
    relation_count: int
    transpose_pairing: Tuple[int, ...]
    fibers: Tuple[Tuple[int, ...], ...]
    relation_meta: Tuple[RelationMeta, ...]
    tensor: IntersectionTensor
    point_fiber: Tuple[int, ...]
    blocks: Dict[Tuple[int, int], Tuple[int, ...]]

    @property
    def point_count(self) -> int:
        return int(self.color_matrix.shape[0])

    @property
    def fiber_count(self) -> int:
        return len(self.fibers)

    def relations_between(self, x: int, y: int) -> Tuple[int, ...]:
        """Color indices of the relations contained in X x Y, ascending."""
        return self.blocks[(x, y)]

    def diagonal_relation(self, x: int) -> int:
        first = self.fibers[x][0]
        return int(self.color_matrix[first, first])

    def degree(self, index: int) -> int:
        return self.relation_meta[index].degree

    def transpose(self, index: int) -> int:
        return self.transpose_pairing[index]


def _as_matrix(color_matrix) -> np.ndarray:
    try:
        matrix = np.asarray(color_matrix)
    except ValueError as e:
        raise NonSquare(f"Ragged color matrix: {e}") from e

    if matrix.dtype == object:
        raise NonSquare("Ragged color matrix")
    if matrix.size == 0:
        raise EmptyMatrix("Color matrix has no entries")
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise NonSquare(f"Color matrix has shape {matrix.shape}, expected n x n", witness=matrix.shape)

    if matrix.dtype.kind == 'f':
        if not np.all(np.equal(np.mod(matrix, 1), 0)):
            raise NonContiguousColors("Color matrix has non-integer entries")
    elif matrix.dtype.kind not in 'iub':
        raise NonContiguousColors(f"Color matrix has non-numeric dtype {matrix.dtype}")
    return matrix.astype(np.int64)


def _check_colors(matrix: np.ndarray) -> int:
    lowest = int(matrix.min())
    if lowest < 0:
        position = tuple(int(i) for i in np.argwhere(matrix == lowest)[0])
        raise NonContiguousColors(f"Negative color {lowest} at {position}", witness=position)

    used = np.unique(matrix)
    relation_count = len(used)
    if int(used[-1]) >= relation_count:
        # first gap in the sorted colors
        gaps = np.flatnonzero(used != np.arange(relation_count))
        first = int(gaps[0]) if len(gaps) else relation_count
        raise NonContiguousColors(
            f"Color {first} is never used but colors go up to {int(used[-1])}", witness=[first])
    return relation_count


def _find_fibers(matrix: np.ndarray) -> Tuple[Tuple[Tuple[int, ...], ...], np.ndarray]:
    n = matrix.shape[0]
    diagonal = np.diag(matrix)
    off_diagonal = matrix.copy()
    np.fill_diagonal(off_diagonal, -1)

    for color in np.unique(diagonal):
        hits = np.argwhere(off_diagonal == color)
        if len(hits):
            u, v = (int(i) for i in hits[0])
            raise DiagonalNotFiberUnion(
                f"Diagonal color {int(color)} also occurs off the diagonal at ({u}, {v})",
                witness=(int(color), (u, v)))

    groups: Dict[int, List[int]] = {}
    for point in range(n):
        groups.setdefault(int(diagonal[point]), []).append(point)
    # dict order is first occurrence, i.e. fibers sorted by smallest point
    fibers = tuple(tuple(points) for points in groups.values())

    point_fiber = np.empty(n, dtype=np.int64)
    for index, points in enumerate(fibers):
        point_fiber[list(points)] = index
    return fibers, point_fiber


def _transpose_pairing(matrix: np.ndarray, relation_count: int) -> Tuple[int, ...]:
    pairing = np.full(relation_count, -1, dtype=np.int64)
    flat = matrix.ravel()
    _, first = np.unique(flat, return_index=True)
    n = matrix.shape[0]
    for color, position in enumerate(first):
        u, v = divmod(int(position), n)
        pairing[color] = matrix[v, u]

    bad = np.argwhere(matrix.T != pairing[matrix])
    if len(bad):
        u, v = (int(i) for i in bad[0])
        color = int(matrix[u, v])
        raise TransposeNotClosed(
            f"Pair ({u}, {v}) has color {color} but ({v}, {u}) has color {int(matrix[v, u])}, "
            f"expected {int(pairing[color])}",
            witness=(u, v))
    return tuple(int(t) for t in pairing)


def _assign_blocks(matrix: np.ndarray, fibers, point_fiber: np.ndarray, relation_count: int):
    """Map each color to its single fiber block, or raise a (C4) witness."""
    n = matrix.shape[0]
    fiber_count = len(fibers)
    block_code = point_fiber[:, None] * fiber_count + point_fiber[None, :]
    source = np.full(relation_count, -1, dtype=np.int64)
    target = np.full(relation_count, -1, dtype=np.int64)

    flat = matrix.ravel()
    codes = block_code.ravel()
    order = np.argsort(flat, kind="stable")
    boundaries = np.searchsorted(flat[order], np.arange(relation_count + 1))

    for color in range(relation_count):
        positions = order[boundaries[color]:boundaries[color + 1]]
        color_codes = codes[positions]
        stray = np.flatnonzero(color_codes != color_codes[0])
        first = divmod(int(positions[0]), n)
        x, y = divmod(int(color_codes[0]), fiber_count)
        if len(stray):
            second = divmod(int(positions[stray[0]]), n)
            if point_fiber[second[0]] != x:
                relations = (int(matrix[fibers[x][0], fibers[x][0]]), color, color)
            else:
                relations = (color, int(matrix[fibers[y][0], fibers[y][0]]), color)
            witness = C4Witness(relations, first, second, 1, 0)
            raise IntersectionNumberNotConstant(
                f"Relation {color} spans several fiber blocks: {first} and {second}",
                witness=witness)
        source[color], target[color] = x, y

    blocks: Dict[Tuple[int, int], Tuple[int, ...]] = {}
    for x in range(fiber_count):
        for y in range(fiber_count):
            blocks[(x, y)] = tuple(int(c) for c in np.flatnonzero((source == x) & (target == y)))
    return source, target, blocks


def _block_indicators(matrix: np.ndarray, fibers, blocks, x: int, y: int) -> Dict[int, np.ndarray]:
    sub = matrix[np.ix_(fibers[x], fibers[y])]
    return {color: (sub == color).astype(np.int64) for color in blocks[(x, y)]}


def _intersection_tensor(matrix: np.ndarray, fibers, blocks) -> IntersectionTensor:
    fiber_count = len(fibers)
    indicators = {
        (x, y): _block_indicators(matrix, fibers, blocks, x, y)
        for x in range(fiber_count) for y in range(fiber_count)
    }
    constants: Dict[Triple, int] = {}

    for x in range(fiber_count):
        for y in range(fiber_count):
            for z in range(fiber_count):
                targets = indicators[(x, z)]
                for r, a_r in indicators[(x, y)].items():
                    for s, a_s in indicators[(y, z)].items():
                        paths = a_r @ a_s
                        for t, a_t in targets.items():
                            counts = paths[a_t.astype(bool)]
                            baseline = int(counts[0])
                            if np.any(counts != baseline):
                                _raise_c4(matrix, fibers, x, z, t, (r, s, t), paths, baseline)
                            constants[(r, s, t)] = baseline
    return IntersectionTensor(constants)


def _raise_c4(matrix, fibers, x, z, t, relations, paths, baseline):
    local = np.argwhere(matrix[np.ix_(fibers[x], fibers[z])] == t)
    first_local = tuple(int(i) for i in local[0])
    for i, j in local:
        if paths[i, j] != baseline:
            first = (fibers[x][first_local[0]], fibers[z][first_local[1]])
            second = (fibers[x][int(i)], fibers[z][int(j)])
            witness = C4Witness(relations, first, second, baseline, int(paths[i, j]))
            raise IntersectionNumberNotConstant(
                f"c_{relations[0]},{relations[1]}^{t} is {baseline} at {first} "
                f"but {int(paths[i, j])} at {second}",
                witness=witness)


def verify_scheme(color_matrix) -> Scheme:
    """
    Verify a color matrix against the coherence axioms.

    Args:
        color_matrix: Square integer matrix (nested lists or numpy array).

    Returns:
        The verified Scheme with relation metadata and intersection tensor.

    Raises:
        VerificationFailure: One of its subclasses names the violated axiom
            and carries a concrete witness.
    """
    matrix = _as_matrix(color_matrix)
    n = matrix.shape[0]
    logger.info(f"Verifying {n}x{n} color matrix")

    relation_count = _check_colors(matrix)
    fibers, point_fiber = _find_fibers(matrix)
    pairing = _transpose_pairing(matrix, relation_count)
    source, target, blocks = _assign_blocks(matrix, fibers, point_fiber, relation_count)
    tensor = _intersection_tensor(matrix, fibers, blocks)

    sizes = np.bincount(matrix.ravel(), minlength=relation_count)
    meta = []
    for color in range(relation_count):
        x, y = int(source[color]), int(target[color])
        size = int(sizes[color])
        meta.append(RelationMeta(
            source_fiber=x,
            target_fiber=y,
            degree=size // len(fibers[x]),
            codegree=size // len(fibers[y]),
            size=size,
        ))

    matrix.setflags(write=False)
    logger.info(f"Verified scheme: {n} points, {relation_count} relations, {len(fibers)} fibers")
    return Scheme(
        color_matrix=matrix,
        relation_count=relation_count,
        transpose_pairing=pairing,
        fibers=fibers,
        relation_meta=tuple(meta),
        tensor=tensor,
        point_fiber=tuple(int(f) for f in point_fiber),
        blocks=blocks,
    )


def relation(s: Scheme, index: int) -> RelationHandle:
    if not 0 <= index < s.relation_count:
        raise IndexError(f"Relation {index} out of range 0..{s.relation_count - 1}")
    meta = s.relation_meta[index]
    return RelationHandle(index, meta.source_fiber, meta.target_fiber)


def intersection_number(s: Scheme, r: RelationHandle, t_s: RelationHandle, t: RelationHandle) -> int:
    """c_RS^T, zero for incompatible triples."""
    return s.tensor[(r.index, t_s.index, t.index)]


def complex_product(s: Scheme, r: RelationHandle, t_s: RelationHandle) -> FrozenSet[RelationHandle]:
    """The relations T with c_RS^T > 0."""
    if r.target_fiber != t_s.source_fiber:
        raise IncompatibleRelations(
            f"Relation {r.index} ends in fiber {r.target_fiber} "
            f"but relation {t_s.index} starts in fiber {t_s.source_fiber}")
    return frozenset(
        relation(s, t)
        for t in s.relations_between(r.source_fiber, t_s.target_fiber)
        if s.tensor[(r.index, t_s.index, t)] > 0
    )


def degree_multiset(s: Scheme, x: int, y: int) -> List[int]:
    """Sorted degrees d_R of the relations in X x Y."""
    return sorted(s.relation_meta[c].degree for c in s.relations_between(x, y))


def compatible_triples(s: Scheme) -> Iterator[Triple]:
    for x in range(s.fiber_count):
        for y in range(s.fiber_count):
            for z in range(s.fiber_count):
                for r in s.relations_between(x, y):
                    for t_s in s.relations_between(y, z):
                        for t in s.relations_between(x, z):
                            yield r, t_s, t


def brute_force_tensor(s: Scheme) -> IntersectionTensor:
    """
    Recount every c_RS^T by looping over all point triples.

    Used as an oracle for the tensor built during verification. Every pair
    (u, v) of T is counted on its own and must give the same number.
    """
    logger.info(f"Brute-force counting intersection numbers on {s.point_count} points")
    matrix = s.color_matrix.tolist()
    n = s.point_count
    by_target: Dict[int, List[Tuple[int, int]]] = {}
    for r, t_s, t in compatible_triples(s):
        by_target.setdefault(t, []).append((r, t_s))

    constants: Dict[Triple, int] = {}
    for u in range(n):
        row = matrix[u]
        for v in range(n):
            t = row[v]
            paths = Counter((row[w], matrix[w][v]) for w in range(n))
            for r, t_s in by_target[t]:
                count = paths.get((r, t_s), 0)
                seen = constants.setdefault((r, t_s, t), count)
                if seen != count:
                    raise IntersectionNumberNotConstant(
                        f"Path count for {(r, t_s, t)} is {seen} on one pair of relation {t} "
                        f"and {count} on ({u}, {v})")
    return IntersectionTensor(constants)


def adjacency_matrix(s: Scheme, r: RelationHandle) -> np.ndarray:
    return (s.color_matrix == r.index).astype(np.int64)


def adjacency_stack(s: Scheme) -> np.ndarray:
    """All adjacency matrices as an array of shape (relations, n, n)."""
    colors = np.arange(s.relation_count)[:, None, None]
    return (s.color_matrix[None, :, :] == colors).astype(np.int64)


def check_structure_constants(s: Scheme) -> List[str]:
    """Return every violated identity among the intersection numbers (empty when all hold)."""
    c = s.tensor
    d = [m.degree for m in s.relation_meta]
    e = [m.codegree for m in s.relation_meta]
    tr = s.transpose_pairing
    violations: List[str] = []

    for x in range(s.fiber_count):
        for y in range(s.fiber_count):
            for z in range(s.fiber_count):
                for r in s.relations_between(x, y):
                    for t_s in s.relations_between(y, z):
                        targets = s.relations_between(x, z)
                        weighted = sum(c[(r, t_s, t)] * d[t] for t in targets)
                        if weighted != d[r] * d[t_s]:
                            violations.append(f"(i) d_R d_S != sum c d_T for R={r}, S={t_s}")
                        product = [t for t in targets if c[(r, t_s, t)] > 0]
                        if len(product) > gcd(d[r], d[t_s]):
                            violations.append(f"(viii) |RS| > gcd(d_R, d_S) for R={r}, S={t_s}")
                        for t in targets:
                            value = c[(r, t_s, t)]
                            lhs = value * d[t]
                            if lhs != c[(t, tr[t_s], r)] * d[r] or lhs != c[(tr[r], t, t_s)] * d[t_s]:
                                violations.append(f"(ii) weighted symmetry fails for ({r}, {t_s}, {t})")
                            if lhs % lcm(d[r], d[t_s]):
                                violations.append(f"(ii) lcm(d_R, d_S) does not divide c d_T for ({r}, {t_s}, {t})")
                            if value > min(d[r], e[t_s]):
                                violations.append(f"(iii) c > min(d_R, e_S) for ({r}, {t_s}, {t})")

                for r in s.relations_between(x, y):
                    for t in s.relations_between(x, z):
                        total = sum(c[(r, t_s, t)] for t_s in s.relations_between(y, z))
                        if total != d[r]:
                            violations.append(f"(iii) sum over S of c_RS^T != d_R for R={r}, T={t}")

            diagonal = s.diagonal_relation(x)
            for r in s.relations_between(x, y):
                for t_s in s.relations_between(y, x):
                    expected = d[r] if t_s == tr[r] else 0
                    if c[(r, t_s, diagonal)] != expected:
                        violations.append(f"(iv) c_RS^Delta != d_R delta for R={r}, S={t_s}")
    return violations


def check_adjacency_products(s: Scheme) -> List[Tuple[int, int]]:
    """Pairs (R, S) for which A_R A_S differs from sum_T c_RS^T A_T, exactly."""
    stack = adjacency_stack(s)
    failures = []
    for x in range(s.fiber_count):
        for y in range(s.fiber_count):
            for z in range(s.fiber_count):
                targets = s.relations_between(x, z)
                for r in s.relations_between(x, y):
                    for t_s in s.relations_between(y, z):
                        expected = sum(s.tensor[(r, t_s, t)] * stack[t] for t in targets)
                        if not np.array_equal(stack[r] @ stack[t_s], expected):
                            failures.append((r, t_s))
    return failures


def canonical_relabel(s: Scheme) -> Scheme:
    """Renumber colors by (source fiber, target fiber, first occurrence in row-major order)."""
    flat = s.color_matrix.ravel()
    _, first = np.unique(flat, return_index=True)
    keys = sorted(
        range(s.relation_count),
        key=lambda c: (s.relation_meta[c].source_fiber, s.relation_meta[c].target_fiber, int(first[c])),
    )
    relabel = np.empty(s.relation_count, dtype=np.int64)
    relabel[keys] = np.arange(s.relation_count)
    return verify_scheme(relabel[s.color_matrix])
