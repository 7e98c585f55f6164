"""
Adjacency algebra analysis: central primitive idempotents, their degrees
n_P and multiplicities m_P, restrictions to fibers, supports and the
principal idempotent.

The center is found as the null space of the integer system
[Z, A_S] = 0 for Z in span{A_R}. A generic central element is then
diagonalized; its eigenprojections are the central primitive idempotents.
"""

import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Tuple

import numpy as np
import scipy.linalg
import sympy

from config import settings
from src.core import Scheme, adjacency_stack
from src.schemas import IdempotentResiduals, IdempotentSummary

logger = logging.getLogger(__name__)


class AlgebraError(ArithmeticError):
    """Base class for adjacency algebra failures."""


class NumericalDegeneracy(AlgebraError):
    """No generic central element separated the idempotents."""


class NonIntegralInvariant(AlgebraError):
    """A trace or rank that must be an integer is not."""


class ConsistencyFailure(AlgebraError):
    """Algebraic and combinatorial counts disagree."""


@dataclass(frozen=True, eq=False)
class IdempotentDecomposition:
    idempotents: Tuple[np.ndarray, ...]
    degrees: Tuple[int, ...]
    multiplicities: Tuple[int, ...]
    supports: Tuple[FrozenSet[int], ...]
    principal_index: int
    seed: int
    attempts: int
    exact_center: bool

    def __len__(self) -> int:
        return len(self.idempotents)

    @property
    def principal(self) -> np.ndarray:
        return self.idempotents[self.principal_index]


def commutator_system(s: Scheme) -> np.ndarray:
    """Integer matrix whose null space is the center in relation coordinates."""
    k = s.relation_count
    blocks = np.zeros((k, k, k), dtype=np.int64)
    for (r, t_s, t), value in s.tensor.items():
        if value:
            blocks[t_s, t, r] += value
            blocks[r, t, t_s] -= value
    system = blocks.reshape(k * k, k)
    system = system[np.any(system != 0, axis=1)]
    if len(system) == 0:
        return np.zeros((1, k), dtype=np.int64)
    return np.unique(system, axis=0)


def center_basis(s: Scheme, exact: bool = False) -> np.ndarray:
    """Basis of Z(A) as columns of relation coefficients."""
    system = commutator_system(s)
    if not exact:
        return scipy.linalg.null_space(system.astype(float))

    logger.info(f"Solving commutator system ({system.shape[0]}x{system.shape[1]}) over the rationals")
    vectors = sympy.Matrix(system.tolist()).nullspace()
    basis = np.array([[float(x) for x in vector] for vector in vectors]).T
    return basis / np.linalg.norm(basis, axis=0)


def _cluster(values: np.ndarray, tol: float) -> List[List[int]]:
    order = sorted(range(len(values)), key=lambda i: (values[i].real, values[i].imag))
    clusters: List[List[int]] = []
    centers: List[complex] = []
    for i in order:
        for index, center in enumerate(centers):
            if abs(values[i] - center) < tol:
                clusters[index].append(i)
                centers[index] = np.mean(values[clusters[index]])
                break
        else:
            clusters.append([i])
            centers.append(values[i])
    return clusters


def _eigenprojections(element: np.ndarray, dimension: int, eigen_tol: float):
    """Lagrange projections of a central element, or None if its spectrum collides."""
    values = scipy.linalg.eigvals(element)
    radius = np.max(np.abs(values))
    if radius < eigen_tol:
        return None
    values = values / radius
    element = element / radius

    clusters = _cluster(values, eigen_tol)
    if len(clusters) != dimension:
        logger.warning(f"Generic element has {len(clusters)} eigenvalue clusters, expected {dimension}")
        return None

    centers = np.array([np.mean(values[c]) for c in clusters])
    if np.max(np.abs(centers.imag)) <= eigen_tol:
        centers = centers.real
        element = element.real
    identity = np.eye(element.shape[0], dtype=centers.dtype)

    projections = []
    for i, center in enumerate(centers):
        projection = identity.copy()
        for j, other in enumerate(centers):
            if i != j:
                projection = projection @ (element - other * identity) / (center - other)
        projections.append(projection)
    return projections


def _numeric_rank(stack: np.ndarray, rank_tol: float) -> int:
    singular = scipy.linalg.svdvals(stack)
    if singular.size == 0 or singular[0] == 0:
        return 0
    return int(np.sum(singular > rank_tol * singular[0]))


def _invariants(projection: np.ndarray, adjacency: np.ndarray, rank_tol: float) -> Tuple[int, int]:
    trace = np.trace(projection).real
    rank = int(round(trace))
    if abs(trace - rank) > settings.INTEGRALITY_TOL or rank < 1:
        raise NonIntegralInvariant(f"Idempotent trace {trace:.9f} is not a positive integer")

    stack = np.stack([(a @ projection).ravel() for a in adjacency])
    square = _numeric_rank(stack, rank_tol)
    degree = int(round(np.sqrt(square)))
    if degree * degree != square or degree < 1:
        raise NonIntegralInvariant(f"dim span{{A_R P}} = {square} is not a perfect square")
    if rank % degree:
        raise NonIntegralInvariant(f"trace {rank} is not divisible by degree {degree}")
    return rank // degree, degree


def principal_matrix(s: Scheme) -> np.ndarray:
    """P_0 = sum over fibers X of J_X / |X|."""
    p0 = np.zeros((s.point_count, s.point_count))
    for fiber in s.fibers:
        p0[np.ix_(fiber, fiber)] = 1.0 / len(fiber)
    return p0


def _supports(s: Scheme, projection: np.ndarray, support_tol: float) -> FrozenSet[int]:
    return frozenset(
        x for x, fiber in enumerate(s.fibers)
        if np.max(np.abs(projection[:, list(fiber)])) > support_tol
    )


def _sort_key(projection: np.ndarray, rank: int, support: FrozenSet[int]):
    first_row = projection[0]
    return (rank, tuple(sorted(support)),
            tuple(np.round(first_row.real, 6)), tuple(np.round(np.imag(first_row), 6)))


def _decompose(s: Scheme, basis: np.ndarray, seed: int, eigen_tol: float, rank_tol: float,
               idempotency_tol: float, retries: int):
    adjacency = adjacency_stack(s).astype(float)
    dimension = basis.shape[1]
    rng = np.random.default_rng(seed)

    for attempt in range(1, retries + 1):
        numerators = rng.integers(-997, 998, size=dimension)
        denominators = rng.integers(1, 998, size=dimension)
        coefficients = basis @ (numerators / denominators)
        element = np.tensordot(coefficients, adjacency, axes=1)

        projections = _eigenprojections(element, dimension, eigen_tol)
        if projections is None:
            logger.warning(f"Attempt {attempt}: spectrum collision, retrying with new coefficients")
            continue
        worst = max(np.max(np.abs(p @ p - p)) for p in projections)
        if worst > idempotency_tol:
            logger.warning(f"Attempt {attempt}: idempotency residual {worst:.2e}, retrying")
            continue
        return projections, attempt, adjacency
    raise NumericalDegeneracy(f"No generic central element after {retries} attempts")


def central_primitive_idempotents(s: Scheme, seed: int = settings.DEFAULT_SEED,
                                  eigen_tol: float = settings.EIGEN_CLUSTER_TOL,
                                  rank_tol: float = settings.RANK_TOL,
                                  idempotency_tol: float = settings.IDEMPOTENCY_TOL,
                                  retries: int = settings.GENERIC_RETRIES) -> IdempotentDecomposition:
    """
    Compute the central primitive idempotents of the adjacency algebra.

    Args:
        s: Verified scheme.
        seed: Seed for the random rational coefficients of the generic element.
        eigen_tol: Absolute eigenvalue clustering tolerance at unit spectral radius.
        rank_tol: Relative singular value cutoff for dim span{A_R P}.
        idempotency_tol: Bound on max |P^2 - P| accepted for a projection.
        retries: Generic elements tried before NumericalDegeneracy.

    Returns:
        The decomposition, principal idempotent included.
    """
    logger.info(f"Computing central primitive idempotents of a {s.point_count}-point scheme")
    try:
        return _build(s, False, seed, eigen_tol, rank_tol, idempotency_tol, retries)
    except NonIntegralInvariant as e:
        logger.warning(f"{e}; recomputing the center basis exactly")
        return _build(s, True, seed, eigen_tol, rank_tol, idempotency_tol, retries)


def _build(s: Scheme, exact: bool, seed, eigen_tol, rank_tol, idempotency_tol, retries) -> IdempotentDecomposition:
    basis = center_basis(s, exact=exact)
    projections, attempts, adjacency = _decompose(
        s, basis, seed, eigen_tol, rank_tol, idempotency_tol, retries)

    rows = []
    for projection in projections:
        multiplicity, degree = _invariants(projection, adjacency, rank_tol)
        support = _supports(s, projection, settings.SUPPORT_TOL)
        rows.append((projection, multiplicity, degree, support))

    if sum(d * d for _, _, d, _ in rows) != s.relation_count:
        raise NonIntegralInvariant(f"sum of n_P^2 differs from {s.relation_count} relations")
    if sum(m * d for _, m, d, _ in rows) != s.point_count:
        raise NonIntegralInvariant(f"sum of m_P n_P differs from {s.point_count} points")

    p0 = principal_matrix(s)
    residuals = [np.max(np.abs(row[0] - p0)) for row in rows]
    principal = int(np.argmin(residuals))
    if residuals[principal] > idempotency_tol * s.point_count:
        raise ConsistencyFailure(f"No idempotent matches sum J_X/|X| (residual {residuals[principal]:.2e})")

    head = rows.pop(principal)
    rows.sort(key=lambda row: _sort_key(row[0], row[1] * row[2], row[3]))
    rows.insert(0, head)

    logger.info(f"Found {len(rows)} central primitive idempotents after {attempts} attempt(s)")
    return IdempotentDecomposition(
        idempotents=tuple(row[0] for row in rows),
        degrees=tuple(row[2] for row in rows),
        multiplicities=tuple(row[1] for row in rows),
        supports=tuple(row[3] for row in rows),
        principal_index=0,
        seed=seed,
        attempts=attempts,
        exact_center=exact,
    )


def restrict_idempotent(s: Scheme, dec: IdempotentDecomposition, p_index: int,
                        fiber_set: Iterable[int]) -> np.ndarray:
    """P * I_U: the columns outside the chosen fibers are zeroed."""
    mask = np.zeros(s.point_count, dtype=bool)
    for x in fiber_set:
        mask[list(s.fibers[x])] = True
    projection = dec.idempotents[p_index]
    return projection * mask[None, :]


def support(s: Scheme, dec: IdempotentDecomposition, p_index: int) -> FrozenSet[int]:
    return dec.supports[p_index]


def restriction_degrees(s: Scheme, dec: IdempotentDecomposition, x: int,
                        rank_tol: float = settings.RANK_TOL) -> Dict[int, Tuple[int, int]]:
    """(m_{P_X}, n_{P_X}) for every P whose support contains X."""
    fiber = list(s.fibers[x])
    adjacency = adjacency_stack(s)[list(s.relations_between(x, x))][:, fiber][:, :, fiber].astype(float)
    degrees = {}
    for index, projection in enumerate(dec.idempotents):
        if x not in dec.supports[index]:
            continue
        block = projection[np.ix_(fiber, fiber)]
        degrees[index] = _invariants(block, adjacency, rank_tol)
    return degrees


def dim_A_XY(s: Scheme, dec: IdempotentDecomposition, x: int, y: int) -> int:
    """sum over shared support of n_{P_X} n_{P_Y}, checked against |R_{X,Y}|."""
    at_x = restriction_degrees(s, dec, x)
    at_y = restriction_degrees(s, dec, y)
    dimension = sum(at_x[p][1] * at_y[p][1] for p in at_x if p in at_y)
    expected = len(s.relations_between(x, y))
    if dimension != expected:
        raise ConsistencyFailure(
            f"dim A_XY from idempotents is {dimension} but fibers {x}, {y} carry {expected} relations")
    return dimension


def decomposition_residuals(s: Scheme, dec: IdempotentDecomposition) -> IdempotentResiduals:
    adjacency = adjacency_stack(s).astype(float)
    projections = dec.idempotents
    orthogonality = 0.0
    for i, p in enumerate(projections):
        for j, q in enumerate(projections):
            if i != j:
                orthogonality = max(orthogonality, float(np.max(np.abs(p @ q))))
    return IdempotentResiduals(
        idempotency=max(float(np.max(np.abs(p @ p - p))) for p in projections),
        orthogonality=orthogonality,
        centrality=max(float(np.max(np.abs(p @ a - a @ p))) for p in projections for a in adjacency),
        completeness=float(np.max(np.abs(sum(projections) - np.eye(s.point_count)))),
        trace_integrality=max(abs(np.trace(p).real - round(np.trace(p).real)) for p in projections),
    )


def summarize(dec: IdempotentDecomposition) -> List[IdempotentSummary]:
    return [
        IdempotentSummary(
            index=i,
            m=dec.multiplicities[i],
            n=dec.degrees[i],
            support=sorted(dec.supports[i]),
            principal=(i == dec.principal_index),
        )
        for i in range(len(dec))
    ]
