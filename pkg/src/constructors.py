"""
Scheme constructors: trivial schemes, tensor products, restrictions,
internal direct sums, symmetric designs, 2-orbit schemes and the bundled
fixtures. Every constructor returns a scheme that went through
verify_scheme.
"""

import logging
from typing import Iterable, List, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from config import settings
from src.core import Scheme, verify_scheme
from src.schemas import DesignInput, PermutationGroupInput
from src.storage import read_scheme

logger = logging.getLogger(__name__)


class ConstructionError(ValueError):
    """Invalid arguments to a scheme constructor."""


class InvalidTrivialSize(ConstructionError):
    pass


class EmptyFiberSet(ConstructionError):
    pass


class BadFiberIndex(ConstructionError):
    pass


class NotASymmetricDesign(ConstructionError):
    def __init__(self, reason: str):
        super().__init__(f"Not a symmetric design: {reason}")
        self.reason = reason


class UnknownFixture(ConstructionError):
    pass


def trivial_scheme(n: int) -> Scheme:
    """T_n: every pair (i, j) is its own relation, colored i*n + j."""
    if n < 1:
        raise InvalidTrivialSize(f"Trivial scheme needs n >= 1, got {n}")
    logger.info(f"Building trivial scheme T_{n}")
    return verify_scheme(np.arange(n * n, dtype=np.int64).reshape(n, n))


def tensor_product(a: Scheme, b: Scheme) -> Scheme:
    """Points u1*|V_b| + u2, relation R1 x R2 colored R1*|R_b| + R2."""
    n_a, n_b = a.point_count, b.point_count
    logger.info(f"Building tensor product of {n_a}- and {n_b}-point schemes")
    product = (a.color_matrix[:, None, :, None] * b.relation_count
               + b.color_matrix[None, :, None, :])
    return verify_scheme(product.reshape(n_a * n_b, n_a * n_b))


def _check_fibers(s: Scheme, fibers: Iterable[int]) -> List[int]:
    chosen = sorted(set(int(x) for x in fibers))
    if not chosen:
        raise EmptyFiberSet("Restriction needs at least one fiber")
    bad = [x for x in chosen if not 0 <= x < s.fiber_count]
    if bad:
        raise BadFiberIndex(f"Fiber indices {bad} outside 0..{s.fiber_count - 1}")
    return chosen


def restriction(s: Scheme, fibers: Iterable[int]) -> Scheme:
    """
    Restrict a scheme to the union U of the chosen fibers.

    Surviving colors keep their relative order, so restricting to every
    fiber reproduces the color matrix exactly.
    """
    chosen = _check_fibers(s, fibers)
    points = sorted(p for x in chosen for p in s.fibers[x])
    logger.info(f"Restricting to fibers {chosen} ({len(points)} points)")
    sub = s.color_matrix[np.ix_(points, points)]
    _, compressed = np.unique(sub, return_inverse=True)
    return verify_scheme(compressed.reshape(sub.shape))


def internal_direct_sum(a: Scheme, b: Scheme) -> Scheme:
    """
    Disjoint union with a single relation X x Y across every fiber pair.

    Colors: those of a, then those of b shifted by |R_a|, then one color
    per (fiber of a, fiber of b), then one per (fiber of b, fiber of a).
    """
    n_a, n_b = a.point_count, b.point_count
    f_a, f_b = a.fiber_count, b.fiber_count
    logger.info(f"Building internal direct sum of {n_a}- and {n_b}-point schemes")

    matrix = np.empty((n_a + n_b, n_a + n_b), dtype=np.int64)
    matrix[:n_a, :n_a] = a.color_matrix
    matrix[n_a:, n_a:] = b.color_matrix + a.relation_count

    forward = a.relation_count + b.relation_count
    backward = forward + f_a * f_b
    point_fiber_a = np.asarray(a.point_fiber)
    point_fiber_b = np.asarray(b.point_fiber)
    matrix[:n_a, n_a:] = forward + point_fiber_a[:, None] * f_b + point_fiber_b[None, :]
    matrix[n_a:, :n_a] = backward + point_fiber_b[:, None] * f_a + point_fiber_a[None, :]
    return verify_scheme(matrix)


def difference_set_design(v: int, base_block: Sequence[int]) -> DesignInput:
    """Incidence of the cyclic design with blocks base_block + i (mod v), i in Z_v."""
    base = {int(d) % v for d in base_block}
    incidence = [[1 if (point - block) % v in base else 0 for block in range(v)] for point in range(v)]
    return DesignInput(incidence=incidence)


def _design_parameters(incidence: np.ndarray):
    v, b = incidence.shape
    if v != b:
        raise NotASymmetricDesign(f"{v} points but {b} blocks")
    if v < 2:
        raise NotASymmetricDesign("fewer than 2 points")

    row_sums = incidence.sum(axis=1)
    column_sums = incidence.sum(axis=0)
    if np.any(row_sums != row_sums[0]):
        raise NotASymmetricDesign(f"points lie on different numbers of blocks: {sorted(set(row_sums.tolist()))}")
    if np.any(column_sums != column_sums[0]):
        raise NotASymmetricDesign(f"blocks have different sizes: {sorted(set(column_sums.tolist()))}")
    k = int(row_sums[0])
    if k != int(column_sums[0]):
        raise NotASymmetricDesign(f"replication {k} differs from block size {int(column_sums[0])}")
    if k == 0:
        raise NotASymmetricDesign("empty blocks")
    if k == v:
        raise NotASymmetricDesign("every block contains every point")

    shared = incidence @ incidence.T
    off_diagonal = shared[~np.eye(v, dtype=bool)]
    if np.any(off_diagonal != off_diagonal[0]):
        raise NotASymmetricDesign(
            f"point pairs share different numbers of blocks: {sorted(set(off_diagonal.tolist()))}")
    return v, k, int(off_diagonal[0])


def design_scheme(d: DesignInput) -> Scheme:
    """
    The (m,2,2)-scheme of a symmetric design on points X and blocks B.

    Colors: 0 diagonal of X, 1 diagonal of B, 2 distinct points, 3 distinct
    blocks, 4 incidence, 5 its transpose, 6 non-incidence, 7 its transpose.
    """
    incidence = np.asarray(d.incidence, dtype=np.int64)
    v, k, lam = _design_parameters(incidence)
    logger.info(f"Building design scheme for symmetric ({v},{k},{lam}) design")

    eye = np.eye(v, dtype=bool)
    matrix = np.empty((2 * v, 2 * v), dtype=np.int64)
    matrix[:v, :v] = np.where(eye, 0, 2)
    matrix[v:, v:] = np.where(eye, 1, 3)
    matrix[:v, v:] = np.where(incidence == 1, 4, 6)
    matrix[v:, :v] = np.where(incidence.T == 1, 5, 7)
    return verify_scheme(matrix)


def two_orbit_scheme(g: PermutationGroupInput) -> Scheme:
    """
    Relations are the orbits of the group on ordered pairs, numbered by
    their least pair in row-major order.
    """
    n = g.degree
    logger.info(f"Building 2-orbit scheme of {len(g.generators)} generator(s) on {n} points")
    pairs = np.arange(n * n)
    u, v = np.divmod(pairs, n)

    rows, cols = [], []
    for images in g.generators:
        image = np.asarray(images, dtype=np.int64)
        rows.append(pairs)
        cols.append(image[u] * n + image[v])
    rows_all = np.concatenate(rows)
    graph = coo_matrix((np.ones(len(rows_all), dtype=np.int8), (rows_all, np.concatenate(cols))),
                       shape=(n * n, n * n))
    _, labels = connected_components(graph, directed=True, connection="weak")

    # np.unique gives the first pair of each orbit; rank orbits by it
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    relabel = np.empty(len(order), dtype=np.int64)
    relabel[order] = np.arange(len(order))
    return verify_scheme(relabel[labels].reshape(n, n))


def load_fixture(name: str) -> Scheme:
    if name not in settings.FIXTURES:
        raise UnknownFixture(f"Unknown fixture {name!r}; available: {sorted(settings.FIXTURES)}")
    path = settings.FIXTURES_DIR / settings.FIXTURES[name]
    logger.info(f"Loading fixture {name} from {path}")
    return read_scheme(path)
