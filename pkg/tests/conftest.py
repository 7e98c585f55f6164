"""
Shared schemes for the test suite.

The battery covers both bundled fixtures, small trivial schemes, products,
direct sums and a few 2-orbit schemes of permutation groups.
"""
from typing import Dict

import pytest

from src import algebra, constructors
from src.core import Scheme
from src.schemas import PermutationGroupInput

FANO_BASE_BLOCK = (0, 1, 3)

CYCLIC_7 = PermutationGroupInput(degree=7, generators=[[1, 2, 3, 4, 5, 6, 0]])
SYMMETRIC_3 = PermutationGroupInput(degree=3, generators=[[1, 0, 2], [1, 2, 0]])
KLEIN_TWO_ORBITS = PermutationGroupInput(degree=4, generators=[[1, 0, 2, 3], [0, 1, 3, 2]])


def build_battery() -> Dict[str, Scheme]:
    fano = constructors.load_fixture("fano-design")
    schemes = {
        "fission": constructors.load_fixture("as16-122-fission"),
        "fano": fano,
        "fano-x-t2": constructors.tensor_product(fano, constructors.trivial_scheme(2)),
        "fano-dsum-t1": constructors.internal_direct_sum(fano, constructors.trivial_scheme(1)),
        "fano-dsum-t3": constructors.internal_direct_sum(fano, constructors.trivial_scheme(3)),
        "cyclic7": constructors.two_orbit_scheme(CYCLIC_7),
        "symmetric3": constructors.two_orbit_scheme(SYMMETRIC_3),
        "klein": constructors.two_orbit_scheme(KLEIN_TWO_ORBITS),
    }
    for n in range(1, 6):
        schemes[f"t{n}"] = constructors.trivial_scheme(n)
    return schemes


BATTERY = build_battery()
SMALL = [name for name, s in BATTERY.items() if s.point_count <= 20]


@pytest.fixture(scope="session")
def battery() -> Dict[str, Scheme]:
    return BATTERY


@pytest.fixture(scope="session")
def fano() -> Scheme:
    return BATTERY["fano"]


@pytest.fixture(scope="session")
def fission() -> Scheme:
    return BATTERY["fission"]


_DECOMPOSITIONS: Dict[str, algebra.IdempotentDecomposition] = {}


@pytest.fixture(scope="session")
def decompose():
    """Cached central_primitive_idempotents by battery name."""
    def _get(name: str) -> algebra.IdempotentDecomposition:
        if name not in _DECOMPOSITIONS:
            _DECOMPOSITIONS[name] = algebra.central_primitive_idempotents(BATTERY[name])
        return _DECOMPOSITIONS[name]
    return _get
