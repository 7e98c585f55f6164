"""
Arithmetic elimination of degree profiles of hypothetical reduced
(m, n, r)-schemes with n >= 2.

A profile survives when no rule eliminates it. Surviving only means "not
eliminated by these rules"; it never proves that a scheme exists.
"""

import logging
import sys
from itertools import product
from math import gcd, lcm, prod
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Set, Tuple

from sympy import factorint, isprime
from sympy.utilities.iterables import ordered_partitions
from tqdm import tqdm

from config import settings
from src.core import Scheme
from src.schemas import CspResult, DegreeProfile, FilterStatus, FilterVerdict, TableEntry, TableReport

logger = logging.getLogger(__name__)

Catalog = Dict[int, List[List[int]]]
Vector = Tuple[int, ...]
Pair = Tuple[int, int]

RULES = (
    "m<2r",
    "catalog",
    "prime-m",
    "p-valenced",
    "coprime-transfer",
    "design-divisibility",
    "m=2r-structure",
    "symmetric-odd",
    "csp",
)
CROSS_RULES = {"coprime-transfer", "design-divisibility", "m=2r-structure", "csp"}
SIDE_CONSTRAINTS = ("left-stabilizer-divides", "common-square-witness")

EXTERNAL_NOTE = "eliminated externally — no homogeneous scheme exists"


class BudgetExhausted(Exception):
    """The backtracking search used up its node budget."""


def _partitions(m: int, r: int, smallest: int = 1) -> List[Vector]:
    if r < 1 or r > m:
        return []
    # ordered_partitions reuses its list between yields
    parts = [tuple(p) for p in ordered_partitions(m, r)]
    return sorted(p for p in parts if p[0] >= smallest)


def _home_candidates(m: int, r: int, catalog: Optional[Catalog]) -> List[Vector]:
    if catalog is not None and m in catalog:
        return sorted(tuple(sorted(d)) for d in catalog[m] if len(d) == r)
    return [p for p in _partitions(m, r) if p[0] == 1]


def enumerate_profiles(m: int, r: int, catalog: Optional[Catalog] = None) -> List[DegreeProfile]:
    """
    All (d_X, d_XY) pairs for an (m, r) entry: d_X has r parts summing to m
    and containing 1, d_XY has r parts summing to m, each at least 2.
    When 2r > m no cross multiset exists and the profiles carry d_X only.

    Args:
        m: Fiber size.
        r: Number of relations per fiber block.
        catalog: Known homogeneous degree multisets per m. When it lists m,
            d_X is drawn from it instead of from all partitions.
    """
    if m < 1 or r < 1 or r > m:
        return []
    if 2 * r > m:
        return [DegreeProfile(m=m, r=r, d_X=home) for home in _home_candidates(m, r, catalog)]
    cross = _partitions(m, r, smallest=2)
    return [DegreeProfile(m=m, r=r, d_X=home, d_XY=c)
            for home in _home_candidates(m, r, catalog) for c in cross]


def _fmt(values: Sequence[int]) -> str:
    return "{" + ",".join(str(v) for v in values) + "}"


def four_solution_count(m: int) -> int:
    """#{d in 1..m-1 : (m-1) | d(d-1)}."""
    return len(_design_degrees(m))


def _design_degrees(m: int) -> List[int]:
    return [d for d in range(1, m) if (d * (d - 1)) % (m - 1) == 0]


def _rule_small_m(p: DegreeProfile, catalog: Optional[Catalog]) -> Optional[str]:
    if p.m < 2 * p.r:
        return f"m={p.m} < 2r={2 * p.r} forces n = 1"
    return None


def _rule_catalog(p: DegreeProfile, catalog: Optional[Catalog]) -> Optional[str]:
    if catalog is None or p.m not in catalog:
        return None
    if list(p.d_X) not in [sorted(d) for d in catalog[p.m]]:
        return f"d_X={_fmt(p.d_X)}: {EXTERNAL_NOTE}"
    return None


def _rule_prime_m(p: DegreeProfile, catalog: Optional[Catalog]) -> Optional[str]:
    if not isprime(p.m) or p.r < 2:
        return None
    if (p.m - 1) % (p.r - 1):
        return f"m={p.m} prime but r-1={p.r - 1} does not divide m-1={p.m - 1}"
    d = (p.m - 1) // (p.r - 1)
    if p.d_X != (1,) + (d,) * (p.r - 1):
        return f"m={p.m} prime forces d_X={_fmt((1,) + (d,) * (p.r - 1))}"
    return None


def _rule_p_valenced(p: DegreeProfile, catalog: Optional[Catalog]) -> Optional[str]:
    primes = {q for d in p.d_X for q in factorint(d)}
    if len(primes) != 1:
        return None
    prime = primes.pop()
    if p.m % prime:
        return f"d_X={_fmt(p.d_X)} is {prime}-valenced and {prime} does not divide m={p.m}"
    return None


def _rule_coprime_transfer(p: DegreeProfile, catalog: Optional[Catalog]) -> Optional[str]:
    home = prod(p.d_X)
    for t in p.d_XY:
        if t > 1 and gcd(t, home) == 1:
            return f"cross degree {t} is coprime to the product {home} of d_X"
    return None


def _rule_design_divisibility(p: DegreeProfile, catalog: Optional[Catalog]) -> Optional[str]:
    if p.r != 2:
        return None
    solutions = _design_degrees(p.m)
    factors = factorint(p.m - 1)
    odd = [q for q in factors if q != 2]
    count = ""
    if 2 in factors and len(odd) == 1 and factors[odd[0]] == 1:
        count = f" (m-1=2^{factors[2]}*{odd[0]}: exactly {len(solutions)} solutions)"
    for d in p.d_XY:
        if (d * (d - 1)) % (p.m - 1):
            return (f"d={d}: d(d-1)={d * (d - 1)} is not a multiple of m-1={p.m - 1}; "
                    f"admissible d: {_fmt(solutions)}{count}")
    return None


def _rule_half_size(p: DegreeProfile, catalog: Optional[Catalog]) -> Optional[str]:
    if p.m != 2 * p.r:
        return None
    if any(t != 2 for t in p.d_XY):
        return f"m=2r needs d_XY={_fmt((2,) * p.r)}"
    if any(d not in (1, 2, 4) for d in p.d_X):
        return "m=2r needs d_X within {1,2,4}"
    if p.d_X.count(1) != 2 * p.d_X.count(4):
        return "m=2r needs twice as many degree-1 as degree-4 relations in d_X"
    return None


def _rule_symmetric_odd(p: DegreeProfile, catalog: Optional[Catalog]) -> Optional[str]:
    if p.r != 3 or p.m % 2 == 0:
        return None
    odd = [d for d in p.d_X if d > 1 and d % 2]
    if odd:
        return f"m odd, r=3: fibers are symmetric so degree {odd[0]} must be even"
    return None


_ARITHMETIC_RULES = {
    "m<2r": _rule_small_m,
    "catalog": _rule_catalog,
    "prime-m": _rule_prime_m,
    "p-valenced": _rule_p_valenced,
    "coprime-transfer": _rule_coprime_transfer,
    "design-divisibility": _rule_design_divisibility,
    "m=2r-structure": _rule_half_size,
    "symmetric-odd": _rule_symmetric_odd,
}


def _check_rules(rules: Optional[Sequence[str]]) -> List[str]:
    if rules is None:
        return list(RULES)
    unknown = set(rules) - set(RULES)
    if unknown:
        raise ValueError(f"Unknown rules {sorted(unknown)}; known: {list(RULES)}")
    return [rule for rule in RULES if rule in rules]


def apply_rules(p: DegreeProfile, rules: Optional[Sequence[str]] = None,
                catalog: Optional[Catalog] = None,
                side_constraints: Sequence[str] = settings.CSP_SIDE_CONSTRAINTS,
                node_limit: int = settings.CSP_NODE_LIMIT) -> FilterVerdict:
    """
    Run the rules in their fixed order and stop at the first elimination.

    Rules that look at d_XY are skipped for profiles without cross degrees.
    """
    trace = []
    for rule in _check_rules(rules):
        if rule in CROSS_RULES and not p.d_XY:
            continue
        if rule == "csp":
            result = solve_csp(p, side_constraints=side_constraints, node_limit=node_limit, catalog=catalog)
            trace.extend(result.trace)
            if result.exhausted:
                trace.append(f"csp: inconclusive after {result.nodes} nodes")
                continue
            if not result.feasible:
                return FilterVerdict(profile=p, status=FilterStatus.ELIMINATED, rule=rule, trace=trace)
            trace.append(f"csp: assignment found after {result.nodes} nodes")
            continue

        reason = _ARITHMETIC_RULES[rule](p, catalog)
        if reason:
            trace.append(f"{rule}: {reason}")
            return FilterVerdict(profile=p, status=FilterStatus.ELIMINATED, rule=rule, trace=trace)
        trace.append(f"{rule}: passed")
    return FilterVerdict(profile=p, status=FilterStatus.SURVIVES, trace=trace)


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def spend(self) -> None:
        self.used += 1
        if self.used > self.limit:
            raise BudgetExhausted(f"node budget of {self.limit} exhausted")


def _pairings(degrees: Sequence[int]) -> Iterator[Vector]:
    """Involutions on home relation indices fixing the diagonal 0 and preserving degree."""
    tau = list(range(len(degrees)))

    def extend(free: List[int]) -> Iterator[Vector]:
        if not free:
            yield tuple(tau)
            return
        first, rest = free[0], free[1:]
        yield from extend(rest)
        for i, other in enumerate(rest):
            if degrees[other] == degrees[first]:
                tau[first], tau[other] = other, first
                yield from extend(rest[:i] + rest[i + 1:])
                tau[first], tau[other] = first, other

    yield from extend(list(range(1, len(degrees))))


def _coordinate_values(h: int, si: int, sj: int) -> List[int]:
    """Admissible c_{S_i S_j^t}^H for a home relation H of degree h."""
    values = []
    for v in range(min(si, sj) + 1):
        c = v * h
        if c % lcm(si, sj) or c % lcm(h, sj) or c % lcm(si, h):
            continue
        if c // si > min(h, sj) or c // sj > min(si, h):
            continue
        values.append(v)
    return values


def _pair_domain(home: Sequence[int], si: int, sj: int, diagonal: bool, tau: Vector) -> List[Vector]:
    """Vectors (c_{S_i S_j^t}^{H_k})_k satisfying the degree equation and the per-entry bounds."""
    r = len(home)
    choices = [_coordinate_values(home[k], si, sj) for k in range(r)]
    start = si if diagonal else 0
    found: List[Vector] = []

    def extend(k: int, remaining: int, prefix: List[int]) -> None:
        if k == r:
            if remaining == 0:
                found.append(tuple(prefix))
            return
        for v in choices[k]:
            if v * home[k] > remaining:
                break
            prefix.append(v)
            extend(k + 1, remaining - v * home[k], prefix)
            prefix.pop()

    extend(1, si * sj - start, [start])
    if diagonal:
        found = [v for v in found if all(v[tau[k]] == v[k] for k in range(r))]
    return found


def _stabilizer_ok(home: Sequence[int], sj: int, vector: Vector) -> bool:
    """Total degree of H with H S_j = {S_j} divides gcd(m, d_{S_j})."""
    stabilizer = sum(h for h, v in zip(home, vector) if v == sj)
    return gcd(sum(home), sj) % stabilizer == 0


class _Search:
    """
    Backtracking over the cross pairs (i <= j) of one fiber system.

    The pair (j, i) is the transpose of (i, j) under the pairing tau; row i
    of the full table must sum to d_{S_i} for every home relation.
    """

    def __init__(self, home: Sequence[int], cross: Sequence[int], tau: Vector,
                 budget: _Budget, stabilizer: bool):
        self.home = tuple(home)
        self.cross = tuple(cross)
        self.tau = tau
        self.budget = budget
        r = len(cross)
        pairs = [(i, j) for i in range(r) for j in range(i, r)]

        self.domains: Dict[Pair, List[Vector]] = {}
        for i, j in pairs:
            domain = _pair_domain(self.home, cross[i], cross[j], i == j, tau)
            if i == j and stabilizer:
                domain = [v for v in domain if _stabilizer_ok(self.home, cross[j], v)]
            self.domains[(i, j)] = domain

        self.order = sorted(pairs, key=lambda pair: (len(self.domains[pair]), pair))
        self.sums = [[0] * len(home) for _ in range(r)]
        self.open = [r] * r
        self.assigned: Dict[Pair, Vector] = {}

    def empty_pair(self) -> Optional[Pair]:
        for pair in self.order:
            if not self.domains[pair]:
                return pair
        return None

    def _add(self, pair: Pair, vector: Vector, sign: int) -> None:
        i, j = pair
        for k, v in enumerate(vector):
            self.sums[i][k] += sign * v
        self.open[i] -= sign
        if i != j:
            for k in range(len(vector)):
                self.sums[j][k] += sign * vector[self.tau[k]]
            self.open[j] -= sign

    def _consistent(self, pair: Pair) -> bool:
        for row in set(pair):
            target = self.cross[row]
            if self.open[row] == 0:
                if any(total != target for total in self.sums[row]):
                    return False
            elif any(total > target for total in self.sums[row]):
                return False
        return True

    def solutions(self) -> Iterator[Dict[Pair, Vector]]:
        yield from self._extend(0)

    def _extend(self, depth: int) -> Iterator[Dict[Pair, Vector]]:
        if depth == len(self.order):
            yield dict(self.assigned)
            return
        pair = self.order[depth]
        for vector in self.domains[pair]:
            self.budget.spend()
            self._add(pair, vector, 1)
            if self._consistent(pair):
                self.assigned[pair] = vector
                yield from self._extend(depth + 1)
                del self.assigned[pair]
            self._add(pair, vector, -1)


def _expand(solution: Dict[Pair, Vector], tau: Vector) -> Dict[Pair, Vector]:
    full = {}
    for (i, j), vector in solution.items():
        full[(i, j)] = vector
        if i != j:
            full[(j, i)] = tuple(vector[tau[k]] for k in range(len(vector)))
    return full


Signature = Tuple[FrozenSet[Pair], FrozenSet[Pair]]


def _signature(full: Dict[Pair, Vector], r: int) -> Signature:
    """(pairs with some constant >= 2, pairs whose squares share a non-diagonal home relation)."""
    high = frozenset((i, j) for i in range(r) for j in range(i + 1, r) if max(full[(i, j)]) >= 2)
    shared = frozenset(
        (i, j) for i in range(r) for j in range(i + 1, r)
        if any(full[(i, i)][k] > 0 and full[(j, j)][k] > 0 for k in range(1, r))
    )
    return high, shared


def _empty_pair_trace(home: Sequence[int], cross: Sequence[int], pair: Pair, tau: Vector) -> str:
    i, j = pair
    target = cross[i] * cross[j] - (cross[i] if i == j else 0)
    terms = " + ".join(f"{home[k]}*c{k}" for k in range(1, len(home)))
    return (f"pairing {list(tau)}: c(S{i},S{j}^t) needs {target} = {terms} "
            f"with c <= {min(cross[i], cross[j])} and lcm divisibility; no solution")


def _assignment(side: str, full: Dict[Pair, Vector]) -> Dict[str, int]:
    return {f"{side}:{i},{j}|{k}": v for (i, j), vector in sorted(full.items()) for k, v in enumerate(vector)}


def _second_fiber_candidates(p: DegreeProfile, catalog: Optional[Catalog]) -> List[Vector]:
    candidates = []
    for home in _home_candidates(p.m, p.r, catalog):
        other = DegreeProfile(m=p.m, r=p.r, d_X=home, d_XY=p.d_XY)
        if all(_ARITHMETIC_RULES[rule](other, catalog) is None for rule in _ARITHMETIC_RULES):
            candidates.append(home)
    return candidates


def _second_fiber_signatures(p: DegreeProfile, stabilizer: bool, catalog: Optional[Catalog],
                             budget: _Budget) -> Dict[Signature, Tuple[Vector, Vector, Dict[Pair, Vector]]]:
    """Signatures of every second-fiber system, with one witness each."""
    witnesses = {}
    for home in _second_fiber_candidates(p, catalog):
        for tau in _pairings(home):
            search = _Search(home, p.d_XY, tau, budget, stabilizer)
            if search.empty_pair() is not None:
                continue
            for solution in search.solutions():
                full = _expand(solution, tau)
                witnesses.setdefault(_signature(full, p.r), (home, tau, full))
    return witnesses


def solve_csp(p: DegreeProfile, side_constraints: Sequence[str] = settings.CSP_SIDE_CONSTRAINTS,
              node_limit: int = settings.CSP_NODE_LIMIT, hint: Optional[CspResult] = None,
              catalog: Optional[Catalog] = None) -> CspResult:
    """
    Search for intersection numbers c_{S_i S_j^t}^{H_k} (S_i cross, H_k home)
    consistent with a degree profile.

    Args:
        p: Profile to test.
        side_constraints: Named extra constraints to enforce, a subset of
            SIDE_CONSTRAINTS.
        node_limit: Backtracking nodes per phase before giving up.
        hint: Assignment tried before searching, e.g. from a realized scheme.
        catalog: Homogeneous degree catalog for second-fiber candidates.

    Returns:
        CspResult; exhausted=True means the search was inconclusive.
    """
    unknown = set(side_constraints) - set(SIDE_CONSTRAINTS)
    if unknown:
        raise ValueError(f"Unknown side constraints {sorted(unknown)}; known: {list(SIDE_CONSTRAINTS)}")
    if not p.d_XY:
        return CspResult(feasible=True, trace=["no cross relations: vacuously feasible"])
    if hint is not None and check_assignment(p, hint, side_constraints):
        return hint.model_copy(update={"feasible": True, "trace": hint.trace + ["hint satisfies every constraint"]})

    stabilizer = "left-stabilizer-divides" in side_constraints
    trace = [f"side constraints: {', '.join(side_constraints) or 'none'}"]
    nodes = 0

    witnesses = None
    if "common-square-witness" in side_constraints:
        budget = _Budget(node_limit)
        try:
            witnesses = _second_fiber_signatures(p, stabilizer, catalog, budget)
        except BudgetExhausted:
            trace.append("common-square-witness: second-fiber enumeration hit the node budget, coupling skipped")
            witnesses = None
        else:
            if not witnesses:
                trace.append("common-square-witness: no second fiber admits a system with these cross degrees")
                return CspResult(feasible=False, nodes=budget.used, trace=trace)
        nodes += budget.used

    budget = _Budget(node_limit)
    try:
        for tau in _pairings(p.d_X):
            search = _Search(p.d_X, p.d_XY, tau, budget, stabilizer)
            empty = search.empty_pair()
            if empty is not None:
                trace.append(_empty_pair_trace(p.d_X, p.d_XY, empty, tau))
                continue
            for solution in search.solutions():
                full = _expand(solution, tau)
                result = {"feasible": True, "assignment": _assignment("X", full), "pairing": list(tau)}
                if witnesses is not None:
                    high, shared = _signature(full, p.r)
                    match = witnesses.get((shared, high))
                    if match is None:
                        continue
                    home_y, tau_y, full_y = match
                    result["assignment"].update(_assignment("Y", full_y))
                    result.update(pairing_y=list(tau_y), d_Y=home_y)
                return CspResult(nodes=nodes + budget.used, trace=trace, **result)
            trace.append(f"pairing {list(tau)}: no assignment satisfies the row sums"
                         + (" and the common-square coupling" if witnesses is not None else ""))
    except BudgetExhausted:
        logger.warning(f"CSP for {p.label()} hit the node budget of {node_limit}")
        trace.append(f"node budget of {node_limit} exhausted")
        return CspResult(feasible=False, exhausted=True, nodes=nodes + budget.used, trace=trace)
    return CspResult(feasible=False, nodes=nodes + budget.used, trace=trace)


def _read_side(assignment: Dict[str, int], side: str, r: int) -> Optional[Dict[Pair, Vector]]:
    full = {}
    for i, j in product(range(r), repeat=2):
        keys = [f"{side}:{i},{j}|{k}" for k in range(r)]
        if any(key not in assignment for key in keys):
            return None
        full[(i, j)] = tuple(assignment[key] for key in keys)
    return full


def _valid_system(home: Sequence[int], cross: Sequence[int], tau: Vector,
                  full: Dict[Pair, Vector], stabilizer: bool) -> bool:
    r = len(cross)
    if tau not in set(_pairings(home)):
        return False
    for i in range(r):
        for j in range(i, r):
            vector = full[(i, j)]
            if vector not in _pair_domain(home, cross[i], cross[j], i == j, tau):
                return False
            if i == j and stabilizer and not _stabilizer_ok(home, cross[j], vector):
                return False
            if full[(j, i)] != tuple(vector[tau[k]] for k in range(r)):
                return False
    return all(
        sum(full[(i, j)][k] for j in range(r)) == cross[i]
        for i in range(r) for k in range(r)
    )


def check_assignment(p: DegreeProfile, result: CspResult,
                     side_constraints: Sequence[str] = settings.CSP_SIDE_CONSTRAINTS) -> bool:
    """Whether an assignment satisfies every constraint solve_csp enforces."""
    if not p.d_XY:
        return True
    stabilizer = "left-stabilizer-divides" in side_constraints
    full_x = _read_side(result.assignment, "X", p.r)
    if full_x is None or len(result.pairing) != p.r:
        return False
    if not _valid_system(p.d_X, p.d_XY, tuple(result.pairing), full_x, stabilizer):
        return False
    if "common-square-witness" not in side_constraints:
        return True

    full_y = _read_side(result.assignment, "Y", p.r)
    if full_y is None or result.d_Y is None or len(result.pairing_y) != p.r:
        return False
    home_y = tuple(result.d_Y)
    if sum(home_y) != p.m or home_y[0] != 1:
        return False
    if not _valid_system(home_y, p.d_XY, tuple(result.pairing_y), full_y, stabilizer):
        return False
    high_x, shared_x = _signature(full_x, p.r)
    high_y, shared_y = _signature(full_y, p.r)
    return high_x == shared_y and shared_x == high_y


def _home_order(s: Scheme, x: int) -> List[int]:
    return sorted(s.relations_between(x, x),
                  key=lambda c: (s.degree(c), c != s.diagonal_relation(x), c))


def assignment_from_scheme(s: Scheme, x: int, y: int) -> Tuple[DegreeProfile, CspResult]:
    """
    Read the modeled intersection numbers off a concrete scheme for the
    fiber pair (X, Y). Raises ValueError when (X, Y) does not look like
    a pair of fibers of a reduced balanced scheme.
    """
    home_x, home_y = _home_order(s, x), _home_order(s, y)
    cross = sorted(s.relations_between(x, y), key=lambda c: (s.degree(c), c))
    profile = DegreeProfile(
        m=len(s.fibers[x]),
        r=len(home_x),
        d_X=[s.degree(c) for c in home_x],
        d_XY=[s.degree(c) for c in cross],
    )

    full_x, full_y = {}, {}
    for i, si in enumerate(cross):
        for j, sj in enumerate(cross):
            full_x[(i, j)] = tuple(s.tensor[(si, s.transpose(sj), h)] for h in home_x)
            full_y[(i, j)] = tuple(s.tensor[(s.transpose(si), sj, t)] for t in home_y)

    position_x = {c: k for k, c in enumerate(home_x)}
    position_y = {c: k for k, c in enumerate(home_y)}
    result = CspResult(
        feasible=True,
        assignment={**_assignment("X", full_x), **_assignment("Y", full_y)},
        pairing=[position_x[s.transpose(c)] for c in home_x],
        pairing_y=[position_y[s.transpose(c)] for c in home_y],
        d_Y=tuple(s.degree(c) for c in home_y),
        trace=[f"realized by fibers {x} and {y}"],
    )
    return profile, result


def _entry_notes(r: int, m: int, survivors: List[DegreeProfile], eliminated: List[FilterVerdict],
                 catalog: Optional[Catalog]) -> List[str]:
    notes = []
    structural = {(row[0], row[1], row[2], row[3]) for row in settings.STRUCTURAL_ROWS}
    for p in survivors:
        if (r, m, p.d_X, p.d_XY) in structural:
            notes.append(f"{p.label()}: {settings.STRUCTURAL_NOTE}")
    if survivors and catalog is None:
        notes.append("unverified d_X")
    if survivors and r == 2:
        notes.append(f"d_XY = {{γ, m−γ}} with (m−1) | γ(γ−1): γ in {_fmt(_design_degrees(m)[1:-1])}")
    notes.extend(f"d_X={_fmt(v.profile.d_X)}: {EXTERNAL_NOTE}"
                 for v in eliminated if v.rule == "catalog")
    return list(dict.fromkeys(notes))


def table_report(m_max: int = settings.TABLE_M_MAX, catalog: Optional[Catalog] = None,
                 side_constraints: Sequence[str] = settings.CSP_SIDE_CONSTRAINTS,
                 node_limit: int = settings.CSP_NODE_LIMIT) -> TableReport:
    """Sweep r in 2..5 and m in 4..m_max through enumerate_profiles and apply_rules."""
    if m_max > settings.TABLE_M_MAX:
        raise ValueError(f"m_max={m_max} exceeds the table limit {settings.TABLE_M_MAX}")
    r_low, r_high = settings.TABLE_R_RANGE
    cells = [(r, m) for r in range(r_low, r_high + 1) for m in range(settings.TABLE_M_MIN, m_max + 1)]
    logger.info(f"Building feasibility table for {len(cells)} (r, m) entries")

    entries = []
    for r, m in tqdm(cells, desc="table", file=sys.stderr, disable=None):
        if m < 2 * r:
            entries.append(TableEntry(r=r, m=m, status=FilterStatus.ELIMINATED, rule="m<2r"))
            continue
        survivors: List[DegreeProfile] = []
        eliminated: List[FilterVerdict] = []
        for p in enumerate_profiles(m, r):
            verdict = apply_rules(p, catalog=catalog, side_constraints=side_constraints, node_limit=node_limit)
            if verdict.status == FilterStatus.SURVIVES:
                survivors.append(p)
            else:
                eliminated.append(verdict)

        rules: Set[str] = {v.rule for v in eliminated}
        entries.append(TableEntry(
            r=r,
            m=m,
            status=FilterStatus.SURVIVES if survivors else FilterStatus.ELIMINATED,
            rule=None if survivors else ",".join(rule for rule in RULES if rule in rules) or None,
            survivors=survivors,
            eliminated=eliminated,
            notes=_entry_notes(r, m, survivors, eliminated, catalog),
        ))
    return TableReport(m_max=m_max, catalog_used=catalog is not None, entries=entries)
