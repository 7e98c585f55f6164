"""
Configuration settings for the coherent configuration toolkit.
"""

from pathlib import Path

# Paths
BASE_DIR = Path(__file__).resolve().parent.parent
DATA_DIR = BASE_DIR / "data"
FIXTURES_DIR = DATA_DIR / "fixtures"  # Bundled .cc schemes

# Bundled fixtures (name -> file under FIXTURES_DIR)
FIXTURES = {
    "as16-122-fission": "as16-122-fission.cc",
    "fano-design": "fano-design.cc",
}

# Numeric tolerances for the adjacency algebra
EIGEN_CLUSTER_TOL = 1e-7  # Absolute, after scaling the generic element to unit spectral radius
RANK_TOL = 1e-8  # Singular value cutoff relative to the largest
IDEMPOTENCY_TOL = 1e-8  # Max residual for P^2 = P, P_i P_j = 0 and centrality
INTEGRALITY_TOL = 1e-6  # Max distance of a trace from the nearest integer
SUPPORT_TOL = 1e-8  # Norm below which P restricted to a fiber counts as zero
MATCH_TOL = 1e-6  # Max entrywise gap between idempotents from two separate decompositions
GENERIC_RETRIES = 5  # Random central elements tried before giving up
DEFAULT_SEED = 20240611  # Seed for the generic central element

# Feasibility engine
TABLE_R_RANGE = (2, 5)  # Inclusive range of r in the table sweep
TABLE_M_MIN = 4  # Smallest m in the table sweep
TABLE_M_MAX = 16  # Runtime guard for the table sweep
CSP_NODE_LIMIT = 200_000  # Backtracking nodes per profile before giving up
CSP_SIDE_CONSTRAINTS = ("left-stabilizer-divides", "common-square-witness")

# Profiles eliminated only by geometric arguments on points (r, m, d_X, d_XY)
STRUCTURAL_ROWS = [
    (3, 8, (1, 1, 6), (2, 3, 3)),
    (4, 8, (1, 1, 2, 4), (2, 2, 2, 2)),
]
STRUCTURAL_NOTE = "requires structural argument (geometric witness)"

# Logging
LOG_LEVEL = "WARNING"  # Default level; --verbose lowers it to INFO
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
