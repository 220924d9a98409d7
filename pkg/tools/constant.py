# Numeric tolerances
ARCHIMEDEAN_TOLERANCE = 1e-12  # Tolerance for orthogonal/unitary factorizations
FAMILY_RELATIVE_TOLERANCE = 1e-8  # Relative tolerance for (G,M)-family identities
RECOLLEMENT_TOLERANCE = 1e-9  # Wall-matching tolerance for sampled walls
FINITE_DIFFERENCE_STEP = 1e-5  # Step for central differences in jet checks

# Precision
MPMATH_DIGITS = 30  # Working precision for gamma, polygamma and zeta values
JSON_FLOAT_DIGITS = 17  # Significant digits for floats in JSON output

# Euler products and lattice sums
DEFAULT_PRIME_CUTOFF = 10_000  # Primes below this are multiplied explicitly
DEFAULT_DEPTH = 8  # Maximal chain index for the numeric p-adic integrals
LATTICE_PRIME_CUTOFF = 50  # Primes below this get their own lattice sum in semi-local products
TAIL_HORIZON_FACTOR = 6  # Exact shell masses are computed up to this multiple of the depth
MAX_DIRECTION_ATTEMPTS = 64  # Candidate directions tried before giving up on a generic one

# Conjugator search
MAX_CONJUGATOR_ATTEMPTS = 200  # Integer combinations of nullspace vectors tried
CONJUGATOR_SEED = 20240601  # Seed for the random combinations after the fixed ones

# Output
SCHEMA_VERSION = "1.0"  # Version of the JSON documents emitted by the CLI
EXACT_TAG = "exact"  # Provenance for values computed without truncation

# Places
REAL_PLACE = "inf"  # Name of the archimedean place of Q
COMPLEX_PLACE = "complex"  # Name of the complex place
