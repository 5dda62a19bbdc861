"""Documented defaults for solvers, analyses, evaluation and the command line. Every
value used when a caller leaves a setting unset lives here.
"""

DEFAULT_BETA = 1 / 3
"""Weight of pairwise coherence against local confidence.

With beta = 1/3 the edge distance reduces to 1 - (phi_i + psi + phi_j) / 3.
"""

DEFAULT_SEED = 20180301
"""Seed used by every randomized command when `--seed` is not given."""

BRUTE_FORCE_LIMIT = 10**6
"""Largest search space (product of candidate-set sizes) the exhaustive oracle
will enumerate."""

LBP_DAMPING = 0.5
"""Message damping for loopy belief propagation."""

LBP_TOLERANCE = 1e-6
"""LBP stops when the largest message change falls below this value."""

LBP_MAX_ITERATIONS = 50
"""Upper bound on synchronous LBP sweeps."""

PAGERANK_DAMPING = 0.15
"""Teleport probability of personalized PageRank."""

PAGERANK_TOLERANCE = 1e-8
"""PageRank stops when the L1 change of the score vector falls below this."""

PAGERANK_MAX_ITERATIONS = 100
"""Upper bound on PageRank power iterations."""

SUBSTITUTION_MAX_ITERATIONS = 100
"""Upper bound on hill-climbing rounds of iterative substitution."""

DENSENESS_MIN_ENTITIES = 4
"""Documents with fewer mentions give a fixed denseness value and are skipped."""

CV_FOLDS = 5
"""Number of folds used when selecting beta by cross validation."""

BETA_GRID = tuple(round(0.05 * i, 2) for i in range(21))
"""Default beta search grid: 0.00, 0.05, ..., 1.00."""

NIL_FRACTIONS = (0.0, 0.2, 0.4, 0.6)
"""Fractions of mentions turned into NIL mentions by the robustness experiment."""

PRIOR_SUM_SLACK = 1e-9
"""Tolerance on priors of one surface form summing to at most one."""

NIL_MIN_MENTIONS = 4
"""NIL robustness runs on medium-to-long documents only."""
