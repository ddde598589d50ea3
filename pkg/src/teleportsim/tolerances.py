"""Central numerical tolerance table.

Every validity check in the package reads from here so that the thresholds
are set in exactly one place.
"""

HERMITICITY_TOL = 1e-10   # max elementwise |rho - rho^dagger|
TRACE_TOL = 1e-9          # |tr(rho) - 1| for normalized states
PSD_TOL = 1e-9            # eigenvalues of rho must exceed -PSD_TOL
UNITARITY_TOL = 1e-10     # max elementwise |U^dagger U - 1|
IDEMPOTENCY_TOL = 1e-10   # projector check |P^2 - P|
PROB_SUM_TOL = 1e-9       # completeness of measurement probabilities
ZERO_PROB = 1e-12         # below this a measurement branch is reported as null
TRUNCATION_TOL = 1e-4     # allowed Poisson weight above the Fock cutoff
NORMALIZATION_TOL = 1e-12 # pure-state vector norm check
