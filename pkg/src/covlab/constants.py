"""Numerical tolerances used across the package.

These are deliberately centralized: algebraic identities between estimator
forms are checked against REL_TOL_IDENTITY everywhere, and log-likelihood
factorizations against ABS_TOL_LOGLIK, so the contract is stated once.
"""

# Relative tolerance for algebraic identities between estimator forms.
REL_TOL_IDENTITY = 1e-12

# Absolute tolerance for log-likelihood factorization checks.
ABS_TOL_LOGLIK = 1e-10

# Log-likelihood values this close to the grid maximum are treated as tied.
# Ties occur exactly when the continuous population estimate is an integer.
TIE_TOL_SEARCH = 1e-9
