"""Numerical tolerances shared by the library and the test-suite."""

ALGEBRAIC = 1e-10        # hermiticity, trace, unitarity, imaginary residue
ROUND_TRIP = 1e-12       # tensor/partial-trace round trips, POVM completeness
LIFT_PROPERTY = 1e-9     # unitarity / homomorphism of lifted random unitaries
MIN_PROBABILITY = 1e-14  # below this an outcome cannot be conditioned on
FIDELITY = 1e-9          # fidelity comparisons

CUTOFF = 2               # global photon-number cutoff
CSV_DIGITS = 12
